use std::collections::{HashMap, VecDeque};

use serde::Serialize;

use super::FhirResourceDef;

/// Distance between resources that are not connected.
pub const UNREACHABLE: u32 = u32::MAX;

/// Undirected resource graph whose edges are reference elements, with
/// all-pairs hop counts precomputed.
#[derive(Debug, Clone, Serialize)]
pub struct ConnectionGraph {
    names: Vec<String>,
    adjacency: Vec<Vec<usize>>,
    /// (from, to, reference element), in catalog order.
    edges: Vec<(usize, usize, String)>,
    #[serde(skip)]
    distances: Vec<Vec<u32>>,
}

impl ConnectionGraph {
    pub(crate) fn build(resources: &[FhirResourceDef], index: &HashMap<String, usize>) -> Self {
        let n = resources.len();
        let mut adjacency = vec![Vec::new(); n];
        let mut edges = Vec::new();
        for (i, r) in resources.iter().enumerate() {
            for (element, target) in &r.references {
                let j = index[target];
                edges.push((i, j, element.clone()));
                if i != j {
                    adjacency[i].push(j);
                    adjacency[j].push(i);
                }
            }
        }
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        let distances = (0..n).map(|s| bfs(&adjacency, s)).collect();
        ConnectionGraph {
            names: resources.iter().map(|r| r.name.clone()).collect(),
            adjacency,
            edges,
            distances,
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn neighbours(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn edges(&self) -> impl Iterator<Item = (&str, &str, &str)> {
        self.edges
            .iter()
            .map(|(a, b, e)| (self.names[*a].as_str(), self.names[*b].as_str(), e.as_str()))
    }

    pub fn distance(&self, a: usize, b: usize) -> u32 {
        self.distances[a][b]
    }
}

fn bfs(adjacency: &[Vec<usize>], source: usize) -> Vec<u32> {
    let mut dist = vec![UNREACHABLE; adjacency.len()];
    dist[source] = 0;
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        for &v in &adjacency[u] {
            if dist[v] == UNREACHABLE {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    dist
}
