//! Equivalence-set search: the best connected, type-compatible assignment of
//! EHR elements to FHIR elements, and its on-disk cache.

mod cache;
mod search;

pub use cache::{CacheKey, CacheStats, EquivalenceCache};
pub use search::{get_compatible_match, get_equivalence_set, searches_performed, Matcher};

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::catalog::{ConnectionGraph, ElementKind, FhirCatalog, FhirElementDef, UNREACHABLE};
use crate::ingest::EhrElement;
use crate::similarity::SimilarityScore;
use crate::typing::Compatibility;

pub const DEFAULT_DEPTH_LIMIT: u32 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ElementPair {
    pub ehr: EhrElement,
    pub fhir: FhirElementDef,
    pub score: SimilarityScore,
    pub compatibility: Compatibility,
    /// Hops from the anchor to the owning resource.
    pub depth: u32,
}

impl ElementPair {
    /// Resources this pair stores data in: the owner, plus the storage
    /// target of an effective leaf.
    pub fn resources(&self) -> impl Iterator<Item = &str> {
        let target = match &self.fhir.kind {
            ElementKind::EffectiveLeaf { target, .. } => Some(target.as_str()),
            _ => None,
        };
        std::iter::once(self.fhir.owning_resource.as_str()).chain(target)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EquivalenceSet {
    /// `None` when nothing matched.
    pub anchor_resource: Option<String>,
    pub pairs: Vec<ElementPair>,
    /// In catalog order.
    pub resources_used: Vec<String>,
    pub matched_fraction: f64,
    pub resource_count: usize,
    pub mean_distance: f64,
}

impl EquivalenceSet {
    pub fn empty() -> Self {
        EquivalenceSet {
            anchor_resource: None,
            pairs: Vec::new(),
            resources_used: Vec::new(),
            matched_fraction: 0.0,
            resource_count: 0,
            mean_distance: 0.0,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pair_for(&self, match_name: &str) -> Option<&ElementPair> {
        self.pairs.iter().find(|p| p.ehr.match_name == match_name)
    }

    /// Replaces the EHR side of every pair with the element of the same
    /// match name from `elements`, so a cached set carries the values of
    /// the record at hand.
    pub fn rebind(&mut self, elements: &[EhrElement]) {
        for pair in &mut self.pairs {
            if let Some(e) = elements.iter().find(|e| e.match_name == pair.ehr.match_name) {
                pair.ehr = e.clone();
            }
        }
    }
}

/// Sum of pairwise hop counts and the number of pairs.
fn distance_sum(indices: &[usize], graph: &ConnectionGraph) -> (u64, u64) {
    let mut sum = 0u64;
    let mut count = 0u64;
    for (k, &a) in indices.iter().enumerate() {
        for &b in &indices[k + 1..] {
            let d = graph.distance(a, b);
            debug_assert_ne!(d, UNREACHABLE);
            sum += u64::from(d);
            count += 1;
        }
    }
    (sum, count)
}

/// Mean hop count over all unordered pairs of `resources`; 0 for fewer than
/// two. Unknown names are ignored.
pub fn mean_distance<'a>(resources: impl IntoIterator<Item = &'a str>, catalog: &FhirCatalog) -> f64 {
    let indices: BTreeSet<usize> = resources
        .into_iter()
        .filter_map(|r| catalog.resource_index(r))
        .collect();
    let indices: Vec<usize> = indices.into_iter().collect();
    let (sum, count) = distance_sum(&indices, catalog.graph());
    if count == 0 {
        0.0
    } else {
        sum as f64 / count as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_distance_examples() {
        let cat = FhirCatalog::bundled();
        assert_eq!(mean_distance(["Patient"], &cat), 0.0);
        assert_eq!(mean_distance(["Patient", "Organization"], &cat), 1.0);
        let three = mean_distance(["Patient", "Organization", "Observation"], &cat);
        assert!((three - 4.0 / 3.0).abs() < 1e-12);
    }
}
