use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::EhrNode;

/// One non-empty leaf value as it occurs in the document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeafOccurrence {
    pub parent_name: String,
    pub leaf_name: String,
    pub value: String,
    /// Ancestors from the root down to the parent, each with its position
    /// among its siblings. Prefixes identify concrete blocks.
    pub ancestry: Vec<(String, usize)>,
}

impl LeafOccurrence {
    pub fn key(&self) -> (&str, &str) {
        (&self.parent_name, &self.leaf_name)
    }
}

/// A leaf element aggregated over all its occurrences under one parent name.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EhrElement {
    pub match_name: String,
    pub leaf_name: String,
    pub parent_name: String,
    pub original_path: Vec<String>,
    pub values: Vec<String>,
}

impl EhrElement {
    pub fn key(&self) -> (&str, &str) {
        (&self.parent_name, &self.leaf_name)
    }
}

/// Flattens the tree into leaf occurrences in document order. Attributes
/// become leaves named owner + attribute (`Code@Term` → `CodeTerm`) under
/// their owner; empty leaves are skipped.
pub fn leaf_occurrences(root: &EhrNode) -> Vec<LeafOccurrence> {
    let mut out = Vec::new();
    let mut ancestry = Vec::new();
    walk(root, 0, "", &mut ancestry, &mut out);
    out
}

fn walk(
    node: &EhrNode,
    index: usize,
    parent: &str,
    ancestry: &mut Vec<(String, usize)>,
    out: &mut Vec<LeafOccurrence>,
) {
    if node.children.is_empty() {
        if let Some(text) = node.text.as_deref().filter(|t| !t.is_empty()) {
            out.push(LeafOccurrence {
                parent_name: parent.to_string(),
                leaf_name: node.name.clone(),
                value: text.to_string(),
                ancestry: ancestry.clone(),
            });
        }
    }

    ancestry.push((node.name.clone(), index));
    for (attr, value) in &node.attributes {
        if value.is_empty() {
            continue;
        }
        out.push(LeafOccurrence {
            parent_name: node.name.clone(),
            leaf_name: format!("{}{}", node.name, capitalize(attr)),
            value: value.clone(),
            ancestry: ancestry.clone(),
        });
    }
    for (i, child) in node.children.iter().enumerate() {
        walk(child, i, &node.name, ancestry, out);
    }
    ancestry.pop();
}

pub(crate) fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Aggregates leaf occurrences per (parent, leaf) pair. A leaf name seen
/// under more than one parent is qualified with its immediate parent
/// (`Address/Text` → `AddressText`). Elements are ordered by original path,
/// ties keeping document order.
pub fn extract_elements(root: &EhrNode) -> Vec<EhrElement> {
    let occurrences = leaf_occurrences(root);

    let mut index: HashMap<(String, String), usize> = HashMap::new();
    let mut elements: Vec<EhrElement> = Vec::new();
    for occ in occurrences {
        let key = (occ.parent_name.clone(), occ.leaf_name.clone());
        match index.get(&key) {
            Some(&i) => elements[i].values.push(occ.value),
            None => {
                index.insert(key, elements.len());
                elements.push(EhrElement {
                    match_name: occ.leaf_name.clone(),
                    leaf_name: occ.leaf_name,
                    parent_name: occ.parent_name,
                    original_path: occ.ancestry.into_iter().map(|(n, _)| n).collect(),
                    values: vec![occ.value],
                });
            }
        }
    }

    let mut parents: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for e in &elements {
        parents.entry(&e.leaf_name).or_default().insert(&e.parent_name);
    }
    let ambiguous: HashSet<String> = parents
        .into_iter()
        .filter(|(_, p)| p.len() > 1)
        .map(|(leaf, _)| leaf.to_string())
        .collect();

    for e in &mut elements {
        if ambiguous.contains(&e.leaf_name) && !e.parent_name.is_empty() {
            e.match_name = format!("{}{}", e.parent_name, capitalize(&e.leaf_name));
        }
    }
    dedupe_names(&mut elements);

    elements.sort_by(|a, b| a.original_path.cmp(&b.original_path));
    elements
}

/// Appends a counter to names that clash after qualification.
pub(crate) fn dedupe_names(elements: &mut [EhrElement]) {
    let mut taken: HashSet<String> = HashSet::new();
    let originals: HashSet<String> = elements.iter().map(|e| e.match_name.clone()).collect();
    for e in elements.iter_mut() {
        if taken.insert(e.match_name.clone()) {
            continue;
        }
        let mut n = 2;
        loop {
            let candidate = format!("{}{n}", e.match_name);
            if !originals.contains(&candidate) && taken.insert(candidate.clone()) {
                e.match_name = candidate;
                break;
            }
            n += 1;
        }
    }
}
