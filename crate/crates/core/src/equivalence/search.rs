use std::collections::{BTreeSet, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};

use super::{distance_sum, ElementPair, EquivalenceSet};
use crate::catalog::{ElementKind, FhirCatalog};
use crate::ingest::EhrElement;
use crate::similarity::{match_score, LexicalResource, MatchParameters, SimilarityScore};
use crate::typing::{compatibility, Compatibility};

static SEARCHES: AtomicU64 = AtomicU64::new(0);

/// Number of equivalence-set searches run by this process.
pub fn searches_performed() -> u64 {
    SEARCHES.load(Ordering::Relaxed)
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    element: usize,
    score: f64,
    compatibility: Compatibility,
}

/// Element-wise compatibility of all values: exact when every value is in
/// FHIR format, incompatible when any value is.
fn values_compatibility(values: &[String], datatype: &str, catalog: &FhirCatalog) -> Compatibility {
    let Some(rule) = catalog.type_rule(datatype) else {
        return Compatibility::Incompatible;
    };
    values
        .iter()
        .map(|v| compatibility(v, rule))
        .max()
        .unwrap_or(Compatibility::Incompatible)
}

/// Runs the search against one catalog, parameter set and lexicon.
pub struct Matcher<'a, L: LexicalResource + ?Sized> {
    catalog: &'a FhirCatalog,
    params: &'a MatchParameters,
    lexicon: &'a L,
    depth_limit: u32,
}

impl<'a, L: LexicalResource + ?Sized> Matcher<'a, L> {
    pub fn new(catalog: &'a FhirCatalog, params: &'a MatchParameters, lexicon: &'a L, depth_limit: u32) -> Self {
        Matcher {
            catalog,
            params,
            lexicon,
            depth_limit,
        }
    }

    /// Best positive, compatible match inside each resource. Ties keep the
    /// first element in catalog order.
    fn best_per_resource(&self, ehr: &EhrElement) -> Vec<Option<Candidate>> {
        let mut scores: HashMap<&str, f64> = HashMap::new();
        let mut compat: HashMap<&str, Compatibility> = HashMap::new();
        self.catalog
            .resources()
            .iter()
            .map(|r| {
                let mut best: Option<Candidate> = None;
                for (i, e) in r.candidates() {
                    let score = *scores.entry(e.name.as_str()).or_insert_with(|| {
                        match_score(&e.name, &ehr.match_name, self.params, self.lexicon).value()
                    });
                    if score <= 0.0 || best.is_some_and(|b| score <= b.score) {
                        continue;
                    }
                    let c = *compat
                        .entry(e.datatype_id.as_str())
                        .or_insert_with(|| values_compatibility(&ehr.values, &e.datatype_id, self.catalog));
                    if c != Compatibility::Incompatible {
                        best = Some(Candidate {
                            element: i,
                            score,
                            compatibility: c,
                        });
                    }
                }
                best
            })
            .collect()
    }

    /// Breadth-first over the connection graph from `anchor`: the best
    /// candidate at the shallowest depth holding one, ties going to the
    /// resource first in catalog order.
    fn select(&self, anchor: usize, best: &[Option<Candidate>]) -> Option<(usize, Candidate, u32)> {
        let graph = self.catalog.graph();
        for depth in 0..=self.depth_limit {
            let mut found: Option<(usize, Candidate)> = None;
            for (r, cand) in best.iter().enumerate() {
                let Some(cand) = cand else { continue };
                if graph.distance(anchor, r) != depth {
                    continue;
                }
                if found.map_or(true, |(_, f)| cand.score > f.score) {
                    found = Some((r, *cand));
                }
            }
            if let Some((r, cand)) = found {
                return Some((r, cand, depth));
            }
        }
        None
    }

    fn pair(&self, ehr: &EhrElement, resource: usize, cand: Candidate, depth: u32) -> ElementPair {
        ElementPair {
            ehr: ehr.clone(),
            fhir: self.catalog.resources()[resource].elements[cand.element].clone(),
            score: SimilarityScore::new(cand.score),
            compatibility: cand.compatibility,
            depth,
        }
    }

    /// The match for one EHR element when searching from `anchor`.
    pub fn compatible_match(&self, anchor: &str, ehr: &EhrElement) -> Option<ElementPair> {
        let anchor = self.catalog.resource_index(anchor)?;
        let best = self.best_per_resource(ehr);
        self.select(anchor, &best)
            .map(|(r, cand, depth)| self.pair(ehr, r, cand, depth))
    }

    /// Tries every resource as anchor and keeps the set with the most pairs,
    /// then the smallest total pairwise distance between its resources, then
    /// the fewest resources, then the anchor first in catalog order.
    pub fn equivalence_set(&self, elements: &[EhrElement]) -> EquivalenceSet {
        SEARCHES.fetch_add(1, Ordering::Relaxed);
        if elements.is_empty() {
            return EquivalenceSet::empty();
        }
        let best: Vec<Vec<Option<Candidate>>> =
            elements.iter().map(|e| self.best_per_resource(e)).collect();
        let resources = self.catalog.resources();

        struct Choice {
            anchor: usize,
            picks: Vec<(usize, usize, Candidate, u32)>,
            used: Vec<usize>,
            distance: (u64, u64),
        }
        let mut winner: Option<Choice> = None;

        for anchor in 0..resources.len() {
            let picks: Vec<_> = best
                .iter()
                .enumerate()
                .filter_map(|(k, b)| self.select(anchor, b).map(|(r, c, d)| (k, r, c, d)))
                .collect();
            if picks.is_empty() {
                continue;
            }
            let mut used = BTreeSet::new();
            for &(_, r, c, _) in &picks {
                used.insert(r);
                if let ElementKind::EffectiveLeaf { target, .. } = &resources[r].elements[c.element].kind {
                    used.insert(self.catalog.resource_index(target).expect("validated target"));
                }
            }
            let used: Vec<usize> = used.into_iter().collect();
            let distance = distance_sum(&used, self.catalog.graph());
            let choice = Choice {
                anchor,
                picks,
                used,
                distance,
            };
            let better = match &winner {
                None => true,
                Some(w) => choice
                    .picks
                    .len()
                    .cmp(&w.picks.len())
                    .then_with(|| w.distance.0.cmp(&choice.distance.0))
                    .then_with(|| w.used.len().cmp(&choice.used.len()))
                    .is_gt(),
            };
            if better {
                winner = Some(choice);
            }
        }

        let Some(w) = winner else {
            return EquivalenceSet::empty();
        };
        let pairs: Vec<ElementPair> = w
            .picks
            .iter()
            .map(|&(k, r, c, d)| self.pair(&elements[k], r, c, d))
            .collect();
        let (sum, count) = w.distance;
        EquivalenceSet {
            anchor_resource: Some(resources[w.anchor].name.clone()),
            matched_fraction: pairs.len() as f64 / elements.len() as f64,
            resource_count: w.used.len(),
            resources_used: w.used.iter().map(|&r| resources[r].name.clone()).collect(),
            mean_distance: if count == 0 { 0.0 } else { sum as f64 / count as f64 },
            pairs,
        }
    }
}

/// Best compatible match for `ehr` reachable from `resource` within
/// `depth_limit` hops.
pub fn get_compatible_match<L: LexicalResource + ?Sized>(
    resource: &str,
    ehr: &EhrElement,
    catalog: &FhirCatalog,
    params: &MatchParameters,
    lexicon: &L,
    depth_limit: u32,
) -> Option<ElementPair> {
    Matcher::new(catalog, params, lexicon, depth_limit).compatible_match(resource, ehr)
}

pub fn get_equivalence_set<L: LexicalResource + ?Sized>(
    elements: &[EhrElement],
    catalog: &FhirCatalog,
    params: &MatchParameters,
    lexicon: &L,
    depth_limit: u32,
) -> EquivalenceSet {
    Matcher::new(catalog, params, lexicon, depth_limit).equivalence_set(elements)
}
