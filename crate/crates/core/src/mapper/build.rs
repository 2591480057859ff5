use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use super::{
    AppliedDefault, FhirBundle, FhirInstance, FhirValue, Mapping, MappingReport, MissingElement,
    Provenance, ReformattedValue, SkippedValue, TranslatedCode,
};
use crate::catalog::{ElementKind, FhirCatalog};
use crate::equivalence::{ElementPair, EquivalenceSet};
use crate::ingest::{leaf_occurrences, CodeTranslation, EhrNode, Terminology, UnresolvedCode};
use crate::typing::{compatibility, reformat, Compatibility};
use crate::Error;

/// Sibling positions from below the root down to the shallowest repeated
/// ancestor; empty for data outside any repeated block.
type Block = Vec<usize>;

/// One future instance: a resource index and the block it was filled from.
type Slot = (usize, Block);

#[derive(Default)]
struct Draft {
    /// Storage path to values in document order.
    values: BTreeMap<String, Vec<String>>,
    /// Reference path to the slot holding an effective leaf's data.
    links: BTreeMap<String, Slot>,
}

/// Builds the bundle for one record: reformats and translates matched
/// values, writes pseudo and effective-leaf pairs to their real locations,
/// combines values sharing an element, fills mandatory defaults and links
/// the instances by reference. Repeated parent blocks yield one instance per
/// block.
pub fn map_record(
    doc: &EhrNode,
    eqset: &EquivalenceSet,
    catalog: &FhirCatalog,
    terminology: &Terminology,
    provenance: Provenance,
) -> crate::Result<Mapping> {
    let mut report = MappingReport::default();
    let pairs: HashMap<(&str, &str), &ElementPair> =
        eqset.pairs.iter().map(|p| (p.ehr.key(), p)).collect();

    let mut drafts: BTreeMap<Slot, Draft> = BTreeMap::new();
    for occ in leaf_occurrences(doc) {
        let Some(pair) = pairs.get(&occ.key()) else {
            continue;
        };
        let block = block_of(doc, &occ.ancestry);
        let owner = resource_index(catalog, &pair.fhir.owning_resource)?;
        let (resource, path) = match &pair.fhir.kind {
            ElementKind::EffectiveLeaf { target, storage } => (resource_index(catalog, target)?, storage.as_str()),
            _ => (owner, pair.fhir.storage_path()),
        };
        let target = format!("{}.{path}", catalog.resources()[resource].name);
        let Some(value) = convert(pair, &occ.value, &target, catalog, terminology, &mut report)? else {
            continue;
        };
        let slot = (resource, block.clone());
        drafts
            .entry(slot.clone())
            .or_default()
            .values
            .entry(path.to_string())
            .or_default()
            .push(value);
        if resource != owner {
            drafts
                .entry((owner, block))
                .or_default()
                .links
                .insert(pair.fhir.path.clone(), slot);
        }
    }

    for bridge in bridges(catalog, drafts.keys().map(|(r, _)| *r).collect()) {
        drafts.entry((bridge, Vec::new())).or_default();
    }

    let ids: BTreeMap<Slot, String> = drafts
        .keys()
        .enumerate()
        .map(|(n, slot)| (slot.clone(), format!("{:03}", n + 1)))
        .collect();

    let mut instances = Vec::with_capacity(drafts.len());
    for (slot, draft) in &drafts {
        let def = &catalog.resources()[slot.0];
        let id = &ids[slot];
        let mut values = Vec::new();
        for e in def.structure() {
            match &e.kind {
                ElementKind::Plain => {
                    if let Some(vs) = draft.values.get(&e.path) {
                        let rule = catalog
                            .type_rule(&e.datatype_id)
                            .ok_or_else(|| Error::Invariant(format!("no rule for {}", e.datatype_id)))?;
                        let joined = vs.join(" ");
                        let combined = if vs.len() == 1 || rule.is_strict(&joined) {
                            joined
                        } else {
                            for v in &vs[1..] {
                                report.skipped_values.push(SkippedValue {
                                    element: e.path.clone(),
                                    target: format!("{}.{}", def.name, e.path),
                                    value: v.clone(),
                                    reason: format!("cannot be combined with {:?} as a {}", vs[0], rule.id()),
                                });
                            }
                            vs[0].clone()
                        };
                        values.push((e.path.clone(), FhirValue::Text(combined)));
                    } else if e.mandatory && e.parent_element.is_none() {
                        match &e.default_value {
                            Some(d) => {
                                report.applied_defaults.push(AppliedDefault {
                                    instance_id: id.clone(),
                                    resource: def.name.clone(),
                                    path: e.path.clone(),
                                    value: d.clone(),
                                });
                                values.push((e.path.clone(), FhirValue::Text(d.clone())));
                            }
                            None => {
                                log::warn!("{} {id}: mandatory element {} has no value", def.name, e.path);
                                report.missing_mandatory.push(MissingElement {
                                    instance_id: id.clone(),
                                    resource: def.name.clone(),
                                    path: e.path.clone(),
                                });
                            }
                        }
                    }
                }
                ElementKind::Reference { target } => {
                    let linked = match draft.links.get(&e.path) {
                        Some(s) => Some(s),
                        None if *target != def.name => {
                            let t = resource_index(catalog, target)?;
                            pick_target(ids.keys().filter(|(r, _)| *r == t), &slot.1)
                        }
                        None => None,
                    };
                    if let Some(s) = linked {
                        values.push((e.path.clone(), FhirValue::Reference(ids[s].clone())));
                    }
                }
                _ => {}
            }
        }
        instances.push(FhirInstance {
            resource_name: def.name.clone(),
            instance_id: id.clone(),
            values,
        });
    }

    let bundle = FhirBundle {
        provenance,
        instances,
    };
    bundle.check(catalog).map_err(Error::Invariant)?;
    Ok(Mapping { bundle, report })
}

fn resource_index(catalog: &FhirCatalog, name: &str) -> crate::Result<usize> {
    catalog
        .resource_index(name)
        .ok_or_else(|| Error::Invariant(format!("equivalence set names unknown resource {name}")))
}

/// Type conversion and code translation of one raw value. `None` when the
/// value had to be dropped; the reason is reported.
fn convert(
    pair: &ElementPair,
    raw: &str,
    target: &str,
    catalog: &FhirCatalog,
    terminology: &Terminology,
    report: &mut MappingReport,
) -> crate::Result<Option<String>> {
    let rule = catalog
        .type_rule(&pair.fhir.datatype_id)
        .ok_or_else(|| Error::Invariant(format!("no rule for {}", pair.fhir.datatype_id)))?;
    let element = &pair.ehr.match_name;
    let mut skip = |reason: String| {
        report.skipped_values.push(SkippedValue {
            element: element.clone(),
            target: target.to_string(),
            value: raw.to_string(),
            reason,
        });
    };

    let mut value = match compatibility(raw, rule) {
        Compatibility::ExactFormat => raw.to_string(),
        Compatibility::Reformattable => match reformat(raw, rule) {
            Ok(v) => {
                report.reformatted.push(ReformattedValue {
                    element: element.clone(),
                    target: target.to_string(),
                    original: raw.to_string(),
                    value: v.clone(),
                });
                v
            }
            Err(e) => {
                skip(e.to_string());
                return Ok(None);
            }
        },
        Compatibility::Incompatible => {
            skip(format!("not a {} value", rule.id()));
            return Ok(None);
        }
    };

    if rule.is_coded() {
        let unresolved = match terminology.translate(&value) {
            CodeTranslation::Native => None,
            CodeTranslation::Translated(code) => {
                report.translated_codes.push(TranslatedCode {
                    element: element.clone(),
                    target: target.to_string(),
                    scheme: terminology.target_scheme.clone(),
                    original: value.clone(),
                    code: code.clone(),
                });
                value = code;
                None
            }
            CodeTranslation::Unresolved { scheme } => Some(scheme),
            CodeTranslation::UnknownScheme => Some("unknown".to_string()),
        };
        if let Some(scheme) = unresolved {
            let entry = UnresolvedCode {
                element: element.clone(),
                scheme,
                code: value.clone(),
            };
            if !report.unresolved_codes.contains(&entry) {
                report.unresolved_codes.push(entry);
            }
        }
    }

    if !rule.is_strict(&value) {
        report.skipped_values.push(SkippedValue {
            element: element.clone(),
            target: target.to_string(),
            value: raw.to_string(),
            reason: format!("{value:?} does not satisfy the {} format", rule.id()),
        });
        return Ok(None);
    }
    Ok(Some(value))
}

fn block_of(doc: &EhrNode, ancestry: &[(String, usize)]) -> Block {
    let mut node = doc;
    for k in 1..ancestry.len() {
        let child = &node.children[ancestry[k].1];
        if node.children.iter().filter(|c| c.name == child.name).count() > 1 {
            return ancestry[1..=k].iter().map(|(_, i)| *i).collect();
        }
        node = child;
    }
    Vec::new()
}

/// The instance a reference should point at: one from the same block, else
/// one from an enclosing or enclosed block, else the first.
fn pick_target<'a>(candidates: impl Iterator<Item = &'a Slot>, block: &Block) -> Option<&'a Slot> {
    let candidates: Vec<&Slot> = candidates.collect();
    candidates
        .iter()
        .find(|(_, b)| b == block)
        .or_else(|| {
            candidates
                .iter()
                .find(|(_, b)| b.starts_with(block) || block.starts_with(b))
        })
        .or_else(|| candidates.first())
        .copied()
}

/// Resources not in `present` that must be instantiated so every present
/// resource is reachable from the first one through instantiated resources.
fn bridges(catalog: &FhirCatalog, present: BTreeSet<usize>) -> Vec<usize> {
    let graph = catalog.graph();
    let Some(&first) = present.iter().next() else {
        return Vec::new();
    };
    let mut added = Vec::new();
    let mut members = present.clone();
    loop {
        let mut reached = BTreeSet::from([first]);
        let mut queue = VecDeque::from([first]);
        while let Some(n) = queue.pop_front() {
            for &m in graph.neighbours(n) {
                if members.contains(&m) && reached.insert(m) {
                    queue.push_back(m);
                }
            }
        }
        if present.is_subset(&reached) {
            return added;
        }

        let mut prev: HashMap<usize, usize> = HashMap::new();
        let mut queue: VecDeque<usize> = reached.iter().copied().collect();
        let mut seen = reached.clone();
        let mut hit = None;
        'search: while let Some(n) = queue.pop_front() {
            for &m in graph.neighbours(n) {
                if seen.insert(m) {
                    prev.insert(m, n);
                    if present.contains(&m) {
                        hit = Some(m);
                        break 'search;
                    }
                    queue.push_back(m);
                }
            }
        }
        let Some(mut n) = hit else {
            log::warn!("some matched resources are not connected in the catalog");
            return added;
        };
        while let Some(&p) = prev.get(&n) {
            if !reached.contains(&p) {
                members.insert(p);
                added.push(p);
            }
            n = p;
        }
    }
}
