use std::collections::HashSet;

use super::{ElementKind, FhirCatalog, FhirElementDef};
use crate::ingest::capitalize_first;

/// Target elements able to hold a datum on behalf of a referencing resource.
pub const DEFAULT_GENERAL_DATA: &[&str] = &["name", "text", "description"];

fn last_segment(path: &str) -> &str {
    path.rsplit('.').next().unwrap_or(path)
}

impl FhirCatalog {
    /// Adds, for every leaf nested in a complex element, a pseudo-element
    /// named child + Parent (`name.given` → `givenName`). Existing elements
    /// are left untouched; a pseudo name already taken is skipped.
    pub fn expand_pseudo_elements(&mut self) {
        if self.pseudo_expanded {
            return;
        }
        for resource in &mut self.resources {
            let mut taken: HashSet<String> = resource
                .elements
                .iter()
                .filter(|e| e.candidate)
                .map(|e| e.name.clone())
                .collect();
            let mut pseudo = Vec::new();
            for e in &resource.elements {
                let (ElementKind::Plain, Some(parent)) = (&e.kind, &e.parent_element) else {
                    continue;
                };
                let name = format!("{}{}", e.name, capitalize_first(last_segment(parent)));
                if !taken.insert(name.clone()) {
                    log::warn!("{}: pseudo-element {name} clashes with an existing name", resource.name);
                    continue;
                }
                pseudo.push(FhirElementDef {
                    name,
                    kind: ElementKind::Pseudo {
                        alias: e.path.clone(),
                    },
                    mandatory: false,
                    default_value: None,
                    candidate: true,
                    ..e.clone()
                });
            }
            resource.elements.extend(pseudo);
        }
        self.pseudo_expanded = true;
    }

    /// Adds an effective leaf for every reference whose target resource has
    /// a general-data element among its own leaves. The first name of
    /// `general_data` the target has becomes the storage element.
    pub fn compute_effective_leaves(&mut self, general_data: &[String]) {
        if self.general_data.is_some() {
            return;
        }
        let storage: Vec<Option<(String, String)>> = self
            .resources
            .iter()
            .map(|r| {
                general_data.iter().find_map(|g| {
                    r.elements
                        .iter()
                        .find(|e| {
                            &e.name == g
                                && e.parent_element.is_none()
                                && matches!(e.kind, ElementKind::Plain)
                        })
                        .map(|e| (e.name.clone(), e.datatype_id.clone()))
                })
            })
            .collect();

        for i in 0..self.resources.len() {
            let owner = self.resources[i].name.clone();
            let mut leaves = Vec::new();
            for e in &self.resources[i].elements {
                let ElementKind::Reference { target } = &e.kind else {
                    continue;
                };
                if *target == owner {
                    continue;
                }
                let Some((store, datatype)) = &storage[self.index[target]] else {
                    continue;
                };
                leaves.push(FhirElementDef {
                    kind: ElementKind::EffectiveLeaf {
                        target: target.clone(),
                        storage: store.clone(),
                    },
                    datatype_id: datatype.clone(),
                    mandatory: false,
                    default_value: None,
                    candidate: true,
                    ..e.clone()
                });
            }
            self.resources[i].elements.extend(leaves);
        }
        self.general_data = Some(general_data.to_vec());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn find<'a>(cat: &'a FhirCatalog, resource: &str, name: &str) -> Option<&'a FhirElementDef> {
        cat.resource(resource)
            .unwrap()
            .elements
            .iter()
            .find(|e| e.name == name && e.candidate)
    }

    #[test]
    fn pseudo_elements() {
        let cat = FhirCatalog::bundled();
        let given = find(&cat, "Patient", "givenName").unwrap();
        assert_eq!(given.kind, ElementKind::Pseudo { alias: "name.given".into() });
        assert_eq!(given.storage_path(), "name.given");
        let postal = find(&cat, "Patient", "postalCodeAddress").unwrap();
        assert_eq!(postal.storage_path(), "address.postalCode");
        assert!(find(&cat, "Patient", "textAddress").is_some());
        assert!(find(&cat, "Patient", "birthDate").is_some());
        assert!(!cat
            .resource("Patient")
            .unwrap()
            .elements
            .iter()
            .any(|e| matches!(&e.kind, ElementKind::Pseudo { alias } if alias == "birthDate")));
    }

    #[test]
    fn effective_leaves() {
        let cat = FhirCatalog::bundled();
        let managing = find(&cat, "Patient", "managingOrganization").unwrap();
        assert_eq!(
            managing.kind,
            ElementKind::EffectiveLeaf {
                target: "Organization".into(),
                storage: "name".into()
            }
        );
        assert_eq!(managing.datatype_id, "string");
        assert!(find(&cat, "Observation", "subject").is_none());
        assert!(find(&cat, "Patient", "generalPractitioner").is_none());
    }

    #[test]
    fn expansion_only_adds() {
        let raw = FhirCatalog::from_json(FhirCatalog::bundled_json()).unwrap();
        let mut cat = raw.clone();
        cat.expand_pseudo_elements();
        cat.expand_pseudo_elements();
        cat.compute_effective_leaves(&["name".to_string()]);
        for (before, after) in raw.resources().iter().zip(cat.resources()) {
            assert_eq!(before.elements[..], after.elements[..before.elements.len()]);
        }
    }

    #[test]
    fn candidate_names_are_unique() {
        let cat = FhirCatalog::bundled();
        for r in cat.resources() {
            let mut seen = HashSet::new();
            for (_, e) in r.candidates() {
                assert!(seen.insert(&e.name), "{}.{} repeated", r.name, e.name);
            }
        }
    }
}
