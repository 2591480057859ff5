use std::collections::{BTreeMap, HashMap};

use serde::Deserialize;

use super::{
    CatalogError, Category, ComplexTypeDef, ConnectionGraph, ElementKind, ElementSpec,
    FhirCatalog, FhirElementDef, FhirResourceDef,
};
use crate::typing::{TypeRule, TypeRuleDef};

const REFERENCE: &str = "Reference";

#[derive(Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct CatalogFile {
    version: String,
    datatypes: Vec<TypeRuleDef>,
    #[serde(default)]
    complex_types: Vec<ComplexTypeDef>,
    resources: Vec<ResourceSpec>,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct ResourceSpec {
    name: String,
    category: Category,
    elements: Vec<ElementSpec>,
}

struct Flattener<'a> {
    resource: &'a str,
    rules: &'a BTreeMap<String, TypeRule>,
    complex: &'a HashMap<&'a str, &'a ComplexTypeDef>,
    resources: &'a HashMap<&'a str, ()>,
    stack: Vec<&'a str>,
    out: Vec<FhirElementDef>,
}

impl<'a> Flattener<'a> {
    fn element(&mut self, spec: &'a ElementSpec, parent: Option<&str>) -> Result<(), CatalogError> {
        let path = match parent {
            Some(p) => format!("{p}.{}", spec.name),
            None => spec.name.clone(),
        };
        let base = FhirElementDef {
            name: spec.name.clone(),
            path: path.clone(),
            owning_resource: self.resource.to_string(),
            parent_element: parent.map(str::to_string),
            datatype_id: spec.datatype.clone(),
            mandatory: spec.mandatory,
            default_value: spec.default.clone(),
            kind: ElementKind::Plain,
            candidate: false,
        };

        if spec.datatype == REFERENCE {
            if parent.is_some() {
                return Err(CatalogError::NestedReference {
                    resource: self.resource.to_string(),
                    element: path,
                });
            }
            let target = spec.target.clone().ok_or_else(|| CatalogError::MissingTarget {
                resource: self.resource.to_string(),
                element: path.clone(),
            })?;
            if !self.resources.contains_key(target.as_str()) {
                return Err(CatalogError::UnknownTarget {
                    resource: self.resource.to_string(),
                    element: path,
                    target,
                });
            }
            self.out.push(FhirElementDef {
                kind: ElementKind::Reference { target },
                ..base
            });
        } else if self.rules.contains_key(&spec.datatype) {
            self.out.push(base);
        } else if let Some(&ty) = self.complex.get(spec.datatype.as_str()) {
            if self.stack.contains(&ty.name.as_str()) {
                return Err(CatalogError::RecursiveType(ty.name.clone()));
            }
            self.out.push(FhirElementDef {
                kind: ElementKind::Complex,
                ..base
            });
            self.stack.push(&ty.name);
            for child in &ty.elements {
                self.element(child, Some(&path))?;
            }
            self.stack.pop();
        } else {
            return Err(CatalogError::UnknownType {
                resource: self.resource.to_string(),
                element: path,
                datatype: spec.datatype.clone(),
            });
        }
        Ok(())
    }
}

/// Nested plain elements are matchable under their own name only when no
/// other element of the resource shares that name.
fn mark_candidates(elements: &mut [FhirElementDef]) {
    let mut counts: HashMap<String, usize> = HashMap::new();
    for e in elements.iter() {
        *counts.entry(e.name.clone()).or_default() += 1;
    }
    for e in elements.iter_mut() {
        e.candidate = matches!(e.kind, ElementKind::Plain)
            && (e.parent_element.is_none() || counts[&e.name] == 1);
    }
}

impl FhirCatalog {
    /// Parses and validates a catalog document. Derived elements are added
    /// separately by [`FhirCatalog::expand_pseudo_elements`] and
    /// [`FhirCatalog::compute_effective_leaves`].
    pub fn from_json(text: &str) -> Result<Self, CatalogError> {
        if text.trim().is_empty() {
            return Err(CatalogError::Empty);
        }
        let file: CatalogFile = serde_json::from_str(text)?;

        let mut type_rules = BTreeMap::new();
        for def in file.datatypes {
            let id = def.id.clone();
            if type_rules.insert(id.clone(), TypeRule::compile(def)?).is_some() {
                return Err(CatalogError::DuplicateType(id));
            }
        }
        let mut complex = HashMap::new();
        for ty in &file.complex_types {
            if type_rules.contains_key(&ty.name)
                || ty.name == REFERENCE
                || complex.insert(ty.name.as_str(), ty).is_some()
            {
                return Err(CatalogError::DuplicateType(ty.name.clone()));
            }
        }
        let mut names = HashMap::new();
        for r in &file.resources {
            if names.insert(r.name.as_str(), ()).is_some() {
                return Err(CatalogError::DuplicateResource(r.name.clone()));
            }
        }

        let mut resources = Vec::with_capacity(file.resources.len());
        for spec in &file.resources {
            let mut flat = Flattener {
                resource: &spec.name,
                rules: &type_rules,
                complex: &complex,
                resources: &names,
                stack: Vec::new(),
                out: Vec::new(),
            };
            for e in &spec.elements {
                flat.element(e, None)?;
            }
            let mut elements = flat.out;
            mark_candidates(&mut elements);
            let references = elements
                .iter()
                .filter_map(|e| match &e.kind {
                    ElementKind::Reference { target } => Some((e.name.clone(), target.clone())),
                    _ => None,
                })
                .collect();
            resources.push(FhirResourceDef {
                name: spec.name.clone(),
                category: spec.category,
                elements,
                references,
            });
        }

        let index: HashMap<String, usize> = resources
            .iter()
            .enumerate()
            .map(|(i, r)| (r.name.clone(), i))
            .collect();
        let graph = ConnectionGraph::build(&resources, &index);

        Ok(FhirCatalog {
            version: file.version,
            resources,
            index,
            type_rules,
            complex_types: file.complex_types,
            graph,
            pseudo_expanded: false,
            general_data: None,
        })
    }
}
