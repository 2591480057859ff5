//! Materializes an equivalence set into FHIR resource instances and
//! serializes the resulting bundle.

mod build;
mod serialize;

pub use build::map_record;
pub use serialize::{serialize_bundle, OutputFormat};

use std::collections::HashMap;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::catalog::{ElementKind, FhirCatalog};
use crate::ingest::UnresolvedCode;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FhirValue {
    Text(String),
    /// The instance id of the referenced resource.
    Reference(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FhirInstance {
    pub resource_name: String,
    pub instance_id: String,
    /// Element path to value, in catalog definition order.
    pub values: Vec<(String, FhirValue)>,
}

impl FhirInstance {
    pub fn get(&self, path: &str) -> Option<&FhirValue> {
        self.values.iter().find(|(p, _)| p == path).map(|(_, v)| v)
    }

    pub fn text(&self, path: &str) -> Option<&str> {
        match self.get(path)? {
            FhirValue::Text(t) => Some(t),
            FhirValue::Reference(_) => None,
        }
    }

    /// (element path, referenced id) pairs.
    pub fn references(&self) -> impl Iterator<Item = (&str, &str)> {
        self.values.iter().filter_map(|(p, v)| match v {
            FhirValue::Reference(id) => Some((p.as_str(), id.as_str())),
            FhirValue::Text(_) => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Provenance {
    pub source_digest: String,
    pub catalog_version: String,
    pub parameters_digest: String,
}

impl Provenance {
    pub fn new(source: &[u8], catalog_version: &str, parameters_digest: &str) -> Self {
        Provenance {
            source_digest: hex::encode(Sha256::digest(source)),
            catalog_version: catalog_version.to_string(),
            parameters_digest: parameters_digest.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FhirBundle {
    pub provenance: Provenance,
    pub instances: Vec<FhirInstance>,
}

impl FhirBundle {
    pub fn empty(provenance: Provenance) -> Self {
        FhirBundle {
            provenance,
            instances: Vec::new(),
        }
    }

    pub fn instance(&self, id: &str) -> Option<&FhirInstance> {
        self.instances.iter().find(|i| i.instance_id == id)
    }

    pub fn instances_of<'a>(&'a self, resource: &'a str) -> impl Iterator<Item = &'a FhirInstance> + 'a {
        self.instances.iter().filter(move |i| i.resource_name == resource)
    }

    /// Checks the output invariants against `catalog`: known element paths,
    /// strict-format values and references that resolve to an instance of
    /// the declared target.
    pub fn check(&self, catalog: &FhirCatalog) -> Result<(), String> {
        let mut by_id: HashMap<&str, &str> = HashMap::new();
        for inst in &self.instances {
            if by_id.insert(&inst.instance_id, &inst.resource_name).is_some() {
                return Err(format!("instance id {} is used twice", inst.instance_id));
            }
        }
        for inst in &self.instances {
            let def = catalog
                .resource(&inst.resource_name)
                .ok_or_else(|| format!("unknown resource {}", inst.resource_name))?;
            for (path, value) in &inst.values {
                let here = format!("{}/{} {path}", inst.resource_name, inst.instance_id);
                let element = def
                    .element_at(path)
                    .ok_or_else(|| format!("{here}: no such element"))?;
                match (value, &element.kind) {
                    (FhirValue::Text(text), ElementKind::Plain) => {
                        let rule = catalog
                            .type_rule(&element.datatype_id)
                            .ok_or_else(|| format!("{here}: no rule for {}", element.datatype_id))?;
                        if !rule.is_strict(text) {
                            return Err(format!("{here}: {text:?} is not a valid {}", rule.id()));
                        }
                    }
                    (FhirValue::Reference(id), ElementKind::Reference { target }) => {
                        match by_id.get(id.as_str()) {
                            Some(r) if r == target => {}
                            Some(r) => return Err(format!("{here}: {id} is a {r}, expected {target}")),
                            None => return Err(format!("{here}: dangling reference {id}")),
                        }
                    }
                    _ => return Err(format!("{here}: value does not fit the element kind")),
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ReformattedValue {
    pub element: String,
    pub target: String,
    pub original: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TranslatedCode {
    pub element: String,
    pub target: String,
    pub scheme: String,
    pub original: String,
    pub code: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SkippedValue {
    pub element: String,
    pub target: String,
    pub value: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AppliedDefault {
    pub instance_id: String,
    pub resource: String,
    pub path: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct MissingElement {
    pub instance_id: String,
    pub resource: String,
    pub path: String,
}

/// What happened to the data on its way into the bundle.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct MappingReport {
    pub reformatted: Vec<ReformattedValue>,
    pub translated_codes: Vec<TranslatedCode>,
    pub unresolved_codes: Vec<UnresolvedCode>,
    pub skipped_values: Vec<SkippedValue>,
    pub applied_defaults: Vec<AppliedDefault>,
    pub missing_mandatory: Vec<MissingElement>,
}

#[derive(Debug, Clone)]
pub struct Mapping {
    pub bundle: FhirBundle,
    pub report: MappingReport,
}
