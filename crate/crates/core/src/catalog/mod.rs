//! FHIR resource, element and datatype definitions loaded from a bundled
//! snapshot, with pseudo-elements, effective leaves and the resource
//! connection graph derived on top.

mod expand;
mod graph;
mod inspect;
mod load;

pub use expand::DEFAULT_GENERAL_DATA;
pub use graph::{ConnectionGraph, UNREACHABLE};

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::typing::{RuleError, TypeRule};

const BUNDLED: &str = include_str!("../../data/catalog.json");

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("catalog file is empty")]
    Empty,
    #[error("catalog does not follow the schema: {0}")]
    Schema(#[from] serde_json::Error),
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error("datatype {0} is defined twice")]
    DuplicateType(String),
    #[error("resource {0} is defined twice")]
    DuplicateResource(String),
    #[error("{resource}.{element}: unknown type {datatype}")]
    UnknownType {
        resource: String,
        element: String,
        datatype: String,
    },
    #[error("{resource}.{element}: reference needs a target resource")]
    MissingTarget { resource: String, element: String },
    #[error("{resource}.{element}: reference target {target} is not in the catalog")]
    UnknownTarget {
        resource: String,
        element: String,
        target: String,
    },
    #[error("{resource}.{element}: references are only supported as direct resource elements")]
    NestedReference { resource: String, element: String },
    #[error("complex type {0} contains itself")]
    RecursiveType(String),
    #[error("unknown resource {0}")]
    UnknownResource(String),
}

/// Resource categories of the selected subset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Category {
    Types,
    Individuals,
    Entities,
    Workflow,
    Summary,
    Diagnostics,
    Medications,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ElementKind {
    Plain,
    /// A parent element holding nested elements of a complex type.
    Complex,
    /// Child + parent name alias of the nested element at `alias`.
    Pseudo { alias: String },
    /// A reference treated as a leaf: data is stored in `storage` of a
    /// `target` instance.
    EffectiveLeaf { target: String, storage: String },
    Reference { target: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FhirElementDef {
    pub name: String,
    /// Dotted location inside the resource, e.g. `name.given`.
    pub path: String,
    pub owning_resource: String,
    pub parent_element: Option<String>,
    pub datatype_id: String,
    pub mandatory: bool,
    pub default_value: Option<String>,
    pub kind: ElementKind,
    /// Offered to the matcher. Complex parents, raw references and nested
    /// names repeated elsewhere in the resource are not.
    pub candidate: bool,
}

impl FhirElementDef {
    /// Where values matched to this element are written in an instance of
    /// the owning resource.
    pub fn storage_path(&self) -> &str {
        match &self.kind {
            ElementKind::Pseudo { alias } => alias,
            _ => &self.path,
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self.kind, ElementKind::Plain | ElementKind::Pseudo { .. })
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FhirResourceDef {
    pub name: String,
    pub category: Category,
    pub elements: Vec<FhirElementDef>,
    /// (reference element name, target resource).
    pub references: Vec<(String, String)>,
}

impl FhirResourceDef {
    pub fn candidates(&self) -> impl Iterator<Item = (usize, &FhirElementDef)> {
        self.elements.iter().enumerate().filter(|(_, e)| e.candidate)
    }

    /// The structural element (plain, complex or reference) at `path`.
    pub fn element_at(&self, path: &str) -> Option<&FhirElementDef> {
        self.elements.iter().find(|e| {
            e.path == path
                && matches!(
                    e.kind,
                    ElementKind::Plain | ElementKind::Complex | ElementKind::Reference { .. }
                )
        })
    }

    /// Plain, complex and reference elements in definition order.
    pub fn structure(&self) -> impl Iterator<Item = &FhirElementDef> {
        self.elements.iter().filter(|e| {
            matches!(
                e.kind,
                ElementKind::Plain | ElementKind::Complex | ElementKind::Reference { .. }
            )
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ElementSpec {
    pub name: String,
    #[serde(rename = "type")]
    pub datatype: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub mandatory: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ComplexTypeDef {
    pub name: String,
    pub elements: Vec<ElementSpec>,
}

#[derive(Debug, Clone)]
pub struct FhirCatalog {
    version: String,
    resources: Vec<FhirResourceDef>,
    index: HashMap<String, usize>,
    type_rules: BTreeMap<String, TypeRule>,
    complex_types: Vec<ComplexTypeDef>,
    graph: ConnectionGraph,
    pseudo_expanded: bool,
    general_data: Option<Vec<String>>,
}

impl FhirCatalog {
    /// The bundled snapshot, fully prepared with the default general-data
    /// element set.
    pub fn bundled() -> Self {
        let general: Vec<String> = DEFAULT_GENERAL_DATA.iter().map(|s| s.to_string()).collect();
        FhirCatalog::from_json(BUNDLED)
            .expect("bundled catalog is valid")
            .prepared(&general)
    }

    pub fn bundled_json() -> &'static str {
        BUNDLED
    }

    /// Loads a catalog file without derived elements.
    pub fn load(path: &Path) -> crate::Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| crate::Error::io(path, e))?;
        Ok(FhirCatalog::from_json(&text)?)
    }

    /// Adds pseudo-elements and effective leaves.
    pub fn prepared(mut self, general_data: &[String]) -> Self {
        self.expand_pseudo_elements();
        self.compute_effective_leaves(general_data);
        self
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn resources(&self) -> &[FhirResourceDef] {
        &self.resources
    }

    pub fn resource(&self, name: &str) -> Option<&FhirResourceDef> {
        self.index.get(name).map(|&i| &self.resources[i])
    }

    pub fn resource_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn type_rule(&self, id: &str) -> Option<&TypeRule> {
        self.type_rules.get(id)
    }

    pub fn type_rules(&self) -> impl Iterator<Item = &TypeRule> {
        self.type_rules.values()
    }

    pub fn complex_types(&self) -> &[ComplexTypeDef] {
        &self.complex_types
    }

    pub fn graph(&self) -> &ConnectionGraph {
        &self.graph
    }

    /// The general-data element set used for effective leaves, if computed.
    pub fn general_data(&self) -> Option<&[String]> {
        self.general_data.as_deref()
    }

    /// Undirected hop count between two resources; [`UNREACHABLE`] when
    /// they are not connected.
    pub fn resource_distance(&self, a: &str, b: &str) -> Result<u32, CatalogError> {
        let i = self
            .resource_index(a)
            .ok_or_else(|| CatalogError::UnknownResource(a.to_string()))?;
        let j = self
            .resource_index(b)
            .ok_or_else(|| CatalogError::UnknownResource(b.to_string()))?;
        Ok(self.graph.distance(i, j))
    }
}
