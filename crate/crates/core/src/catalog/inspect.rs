use std::fmt::Write;

use super::{ElementKind, FhirCatalog};
use crate::typing::Transform;

impl FhirCatalog {
    /// Human-readable dump of resources, derived elements and graph edges,
    /// optionally followed by the datatype rules.
    pub fn inspect(&self, with_types: bool) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "catalog {} ({} resources, {} complex types, {} datatypes)",
            self.version,
            self.resources.len(),
            self.complex_types.len(),
            self.type_rules.len()
        );
        for r in &self.resources {
            let _ = writeln!(out, "\nresource {} [{:?}]", r.name, r.category);
            for e in &r.elements {
                let detail = match &e.kind {
                    ElementKind::Plain if e.candidate => "plain".to_string(),
                    ElementKind::Plain => "plain, pseudo only".to_string(),
                    ElementKind::Complex => "complex".to_string(),
                    ElementKind::Pseudo { alias } => format!("pseudo -> {alias}"),
                    ElementKind::EffectiveLeaf { target, storage } => {
                        format!("effective leaf -> {target}.{storage}")
                    }
                    ElementKind::Reference { target } => format!("reference -> {target}"),
                };
                let flags = match (&e.mandatory, &e.default_value) {
                    (true, Some(d)) => format!(" mandatory, default {d:?}"),
                    (true, None) => " mandatory".to_string(),
                    _ => String::new(),
                };
                let shown = match e.kind {
                    ElementKind::Pseudo { .. } | ElementKind::EffectiveLeaf { .. } => &e.name,
                    _ => &e.path,
                };
                let _ = writeln!(out, "  {shown:<34} {:<16} {detail}{flags}", e.datatype_id);
            }
        }
        let _ = writeln!(out, "\nedges");
        for (from, to, element) in self.graph.edges() {
            let _ = writeln!(out, "  {from} -> {to} ({element})");
        }
        if with_types {
            let _ = writeln!(out, "\ndatatypes");
            for rule in self.type_rules.values() {
                let def = rule.def();
                let transform = match &def.transform {
                    Transform::Identity => "identity".to_string(),
                    Transform::DateReorder => "dateReorder".to_string(),
                    Transform::CodedFirstChar => "codedFirstChar".to_string(),
                    Transform::Custom(name) => name.clone(),
                };
                let _ = writeln!(out, "  {}", def.id);
                let _ = writeln!(out, "    strict    {}", def.strict);
                let _ = writeln!(out, "    general   {}", def.general);
                let _ = writeln!(out, "    transform {transform}");
                if let Some(options) = &def.options {
                    let _ = writeln!(out, "    options   {}", options.join(" | "));
                }
                if def.coded {
                    let _ = writeln!(out, "    coded");
                }
            }
            let _ = writeln!(out, "\ncomplex types");
            for ty in &self.complex_types {
                let fields: Vec<String> = ty
                    .elements
                    .iter()
                    .map(|e| format!("{}: {}", e.name, e.datatype))
                    .collect();
                let _ = writeln!(out, "  {} {{ {} }}", ty.name, fields.join(", "));
            }
        }
        out
    }
}
