use std::fmt::Write as _;
use std::str::FromStr;

use serde_json::{Map, Value};

use super::{FhirBundle, FhirInstance, FhirValue};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Xml,
    Json,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Xml => "xml",
            OutputFormat::Json => "json",
        }
    }
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "xml" => Ok(OutputFormat::Xml),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!("unknown output format {other:?} (expected xml or json)")),
        }
    }
}

/// Deterministic rendering: instances in bundle order, elements in catalog
/// order for XML and sorted keys for JSON. References become an
/// `identifier` child naming the target instance.
pub fn serialize_bundle(bundle: &FhirBundle, format: OutputFormat) -> Vec<u8> {
    match format {
        OutputFormat::Xml => to_xml(bundle).into_bytes(),
        OutputFormat::Json => {
            let mut out = serde_json::to_vec_pretty(&to_json(bundle)).expect("json values serialize");
            out.push(b'\n');
            out
        }
    }
}

fn to_xml(bundle: &FhirBundle) -> String {
    let p = &bundle.provenance;
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = write!(
        out,
        "<Bundle sourceDigest=\"{}\" catalogVersion=\"{}\" parametersDigest=\"{}\">\n",
        escape(&p.source_digest),
        escape(&p.catalog_version),
        escape(&p.parameters_digest)
    );
    for inst in &bundle.instances {
        instance_xml(inst, &mut out);
    }
    out.push_str("</Bundle>\n");
    out
}

fn instance_xml(inst: &FhirInstance, out: &mut String) {
    let _ = writeln!(out, "  <{}>", inst.resource_name);
    let _ = writeln!(out, "    <id>{}</id>", escape(&inst.instance_id));
    let mut open: Vec<&str> = Vec::new();
    for (path, value) in &inst.values {
        let segments: Vec<&str> = path.split('.').collect();
        let (leaf, parents) = segments.split_last().expect("paths are non-empty");
        let common = open.iter().zip(parents).take_while(|(a, b)| a == b).count();
        while open.len() > common {
            let name = open.pop().expect("non-empty");
            let _ = writeln!(out, "{}</{name}>", indent(open.len() + 2));
        }
        for seg in &parents[common..] {
            let _ = writeln!(out, "{}<{seg}>", indent(open.len() + 2));
            open.push(seg);
        }
        let pad = indent(open.len() + 2);
        match value {
            FhirValue::Text(t) => {
                let _ = writeln!(out, "{pad}<{leaf}>{}</{leaf}>", escape(t));
            }
            FhirValue::Reference(id) => {
                let _ = writeln!(out, "{pad}<{leaf}>\n{pad}  <identifier>{}</identifier>\n{pad}</{leaf}>", escape(id));
            }
        }
    }
    while let Some(name) = open.pop() {
        let _ = writeln!(out, "{}</{name}>", indent(open.len() + 2));
    }
    let _ = writeln!(out, "  </{}>", inst.resource_name);
}

fn indent(level: usize) -> String {
    "  ".repeat(level)
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn to_json(bundle: &FhirBundle) -> Value {
    let entries: Vec<Value> = bundle.instances.iter().map(instance_json).collect();
    let mut root = Map::new();
    root.insert("resourceType".into(), "Bundle".into());
    root.insert(
        "provenance".into(),
        serde_json::to_value(&bundle.provenance).expect("provenance serializes"),
    );
    root.insert("entry".into(), Value::Array(entries));
    Value::Object(root)
}

fn instance_json(inst: &FhirInstance) -> Value {
    let mut obj = Map::new();
    obj.insert("resourceType".into(), inst.resource_name.clone().into());
    obj.insert("id".into(), inst.instance_id.clone().into());
    for (path, value) in &inst.values {
        let segments: Vec<&str> = path.split('.').collect();
        let (leaf, parents) = segments.split_last().expect("paths are non-empty");
        let mut node = &mut obj;
        for seg in parents {
            node = node
                .entry(seg.to_string())
                .or_insert_with(|| Value::Object(Map::new()))
                .as_object_mut()
                .expect("parent elements hold objects");
        }
        let v = match value {
            FhirValue::Text(t) => Value::String(t.clone()),
            FhirValue::Reference(id) => serde_json::json!({ "identifier": id }),
        };
        node.insert(leaf.to_string(), v);
    }
    Value::Object(obj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapper::Provenance;

    fn bundle() -> FhirBundle {
        FhirBundle {
            provenance: Provenance::new(b"x", "v1", "p"),
            instances: vec![
                FhirInstance {
                    resource_name: "Patient".into(),
                    instance_id: "001".into(),
                    values: vec![
                        ("name.family".into(), FhirValue::Text("O'Neil & Co".into())),
                        ("name.given".into(), FhirValue::Text("Ann".into())),
                        ("gender".into(), FhirValue::Text("female".into())),
                        ("address.text".into(), FhirValue::Text("1 <Main> St".into())),
                        ("managingOrganization".into(), FhirValue::Reference("002".into())),
                    ],
                },
                FhirInstance {
                    resource_name: "Organization".into(),
                    instance_id: "002".into(),
                    values: vec![("name".into(), FhirValue::Text("NHS".into()))],
                },
            ],
        }
    }

    #[test]
    fn xml_nests_dotted_paths_and_escapes() {
        let xml = String::from_utf8(serialize_bundle(&bundle(), OutputFormat::Xml)).unwrap();
        let doc = roxmltree::Document::parse(&xml).unwrap();
        let patient = doc.root_element().first_element_child().unwrap();
        assert_eq!(patient.tag_name().name(), "Patient");
        let names: Vec<&str> = patient.children().filter(|n| n.is_element()).map(|n| n.tag_name().name()).collect();
        assert_eq!(names, ["id", "name", "gender", "address", "managingOrganization"]);
        let family = doc.descendants().find(|n| n.has_tag_name("family")).unwrap();
        assert_eq!(family.text(), Some("O'Neil & Co"));
        let reference = doc.descendants().find(|n| n.has_tag_name("managingOrganization")).unwrap();
        assert_eq!(reference.first_element_child().unwrap().text(), Some("002"));
    }

    #[test]
    fn json_has_nested_objects() {
        let json: Value = serde_json::from_slice(&serialize_bundle(&bundle(), OutputFormat::Json)).unwrap();
        let patient = &json["entry"][0];
        assert_eq!(patient["name"]["given"], "Ann");
        assert_eq!(patient["managingOrganization"]["identifier"], "002");
        assert_eq!(json["provenance"]["catalogVersion"], "v1");
    }

    #[test]
    fn empty_bundle_is_well_formed() {
        let empty = FhirBundle::empty(Provenance::new(b"", "v", "p"));
        let xml = String::from_utf8(serialize_bundle(&empty, OutputFormat::Xml)).unwrap();
        let doc = roxmltree::Document::parse(&xml).unwrap();
        assert_eq!(doc.root_element().tag_name().name(), "Bundle");
        assert_eq!(doc.root_element().children().filter(|n| n.is_element()).count(), 0);
        let json: Value = serde_json::from_slice(&serialize_bundle(&empty, OutputFormat::Json)).unwrap();
        assert_eq!(json["entry"], Value::Array(vec![]));
    }

    #[test]
    fn serialization_is_repeatable() {
        for f in [OutputFormat::Xml, OutputFormat::Json] {
            assert_eq!(serialize_bundle(&bundle(), f), serialize_bundle(&bundle(), f));
        }
    }
}
