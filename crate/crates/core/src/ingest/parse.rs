use serde::{Deserialize, Serialize};

use super::IngestError;

/// Name of the root inserted above a document with several top-level
/// elements.
pub const SYNTHETIC_ROOT: &str = "Extract";

/// An element of the source document. Text is whitespace-normalized; an
/// element with children never carries text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EhrNode {
    pub name: String,
    pub attributes: Vec<(String, String)>,
    pub children: Vec<EhrNode>,
    pub text: Option<String>,
}

impl EhrNode {
    pub fn new(name: impl Into<String>) -> Self {
        EhrNode {
            name: name.into(),
            attributes: Vec::new(),
            children: Vec::new(),
            text: None,
        }
    }

    pub fn with_text(name: impl Into<String>, text: impl Into<String>) -> Self {
        EhrNode {
            text: Some(text.into()),
            ..EhrNode::new(name)
        }
    }

    pub fn with_children(name: impl Into<String>, children: Vec<EhrNode>) -> Self {
        EhrNode {
            children,
            ..EhrNode::new(name)
        }
    }

    pub fn child(&self, name: &str) -> Option<&EhrNode> {
        self.children.iter().find(|c| c.name == name)
    }
}

pub(crate) fn normalize_space(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Parses an EHR extract. A forest of top-level elements is placed under a
/// synthetic [`SYNTHETIC_ROOT`]; a single top-level element is returned as is.
pub fn parse_ehr(bytes: &[u8]) -> Result<EhrNode, IngestError> {
    let text = std::str::from_utf8(bytes)?;
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let body = blank_prolog(text);
    if body.trim().is_empty() {
        return Err(IngestError::Empty);
    }

    let open = format!("<{SYNTHETIC_ROOT}>");
    let wrapped = format!("{open}{body}</{SYNTHETIC_ROOT}>");
    let doc = roxmltree::Document::parse(&wrapped).map_err(|e| {
        let pos = e.pos();
        let column = if pos.row == 1 {
            pos.col.saturating_sub(open.len() as u32).max(1)
        } else {
            pos.col
        };
        IngestError::Malformed {
            line: pos.row,
            column,
            message: e.to_string(),
        }
    })?;

    let root = convert(doc.root_element(), "")?;
    match root.children.len() {
        0 => Err(IngestError::Empty),
        1 => Ok(root.children.into_iter().next().expect("one child")),
        _ => Ok(root),
    }
}

/// Blanks out the XML declaration and any DOCTYPE so the document can be
/// wrapped, preserving line and column positions of everything else.
fn blank_prolog(text: &str) -> String {
    let mut out = text.to_string();
    for (start, end) in [("<?xml", "?>"), ("<!DOCTYPE", ">")] {
        if let Some(s) = out.find(start) {
            if out[..s].trim().is_empty() {
                if let Some(len) = out[s..].find(end) {
                    let stop = s + len + end.len();
                    let blank: String = out[s..stop]
                        .chars()
                        .map(|c| if c == '\n' { '\n' } else { ' ' })
                        .collect();
                    out.replace_range(s..stop, &blank);
                }
            }
        }
    }
    out
}

fn convert(node: roxmltree::Node<'_, '_>, parent_path: &str) -> Result<EhrNode, IngestError> {
    let name = node.tag_name().name().to_string();
    let path = if parent_path.is_empty() {
        name.clone()
    } else {
        format!("{parent_path}/{name}")
    };

    let mut children = Vec::new();
    let mut text = String::new();
    for child in node.children() {
        if child.is_element() {
            children.push(convert(child, &path)?);
        } else if child.is_text() {
            text.push_str(child.text().unwrap_or_default());
        }
    }

    let text = normalize_space(&text);
    if !children.is_empty() && !text.is_empty() {
        return Err(IngestError::MixedContent { path });
    }

    Ok(EhrNode {
        name,
        attributes: node
            .attributes()
            .map(|a| (a.name().to_string(), normalize_space(a.value())))
            .collect(),
        children,
        text: (!text.is_empty()).then_some(text),
    })
}
