use std::collections::BTreeMap;
use std::path::Path;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{extract::dedupe_names, EhrElement, IngestError};

const BUNDLED: &str = include_str!("../../data/codes.tsv");

/// Recognizes strings that are codes of one terminology scheme.
#[derive(Debug, Clone)]
pub struct CodePattern {
    scheme: String,
    regex: Regex,
}

impl CodePattern {
    pub fn new(scheme: &str, pattern: &str) -> Result<Self, IngestError> {
        let regex = Regex::new(&format!("^(?:{pattern})$")).map_err(|source| {
            IngestError::CodePattern {
                scheme: scheme.to_string(),
                source,
            }
        })?;
        Ok(CodePattern {
            scheme: scheme.to_string(),
            regex,
        })
    }

    /// SNOMED CT concept identifiers: 6 to 18 digits.
    pub fn snomed() -> Self {
        CodePattern::new("SNOMED", "[0-9]{6,18}").expect("valid pattern")
    }

    pub fn scheme(&self) -> &str {
        &self.scheme
    }

    pub fn matches(&self, s: &str) -> bool {
        self.regex.is_match(s)
    }
}

fn detect<'a>(patterns: &'a [CodePattern], s: &str) -> Option<&'a CodePattern> {
    patterns.iter().find(|p| p.matches(s))
}

/// Static terminology table mapping (scheme, code) to a text label.
#[derive(Debug, Clone, Default)]
pub struct CodeResolver {
    table: BTreeMap<(String, String), String>,
}

/// A code-shaped name or value that could not be resolved.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct UnresolvedCode {
    pub element: String,
    pub scheme: String,
    pub code: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CodeTranslation {
    /// Already a code of the target scheme.
    Native,
    Translated(String),
    /// A code of a known scheme with no counterpart in the target scheme.
    Unresolved { scheme: String },
    /// Not recognized as a code of any configured scheme.
    UnknownScheme,
}

impl CodeResolver {
    pub fn bundled() -> Self {
        CodeResolver::parse(BUNDLED).expect("bundled code table is valid")
    }

    pub fn load(path: &Path) -> crate::Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| crate::Error::io(path, e))?;
        Ok(CodeResolver::parse(&text)?)
    }

    pub fn parse(text: &str) -> Result<Self, IngestError> {
        let mut table = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
            match cols.as_slice() {
                [scheme, code, label] if !scheme.is_empty() && !code.is_empty() && !label.is_empty() => {
                    table.insert((scheme.to_string(), code.to_string()), label.to_string());
                }
                _ => return Err(IngestError::CodeTable { line: i + 1 }),
            }
        }
        Ok(CodeResolver { table })
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn lookup(&self, scheme: &str, code: &str) -> Option<&str> {
        self.table
            .get(&(scheme.to_string(), code.to_string()))
            .map(String::as_str)
    }

    /// First code (in table order) of `scheme` carrying `label`.
    pub fn code_for_label(&self, scheme: &str, label: &str) -> Option<&str> {
        self.table
            .iter()
            .find(|((s, _), l)| s == scheme && l.eq_ignore_ascii_case(label))
            .map(|((_, c), _)| c.as_str())
    }

    /// Translates a coded value into `target` through a shared label.
    pub fn translate(&self, value: &str, patterns: &[CodePattern], target: &str) -> CodeTranslation {
        let Some(pattern) = detect(patterns, value) else {
            return CodeTranslation::UnknownScheme;
        };
        if pattern.scheme() == target {
            return CodeTranslation::Native;
        }
        self.lookup(pattern.scheme(), value)
            .and_then(|label| self.code_for_label(target, label))
            .map(|code| CodeTranslation::Translated(code.to_string()))
            .unwrap_or_else(|| CodeTranslation::Unresolved {
                scheme: pattern.scheme().to_string(),
            })
    }
}

/// Code detection patterns, the code table and the scheme FHIR output must
/// use.
#[derive(Debug, Clone)]
pub struct Terminology {
    pub resolver: CodeResolver,
    pub patterns: Vec<CodePattern>,
    pub target_scheme: String,
}

impl Terminology {
    pub const DEFAULT_TARGET: &'static str = "SNOMED";

    pub fn new(resolver: CodeResolver, patterns: Vec<CodePattern>, target_scheme: impl Into<String>) -> Self {
        Terminology {
            resolver,
            patterns,
            target_scheme: target_scheme.into(),
        }
    }

    /// The bundled table with SNOMED CT as the only recognized scheme.
    pub fn bundled() -> Self {
        Terminology::new(CodeResolver::bundled(), vec![CodePattern::snomed()], Self::DEFAULT_TARGET)
    }

    pub fn translate(&self, value: &str) -> CodeTranslation {
        self.resolver.translate(value, &self.patterns, &self.target_scheme)
    }
}

/// `"Date of birth"` → `"DateOfBirth"`.
pub fn camel_case(label: &str) -> String {
    label
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(super::extract::capitalize)
        .collect()
}

/// Renames elements whose match name is a recognized code to the camel-cased
/// label from the resolver. Codes missing from the table keep their name and
/// are returned for reporting.
pub fn resolve_coded_names(
    mut elements: Vec<EhrElement>,
    resolver: &CodeResolver,
    patterns: &[CodePattern],
) -> (Vec<EhrElement>, Vec<UnresolvedCode>) {
    let mut unresolved = Vec::new();
    for e in &mut elements {
        let Some(pattern) = detect(patterns, &e.match_name) else {
            continue;
        };
        match resolver.lookup(pattern.scheme(), &e.match_name) {
            Some(label) if !camel_case(label).is_empty() => e.match_name = camel_case(label),
            _ => unresolved.push(UnresolvedCode {
                element: e.match_name.clone(),
                scheme: pattern.scheme().to_string(),
                code: e.match_name.clone(),
            }),
        }
    }
    dedupe_names(&mut elements);
    (elements, unresolved)
}
