//! Datatype compatibility of EHR values against FHIR element types, and the
//! transformations that bring reformattable values into FHIR format.
//!
//! Each datatype carries two anchored patterns: the strict FHIR format and a
//! permissive "general" format covering values of the right type in another
//! layout. A transform maps every general-format value into strict format.

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Compatibility {
    ExactFormat,
    Reformattable,
    Incompatible,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Transform {
    Identity,
    /// Pull year, month and day out of a day-first or year-first date and
    /// emit `yyyy-mm-dd`, keeping any time-of-day suffix.
    DateReorder,
    /// Select the option whose first character matches the value's first
    /// character, case-insensitively.
    CodedFirstChar,
    /// A named built-in: `quantity`, `decimal`, `integer`, `boolean`,
    /// `compactIdentifier`, `collapseWhitespace`.
    Custom(String),
}

/// Serialized form of a [`TypeRule`], as stored in the catalog file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct TypeRuleDef {
    pub id: String,
    pub strict: String,
    pub general: String,
    pub transform: Transform,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub options: Option<Vec<String>>,
    /// Values hold codes from a terminology and go through code translation.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub coded: bool,
}

#[derive(Debug, Error)]
pub enum RuleError {
    #[error("type {id}: invalid {which} pattern: {source}")]
    Pattern {
        id: String,
        which: &'static str,
        source: regex::Error,
    },
    #[error("type {id}: coded first-character rule needs options with distinct first characters")]
    Options { id: String },
    #[error("type {id}: unknown transform `{name}`")]
    UnknownTransform { id: String, name: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReformatError {
    #[error("value {value:?} is not compatible with type {datatype}")]
    Incompatible { value: String, datatype: String },
    #[error("value {value:?} is ambiguous for type {datatype}: {reason}")]
    Ambiguous {
        value: String,
        datatype: String,
        reason: &'static str,
    },
    #[error("transform for type {datatype} produced {output:?}, which is not in FHIR format")]
    NotConforming { output: String, datatype: String },
}

const CUSTOM_TRANSFORMS: &[&str] = &[
    "quantity",
    "decimal",
    "integer",
    "boolean",
    "compactIdentifier",
    "collapseWhitespace",
];

/// A compiled datatype rule.
#[derive(Debug, Clone)]
pub struct TypeRule {
    def: TypeRuleDef,
    strict: Regex,
    general: Regex,
}

fn anchored(id: &str, which: &'static str, pattern: &str) -> Result<Regex, RuleError> {
    Regex::new(&format!("^(?:{pattern})$")).map_err(|source| RuleError::Pattern {
        id: id.to_string(),
        which,
        source,
    })
}

impl TypeRule {
    pub fn compile(def: TypeRuleDef) -> Result<Self, RuleError> {
        let strict = anchored(&def.id, "strict", &def.strict)?;
        let general = anchored(&def.id, "general", &def.general)?;
        match &def.transform {
            Transform::CodedFirstChar => {
                let options = def.options.as_deref().unwrap_or_default();
                let mut firsts: Vec<char> = options
                    .iter()
                    .filter_map(|o| o.chars().next())
                    .flat_map(char::to_lowercase)
                    .collect();
                let count = firsts.len();
                firsts.sort_unstable();
                firsts.dedup();
                if count == 0 || count != options.len() || firsts.len() != count {
                    return Err(RuleError::Options { id: def.id.clone() });
                }
            }
            Transform::Custom(name) if !CUSTOM_TRANSFORMS.contains(&name.as_str()) => {
                return Err(RuleError::UnknownTransform {
                    id: def.id.clone(),
                    name: name.clone(),
                })
            }
            _ => {}
        }
        Ok(TypeRule {
            def,
            strict,
            general,
        })
    }

    pub fn id(&self) -> &str {
        &self.def.id
    }

    pub fn def(&self) -> &TypeRuleDef {
        &self.def
    }

    pub fn is_coded(&self) -> bool {
        self.def.coded
    }

    pub fn options(&self) -> Option<&[String]> {
        self.def.options.as_deref()
    }

    pub fn is_strict(&self, value: &str) -> bool {
        self.strict.is_match(value)
    }

    pub fn is_general(&self, value: &str) -> bool {
        self.general.is_match(value)
    }
}

/// Classifies `value` against `rule`: strict format first, then the general
/// format.
pub fn compatibility(value: &str, rule: &TypeRule) -> Compatibility {
    if rule.is_strict(value) {
        Compatibility::ExactFormat
    } else if rule.is_general(value) {
        Compatibility::Reformattable
    } else {
        Compatibility::Incompatible
    }
}

/// Brings a compatible value into strict FHIR format. Values already in
/// strict format are returned unchanged, so the operation is idempotent.
pub fn reformat(value: &str, rule: &TypeRule) -> Result<String, ReformatError> {
    match compatibility(value, rule) {
        Compatibility::ExactFormat => return Ok(value.to_string()),
        Compatibility::Incompatible => {
            return Err(ReformatError::Incompatible {
                value: value.to_string(),
                datatype: rule.id().to_string(),
            })
        }
        Compatibility::Reformattable => {}
    }

    let ambiguous = |reason| ReformatError::Ambiguous {
        value: value.to_string(),
        datatype: rule.id().to_string(),
        reason,
    };
    let output = match &rule.def.transform {
        Transform::Identity => value.to_string(),
        Transform::DateReorder => reorder_date(value).map_err(ambiguous)?,
        Transform::CodedFirstChar => {
            first_char_option(value, rule.options().unwrap_or_default()).map_err(ambiguous)?
        }
        Transform::Custom(name) => custom(name, value).map_err(ambiguous)?,
    };

    if rule.is_strict(&output) {
        Ok(output)
    } else {
        Err(ReformatError::NotConforming {
            output,
            datatype: rule.id().to_string(),
        })
    }
}

fn reorder_date(value: &str) -> Result<String, &'static str> {
    let (date, time) = match value.find(['T', ' ']) {
        Some(i) => (&value[..i], Some(&value[i + 1..])),
        None => (value, None),
    };
    let groups: Vec<&str> = date
        .split(|c: char| !c.is_ascii_digit())
        .filter(|g| !g.is_empty())
        .collect();
    let years: Vec<usize> = groups
        .iter()
        .enumerate()
        .filter(|(_, g)| g.len() == 4)
        .map(|(i, _)| i)
        .collect();
    if years.len() != 1 {
        return Err("expected exactly one four-digit year");
    }
    let year_at = years[0];
    let ordered = match (groups.len(), year_at) {
        (3, 0) => format!("{}-{}-{}", groups[0], groups[1], groups[2]),
        (3, 2) => format!("{}-{}-{}", groups[2], groups[1], groups[0]),
        (2, 0) => format!("{}-{}", groups[0], groups[1]),
        (2, 1) => format!("{}-{}", groups[1], groups[0]),
        (1, 0) => groups[0].to_string(),
        _ => return Err("year must lead or trail the date"),
    };
    Ok(match time {
        Some(t) => format!("{ordered}T{t}"),
        None => ordered,
    })
}

fn first_char_option(value: &str, options: &[String]) -> Result<String, &'static str> {
    let first = value
        .chars()
        .next()
        .ok_or("empty value")?
        .to_lowercase()
        .collect::<String>();
    let mut matching = options.iter().filter(|o| {
        o.chars()
            .next()
            .map(|c| c.to_lowercase().collect::<String>() == first)
            .unwrap_or(false)
    });
    match (matching.next(), matching.next()) {
        (Some(option), None) => Ok(option.clone()),
        (None, _) => Err("no option shares the first character"),
        (Some(_), Some(_)) => Err("several options share the first character"),
    }
}

fn strip_leading_zeros(digits: &str) -> &str {
    let trimmed = digits.trim_start_matches('0');
    if trimmed.is_empty() {
        "0"
    } else {
        trimmed
    }
}

fn normalize_number(number: &str) -> String {
    let number = number.replace(',', ".");
    let (sign, body) = match number.strip_prefix('-') {
        Some(rest) => ("-", rest),
        None => ("", number.as_str()),
    };
    match body.split_once('.') {
        Some((int, frac)) => format!("{sign}{}.{frac}", strip_leading_zeros(int)),
        None => format!("{sign}{}", strip_leading_zeros(body)),
    }
}

fn custom(name: &str, value: &str) -> Result<String, &'static str> {
    match name {
        "quantity" => {
            let split = value
                .find(|c: char| !(c.is_ascii_digit() || c == '.' || c == ',' || c == '-'))
                .unwrap_or(value.len());
            let number = normalize_number(value[..split].trim());
            let unit = value[split..].trim();
            Ok(if unit.is_empty() {
                number
            } else {
                format!("{number} {unit}")
            })
        }
        "decimal" | "integer" => Ok(normalize_number(value.trim())),
        "boolean" => match value.trim().to_lowercase().as_str() {
            "true" | "t" | "yes" | "y" | "1" => Ok("true".to_string()),
            "false" | "f" | "no" | "n" | "0" => Ok("false".to_string()),
            _ => Err("not a recognizable boolean"),
        },
        "compactIdentifier" => Ok(value.chars().filter(|c| !c.is_whitespace()).collect()),
        "collapseWhitespace" => Ok(value.split_whitespace().collect::<Vec<_>>().join(" ")),
        _ => Err("unknown transform"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DATE_STRICT: &str = r"-?[0-9]{4}(-(0[1-9]|1[0-2])(-(0[0-9]|[1-2][0-9]|3[0-1]))?)?";

    fn date_rule() -> TypeRule {
        TypeRule::compile(TypeRuleDef {
            id: "date".into(),
            strict: DATE_STRICT.into(),
            general: format!(
                "{DATE_STRICT}|(0[0-9]|[12][0-9]|3[01])[-/.](0[1-9]|1[0-2])[-/.][0-9]{{4}}"
            ),
            transform: Transform::DateReorder,
            options: None,
            coded: false,
        })
        .unwrap()
    }

    fn gender_rule() -> TypeRule {
        TypeRule::compile(TypeRuleDef {
            id: "gender".into(),
            strict: "male|female|other|unknown".into(),
            general: "[Mm]+[A-Za-z]*|[Ff]+[A-Za-z]*|[Oo]+[A-Za-z]*|[Uu]+[A-Za-z]*".into(),
            transform: Transform::CodedFirstChar,
            options: Some(vec!["male".into(), "female".into(), "other".into(), "unknown".into()]),
            coded: false,
        })
        .unwrap()
    }

    #[test]
    fn date_compatibility() {
        let rule = date_rule();
        assert_eq!(compatibility("1951-01-01", &rule), Compatibility::ExactFormat);
        assert_eq!(compatibility("01-01-1951", &rule), Compatibility::Reformattable);
        assert_eq!(compatibility("not a date", &rule), Compatibility::Incompatible);
    }

    #[test]
    fn date_reformat() {
        let rule = date_rule();
        assert_eq!(reformat("01-01-1951", &rule).unwrap(), "1951-01-01");
        assert_eq!(reformat("24/09/2015", &rule).unwrap(), "2015-09-24");
        assert_eq!(reformat("1951-01-01", &rule).unwrap(), "1951-01-01");
        assert!(matches!(
            reformat("02-03-04", &rule),
            Err(ReformatError::Incompatible { .. })
        ));
    }

    #[test]
    fn two_year_groups_are_ambiguous() {
        assert!(reorder_date("1951-1952").is_err());
        assert!(reorder_date("02-03-04").is_err());
        assert_eq!(reorder_date("1951/02/03 10:00:00").unwrap(), "1951-02-03T10:00:00");
    }

    #[test]
    fn gender_first_character() {
        let rule = gender_rule();
        assert_eq!(reformat("F", &rule).unwrap(), "female");
        assert_eq!(reformat("Male", &rule).unwrap(), "male");
        assert_eq!(reformat("female", &rule).unwrap(), "female");
        assert_eq!(compatibility("X", &rule), Compatibility::Incompatible);
    }

    #[test]
    fn first_char_rule_requires_distinct_options() {
        let def = TypeRuleDef {
            options: Some(vec!["female".into(), "fluid".into()]),
            ..gender_rule().def().clone()
        };
        assert!(matches!(TypeRule::compile(def), Err(RuleError::Options { .. })));
    }

    #[test]
    fn custom_transforms() {
        assert_eq!(custom("quantity", "28tablet").unwrap(), "28 tablet");
        assert_eq!(custom("quantity", "007,5 mg").unwrap(), "7.5 mg");
        assert_eq!(custom("decimal", "-00.25").unwrap(), "-0.25");
        assert_eq!(custom("boolean", "No").unwrap(), "false");
        assert_eq!(custom("compactIdentifier", "491 711 1072").unwrap(), "4917111072");
        assert_eq!(custom("collapseWhitespace", "a  b\tc").unwrap(), "a b c");
    }

    #[test]
    fn unknown_custom_transform_is_rejected_at_compile() {
        let def = TypeRuleDef {
            id: "x".into(),
            strict: "a".into(),
            general: "a|b".into(),
            transform: Transform::Custom("rot13".into()),
            options: None,
            coded: false,
        };
        assert!(matches!(
            TypeRule::compile(def),
            Err(RuleError::UnknownTransform { .. })
        ));
    }
}
