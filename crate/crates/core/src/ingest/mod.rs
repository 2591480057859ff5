//! EHR pre-processing: XML parsing, leaf extraction with context
//! disambiguation, and resolution of coded element names.

mod codes;
mod extract;
mod parse;

pub use codes::{
    camel_case, resolve_coded_names, CodePattern, CodeResolver, CodeTranslation, Terminology,
    UnresolvedCode,
};
pub use extract::{extract_elements, leaf_occurrences, EhrElement, LeafOccurrence};
pub(crate) use extract::capitalize as capitalize_first;
pub use parse::{parse_ehr, EhrNode, SYNTHETIC_ROOT};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("input is not valid UTF-8: {0}")]
    Encoding(#[from] std::str::Utf8Error),
    #[error("document contains no elements")]
    Empty,
    #[error("malformed XML at line {line}, column {column}: {message}")]
    Malformed {
        line: u32,
        column: u32,
        message: String,
    },
    #[error("mixed content (text beside child elements) at {path}")]
    MixedContent { path: String },
    #[error("code table line {line}: expected `scheme<TAB>code<TAB>label`")]
    CodeTable { line: usize },
    #[error("code pattern for scheme {scheme}: {source}")]
    CodePattern {
        scheme: String,
        source: regex::Error,
    },
}
