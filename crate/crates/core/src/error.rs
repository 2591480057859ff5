use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::catalog::CatalogError;
use crate::config::ConfigError;
use crate::ingest::IngestError;
use crate::similarity::{LexiconError, ParameterError};
use crate::typing::ReformatError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error(transparent)]
    Parameters(#[from] ParameterError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Reformat(#[from] ReformatError),
    /// The mapper produced output that breaks a bundle invariant.
    #[error("output invariant violated: {0}")]
    Invariant(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
