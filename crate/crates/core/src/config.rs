//! Per-source configuration file.
//!
//! The file is a single JSON document:
//!
//! ```json
//! {
//!   "cacheDir": ".ehr2fhir-cache",
//!   "lexicon": null,
//!   "catalog": null,
//!   "depthLimit": 3,
//!   "generalDataElements": ["name", "text", "description"],
//!   "codePatterns": [{ "scheme": "SNOMED", "pattern": "[0-9]{6,18}" }],
//!   "targetScheme": "SNOMED",
//!   "sources": [
//!     {
//!       "sourceId": "systmone",
//!       "parameters": { "tau": 0.95, "tau_t": 0.95, "tau_m": 0.95, "tau_s": 0.95,
//!                       "omega_t": 1.0, "omega_m": 1.0, "omega_s": 0.95,
//!                       "alpha": true, "beta": false, "delta": true },
//!       "codeResolver": null,
//!       "notes": "free text"
//!     }
//!   ]
//! }
//! ```
//!
//! Everything except `sources` is optional. `null` for `lexicon`, `catalog`
//! or `codeResolver` selects the bundled data. Relative paths are resolved
//! against the directory holding the file.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::DEFAULT_GENERAL_DATA;
use crate::equivalence::DEFAULT_DEPTH_LIMIT;
use crate::ingest::{CodePattern, CodeResolver, IngestError, Terminology};
use crate::similarity::{Combination, MatchParameters, ParameterError};

pub const DEFAULT_CACHE_DIR: &str = ".ehr2fhir-cache";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("configuration is not valid: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("source {0} is defined more than once")]
    DuplicateSource(String),
    #[error("unknown source {id} (configured: {known})")]
    UnknownSource { id: String, known: String },
    #[error("source {id}: {error}")]
    Parameters { id: String, error: ParameterError },
    #[error("depthLimit must be at least 1")]
    DepthLimit,
    #[error(transparent)]
    CodePattern(#[from] IngestError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct CodePatternSpec {
    pub scheme: String,
    pub pattern: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SourceConfig {
    pub source_id: String,
    pub parameters: MatchParameters,
    #[serde(default)]
    pub code_resolver: Option<PathBuf>,
    #[serde(default)]
    pub notes: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Config {
    #[serde(default = "default_cache_dir")]
    pub cache_dir: PathBuf,
    #[serde(default)]
    pub lexicon: Option<PathBuf>,
    #[serde(default)]
    pub catalog: Option<PathBuf>,
    #[serde(default = "default_depth_limit")]
    pub depth_limit: u32,
    #[serde(default = "default_general_data")]
    pub general_data_elements: Vec<String>,
    #[serde(default = "default_code_patterns")]
    pub code_patterns: Vec<CodePatternSpec>,
    #[serde(default = "default_target_scheme")]
    pub target_scheme: String,
    pub sources: Vec<SourceConfig>,
}

fn default_cache_dir() -> PathBuf {
    PathBuf::from(DEFAULT_CACHE_DIR)
}

fn default_depth_limit() -> u32 {
    DEFAULT_DEPTH_LIMIT
}

fn default_general_data() -> Vec<String> {
    DEFAULT_GENERAL_DATA.iter().map(|s| s.to_string()).collect()
}

fn default_code_patterns() -> Vec<CodePatternSpec> {
    vec![CodePatternSpec {
        scheme: "SNOMED".to_string(),
        pattern: "[0-9]{6,18}".to_string(),
    }]
}

fn default_target_scheme() -> String {
    Terminology::DEFAULT_TARGET.to_string()
}

impl Config {
    /// A configuration with defaults everywhere and the given sources.
    pub fn with_sources(sources: Vec<SourceConfig>) -> Self {
        Config {
            cache_dir: default_cache_dir(),
            lexicon: None,
            catalog: None,
            depth_limit: default_depth_limit(),
            general_data_elements: default_general_data(),
            code_patterns: default_code_patterns(),
            target_scheme: default_target_scheme(),
            sources,
        }
    }

    /// Defaults plus the two reference sources: `systmone` with a lowered
    /// semantic weight and `mmedica` with equal weights, both summing the
    /// weighted metrics at threshold 0.95.
    pub fn builtin() -> Self {
        let source = |id: &str, omega_s: f64, notes: &str| SourceConfig {
            source_id: id.to_string(),
            parameters: MatchParameters::uniform(0.95, [1.0, 1.0, omega_s], Combination::Total),
            code_resolver: None,
            notes: notes.to_string(),
        };
        Config::with_sources(vec![
            source("systmone", 0.95, "semantically related tags often carry different data"),
            source("mmedica", 1.0, ""),
        ])
    }

    pub fn load(path: &Path) -> crate::Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| crate::Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new(""));
        Ok(Config::parse(&text, base)?)
    }

    /// Parses and validates; relative paths are joined onto `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let mut config: Config = serde_json::from_str(text)?;
        config.validate()?;
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut config.cache_dir);
        let sources = config.sources.iter_mut().map(|s| &mut s.code_resolver);
        for p in [&mut config.lexicon, &mut config.catalog].into_iter().chain(sources).flatten() {
            resolve(p);
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.depth_limit == 0 {
            return Err(ConfigError::DepthLimit);
        }
        let mut seen = HashSet::new();
        for s in &self.sources {
            if !seen.insert(s.source_id.as_str()) {
                return Err(ConfigError::DuplicateSource(s.source_id.clone()));
            }
            s.parameters.validate().map_err(|error| ConfigError::Parameters {
                id: s.source_id.clone(),
                error,
            })?;
        }
        self.patterns()?;
        Ok(())
    }

    pub fn source(&self, id: &str) -> Result<&SourceConfig, ConfigError> {
        self.sources
            .iter()
            .find(|s| s.source_id == id)
            .ok_or_else(|| ConfigError::UnknownSource {
                id: id.to_string(),
                known: self
                    .sources
                    .iter()
                    .map(|s| s.source_id.as_str())
                    .collect::<Vec<_>>()
                    .join(", "),
            })
    }

    pub fn patterns(&self) -> Result<Vec<CodePattern>, ConfigError> {
        self.code_patterns
            .iter()
            .map(|p| CodePattern::new(&p.scheme, &p.pattern).map_err(ConfigError::from))
            .collect()
    }

    /// The code table of `source` (bundled when unset) with the configured
    /// patterns and target scheme.
    pub fn terminology(&self, source: &SourceConfig) -> crate::Result<Terminology> {
        let resolver = match &source.code_resolver {
            Some(path) => CodeResolver::load(path)?,
            None => CodeResolver::bundled(),
        };
        Ok(Terminology::new(resolver, self.patterns()?, self.target_scheme.clone()))
    }
}
