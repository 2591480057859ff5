//! Text, morphological and semantic similarity metrics and the parameterized
//! match decision that combines them.
//!
//! All comparisons run on normalized (trimmed, lower-cased) tokens. Compound
//! names such as `DateOfBirth` are split by [`tokenize`] and compared
//! token-pairwise by [`composite_string_similarity`].

mod lev;
mod lexicon;
mod metrics;
mod params;
mod tokenize;

pub use lev::{edit_distance, lev};
pub use lexicon::{LexicalResource, Lexicon, LexiconError};
pub use metrics::{
    composite_string_similarity, match_breakdown, match_score, morphological_similarity,
    semantic_similarity, MatchBreakdown, Metric,
};
pub use params::{Combination, MatchParameters, ParameterError};
pub use tokenize::{normalize_token, tokenize};

use serde::{Deserialize, Serialize};

/// A similarity value. Raw metrics lie in `[0, 1]`; weighted match scores
/// lie in `[0, omega_t + omega_m + omega_s]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SimilarityScore(f64);

impl SimilarityScore {
    pub const ZERO: SimilarityScore = SimilarityScore(0.0);

    pub fn new(value: f64) -> Self {
        debug_assert!(value >= 0.0, "negative similarity {value}");
        SimilarityScore(value)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// A positive score means "match".
    pub fn is_match(self) -> bool {
        self.0 > 0.0
    }
}

impl From<SimilarityScore> for f64 {
    fn from(score: SimilarityScore) -> f64 {
        score.0
    }
}
