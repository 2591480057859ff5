use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ParameterError {
    #[error("parameter {name} = {value} is outside [0, 1]")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("exactly one of gamma, delta, epsilon must be set when beta is false (got {0})")]
    CombinationFlags(usize),
}

/// How weighted metric scores are reduced to one match score.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Combination {
    /// `beta`: first metric meeting its own threshold, text > morphological > semantic.
    FirstPassing,
    /// `gamma`: the strongest weighted metric.
    Max,
    /// `delta`: the sum of weighted metrics.
    Total,
    /// `epsilon`: the mean of weighted metrics.
    Average,
}

/// The tunables governing metric combination and thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatchParameters {
    /// Main threshold, compared strictly (`>`) in the combining strategies.
    pub tau: f64,
    pub tau_t: f64,
    pub tau_m: f64,
    pub tau_s: f64,
    pub omega_t: f64,
    pub omega_m: f64,
    pub omega_s: f64,
    /// Average per-token similarity of compound names instead of the best pair.
    pub alpha: bool,
    pub beta: bool,
    #[serde(default)]
    pub gamma: bool,
    #[serde(default)]
    pub delta: bool,
    #[serde(default)]
    pub epsilon: bool,
}

impl MatchParameters {
    /// All thresholds at `threshold`, the given weights, `alpha` on, and the
    /// given combination strategy.
    pub fn uniform(threshold: f64, weights: [f64; 3], combination: Combination) -> Self {
        MatchParameters {
            tau: threshold,
            tau_t: threshold,
            tau_m: threshold,
            tau_s: threshold,
            omega_t: weights[0],
            omega_m: weights[1],
            omega_s: weights[2],
            alpha: true,
            beta: combination == Combination::FirstPassing,
            gamma: combination == Combination::Max,
            delta: combination == Combination::Total,
            epsilon: combination == Combination::Average,
        }
    }

    pub fn validate(&self) -> Result<(), ParameterError> {
        let ranged = [
            ("tau", self.tau),
            ("tau_t", self.tau_t),
            ("tau_m", self.tau_m),
            ("tau_s", self.tau_s),
            ("omega_t", self.omega_t),
            ("omega_m", self.omega_m),
            ("omega_s", self.omega_s),
        ];
        for (name, value) in ranged {
            if !(0.0..=1.0).contains(&value) {
                return Err(ParameterError::OutOfRange { name, value });
            }
        }
        if !self.beta {
            let set = [self.gamma, self.delta, self.epsilon]
                .iter()
                .filter(|f| **f)
                .count();
            if set != 1 {
                return Err(ParameterError::CombinationFlags(set));
            }
        }
        Ok(())
    }

    /// The active strategy. Assumes [`validate`](Self::validate) passed; with
    /// `beta` set the other flags are ignored.
    pub fn combination(&self) -> Combination {
        if self.beta {
            Combination::FirstPassing
        } else if self.gamma {
            Combination::Max
        } else if self.delta {
            Combination::Total
        } else {
            Combination::Average
        }
    }

    /// Hex SHA-256 over the canonical JSON form. Any field change yields a
    /// different digest.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("parameters serialize");
        hex::encode(Sha256::digest(canonical))
    }
}
