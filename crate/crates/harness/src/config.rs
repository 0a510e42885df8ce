//! Experiment configuration (a single JSON document, unknown keys rejected).

use std::collections::BTreeSet;
use std::path::Path;

use rdk_core::prob::{sample_gaussian_logits, sample_student_t_logits};
use rdk_core::{softmax, Covariance, LogitVector, ProbVec, RandomSource, SchemeId};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, HarnessResult};

/// Synthetic target logit family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetSpec {
    /// i.i.d. `loc + scale * t_df` logits.
    StudentT { df: f64, loc: f64, scale: f64 },
    /// i.i.d. `N(mu, diag_var)` logits.
    Gaussian { mu: f64, diag_var: f64 },
}

impl Default for TargetSpec {
    fn default() -> Self {
        // scale picked so the top quarter of tokens carries about 96% of the mass
        Self::StudentT {
            df: 5.0,
            loc: 0.0,
            scale: 0.75,
        }
    }
}

impl TargetSpec {
    fn validate(&self) -> HarnessResult<()> {
        let ok = match *self {
            Self::StudentT { df, loc, scale } => {
                df > 0.0 && df.is_finite() && loc.is_finite() && scale >= 0.0 && scale.is_finite()
            }
            Self::Gaussian { mu, diag_var } => mu.is_finite() && diag_var >= 0.0 && diag_var.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(HarnessError::Config(format!("invalid target parameters: {self:?}")))
        }
    }

    /// Samples logits over `m` tokens and returns their softmax.
    pub fn sample(&self, m: usize, rng: &mut RandomSource) -> HarnessResult<ProbVec> {
        let logits = match *self {
            Self::StudentT { df, loc, scale } => {
                sample_student_t_logits(df, &LogitVector::new(vec![loc; m])?, &vec![scale; m], rng)?
            }
            Self::Gaussian { mu, diag_var } => sample_gaussian_logits(
                &LogitVector::new(vec![mu; m])?,
                &Covariance::Diagonal(vec![diag_var; m]),
                rng,
            )?,
        };
        Ok(softmax(&logits)?)
    }
}

/// Source of the reference distribution fed to the first-order path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PRefMode {
    #[default]
    TrueTarget,
    #[serde(alias = "freq")]
    FrequencyPrior,
}

impl std::str::FromStr for PRefMode {
    type Err = HarnessError;

    fn from_str(s: &str) -> HarnessResult<Self> {
        match s {
            "true_target" => Ok(Self::TrueTarget),
            "freq" | "frequency_prior" => Ok(Self::FrequencyPrior),
            _ => Err(HarnessError::Usage(format!(
                "unknown p-ref mode '{s}' (expected true_target or freq)"
            ))),
        }
    }
}

/// How the retained drafter vocabulary is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PruneBy {
    /// The sampled target's own highest-probability tokens.
    #[default]
    TopProb,
    /// The most frequent tokens under a synthetic Zipf table.
    Freq,
}

impl std::str::FromStr for PruneBy {
    type Err = HarnessError;

    fn from_str(s: &str) -> HarnessResult<Self> {
        match s {
            "top_prob" => Ok(Self::TopProb),
            "freq" => Ok(Self::Freq),
            _ => Err(HarnessError::Usage(format!(
                "unknown prune-by mode '{s}' (expected top_prob or freq)"
            ))),
        }
    }
}

fn default_vocab() -> usize {
    200_000
}

fn default_levels() -> Vec<usize> {
    vec![200_000, 20_000, 2_000, 500]
}

fn default_schemes() -> Vec<SchemeId> {
    SchemeId::ALL.to_vec()
}

fn default_trials() -> usize {
    50
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_vocab")]
    pub vocab_size: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub target: TargetSpec,
    #[serde(default = "default_levels")]
    pub prune_keep: Vec<usize>,
    #[serde(default = "default_schemes")]
    pub schemes: Vec<SchemeId>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "one")]
    pub tau: f64,
    /// Scale of the rank-one scores `theta_scale * p_ref_j` behind the exact path.
    #[serde(default = "one")]
    pub theta_scale: f64,
    #[serde(default)]
    pub p_ref: PRefMode,
    #[serde(default)]
    pub prune_by: PruneBy,
    /// Exponent of the synthetic Zipf frequency table.
    #[serde(default = "one")]
    pub zipf_exponent: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults deserialize")
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> HarnessResult<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> HarnessResult<Self> {
        Self::from_json(&crate::io::read_text(path)?)
    }

    pub fn validate(&self) -> HarnessResult<()> {
        let fail = |m: String| Err(HarnessError::Config(m));
        if self.vocab_size == 0 {
            return fail("vocab_size must be >= 1".into());
        }
        if self.trials == 0 {
            return fail("trials must be >= 1".into());
        }
        if self.prune_keep.is_empty() {
            return fail("prune_keep must list at least one level".into());
        }
        if let Some(k) = self.prune_keep.iter().find(|&&k| k == 0 || k > self.vocab_size) {
            return fail(format!("prune level {k} outside 1..={}", self.vocab_size));
        }
        if self.prune_keep.iter().collect::<BTreeSet<_>>().len() != self.prune_keep.len() {
            return fail("prune levels must be distinct".into());
        }
        if self.schemes.is_empty() {
            return fail("schemes must not be empty".into());
        }
        if self.schemes.iter().collect::<BTreeSet<_>>().len() != self.schemes.len() {
            return fail("schemes must be distinct".into());
        }
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return fail(format!("tau must be positive, got {}", self.tau));
        }
        if !(self.theta_scale >= 0.0) || !self.theta_scale.is_finite() {
            return fail(format!("theta_scale must be non-negative, got {}", self.theta_scale));
        }
        if !(self.zipf_exponent >= 0.0) || !self.zipf_exponent.is_finite() {
            return fail(format!("zipf_exponent must be non-negative, got {}", self.zipf_exponent));
        }
        self.target.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = ExperimentConfig::default();
        assert_eq!(c.vocab_size, 200_000);
        assert_eq!(c.prune_keep, vec![200_000, 20_000, 2_000, 500]);
        assert_eq!(c.trials, 50);
        assert_eq!(c.schemes.len(), 4);
        assert_eq!(c.p_ref, PRefMode::TrueTarget);
        assert_eq!(c.prune_by, PruneBy::TopProb);
        c.validate().unwrap();
    }

    #[test]
    fn parses_families_and_modes() {
        let c = ExperimentConfig::from_json(
            r#"{"vocab_size": 100, "prune_keep": [50, 10],
                "target": {"family": "gaussian", "mu": 0.0, "diag_var": 2.0},
                "p_ref": "freq", "prune_by": "freq", "schemes": ["tli", "rdk_taylor"]}"#,
        )
        .unwrap();
        assert_eq!(c.target, TargetSpec::Gaussian { mu: 0.0, diag_var: 2.0 });
        assert_eq!(c.p_ref, PRefMode::FrequencyPrior);
        assert_eq!(c.schemes, vec![SchemeId::Tli, SchemeId::RdkTaylor]);
    }

    #[test]
    fn rejects_bad_configs() {
        for bad in [
            r#"{"unknown": 1}"#,
            r#"{"vocab_size": 10, "prune_keep": [11]}"#,
            r#"{"vocab_size": 10, "prune_keep": [5, 5]}"#,
            r#"{"vocab_size": 10, "prune_keep": [5], "trials": 0}"#,
            r#"{"vocab_size": 10, "prune_keep": [5], "tau": 0}"#,
            r#"{"vocab_size": 10, "prune_keep": [5], "schemes": ["nope"]}"#,
            r#"{"vocab_size": 10, "prune_keep": [5], "target": {"family": "student_t", "df": 5, "loc": 0, "scale": 1, "x": 2}}"#,
            r#"{"vocab_size": 10, "prune_keep": [5], "target": {"family": "student_t", "df": -1, "loc": 0, "scale": 1}}"#,
        ] {
            assert!(matches!(ExperimentConfig::from_json(bad), Err(HarnessError::Config(_))), "{bad}");
        }
    }

    #[test]
    fn target_sample_is_distribution() {
        let mut rng = RandomSource::new(1);
        let p = TargetSpec::default().sample(1000, &mut rng).unwrap();
        assert_eq!(p.len(), 1000);
        assert!((p.mass() - 1.0).abs() < 1e-12);
    }
}
