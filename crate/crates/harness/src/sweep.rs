//! Pruning sweep and distribution overlay over synthetic targets.
//!
//! The drafter is the target with its vocabulary cut to the retained set, so
//! any acceptance loss comes from pruning alone.

use std::path::Path;

use rayon::prelude::*;
use rdk_core::{
    acceptance_rate, build_structured_affinity, apply_exact, fr_prune, masked_only,
    rdk_taylor_redistribute, tli_redistribute, top_prob_prune, Affinity, ProbVec, RandomSource,
    SchemeId, SupportSet, TokenFrequencyTable,
};

use crate::config::{ExperimentConfig, PRefMode, PruneBy};
use crate::error::HarnessResult;
use crate::io::{csv_buffer, finish_csv, fmt_f};

/// Largest count in the synthetic Zipf table.
const ZIPF_TOP_COUNT: u64 = 1_000_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub prune_keep: usize,
    /// Fraction of the vocabulary removed.
    pub prune_fraction: f64,
    pub scheme: SchemeId,
    pub acceptance_mean: f64,
    pub acceptance_std: f64,
    pub trials: usize,
    pub seed: u64,
}

impl SweepRow {
    /// Half-width of the normal-approximation 95% confidence interval of the mean.
    pub fn ci95(&self) -> f64 {
        1.96 * self.acceptance_std / (self.trials as f64).sqrt()
    }
}

/// Scheme outputs for one sampled target at one pruning level.
pub struct Redistributed {
    pub retained: SupportSet,
    pub masked: ProbVec,
    pub tli: ProbVec,
    pub rdk_exact: Option<ProbVec>,
    pub rdk_taylor: ProbVec,
}

impl Redistributed {
    pub fn get(&self, scheme: SchemeId) -> &ProbVec {
        match scheme {
            SchemeId::MaskedOnly => &self.masked,
            SchemeId::Tli => &self.tli,
            SchemeId::RdkExact => self.rdk_exact.as_ref().expect("exact path requested"),
            SchemeId::RdkTaylor => &self.rdk_taylor,
        }
    }
}

/// Shared, trial-independent inputs.
pub struct SweepContext {
    cfg: ExperimentConfig,
    zipf: Option<TokenFrequencyTable>,
    freq_prior: Option<ProbVec>,
}

impl SweepContext {
    pub fn new(cfg: &ExperimentConfig) -> HarnessResult<Self> {
        cfg.validate()?;
        let needs_zipf = cfg.prune_by == PruneBy::Freq || cfg.p_ref == PRefMode::FrequencyPrior;
        let zipf = if needs_zipf {
            Some(TokenFrequencyTable::zipf(cfg.vocab_size, cfg.zipf_exponent, ZIPF_TOP_COUNT)?)
        } else {
            None
        };
        let freq_prior = match (&zipf, cfg.p_ref) {
            (Some(z), PRefMode::FrequencyPrior) => Some(z.to_distribution()?),
            _ => None,
        };
        Ok(Self {
            cfg: cfg.clone(),
            zipf,
            freq_prior,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.cfg
    }

    /// Target drawn for `trial` (independent of every other trial).
    pub fn sample_target(&self, trial: u64) -> HarnessResult<ProbVec> {
        let mut rng = RandomSource::new(self.cfg.seed).child(trial);
        self.cfg.target.sample(self.cfg.vocab_size, &mut rng)
    }

    fn p_ref<'a>(&'a self, p: &'a ProbVec) -> &'a ProbVec {
        self.freq_prior.as_ref().unwrap_or(p)
    }

    fn retained(&self, p: &ProbVec, keep: usize) -> HarnessResult<SupportSet> {
        let pruned = match &self.zipf {
            Some(z) if self.cfg.prune_by == PruneBy::Freq => fr_prune(z, keep)?,
            _ => top_prob_prune(p, keep)?,
        };
        Ok(pruned.retained().clone())
    }

    fn exact_matrix(&self, p: &ProbVec) -> HarnessResult<Affinity> {
        let full = SupportSet::full(p.len());
        Ok(build_structured_affinity(self.p_ref(p), self.cfg.theta_scale, &full)?)
    }

    /// All scheme outputs for target `p` pruned to `keep` tokens.
    pub fn redistribute(
        &self,
        p: &ProbVec,
        keep: usize,
        exact: Option<&Affinity>,
    ) -> HarnessResult<Redistributed> {
        let full = SupportSet::full(p.len());
        let retained = self.retained(p, keep)?;
        let masked = masked_only(p, &retained)?;
        let tli = tli_redistribute(p, &retained)?;
        let rdk_taylor = rdk_taylor_redistribute(&tli, &full, self.p_ref(p))?;
        let rdk_exact = match exact {
            Some(m) => Some(apply_exact(m, &tli)?),
            None => None,
        };
        Ok(Redistributed {
            retained,
            masked,
            tli,
            rdk_exact,
            rdk_taylor,
        })
    }

    /// Acceptance of every configured scheme at every level, in sorted
    /// (level descending, scheme) order.
    pub fn trial_acceptances(&self, trial: u64) -> HarnessResult<Vec<f64>> {
        let p = self.sample_target(trial)?;
        let exact = if self.cfg.schemes.contains(&SchemeId::RdkExact) {
            Some(self.exact_matrix(&p)?)
        } else {
            None
        };
        let mut out = Vec::new();
        for keep in self.levels() {
            let r = self.redistribute(&p, keep, exact.as_ref())?;
            for scheme in self.schemes() {
                out.push(acceptance_rate(&p, r.get(scheme))?);
            }
        }
        Ok(out)
    }

    pub fn levels(&self) -> Vec<usize> {
        let mut l = self.cfg.prune_keep.clone();
        l.sort_unstable_by(|a, b| b.cmp(a));
        l
    }

    pub fn schemes(&self) -> Vec<SchemeId> {
        let mut s = self.cfg.schemes.clone();
        s.sort_unstable();
        s
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn run_sweep(cfg: &ExperimentConfig) -> HarnessResult<Vec<SweepRow>> {
    let ctx = SweepContext::new(cfg)?;
    let per_trial = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| ctx.trial_acceptances(t))
        .collect::<HarnessResult<Vec<_>>>()?;
    let mut rows = Vec::new();
    let mut cell = 0;
    for keep in ctx.levels() {
        for scheme in ctx.schemes() {
            let xs: Vec<f64> = per_trial.iter().map(|v| v[cell]).collect();
            let (mean, std) = mean_std(&xs);
            rows.push(SweepRow {
                prune_keep: keep,
                prune_fraction: 1.0 - keep as f64 / cfg.vocab_size as f64,
                scheme,
                acceptance_mean: mean,
                acceptance_std: std,
                trials: cfg.trials,
                seed: cfg.seed,
            });
            cell += 1;
        }
    }
    Ok(rows)
}

pub fn write_sweep(rows: &[SweepRow], path: &Path) -> HarnessResult<()> {
    let mut w = csv_buffer();
    w.write_record([
        "prune_keep",
        "prune_fraction",
        "scheme",
        "acceptance_mean",
        "acceptance_std",
        "trials",
        "seed",
    ])?;
    for r in rows {
        w.write_record([
            r.prune_keep.to_string(),
            fmt_f(r.prune_fraction),
            r.scheme.to_string(),
            fmt_f(r.acceptance_mean),
            fmt_f(r.acceptance_std),
            r.trials.to_string(),
            r.seed.to_string(),
        ])?;
    }
    finish_csv(w, path)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverlayRow {
    pub token_index: usize,
    pub target: f64,
    pub masked: f64,
    pub tli: f64,
    pub rdk_taylor: f64,
}

/// Per-token masses of the first sampled target and its pruned variants,
/// ordered by descending target probability.
pub fn run_overlay(cfg: &ExperimentConfig, keep: usize) -> HarnessResult<Vec<OverlayRow>> {
    let ctx = SweepContext::new(cfg)?;
    if keep == 0 || keep > cfg.vocab_size {
        return Err(crate::error::HarnessError::Usage(format!(
            "keep must lie in 1..={}, got {keep}",
            cfg.vocab_size
        )));
    }
    let p = ctx.sample_target(0)?;
    let r = ctx.redistribute(&p, keep, None)?;
    let mut order: Vec<usize> = (0..p.len()).collect();
    order.sort_by(|&a, &b| p[b].total_cmp(&p[a]).then(a.cmp(&b)));
    Ok(order
        .into_iter()
        .map(|i| OverlayRow {
            token_index: i,
            target: p[i],
            masked: r.masked[i],
            tli: r.tli[i],
            rdk_taylor: r.rdk_taylor[i],
        })
        .collect())
}

pub fn write_overlay(rows: &[OverlayRow], path: &Path) -> HarnessResult<()> {
    let mut w = csv_buffer();
    w.write_record(["token_index", "target", "masked", "tli", "rdk_taylor"])?;
    for r in rows {
        w.write_record([
            r.token_index.to_string(),
            fmt_f(r.target),
            fmt_f(r.masked),
            fmt_f(r.tli),
            fmt_f(r.rdk_taylor),
        ])?;
    }
    finish_csv(w, path)
}
