//! Speculative-decoding simulation of each drafter scheme on toy models.

use std::path::{Path, PathBuf};

use rdk_core::{
    acceptance_rate, build_affinity, estimate_covariance, rdk_redistribute, rdk_taylor_redistribute,
    renormalize, restrict, run_session, tli_redistribute, Affinity, ProbVec, RandomSource,
    SessionStats, SupportSet, ToyModel,
};
use serde::Deserialize;

use crate::error::{HarnessError, HarnessResult};
use crate::io::{csv_buffer, finish_csv, fmt_f, read_text};

/// Contexts with fewer emissions are left out of the reported TV distance.
pub const TV_MIN_COUNT: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimScheme {
    /// The unpruned drafter.
    Vanilla,
    Tli,
    RdkExact,
    RdkTaylor,
}

impl SimScheme {
    pub fn name(self) -> &'static str {
        match self {
            Self::Vanilla => "vanilla",
            Self::Tli => "tli",
            Self::RdkExact => "rdk_exact",
            Self::RdkTaylor => "rdk_taylor",
        }
    }
}

fn all_sim_schemes() -> Vec<SimScheme> {
    vec![SimScheme::Vanilla, SimScheme::Tli, SimScheme::RdkExact, SimScheme::RdkTaylor]
}

fn one() -> f64 {
    1.0
}

/// Simulation config. Model paths are resolved relative to the config file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub target: PathBuf,
    /// Defaults to the target model.
    #[serde(default)]
    pub drafter: Option<PathBuf>,
    /// Drafter vocabulary after pruning; defaults to the whole vocabulary.
    #[serde(default)]
    pub retained: Option<Vec<usize>>,
    #[serde(default = "all_sim_schemes")]
    pub schemes: Vec<SimScheme>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub prompt: Vec<usize>,
    /// Temperature of the covariance-based affinity matrix.
    #[serde(default = "one")]
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimRow {
    pub scheme: SimScheme,
    pub steps: u64,
    pub lookahead: usize,
    pub attempts: u64,
    pub accepts: u64,
    pub acceptance: f64,
    pub analytic_acceptance: f64,
    pub z_score: f64,
    pub max_tv: f64,
}

pub struct Simulation {
    pub target: ToyModel,
    pub drafter: ToyModel,
    pub retained: SupportSet,
    pub cfg: SimConfig,
}

impl Simulation {
    pub fn load(path: &Path) -> HarnessResult<Self> {
        let cfg: SimConfig =
            serde_json::from_str(&read_text(path)?).map_err(|e| HarnessError::Config(e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let load = |p: &Path| -> HarnessResult<ToyModel> {
            let full = base.join(p);
            let text = read_text(&full)?;
            ToyModel::from_json(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", full.display())))
        };
        let target = load(&cfg.target)?;
        let drafter = match &cfg.drafter {
            Some(p) => load(p)?,
            None => target.clone(),
        };
        Self::new(target, drafter, cfg)
    }

    pub fn new(target: ToyModel, drafter: ToyModel, cfg: SimConfig) -> HarnessResult<Self> {
        let vocab = target.vocab_size();
        if drafter.vocab_size() != vocab {
            return Err(HarnessError::Config("target and drafter vocabularies differ".into()));
        }
        if cfg.schemes.is_empty() {
            return Err(HarnessError::Config("schemes must not be empty".into()));
        }
        if !(cfg.tau > 0.0) || !cfg.tau.is_finite() {
            return Err(HarnessError::Config(format!("tau must be positive, got {}", cfg.tau)));
        }
        if let Some(t) = cfg.prompt.iter().find(|&&t| t >= vocab) {
            return Err(HarnessError::Config(format!("prompt token {t} outside vocabulary")));
        }
        let retained = match &cfg.retained {
            Some(ids) => SupportSet::from_unsorted(ids.iter().copied(), vocab)
                .map_err(|e| HarnessError::Config(e.to_string()))?,
            None => SupportSet::full(vocab),
        };
        if retained.is_empty() {
            return Err(HarnessError::Config("retained vocabulary is empty".into()));
        }
        Ok(Self {
            target,
            drafter,
            retained,
            cfg,
        })
    }

    fn pruned(&self, q: &ProbVec) -> HarnessResult<ProbVec> {
        renormalize(&restrict(q, &self.retained)?).map_err(|_| {
            HarnessError::Config("a drafter entry has no mass on the retained vocabulary".into())
        })
    }

    /// Affinity matrix from the covariance of the target's table entries.
    fn affinity(&self) -> HarnessResult<Affinity> {
        let full = SupportSet::full(self.target.vocab_size());
        let samples: Vec<ProbVec> = self.target.entries().map(|(_, p)| p.clone()).collect();
        let omega = estimate_covariance(&samples, &full)?;
        Ok(build_affinity(&omega, self.cfg.tau, &full, &full)?)
    }

    /// Drafter model whose entries are the scheme's redistributed distributions.
    pub fn drafter_for(&self, scheme: SimScheme) -> HarnessResult<ToyModel> {
        let full = SupportSet::full(self.target.vocab_size());
        let m = match scheme {
            SimScheme::RdkExact => Some(self.affinity()?),
            _ => None,
        };
        Ok(self.drafter.map_entries(|ctx, q| {
            if scheme == SimScheme::Vanilla {
                return Ok(q.clone());
            }
            let pruned = self.pruned(q).map_err(|e| rdk_core::Error::Model(e.to_string()))?;
            let p = self.target.lookup(ctx)?;
            match scheme {
                SimScheme::Tli => tli_redistribute(&pruned, &full),
                SimScheme::RdkExact => rdk_redistribute(&pruned, &full, m.as_ref().unwrap()),
                SimScheme::RdkTaylor => rdk_taylor_redistribute(&pruned, &full, p),
                SimScheme::Vanilla => unreachable!(),
            }
        })?)
    }

    pub fn run(&self, steps: u64, lookahead: usize) -> HarnessResult<Vec<SimRow>> {
        let master = RandomSource::new(self.cfg.seed);
        let mut schemes = self.cfg.schemes.clone();
        schemes.sort_unstable();
        schemes.dedup();
        schemes
            .into_iter()
            .map(|scheme| {
                let drafter = self.drafter_for(scheme)?;
                let mut rng = master.child(scheme as u64);
                let stats = run_session(&self.target, &drafter, &self.cfg.prompt, lookahead, steps, &mut rng)?;
                self.row(scheme, &drafter, &stats)
            })
            .collect()
    }

    fn row(&self, scheme: SimScheme, drafter: &ToyModel, stats: &SessionStats) -> HarnessResult<SimRow> {
        let mut expected = 0.0;
        let mut var = 0.0;
        for (key, c) in &stats.contexts {
            let a = acceptance_rate(self.target.lookup(key)?, drafter.lookup(key)?)?;
            expected += c.attempts as f64 * a;
            var += c.attempts as f64 * a * (1.0 - a);
        }
        let attempts = stats.attempts();
        let accepts = stats.accepts();
        let z = if var > 0.0 {
            (accepts as f64 - expected) / var.sqrt()
        } else {
            0.0
        };
        Ok(SimRow {
            scheme,
            steps: stats.steps,
            lookahead: stats.lookahead,
            attempts,
            accepts,
            acceptance: stats.acceptance(),
            analytic_acceptance: expected / attempts.max(1) as f64,
            z_score: z,
            max_tv: stats.max_tv(&self.target, TV_MIN_COUNT)?,
        })
    }
}

pub fn write_sim(rows: &[SimRow], path: &Path) -> HarnessResult<()> {
    let mut w = csv_buffer();
    w.write_record([
        "scheme",
        "steps",
        "lookahead",
        "attempts",
        "accepts",
        "acceptance",
        "analytic_acceptance",
        "z_score",
        "max_tv",
    ])?;
    for r in rows {
        w.write_record([
            r.scheme.name().to_string(),
            r.steps.to_string(),
            r.lookahead.to_string(),
            r.attempts.to_string(),
            r.accepts.to_string(),
            fmt_f(r.acceptance),
            fmt_f(r.analytic_acceptance),
            fmt_f(r.z_score),
            fmt_f(r.max_tv),
        ])?;
    }
    finish_csv(w, path)
}
