//! Command-line entry point.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rdk_core::verify::{run_suite, Suite};
use rdk_core::VerificationReport;

use crate::config::{ExperimentConfig, PRefMode, PruneBy};
use crate::error::{HarnessError, HarnessResult};
use crate::fit::{run_fit, write_fit_summary, Family};
use crate::freq::{run_freq, write_summary};
use crate::io::{csv_buffer, finish_csv};
use crate::simulate::{write_sim, Simulation};
use crate::sweep::{run_overlay, run_sweep, write_overlay, write_sweep};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;

#[derive(Debug, Parser)]
#[command(name = "rdk", version, about = "Drafter redistribution experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct SweepOverrides {
    /// Override the config's master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the config's trials per level.
    #[arg(long)]
    pub trials: Option<usize>,
    /// top_prob or freq.
    #[arg(long = "prune-by")]
    pub prune_by: Option<PruneBy>,
    /// true_target or freq.
    #[arg(long = "p-ref")]
    pub p_ref: Option<PRefMode>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Acceptance of every scheme across pruning levels.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: SweepOverrides,
    },
    /// Per-token masses of one target and its pruned variants.
    Overlay {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        keep: usize,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: SweepOverrides,
    },
    /// Coverage curve of a whitespace-separated token stream.
    Freq {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0.95)]
        quantile: f64,
        /// Vocabulary size (default: largest id + 1).
        #[arg(long)]
        vocab: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        /// Also write the quantile summary as CSV.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Fit a location/scale family and emit quantile pairs.
    Fit {
        #[arg(long)]
        input: PathBuf,
        /// normal or student_t.
        #[arg(long, default_value = "student_t")]
        family: Family,
        #[arg(long, default_value_t = 5.0)]
        df: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Speculative decoding on toy models for each drafter scheme.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        steps: u64,
        #[arg(long, default_value_t = 4)]
        lookahead: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Verification suites; exits 1 if any suite fails.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(path: &Path, o: &SweepOverrides) -> HarnessResult<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(s) = o.seed {
        cfg.seed = s;
    }
    if let Some(t) = o.trials {
        cfg.trials = t;
    }
    if let Some(p) = o.prune_by {
        cfg.prune_by = p;
    }
    if let Some(p) = o.p_ref {
        cfg.p_ref = p;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn write_reports(reports: &[VerificationReport], path: &Path) -> HarnessResult<()> {
    let mut w = csv_buffer();
    w.write_record(VerificationReport::CSV_HEADER.split(','))?;
    for r in reports {
        w.write_record(r.csv_row().split(','))?;
    }
    finish_csv(w, path)
}

/// Executes a parsed command and returns the process exit code.
pub fn execute(cmd: Command) -> HarnessResult<i32> {
    match cmd {
        Command::Sweep {
            config,
            out,
            overrides,
        } => {
            let cfg = load_config(&config, &overrides)?;
            write_sweep(&run_sweep(&cfg)?, &out)?;
        }
        Command::Overlay {
            config,
            keep,
            out,
            overrides,
        } => {
            let cfg = load_config(&config, &overrides)?;
            write_overlay(&run_overlay(&cfg, keep)?, &out)?;
        }
        Command::Freq {
            input,
            quantile,
            vocab,
            out,
            summary,
        } => {
            let s = run_freq(&input, quantile, vocab, &out)?;
            println!("{}", s.line());
            if let Some(p) = summary {
                write_summary(&s, &p)?;
            }
        }
        Command::Fit {
            input,
            family,
            df,
            out,
            summary,
        } => {
            let f = run_fit(&input, family, df, &out)?;
            println!(
                "family={} loc={:.16e} scale={:.16e} log_likelihood={:.16e}",
                f.family.name(),
                f.loc,
                f.scale,
                f.log_likelihood
            );
            if let Some(p) = summary {
                let n = crate::io::parse_whitespace::<f64>(&crate::io::read_text(&input)?, "sample")?.len();
                write_fit_summary(&f, n, &p)?;
            }
        }
        Command::Simulate {
            config,
            steps,
            lookahead,
            out,
            seed,
        } => {
            if steps == 0 || lookahead == 0 {
                return Err(HarnessError::Usage("steps and lookahead must be >= 1".into()));
            }
            let mut sim = Simulation::load(&config)?;
            if let Some(s) = seed {
                sim.cfg.seed = s;
            }
            write_sim(&sim.run(steps, lookahead)?, &out)?;
        }
        Command::Verify {
            suite,
            trials,
            seed,
            out,
        } => {
            let suite: Suite = suite.parse().map_err(|e: rdk_core::Error| HarnessError::Usage(e.to_string()))?;
            let reports = run_suite(suite, trials, seed)?;
            write_reports(&reports, &out)?;
            for r in &reports {
                eprintln!("{} {}", if r.pass { "PASS" } else { "FAIL" }, r.csv_row());
            }
            if reports.iter().any(|r| !r.pass) {
                return Ok(EXIT_VERIFY_FAILED);
            }
        }
    }
    Ok(EXIT_OK)
}

/// Parses `args` and runs the command, printing diagnostics to stderr.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
