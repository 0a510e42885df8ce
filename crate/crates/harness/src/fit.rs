//! Location/scale fits of logit samples and quantile-quantile tables.

use std::path::Path;

use statrs::distribution::{Continuous, ContinuousCDF, Normal, StudentsT};

use crate::error::{HarnessError, HarnessResult};
use crate::io::{csv_buffer, finish_csv, fmt_f, parse_whitespace, read_text};

pub const MIN_SAMPLES: usize = 30;
/// Probability levels `k / 200` for `k = 1..=199`.
pub const QQ_LEVELS: usize = 199;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Normal,
    StudentT,
}

impl std::str::FromStr for Family {
    type Err = HarnessError;

    fn from_str(s: &str) -> HarnessResult<Self> {
        match s {
            "normal" => Ok(Self::Normal),
            "student_t" => Ok(Self::StudentT),
            _ => Err(HarnessError::Usage(format!(
                "unknown family '{s}' (expected normal or student_t)"
            ))),
        }
    }
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Self::Normal => "normal",
            Self::StudentT => "student_t",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fit {
    pub family: Family,
    pub loc: f64,
    pub scale: f64,
    /// Degrees of freedom (Student-t only).
    pub df: Option<f64>,
    pub log_likelihood: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QqPoint {
    pub level: f64,
    pub empirical: f64,
    pub theoretical: f64,
}

fn check_samples(xs: &[f64]) -> HarnessResult<()> {
    if xs.len() < MIN_SAMPLES {
        return Err(HarnessError::Usage(format!(
            "need at least {MIN_SAMPLES} samples, got {}",
            xs.len()
        )));
    }
    if let Some(i) = xs.iter().position(|x| !x.is_finite()) {
        return Err(HarnessError::Usage(format!("sample {i} is not finite")));
    }
    Ok(())
}

fn degenerate() -> HarnessError {
    HarnessError::Usage("degenerate scale: samples are constant".into())
}

/// Type-7 (linear interpolation) quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], level: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * level;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn fit_normal(xs: &[f64]) -> HarnessResult<Fit> {
    check_samples(xs)?;
    let n = xs.len() as f64;
    let loc = xs.iter().sum::<f64>() / n;
    let scale = (xs.iter().map(|x| (x - loc).powi(2)).sum::<f64>() / n).sqrt();
    if !(scale > 0.0) {
        return Err(degenerate());
    }
    let dist = Normal::new(loc, scale).map_err(|_| degenerate())?;
    Ok(Fit {
        family: Family::Normal,
        loc,
        scale,
        df: None,
        log_likelihood: xs.iter().map(|&x| dist.ln_pdf(x)).sum(),
        iterations: 0,
    })
}

/// Maximum-likelihood location and scale with `df` held fixed (EM iteration).
pub fn fit_student_t(xs: &[f64], df: f64) -> HarnessResult<Fit> {
    check_samples(xs)?;
    if !(df > 0.0) || !df.is_finite() {
        return Err(HarnessError::Usage(format!("df must be positive, got {df}")));
    }
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut loc = quantile_sorted(&sorted, 0.5);
    let mut abs_dev: Vec<f64> = xs.iter().map(|x| (x - loc).abs()).collect();
    abs_dev.sort_by(f64::total_cmp);
    let mut scale = quantile_sorted(&abs_dev, 0.5) / 0.6745;
    if !(scale > 0.0) {
        // heavy ties at the median; fall back to the standard deviation
        scale = fit_normal(xs)?.scale;
    }
    let n = xs.len() as f64;
    let mut iterations = 0;
    for it in 1..=10_000 {
        iterations = it;
        let w: Vec<f64> = xs
            .iter()
            .map(|&x| (df + 1.0) / (df + ((x - loc) / scale).powi(2)))
            .collect();
        let sw: f64 = w.iter().sum();
        let new_loc = w.iter().zip(xs).map(|(w, x)| w * x).sum::<f64>() / sw;
        let new_scale = (w
            .iter()
            .zip(xs)
            .map(|(w, x)| w * (x - new_loc).powi(2))
            .sum::<f64>()
            / n)
            .sqrt();
        let done = (new_loc - loc).abs() <= 1e-12 * (1.0 + loc.abs())
            && (new_scale - scale).abs() <= 1e-12 * scale;
        loc = new_loc;
        scale = new_scale;
        if !(scale > 0.0) {
            return Err(degenerate());
        }
        if done {
            break;
        }
    }
    let dist = StudentsT::new(loc, scale, df).map_err(|_| degenerate())?;
    Ok(Fit {
        family: Family::StudentT,
        loc,
        scale,
        df: Some(df),
        log_likelihood: xs.iter().map(|&x| dist.ln_pdf(x)).sum(),
        iterations,
    })
}

pub fn fit(xs: &[f64], family: Family, df: f64) -> HarnessResult<Fit> {
    match family {
        Family::Normal => fit_normal(xs),
        Family::StudentT => fit_student_t(xs, df),
    }
}

/// Empirical against fitted quantiles at the standard probability levels.
pub fn qq_table(xs: &[f64], f: &Fit) -> HarnessResult<Vec<QqPoint>> {
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let inv: Box<dyn Fn(f64) -> f64> = match f.family {
        Family::Normal => {
            let d = Normal::new(f.loc, f.scale).map_err(|_| degenerate())?;
            Box::new(move |u| d.inverse_cdf(u))
        }
        Family::StudentT => {
            let d = StudentsT::new(f.loc, f.scale, f.df.unwrap_or(5.0)).map_err(|_| degenerate())?;
            Box::new(move |u| d.inverse_cdf(u))
        }
    };
    Ok((1..=QQ_LEVELS)
        .map(|k| {
            let level = k as f64 / (QQ_LEVELS + 1) as f64;
            QqPoint {
                level,
                empirical: quantile_sorted(&sorted, level),
                theoretical: inv(level),
            }
        })
        .collect())
}

pub fn run_fit(input: &Path, family: Family, df: f64, out: &Path) -> HarnessResult<Fit> {
    let xs: Vec<f64> = parse_whitespace(&read_text(input)?, "sample")?;
    let f = fit(&xs, family, df)?;
    let mut w = csv_buffer();
    w.write_record(["level", "empirical_q", "theoretical_q"])?;
    for q in qq_table(&xs, &f)? {
        w.write_record([fmt_f(q.level), fmt_f(q.empirical), fmt_f(q.theoretical)])?;
    }
    finish_csv(w, out)?;
    Ok(f)
}

pub fn write_fit_summary(f: &Fit, n: usize, path: &Path) -> HarnessResult<()> {
    let mut w = csv_buffer();
    w.write_record(["family", "loc", "scale", "df", "log_likelihood", "samples"])?;
    w.write_record([
        f.family.name().to_string(),
        fmt_f(f.loc),
        fmt_f(f.scale),
        f.df.map(fmt_f).unwrap_or_default(),
        fmt_f(f.log_likelihood),
        n.to_string(),
    ])?;
    finish_csv(w, path)
}
