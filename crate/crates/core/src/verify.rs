//! Monte-Carlo and exhaustive checks of the identities and bounds the
//! redistribution schemes rely on.
//!
//! Every trial draws from its own child stream of the master seed, so suites
//! run in parallel and still report identical numbers for a given seed.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::affinity::{apply_exact, build_structured_affinity, taylor_redistribute, AffinityMatrix};
use crate::error::{Error, Result};
use crate::metrics::{acceptance_rate, drafter_kernel, l1_distance, l1_slices};
use crate::prob::{
    random_simplex, random_simplex_on, softmax_slice, Covariance, GaussianLogitSampler,
    LogitVector, ProbVector, SupportSet, DENSE_LIMIT,
};
use crate::rng::{RandomSource, StudentT};
use crate::samplers::tli_redistribute;

/// Tolerance for exact algebraic identities.
pub const IDENTITY_TOL: f64 = 1e-12;
/// Tolerance for inequality theorems.
pub const INEQUALITY_TOL: f64 = 1e-9;
/// Probability that the two-token construction favours TLI over RDK.
pub const RDK2D_VIOLATION_RATE: f64 = 0.0054;
/// Allowed headroom of the Taylor error table over its fitted bound.
pub const TAYLOR_HEADROOM: f64 = 1.1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub suite: String,
    pub trials: u64,
    pub violations: u64,
    /// Largest excess of the checked quantity over its bound (for statistical
    /// suites, the observed violation frequency).
    pub max_residual: f64,
    pub bound: f64,
    pub pass: bool,
    pub seed: u64,
    /// Draws discarded and redrawn because a precondition failed.
    pub redrawn: u64,
}

impl VerificationReport {
    pub const CSV_HEADER: &'static str = "suite,trials,violations,max_residual,bound,seed,pass";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{:.16e},{:.16e},{},{}",
            self.suite, self.trials, self.violations, self.max_residual, self.bound, self.seed, self.pass
        )
    }
}

/// Per-trial outcome folded across a suite.
#[derive(Debug, Clone, Copy)]
struct Tally {
    trials: u64,
    violations: u64,
    max_residual: f64,
    redrawn: u64,
}

impl Tally {
    fn empty() -> Self {
        Self {
            trials: 0,
            violations: 0,
            max_residual: f64::NEG_INFINITY,
            redrawn: 0,
        }
    }

    fn one(residual: f64, tol: f64, redrawn: u64) -> Self {
        Self {
            trials: 1,
            violations: u64::from(residual > tol || residual.is_nan()),
            max_residual: residual,
            redrawn,
        }
    }

    fn merge(self, o: Self) -> Self {
        Self {
            trials: self.trials + o.trials,
            violations: self.violations + o.violations,
            max_residual: self.max_residual.max(o.max_residual),
            redrawn: self.redrawn + o.redrawn,
        }
    }

    fn report(self, suite: &str, bound: f64, seed: u64) -> VerificationReport {
        VerificationReport {
            suite: suite.to_string(),
            trials: self.trials,
            violations: self.violations,
            max_residual: self.max_residual,
            bound,
            pass: self.violations == 0,
            seed,
            redrawn: self.redrawn,
        }
    }
}

fn run_trials<F>(trials: u64, seed: u64, f: F) -> Result<Tally>
where
    F: Fn(u64, &mut RandomSource) -> Result<Tally> + Sync,
{
    let master = RandomSource::new(seed);
    (0..trials)
        .into_par_iter()
        .map(|t| f(t, &mut master.child(t)))
        .try_reduce(Tally::empty, |a, b| Ok(a.merge(b)))
}

fn require(cond: bool, msg: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter(msg.to_string()))
    }
}

fn identity_residual(p: &ProbVector<f64>, q: &ProbVector<f64>) -> Result<f64> {
    let alpha = acceptance_rate(p, q)?;
    let k = drafter_kernel(p, q)?.l1_norm();
    let half = 0.5 * l1_distance(p, q)?;
    Ok((alpha - (1.0 - k)).abs().max((alpha - (1.0 - half)).abs()))
}

/// `alpha = 1 - |k|_1 = 1 - |p - q|_1 / 2` on random Dirichlet(1) pairs.
pub fn verify_acceptance_identity(trials: u64, m: usize, seed: u64) -> Result<VerificationReport> {
    require(trials >= 1, "trials must be >= 1")?;
    require(m >= 2, "m must be >= 2")?;
    let tally = run_trials(trials, seed, |_, rng| {
        let p = random_simplex(m, rng)?;
        let q = random_simplex(m, rng)?;
        Ok(Tally::one(identity_residual(&p, &q)?, IDENTITY_TOL, 0))
    })?;
    Ok(tally.report(&format!("identity_m{m}"), IDENTITY_TOL, seed))
}

/// Every grid point of the 3-simplex at the given step (which must divide
/// one), all ordered pairs.
pub fn simplex_grid3(step: f64) -> Result<Vec<ProbVector<f64>>> {
    let k = (1.0 / step).round() as usize;
    require(k >= 1 && ((k as f64) * step - 1.0).abs() < 1e-9, "grid step must divide 1")?;
    let mut out = Vec::new();
    for a in 0..=k {
        for b in 0..=k - a {
            let c = k - a - b;
            let kf = k as f64;
            out.push(ProbVector::new(vec![a as f64 / kf, b as f64 / kf, c as f64 / kf])?);
        }
    }
    Ok(out)
}

/// The acceptance identity on every pair of a 3-simplex grid.
pub fn verify_acceptance_identity_grid(step: f64) -> Result<VerificationReport> {
    let grid = simplex_grid3(step)?;
    let tally = grid
        .par_iter()
        .map(|p| {
            grid.iter().try_fold(Tally::empty(), |acc, q| {
                Ok::<_, Error>(acc.merge(Tally::one(identity_residual(p, q)?, IDENTITY_TOL, 0)))
            })
        })
        .try_reduce(Tally::empty, |a, b| Ok(a.merge(b)))?;
    Ok(tally.report("identity_grid", IDENTITY_TOL, 0))
}

fn random_row_stochastic(n: usize, rng: &mut RandomSource) -> Vec<f64> {
    (0..n).flat_map(|_| rng.uniform_simplex(n)).collect()
}

/// `|M^T x - M^T y|_1 <= |x - y|_1` for random row-stochastic `M` and real `x, y`.
pub fn verify_nonexpansive(trials: u64, m: usize, seed: u64) -> Result<VerificationReport> {
    require(trials >= 1, "trials must be >= 1")?;
    require((1..=128).contains(&m), "m must lie in 1..=128")?;
    let t = SupportSet::full(m);
    let tally = run_trials(trials, seed, |_, rng| {
        let mat = AffinityMatrix::from_rows(&t, random_row_stochastic(m, rng), 1.0)?;
        let x: Vec<f64> = (0..m).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
        let y: Vec<f64> = (0..m).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
        let lhs = l1_slices(&mat.transpose_apply(&x)?, &mat.transpose_apply(&y)?);
        Ok(Tally::one(lhs - l1_slices(&x, &y), IDENTITY_TOL, 0))
    })?;
    Ok(tally.report("nonexpansive", IDENTITY_TOL, seed))
}

/// One bounded-L1 instance: returns `|p' - p| - (|q0 - p| + |M^T p - p|)`.
pub fn bounded_l1_excess(
    p: &ProbVector<f64>,
    q: &ProbVector<f64>,
    mat: &AffinityMatrix<f64>,
) -> Result<f64> {
    let target = mat.support();
    let q0 = tli_redistribute(q, target)?;
    let p_prime = apply_exact(mat, &q0)?;
    let p_t: Vec<f64> = target.iter().map(|i| p.get(i)).collect();
    let eps = l1_slices(&mat.transpose_apply(&p_t)?, &p_t);
    Ok(l1_distance(&p_prime, p)? - (l1_distance(&q0, p)? + eps))
}

/// Bounded-L1 theorem on random supports and random row-stochastic `M` over
/// the target support. Every fourth trial draws the drafter support inside `T`.
pub fn verify_bounded_l1(trials: u64, m: usize, seed: u64) -> Result<VerificationReport> {
    require(trials >= 1, "trials must be >= 1")?;
    require((2..=128).contains(&m), "m must lie in 2..=128")?;
    let tally = run_trials(trials, seed, |trial, rng| {
        let mut redrawn = 0;
        loop {
            let size = 1 + rng.index(m);
            let t = SupportSet::new(rng.subset(m, size), m)?;
            let d = if trial % 4 == 0 {
                let k = 1 + rng.index(t.len());
                let pick = rng.subset(t.len(), k);
                SupportSet::new(pick.into_iter().map(|i| t.indices()[i]).collect(), m)?
            } else {
                let size = 1 + rng.index(m);
                SupportSet::new(rng.subset(m, size), m)?
            };
            if d.intersection(&t).is_empty() {
                redrawn += 1;
                continue;
            }
            let p = random_simplex_on(&t, rng)?;
            let q = random_simplex_on(&d, rng)?;
            let mat = AffinityMatrix::from_rows(&t, random_row_stochastic(t.len(), rng), 1.0)?;
            let excess = bounded_l1_excess(&p, &q, &mat)?;
            return Ok(Tally::one(excess, INEQUALITY_TOL, redrawn));
        }
    })?;
    Ok(tally.report("bounded_l1", INEQUALITY_TOL, seed))
}

/// `|softmax(z + eta) - softmax(z)|_1 - |eta|_1 / 2`.
pub fn softmax_excess(z: &[f64], eta: &[f64]) -> Result<f64> {
    let shifted: Vec<f64> = z.iter().zip(eta).map(|(a, b)| a + b).collect();
    let d = l1_slices(&softmax_slice(&shifted)?, &softmax_slice(z)?);
    Ok(d - 0.5 * l1_slices(eta, &vec![0.0; eta.len()]))
}

/// Softmax stability under logit noise of L1 size `epsilon`. Logits are
/// Student-t (df 5); every hundredth trial also searches one-hot noise
/// directions on every coordinate.
pub fn verify_softmax_stability(trials: u64, m: usize, epsilon: f64, seed: u64) -> Result<VerificationReport> {
    require(trials >= 1, "trials must be >= 1")?;
    require(m >= 1, "m must be >= 1")?;
    require(epsilon > 0.0 && epsilon.is_finite(), "epsilon must be positive")?;
    let t = StudentT::new(5.0)?;
    let tally = run_trials(trials, seed, |trial, rng| {
        let z: Vec<f64> = (0..m).map(|_| t.sample(rng)).collect();
        let dir: Vec<f64> = (0..m).map(|_| rng.standard_normal()).collect();
        let norm: f64 = dir.iter().map(|x| x.abs()).sum();
        let eta: Vec<f64> = dir.iter().map(|x| x * epsilon / norm).collect();
        let mut worst = softmax_excess(&z, &eta)?;
        if trial % 100 == 0 {
            let mut e = vec![0.0; m];
            for k in 0..m {
                for sign in [1.0, -1.0] {
                    e[k] = sign * epsilon;
                    worst = worst.max(softmax_excess(&z, &e)?);
                }
                e[k] = 0.0;
            }
        }
        Ok(Tally::one(worst, IDENTITY_TOL, 0))
    })?;
    Ok(tally.report("softmax", IDENTITY_TOL, seed))
}

/// Parameters of the two-token Gaussian construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rdk2dSetting {
    /// `a ~ U[0.5, 1]`, `mu_1 ~ U[-2, 2]`, `mu_2 = mu_1 + 6 sqrt(a) + U[0, 1]`.
    Random,
    Fixed { a: f64, mu: [f64; 2] },
}

/// `(alpha_tli, alpha_rdk)` for one draw with `M = [[a, 1-a], [1-a, a]]`
/// used both as logit covariance and as affinity, and `q' = [1, 0]`.
pub fn rdk2d_trial(a: f64, mu: [f64; 2], rng: &mut RandomSource) -> Result<(f64, f64)> {
    require((0.5..=1.0).contains(&a), "a must lie in [0.5, 1]")?;
    let sd = a.sqrt();
    require(
        mu[0] + 3.0 * sd <= mu[1] - 3.0 * sd,
        "means must satisfy mu_1 + 3 sqrt(a) <= mu_2 - 3 sqrt(a)",
    )?;
    let cov = Covariance::Dense {
        dim: 2,
        entries: vec![a, 1.0 - a, 1.0 - a, a],
    };
    let z = GaussianLogitSampler::new(&LogitVector::new(mu.to_vec())?, &cov)?.sample(rng);
    let p = softmax_slice(z.values())?;
    let tli = p[0];
    let rdk = p[0].min(a) + p[1].min(1.0 - a);
    Ok((tli, rdk))
}

/// Frequency of `alpha_tli > alpha_rdk` in the two-token construction,
/// compared with the stated rate plus 3 sigma binomial slack.
pub fn verify_rdk_vs_tli_2d(trials: u64, setting: Rdk2dSetting, seed: u64) -> Result<VerificationReport> {
    require(trials >= 10_000, "trials must be >= 10000")?;
    if let Rdk2dSetting::Fixed { a, mu } = setting {
        // surface an infeasible setting before spawning trials
        rdk2d_trial(a, mu, &mut RandomSource::new(seed))?;
    }
    let tally = run_trials(trials, seed, |_, rng| {
        let (a, mu) = match setting {
            Rdk2dSetting::Random => {
                let a = rng.uniform_in(0.5, 1.0);
                let mu1 = rng.uniform_in(-2.0, 2.0);
                (a, [mu1, mu1 + 6.0 * a.sqrt() + rng.uniform()])
            }
            Rdk2dSetting::Fixed { a, mu } => (a, mu),
        };
        let (tli, rdk) = rdk2d_trial(a, mu, rng)?;
        Ok(Tally::one(tli - rdk, IDENTITY_TOL, 0))
    })?;
    let n = tally.trials as f64;
    let bound = RDK2D_VIOLATION_RATE + 3.0 * (RDK2D_VIOLATION_RATE * (1.0 - RDK2D_VIOLATION_RATE) / n).sqrt();
    let freq = tally.violations as f64 / n;
    Ok(VerificationReport {
        suite: "rdk2d".into(),
        trials: tally.trials,
        violations: tally.violations,
        max_residual: freq,
        bound,
        pass: freq <= bound,
        seed,
        redrawn: 0,
    })
}

/// Seed-averaged Taylor error at one grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TaylorErrorRow {
    pub theta: f64,
    pub n: usize,
    pub mean_error: f64,
    pub fitted_bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaylorErrorOutcome {
    pub report: VerificationReport,
    pub rows: Vec<TaylorErrorRow>,
    pub c1: f64,
    pub c2: f64,
    pub monotone_in_n: bool,
}

/// L1 gap between the first-order path and the dense exact product for one
/// instance: `p ~ Dirichlet(1)` over `n`, `q'` uniform, scores `theta * p_j`.
pub fn taylor_error_instance(theta: f64, n: usize, rng: &mut RandomSource) -> Result<f64> {
    require(n <= DENSE_LIMIT, "dense oracle limited to 4096 tokens")?;
    let t = SupportSet::full(n);
    let p = random_simplex::<f64>(n, rng)?;
    let q = ProbVector::<f64>::uniform(n)?;
    let dense = build_structured_affinity(&p, theta, &t)?.materialize()?;
    let exact = apply_exact(&dense, &q)?;
    let approx = taylor_redistribute(&p, &q, &t)?;
    l1_distance(&approx, &exact)
}

/// Non-negative least squares for `y ~ c1 x1 + c2 x2`.
fn nnls2(x1: &[f64], x2: &[f64], y: &[f64]) -> (f64, f64) {
    let dot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(u, v)| u * v).sum() };
    let (a11, a12, a22) = (dot(x1, x1), dot(x1, x2), dot(x2, x2));
    let (b1, b2) = (dot(x1, y), dot(x2, y));
    let det = a11 * a22 - a12 * a12;
    if det > 0.0 {
        let c1 = (b1 * a22 - b2 * a12) / det;
        let c2 = (a11 * b2 - a12 * b1) / det;
        if c1 >= 0.0 && c2 >= 0.0 {
            return (c1, c2);
        }
    }
    let sse = |c1: f64, c2: f64| -> f64 {
        x1.iter()
            .zip(x2)
            .zip(y)
            .map(|((a, b), t)| (t - c1 * a - c2 * b).powi(2))
            .sum()
    };
    let only1 = if a11 > 0.0 { (b1 / a11).max(0.0) } else { 0.0 };
    let only2 = if a22 > 0.0 { (b2 / a22).max(0.0) } else { 0.0 };
    if sse(only1, 0.0) <= sse(0.0, only2) {
        (only1, 0.0)
    } else {
        (0.0, only2)
    }
}

/// Error table of the first-order path against the dense oracle over
/// `theta_grid x n_grid`, averaged over `seeds` instances per cell. Passes when
/// the error falls with `n` at every `theta` and a least-squares
/// `c1 theta + c2 / n^2` bound covers every cell within 10% headroom.
pub fn verify_taylor_error(
    theta_grid: &[f64],
    n_grid: &[usize],
    seeds: u64,
    seed: u64,
) -> Result<TaylorErrorOutcome> {
    require(!theta_grid.is_empty() && !n_grid.is_empty(), "grids must be non-empty")?;
    require(seeds >= 1, "seeds must be >= 1")?;
    require(
        theta_grid.iter().all(|&t| t >= 0.0 && t.is_finite()),
        "theta values must be finite and non-negative",
    )?;
    require(
        n_grid.iter().all(|&n| (1..=DENSE_LIMIT).contains(&n)),
        "dense oracle limited to 4096 tokens",
    )?;
    let master = RandomSource::new(seed);
    let cells: Vec<(usize, usize)> = (0..theta_grid.len())
        .flat_map(|a| (0..n_grid.len()).map(move |b| (a, b)))
        .collect();
    let means = cells
        .par_iter()
        .map(|&(a, b)| {
            let mut total = 0.0;
            for s in 0..seeds {
                // the same target draws are reused across theta at each n
                let mut rng = master.child((b as u64) << 32 | s);
                total += taylor_error_instance(theta_grid[a], n_grid[b], &mut rng)?;
            }
            Ok(total / seeds as f64)
        })
        .collect::<Result<Vec<f64>>>()?;

    let x1: Vec<f64> = cells.iter().map(|&(a, _)| theta_grid[a]).collect();
    let x2: Vec<f64> = cells.iter().map(|&(_, b)| (n_grid[b] as f64).powi(-2)).collect();
    let (c1, c2) = nnls2(&x1, &x2, &means);

    let mut rows = Vec::with_capacity(cells.len());
    let mut violations = 0;
    let mut worst = 0.0f64;
    for (k, &(a, b)) in cells.iter().enumerate() {
        let fitted = c1 * x1[k] + c2 * x2[k];
        let err = means[k];
        let ratio = if err == 0.0 {
            0.0
        } else if fitted > 0.0 {
            err / fitted
        } else {
            f64::INFINITY
        };
        if ratio > TAYLOR_HEADROOM {
            violations += 1;
        }
        worst = worst.max(ratio);
        rows.push(TaylorErrorRow {
            theta: theta_grid[a],
            n: n_grid[b],
            mean_error: err,
            fitted_bound: fitted,
        });
    }

    let mut order: Vec<usize> = (0..n_grid.len()).collect();
    order.sort_by_key(|&b| n_grid[b]);
    let mut monotone = true;
    for a in 0..theta_grid.len() {
        for w in order.windows(2) {
            let lo = means[a * n_grid.len() + w[0]];
            let hi = means[a * n_grid.len() + w[1]];
            if hi > lo {
                monotone = false;
                violations += 1;
            }
        }
    }

    let report = VerificationReport {
        suite: "taylor".into(),
        trials: cells.len() as u64 * seeds,
        violations,
        max_residual: worst,
        bound: TAYLOR_HEADROOM,
        pass: violations == 0,
        seed,
        redrawn: 0,
    };
    Ok(TaylorErrorOutcome {
        report,
        rows,
        c1,
        c2,
        monotone_in_n: monotone,
    })
}

pub const TAYLOR_THETA_GRID: [f64; 5] = [0.01, 0.02, 0.05, 0.1, 0.2];
pub const TAYLOR_N_GRID: [usize; 4] = [50, 200, 500, 2000];
pub const TAYLOR_SEEDS: u64 = 10;

/// Named suite selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Suite {
    All,
    Identity,
    Nonexpansive,
    BoundedL1,
    Softmax,
    Rdk2d,
    Taylor,
}

impl Suite {
    pub const NAMES: [&'static str; 7] = [
        "all",
        "identity",
        "nonexpansive",
        "bounded_l1",
        "softmax",
        "rdk2d",
        "taylor",
    ];

    fn name(self) -> &'static str {
        Self::NAMES[self as usize]
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        use Suite::*;
        [All, Identity, Nonexpansive, BoundedL1, Softmax, Rdk2d, Taylor]
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "unknown suite '{s}' (expected one of {})",
                    Self::NAMES.join(", ")
                ))
            })
    }
}

/// Runs a suite with its standard parameters. The two-token suite always
/// runs at least its minimum of 10^4 trials; the Taylor suite uses its fixed
/// grid and ignores `trials`.
pub fn run_suite(suite: Suite, trials: u64, seed: u64) -> Result<Vec<VerificationReport>> {
    let trials = trials.max(1);
    Ok(match suite {
        Suite::All => {
            let mut out = Vec::new();
            for s in [
                Suite::Identity,
                Suite::Nonexpansive,
                Suite::BoundedL1,
                Suite::Softmax,
                Suite::Rdk2d,
                Suite::Taylor,
            ] {
                out.extend(run_suite(s, trials, seed)?);
            }
            out
        }
        Suite::Identity => vec![
            verify_acceptance_identity(trials, 2, seed)?,
            verify_acceptance_identity(trials, 64, seed)?,
            verify_acceptance_identity(trials, 1024, seed)?,
            verify_acceptance_identity_grid(0.05)?,
        ],
        Suite::Nonexpansive => vec![verify_nonexpansive(trials, 64, seed)?],
        Suite::BoundedL1 => vec![verify_bounded_l1(trials, 32, seed)?],
        Suite::Softmax => vec![verify_softmax_stability(trials, 100, 0.1, seed)?],
        Suite::Rdk2d => vec![verify_rdk_vs_tli_2d(trials.max(10_000), Rdk2dSetting::Random, seed)?],
        Suite::Taylor => vec![verify_taylor_error(&TAYLOR_THETA_GRID, &TAYLOR_N_GRID, TAYLOR_SEEDS, seed)?.report],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_suite_passes() {
        let r = verify_acceptance_identity(1000, 128, 1).unwrap();
        assert!(r.pass);
        assert!(r.max_residual <= 1e-12);
        assert_eq!(r.trials, 1000);
    }

    #[test]
    fn identity_equal_pair_has_zero_residual() {
        let p = ProbVector::new(vec![0.3, 0.7]).unwrap();
        assert_eq!(identity_residual(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn identity_grid_passes() {
        let grid = simplex_grid3(0.05).unwrap();
        assert_eq!(grid.len(), 231);
        let r = verify_acceptance_identity_grid(0.05).unwrap();
        assert!(r.pass);
        assert_eq!(r.trials, 231 * 231);
    }

    #[test]
    fn nonexpansive_identity_and_equal_rows() {
        let t = SupportSet::full(3);
        let x = [0.5, -0.2, 0.9];
        let y = [-0.1, 0.4, 0.3];
        let id = AffinityMatrix::<f64>::identity(&t);
        let d = l1_slices(&id.transpose_apply(&x).unwrap(), &id.transpose_apply(&y).unwrap());
        assert_eq!(d, l1_slices(&x, &y));
        let eq = AffinityMatrix::from_rows(&t, [0.2, 0.3, 0.5].repeat(3), 1.0).unwrap();
        let d = l1_slices(&eq.transpose_apply(&x).unwrap(), &eq.transpose_apply(&y).unwrap());
        let sx: f64 = x.iter().sum();
        let sy: f64 = y.iter().sum();
        assert!((d - (sx - sy).abs()).abs() < 1e-15);
    }

    #[test]
    fn bounded_l1_identity_is_tight() {
        let mut rng = RandomSource::new(6);
        let t = SupportSet::new(vec![0, 1, 3], 5).unwrap();
        let p = random_simplex_on::<f64>(&t, &mut rng).unwrap();
        let q = random_simplex::<f64>(5, &mut rng).unwrap();
        let e = bounded_l1_excess(&p, &q, &AffinityMatrix::identity(&t)).unwrap();
        assert!(e.abs() < 1e-15);
    }

    #[test]
    fn small_suites_pass() {
        assert!(verify_nonexpansive(2000, 16, 3).unwrap().pass);
        let b = verify_bounded_l1(2000, 12, 3).unwrap();
        assert!(b.pass);
        assert!(b.redrawn > 0);
        assert!(verify_softmax_stability(2000, 20, 0.5, 3).unwrap().pass);
    }

    #[test]
    fn softmax_zero_noise() {
        assert_eq!(softmax_excess(&[0.1, 2.0, -1.0], &[0.0; 3]).unwrap(), 0.0);
    }

    #[test]
    fn rdk2d_identity_case_is_tied() {
        let mut rng = RandomSource::new(7);
        for _ in 0..100 {
            let (tli, rdk) = rdk2d_trial(1.0, [0.0, 7.0], &mut rng).unwrap();
            assert_eq!(tli, rdk);
        }
    }

    #[test]
    fn rdk2d_far_means_never_violate() {
        let r = verify_rdk_vs_tli_2d(10_000, Rdk2dSetting::Fixed { a: 0.6, mu: [0.0, 20.0] }, 8).unwrap();
        assert_eq!(r.violations, 0);
        assert!(r.pass);
    }

    #[test]
    fn rdk2d_rejects_bad_parameters() {
        assert!(verify_rdk_vs_tli_2d(100, Rdk2dSetting::Random, 1).is_err());
        assert!(verify_rdk_vs_tli_2d(10_000, Rdk2dSetting::Fixed { a: 0.8, mu: [0.0, 1.0] }, 1).is_err());
        assert!(rdk2d_trial(0.3, [0.0, 10.0], &mut RandomSource::new(1)).is_err());
    }

    #[test]
    fn taylor_zero_theta_is_exact() {
        let mut rng = RandomSource::new(4);
        assert!(taylor_error_instance(0.0, 300, &mut rng).unwrap() < 1e-15);
    }

    #[test]
    fn taylor_error_falls_with_n_and_grows_with_theta() {
        let mut rng = RandomSource::new(5);
        let small: f64 = (0..5).map(|_| taylor_error_instance(0.05, 200, &mut rng).unwrap()).sum();
        let large: f64 = (0..5).map(|_| taylor_error_instance(0.05, 2000, &mut rng).unwrap()).sum();
        assert!(large < small);
        let mut r1 = RandomSource::new(6);
        let mut r2 = RandomSource::new(6);
        let e1 = taylor_error_instance(0.05, 500, &mut r1).unwrap();
        let e2 = taylor_error_instance(0.1, 500, &mut r2).unwrap();
        assert!((e2 / e1 - 2.0).abs() < 0.1, "{}", e2 / e1);
    }

    #[test]
    fn taylor_rejects_oversized_oracle() {
        assert!(verify_taylor_error(&[0.1], &[5000], 1, 1).is_err());
    }

    #[test]
    fn nnls_recovers_exact_model() {
        let x1 = [1.0, 2.0, 3.0, 0.5];
        let x2 = [0.1, 0.4, 0.2, 0.9];
        let y: Vec<f64> = x1.iter().zip(&x2).map(|(a, b)| 2.0 * a + 3.0 * b).collect();
        let (c1, c2) = nnls2(&x1, &x2, &y);
        assert!((c1 - 2.0).abs() < 1e-12 && (c2 - 3.0).abs() < 1e-12);
        let y: Vec<f64> = x1.iter().zip(&x2).map(|(a, b)| 2.0 * a - 3.0 * b).collect();
        let (_, c2) = nnls2(&x1, &x2, &y);
        assert_eq!(c2, 0.0);
    }

    #[test]
    fn suites_are_deterministic() {
        let a = verify_bounded_l1(500, 10, 99).unwrap();
        let b = verify_bounded_l1(500, 10, 99).unwrap();
        assert_eq!(a.csv_row(), b.csv_row());
        assert_eq!("bounded_l1".parse::<Suite>().unwrap(), Suite::BoundedL1);
        assert!("nope".parse::<Suite>().is_err());
    }
}
