//! Token-affinity priors: covariance estimation, the row-stochastic affinity
//! matrix built from it, exact application `M^T q'`, and the linear-time
//! first-order approximation.
//!
//! Rows and columns of an [`AffinityMatrix`] are indexed by position inside
//! the target support `T`, not by raw token id.

mod io;

pub use io::{read_dense, save_dense, load_dense, write_dense, MAGIC, VERSION};

use crate::error::{check_dims, Error, Result};
use crate::prob::{softmax_slice, ProbVector, SupportSet, DENSE_LIMIT};
use crate::scalar::{self, CompensatedSum, Scalar};

/// Row sums of an affinity matrix must be within this of one.
pub const ROW_SUM_TOL: f64 = 1e-9;

/// Sample covariance of distributions restricted to a support `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceEstimate<S> {
    support: SupportSet,
    matrix: Vec<S>,
    sample_count: usize,
}

impl<S: Scalar> CovarianceEstimate<S> {
    /// Wraps an externally computed covariance (row-major `|T| x |T|`).
    pub fn from_matrix(support: SupportSet, matrix: Vec<S>, sample_count: usize) -> Result<Self> {
        let n = support.len();
        check_dims(n * n, matrix.len())?;
        let tol = S::lit(1e-9);
        for i in 0..n {
            if !(matrix[i * n + i] >= S::zero()) {
                return Err(Error::InvalidInput(format!(
                    "covariance diagonal {i} is negative"
                )));
            }
            for j in 0..i {
                if (matrix[i * n + j] - matrix[j * n + i]).abs() > tol {
                    return Err(Error::InvalidInput(format!(
                        "covariance not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self {
            support,
            matrix,
            sample_count,
        })
    }

    pub fn support(&self) -> &SupportSet {
        &self.support
    }

    pub fn dim(&self) -> usize {
        self.support.len()
    }

    pub fn sample_count(&self) -> usize {
        self.sample_count
    }

    pub fn matrix(&self) -> &[S] {
        &self.matrix
    }

    /// Entry at positions `(i, j)` inside the support.
    pub fn get(&self, i: usize, j: usize) -> S {
        self.matrix[i * self.dim() + j]
    }
}

/// Unbiased (n-1) sample covariance of `samples` restricted to `support`.
pub fn estimate_covariance<S: Scalar>(
    samples: &[ProbVector<S>],
    support: &SupportSet,
) -> Result<CovarianceEstimate<S>> {
    if samples.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: samples.len(),
        });
    }
    let n = support.len();
    if n > DENSE_LIMIT {
        return Err(Error::InvalidParameter(format!(
            "dense covariance limited to {DENSE_LIMIT} tokens, got {n}"
        )));
    }
    for s in samples {
        check_dims(support.vocab_size(), s.len())?;
    }
    let count = S::from_usize(samples.len()).unwrap();
    let rows: Vec<Vec<S>> = samples
        .iter()
        .map(|s| support.iter().map(|i| s.get(i)).collect())
        .collect();
    let mean: Vec<S> = (0..n)
        .map(|k| scalar::sum(rows.iter().map(|r| r[k])) / count)
        .collect();
    let centered: Vec<Vec<S>> = rows
        .iter()
        .map(|r| r.iter().zip(&mean).map(|(&x, &m)| x - m).collect())
        .collect();
    let denom = count - S::one();
    let mut matrix = vec![S::zero(); n * n];
    for i in 0..n {
        for j in i..n {
            let c = scalar::sum(centered.iter().map(|r| r[i] * r[j])) / denom;
            matrix[i * n + j] = c;
            matrix[j * n + i] = c;
        }
    }
    Ok(CovarianceEstimate {
        support: support.clone(),
        matrix,
        sample_count: samples.len(),
    })
}

#[derive(Debug, Clone, PartialEq)]
enum Repr<S> {
    Dense(Vec<S>),
    /// Every row equals `row = softmax(theta_scale * direction)`.
    Structured {
        theta_scale: S,
        direction: Vec<S>,
        row: Vec<S>,
    },
}

/// Row-stochastic token-affinity matrix over a target support `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix<S> {
    support: SupportSet,
    active: SupportSet,
    tau: S,
    repr: Repr<S>,
}

impl<S: Scalar> AffinityMatrix<S> {
    pub fn identity(support: &SupportSet) -> Self {
        let n = support.len();
        let mut rows = vec![S::zero(); n * n];
        for i in 0..n {
            rows[i * n + i] = S::one();
        }
        Self {
            support: support.clone(),
            active: support.clone(),
            tau: S::one(),
            repr: Repr::Dense(rows),
        }
    }

    /// Dense matrix from explicit rows (row-major `|T| x |T|`); validated to be
    /// row-stochastic.
    pub fn from_rows(support: &SupportSet, rows: Vec<S>, tau: S) -> Result<Self> {
        let n = support.len();
        check_dims(n * n, rows.len())?;
        let m = Self {
            support: support.clone(),
            active: support.clone(),
            tau,
            repr: Repr::Dense(rows),
        };
        m.check_row_stochastic()?;
        Ok(m)
    }

    /// Rows `i in active` are `softmax(scores[i, :] / tau)` over `T`; every other
    /// row is the identity row. `scores` is row-major `|T| x |T|` and need not
    /// be symmetric.
    pub fn from_scores(
        scores: &[S],
        tau: S,
        support: &SupportSet,
        active: &SupportSet,
    ) -> Result<Self> {
        if !(tau > S::zero()) || !tau.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "temperature must be positive, got {tau}"
            )));
        }
        let n = support.len();
        check_dims(n * n, scores.len())?;
        check_dims(support.vocab_size(), active.vocab_size())?;
        if !active.is_subset_of(support) {
            return Err(Error::Support("active rows must lie inside T".into()));
        }
        let mut rows = vec![S::zero(); n * n];
        for (pos, tok) in support.iter().enumerate() {
            let row = &mut rows[pos * n..(pos + 1) * n];
            if active.contains(tok) {
                let scaled: Vec<S> = scores[pos * n..(pos + 1) * n]
                    .iter()
                    .map(|&x| x / tau)
                    .collect();
                row.copy_from_slice(&softmax_slice(&scaled)?);
            } else {
                row[pos] = S::one();
            }
        }
        Ok(Self {
            support: support.clone(),
            active: active.clone(),
            tau,
            repr: Repr::Dense(rows),
        })
    }

    pub fn support(&self) -> &SupportSet {
        &self.support
    }

    /// Rows that carry affinity information (the rest are identity rows).
    pub fn active_rows(&self) -> &SupportSet {
        &self.active
    }

    pub fn dim(&self) -> usize {
        self.support.len()
    }

    pub fn tau(&self) -> S {
        self.tau
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.repr, Repr::Dense(_))
    }

    pub fn theta_scale(&self) -> Option<S> {
        match &self.repr {
            Repr::Structured { theta_scale, .. } => Some(*theta_scale),
            Repr::Dense(_) => None,
        }
    }

    /// Row at position `i` of `T`.
    pub fn row(&self, i: usize) -> &[S] {
        let n = self.dim();
        match &self.repr {
            Repr::Dense(rows) => &rows[i * n..(i + 1) * n],
            Repr::Structured { row, .. } => row,
        }
    }

    pub fn entry(&self, i: usize, j: usize) -> S {
        self.row(i)[j]
    }

    /// Dense copy. Structured matrices are materialized (only up to the dense limit).
    pub fn materialize(&self) -> Result<Self> {
        match &self.repr {
            Repr::Dense(_) => Ok(self.clone()),
            Repr::Structured { row, .. } => {
                let n = self.dim();
                if n > DENSE_LIMIT {
                    return Err(Error::InvalidParameter(format!(
                        "cannot materialize {n} x {n} matrix (limit {DENSE_LIMIT})"
                    )));
                }
                let mut rows = Vec::with_capacity(n * n);
                for _ in 0..n {
                    rows.extend_from_slice(row);
                }
                Ok(Self {
                    support: self.support.clone(),
                    active: self.active.clone(),
                    tau: self.tau,
                    repr: Repr::Dense(rows),
                })
            }
        }
    }

    /// Verifies non-negativity and unit row sums. Structured matrices share a
    /// single row, so one check covers all of them.
    pub fn check_row_stochastic(&self) -> Result<()> {
        let tol = S::lit(ROW_SUM_TOL);
        let n = self.dim();
        let rows = match &self.repr {
            Repr::Dense(_) => n,
            Repr::Structured { .. } => n.min(1),
        };
        for i in 0..rows {
            let row = self.row(i);
            if let Some(j) = row.iter().position(|&x| !(x >= S::zero()) || !x.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "affinity entry ({i}, {j}) is negative or not finite"
                )));
            }
            let s = scalar::sum(row.iter().copied());
            if (s - S::one()).abs() > tol {
                return Err(Error::InvalidInput(format!(
                    "affinity row {i} sums to {s}, expected 1"
                )));
            }
        }
        Ok(())
    }

    /// `M^T x` for an arbitrary real vector indexed by position in `T`.
    pub fn transpose_apply(&self, x: &[S]) -> Result<Vec<S>> {
        let n = self.dim();
        check_dims(n, x.len())?;
        match &self.repr {
            Repr::Dense(rows) => {
                let mut acc = vec![CompensatedSum::new(); n];
                for (i, &xi) in x.iter().enumerate() {
                    if xi == S::zero() {
                        continue;
                    }
                    for (a, &mij) in acc.iter_mut().zip(&rows[i * n..(i + 1) * n]) {
                        a.add(xi * mij);
                    }
                }
                Ok(acc.iter().map(CompensatedSum::value).collect())
            }
            Repr::Structured { row, .. } => {
                let total = scalar::sum(x.iter().copied());
                Ok(row.iter().map(|&w| w * total).collect())
            }
        }
    }
}

/// Dense affinity matrix from a covariance estimate: rows `i in active` are
/// `softmax(omega[i, :] / tau)` over `T`; rows outside `active` are identity rows.
pub fn build_affinity<S: Scalar>(
    omega: &CovarianceEstimate<S>,
    tau: S,
    support: &SupportSet,
    active: &SupportSet,
) -> Result<AffinityMatrix<S>> {
    if omega.support() != support {
        return Err(Error::Support(
            "covariance estimate was computed over a different support".into(),
        ));
    }
    AffinityMatrix::from_scores(omega.matrix(), tau, support, active)
}

/// Rank-one affinity matrix whose rows are all `softmax(theta_scale * p_ref|_T)`,
/// i.e. the matrix induced by scores `omega_ij / tau = theta_scale * p_ref_j`.
/// Stores `O(|T|)` parameters; the matrix itself is never formed.
pub fn build_structured_affinity<S: Scalar>(
    p_ref: &ProbVector<S>,
    theta_scale: S,
    support: &SupportSet,
) -> Result<AffinityMatrix<S>> {
    check_dims(support.vocab_size(), p_ref.len())?;
    if !(theta_scale >= S::zero()) || !theta_scale.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "theta scale must be finite and non-negative, got {theta_scale}"
        )));
    }
    if support.is_empty() {
        return Err(Error::EmptySupport);
    }
    let direction: Vec<S> = support.iter().map(|i| p_ref.get(i)).collect();
    let logits: Vec<S> = direction.iter().map(|&x| theta_scale * x).collect();
    let row = softmax_slice(&logits)?;
    Ok(AffinityMatrix {
        support: support.clone(),
        active: support.clone(),
        tau: S::one(),
        repr: Repr::Structured {
            theta_scale,
            direction,
            row,
        },
    })
}

/// `p' = M^T q'`, scattered back to vocabulary indices.
pub fn apply_exact<S: Scalar>(m: &AffinityMatrix<S>, q_prime: &ProbVector<S>) -> Result<ProbVector<S>> {
    q_prime.require_full("apply_exact")?;
    let support = m.support();
    check_dims(support.vocab_size(), q_prime.len())?;
    if !q_prime.support().is_subset_of(m.active_rows()) {
        return Err(Error::Support(
            "q' has mass outside the rows defined by the affinity matrix".into(),
        ));
    }
    let x: Vec<S> = support.iter().map(|i| q_prime.get(i)).collect();
    let y = m.transpose_apply(&x)?;
    let mut values = vec![S::zero(); q_prime.len()];
    for (tok, v) in support.iter().zip(y) {
        values[tok] = v;
    }
    ProbVector::new(values)
}

/// `theta = p^T q'`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ThetaValue<S>(S);

impl<S: Scalar> ThetaValue<S> {
    pub fn value(self) -> S {
        self.0
    }
}

pub fn compute_theta<S: Scalar>(p: &ProbVector<S>, q_prime: &ProbVector<S>) -> Result<ThetaValue<S>> {
    check_dims(p.len(), q_prime.len())?;
    p.require_full("compute_theta")?;
    q_prime.require_full("compute_theta")?;
    Ok(ThetaValue(dot(p, q_prime)))
}

fn dot<S: Scalar>(p: &ProbVector<S>, q: &ProbVector<S>) -> S {
    // iterate the sparser support
    let (a, b) = if p.support().len() <= q.support().len() {
        (p, q)
    } else {
        (q, p)
    };
    scalar::sum(a.support().iter().map(|i| a.get(i) * b.get(i)))
}

/// Linear-time first-order approximation of `M^T q'`:
/// `p~_i = (N q'_i + theta p_i) / (N + p_i)` over `i in T`, then normalized,
/// with `theta = p_ref^T q'` and `N = |T|`.
pub fn taylor_redistribute<S: Scalar>(
    p_ref: &ProbVector<S>,
    q_prime: &ProbVector<S>,
    support: &SupportSet,
) -> Result<ProbVector<S>> {
    if support.is_empty() {
        return Err(Error::EmptySupport);
    }
    check_dims(support.vocab_size(), q_prime.len())?;
    check_dims(support.vocab_size(), p_ref.len())?;
    if !q_prime.support().is_subset_of(support) {
        return Err(Error::Support("q' has mass outside T".into()));
    }
    let theta = compute_theta(p_ref, q_prime)?.value();
    let n = S::from_usize(support.len()).unwrap();
    let mut values = vec![S::zero(); q_prime.len()];
    for i in support.iter() {
        let p = p_ref.get(i);
        values[i] = (n * q_prime.get(i) + theta * p) / (n + p);
    }
    ProbVector::from_weights(values)
}
