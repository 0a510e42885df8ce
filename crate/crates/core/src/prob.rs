//! Probability-simplex primitives: vocabularies, supports, distributions,
//! logits, and the synthetic generators used by the experiments.

use std::ops::Index;

use crate::error::{check_dims, Error, Result};
use crate::rng::{RandomSource, StudentT};
use crate::scalar::{self, CompensatedSum, Scalar};

/// Largest dimension for which a dense covariance may be factorized.
pub const DENSE_LIMIT: usize = 4096;

/// A vocabulary of `size` tokens indexed `0..size`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct VocabSpace {
    size: usize,
}

impl VocabSpace {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidParameter("vocabulary size must be >= 1".into()));
        }
        Ok(Self { size })
    }

    pub fn size(&self) -> usize {
        self.size
    }
}

/// Strictly increasing set of token indices inside a vocabulary.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SupportSet {
    vocab: usize,
    indices: Vec<usize>,
}

impl SupportSet {
    /// Validates that `indices` is strictly increasing and within `0..vocab`.
    pub fn new(indices: Vec<usize>, vocab: usize) -> Result<Self> {
        if let Some(w) = indices.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput(format!(
                "support indices must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        if let Some(&last) = indices.last() {
            if last >= vocab {
                return Err(Error::Support(format!(
                    "index {last} outside vocabulary of size {vocab}"
                )));
            }
        }
        Ok(Self { vocab, indices })
    }

    /// Sorts and de-duplicates.
    pub fn from_unsorted<I: IntoIterator<Item = usize>>(indices: I, vocab: usize) -> Result<Self> {
        let mut v: Vec<usize> = indices.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Self::new(v, vocab)
    }

    pub fn full(vocab: usize) -> Self {
        Self {
            vocab,
            indices: (0..vocab).collect(),
        }
    }

    pub fn empty(vocab: usize) -> Self {
        Self {
            vocab,
            indices: Vec::new(),
        }
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.indices.len() == self.vocab
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices.iter().copied()
    }

    /// Position of token `i` inside the set, if present.
    #[inline]
    pub fn position(&self, i: usize) -> Option<usize> {
        if self.is_full() {
            return (i < self.vocab).then_some(i);
        }
        self.indices.binary_search(&i).ok()
    }

    #[inline]
    pub fn contains(&self, i: usize) -> bool {
        self.position(i).is_some()
    }

    pub fn intersection(&self, other: &SupportSet) -> SupportSet {
        let (mut a, mut b) = (0, 0);
        let mut out = Vec::new();
        while a < self.indices.len() && b < other.indices.len() {
            match self.indices[a].cmp(&other.indices[b]) {
                std::cmp::Ordering::Less => a += 1,
                std::cmp::Ordering::Greater => b += 1,
                std::cmp::Ordering::Equal => {
                    out.push(self.indices[a]);
                    a += 1;
                    b += 1;
                }
            }
        }
        SupportSet {
            vocab: self.vocab,
            indices: out,
        }
    }

    /// Elements of `self` not in `other`.
    pub fn difference(&self, other: &SupportSet) -> SupportSet {
        let indices = self
            .indices
            .iter()
            .copied()
            .filter(|&i| !other.contains(i))
            .collect();
        SupportSet {
            vocab: self.vocab,
            indices,
        }
    }

    pub fn is_subset_of(&self, other: &SupportSet) -> bool {
        self.indices.iter().all(|&i| other.contains(i))
    }
}

/// Whether a [`ProbVector`] is a full distribution or a flagged sub-probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MassKind {
    Full,
    Sub,
}

/// Dense non-negative vector over a vocabulary together with its support.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector<S> {
    values: Vec<S>,
    support: SupportSet,
    mass: S,
    kind: MassKind,
}

impl<S: Scalar> ProbVector<S> {
    /// Full distribution; the entries must sum to one within [`Scalar::simplex_tol`].
    pub fn new(values: Vec<S>) -> Result<Self> {
        let (support, mass) = validate_entries(&values)?;
        if (mass - S::one()).abs() > S::simplex_tol() {
            return Err(Error::InvalidInput(format!(
                "distribution sums to {mass}, expected 1"
            )));
        }
        Ok(Self {
            values,
            support,
            mass,
            kind: MassKind::Full,
        })
    }

    /// Sub-probability vector (total mass at most one).
    pub fn sub_probability(values: Vec<S>) -> Result<Self> {
        let (support, mass) = validate_entries(&values)?;
        if mass > S::one() + S::simplex_tol() {
            return Err(Error::InvalidInput(format!(
                "sub-probability mass {mass} exceeds 1"
            )));
        }
        Ok(Self {
            values,
            support,
            mass,
            kind: MassKind::Sub,
        })
    }

    /// Normalizes arbitrary non-negative weights into a full distribution.
    pub fn from_weights(weights: Vec<S>) -> Result<Self> {
        let (_, mass) = validate_entries(&weights)?;
        if mass <= S::zero() {
            return Err(Error::EmptyMass);
        }
        Self::new(weights.into_iter().map(|w| w / mass).collect())
    }

    pub fn uniform(vocab: usize) -> Result<Self> {
        VocabSpace::new(vocab)?;
        let v = S::one() / S::from_usize(vocab).unwrap();
        Self::new(vec![v; vocab])
    }

    /// Uniform over `support`, zero elsewhere.
    pub fn uniform_on(support: &SupportSet) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::EmptySupport);
        }
        let v = S::one() / S::from_usize(support.len()).unwrap();
        let mut values = vec![S::zero(); support.vocab_size()];
        for i in support.iter() {
            values[i] = v;
        }
        Self::new(values)
    }

    pub fn one_hot(vocab: usize, index: usize) -> Result<Self> {
        if index >= vocab {
            return Err(Error::Support(format!(
                "index {index} outside vocabulary of size {vocab}"
            )));
        }
        let mut values = vec![S::zero(); vocab];
        values[index] = S::one();
        Self::new(values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn into_values(self) -> Vec<S> {
        self.values
    }

    pub fn support(&self) -> &SupportSet {
        &self.support
    }

    pub fn mass(&self) -> S {
        self.mass
    }

    pub fn kind(&self) -> MassKind {
        self.kind
    }

    pub fn is_full(&self) -> bool {
        self.kind == MassKind::Full
    }

    #[inline]
    pub fn get(&self, i: usize) -> S {
        self.values[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = S> + '_ {
        self.values.iter().copied()
    }

    /// Same vector viewed at another precision.
    pub fn cast<T: Scalar>(&self) -> Result<ProbVector<T>> {
        let values = self.values.iter().map(|&x| T::lit(x.as_f64())).collect();
        match self.kind {
            MassKind::Full => ProbVector::new(values),
            MassKind::Sub => ProbVector::sub_probability(values),
        }
    }

    pub(crate) fn require_full(&self, what: &str) -> Result<()> {
        if self.is_full() {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "{what} requires a full distribution, got a sub-probability vector"
            )))
        }
    }
}

impl<S> Index<usize> for ProbVector<S> {
    type Output = S;

    fn index(&self, i: usize) -> &S {
        &self.values[i]
    }
}

fn validate_entries<S: Scalar>(values: &[S]) -> Result<(SupportSet, S)> {
    if values.is_empty() {
        return Err(Error::InvalidParameter("vocabulary size must be >= 1".into()));
    }
    let mut acc = CompensatedSum::new();
    let mut support = Vec::new();
    for (i, &x) in values.iter().enumerate() {
        if !x.is_finite() || x < S::zero() {
            return Err(Error::InvalidInput(format!(
                "entry {i} is {x}; entries must be finite and non-negative"
            )));
        }
        if x > S::zero() {
            support.push(i);
        }
        acc.add(x);
    }
    Ok((
        SupportSet {
            vocab: values.len(),
            indices: support,
        },
        acc.value(),
    ))
}

/// Vector of finite logits.
#[derive(Debug, Clone, PartialEq)]
pub struct LogitVector<S> {
    values: Vec<S>,
}

impl<S: Scalar> LogitVector<S> {
    pub fn new(values: Vec<S>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("vocabulary size must be >= 1".into()));
        }
        if let Some(i) = values.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(format!("logit {i} is not finite")));
        }
        Ok(Self { values })
    }

    pub fn zeros(len: usize) -> Result<Self> {
        Self::new(vec![S::zero(); len])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn into_values(self) -> Vec<S> {
        self.values
    }
}

/// Numerically stable softmax.
///
/// Entries that would underflow are clamped to the smallest positive normal so
/// the result keeps full support.
pub fn softmax<S: Scalar>(z: &LogitVector<S>) -> Result<ProbVector<S>> {
    let values = softmax_slice(z.values())?;
    let support = SupportSet::full(values.len());
    Ok(ProbVector {
        values,
        support,
        mass: S::one(),
        kind: MassKind::Full,
    })
}

pub(crate) fn softmax_slice<S: Scalar>(z: &[S]) -> Result<Vec<S>> {
    if z.is_empty() {
        return Err(Error::InvalidParameter("vocabulary size must be >= 1".into()));
    }
    let mut max = S::neg_infinity();
    for (i, &x) in z.iter().enumerate() {
        if !x.is_finite() {
            return Err(Error::InvalidInput(format!("logit {i} is not finite")));
        }
        if x > max {
            max = x;
        }
    }
    let tiny = S::min_positive_value();
    let mut out: Vec<S> = z.iter().map(|&x| (x - max).exp().max(tiny)).collect();
    let total = scalar::sum(out.iter().copied());
    for x in &mut out {
        *x = *x / total;
    }
    Ok(out)
}

/// Values of `p` on `keep`, zero elsewhere, flagged as a sub-probability.
pub fn restrict<S: Scalar>(p: &ProbVector<S>, keep: &SupportSet) -> Result<ProbVector<S>> {
    check_dims(p.len(), keep.vocab_size())?;
    let mut values = vec![S::zero(); p.len()];
    let mut indices = Vec::new();
    let mut acc = CompensatedSum::new();
    for i in keep.iter() {
        let v = p.values[i];
        if v > S::zero() {
            values[i] = v;
            indices.push(i);
            acc.add(v);
        }
    }
    Ok(ProbVector {
        values,
        support: SupportSet {
            vocab: p.len(),
            indices,
        },
        mass: acc.value(),
        kind: MassKind::Sub,
    })
}

/// Divides by the total mass, returning a full distribution.
pub fn renormalize<S: Scalar>(p: &ProbVector<S>) -> Result<ProbVector<S>> {
    if p.is_full() {
        return Ok(p.clone());
    }
    if p.mass <= S::zero() {
        return Err(Error::EmptyMass);
    }
    let values: Vec<S> = p.values.iter().map(|&x| x / p.mass).collect();
    let mass = scalar::sum(values.iter().copied());
    Ok(ProbVector {
        values,
        support: p.support.clone(),
        mass,
        kind: MassKind::Full,
    })
}

/// Inverse-CDF draw over the stored index order.
pub fn draw_token<S: Scalar>(p: &ProbVector<S>, rng: &mut RandomSource) -> Result<usize> {
    p.require_full("draw_token")?;
    let u = S::lit(rng.uniform()) * p.mass;
    let mut cum = S::zero();
    for i in p.support.iter() {
        cum = cum + p.values[i];
        if u < cum {
            return Ok(i);
        }
    }
    // u landed in the rounding gap above the last partial sum
    p.support
        .indices()
        .last()
        .copied()
        .ok_or(Error::EmptySupport)
}

/// Covariance of a Gaussian logit model.
#[derive(Debug, Clone, PartialEq)]
pub enum Covariance<S> {
    /// Independent coordinates with the given variances.
    Diagonal(Vec<S>),
    /// Symmetric PSD matrix, row-major `n x n`; only for `n <= DENSE_LIMIT`.
    Dense { dim: usize, entries: Vec<S> },
}

/// Multivariate-normal logit sampler with the covariance factor cached.
#[derive(Debug, Clone)]
pub struct GaussianLogitSampler<S> {
    mean: Vec<S>,
    factor: Factor<S>,
}

#[derive(Debug, Clone)]
enum Factor<S> {
    Diagonal(Vec<S>),
    Lower { dim: usize, l: Vec<S> },
}

impl<S: Scalar> GaussianLogitSampler<S> {
    pub fn new(mean: &LogitVector<S>, cov: &Covariance<S>) -> Result<Self> {
        let m = mean.len();
        let factor = match cov {
            Covariance::Diagonal(var) => {
                check_dims(m, var.len())?;
                let mut sd = Vec::with_capacity(m);
                for (i, &v) in var.iter().enumerate() {
                    if !(v >= S::zero()) || !v.is_finite() {
                        return Err(Error::Decomposition {
                            row: i,
                            pivot: v.as_f64(),
                        });
                    }
                    sd.push(v.sqrt());
                }
                Factor::Diagonal(sd)
            }
            Covariance::Dense { dim, entries } => {
                check_dims(m, *dim)?;
                if *dim > DENSE_LIMIT {
                    return Err(Error::InvalidParameter(format!(
                        "dense covariance limited to {DENSE_LIMIT} tokens, got {dim}"
                    )));
                }
                check_dims(dim * dim, entries.len())?;
                Factor::Lower {
                    dim: *dim,
                    l: cholesky_psd(*dim, entries)?,
                }
            }
        };
        Ok(Self {
            mean: mean.values().to_vec(),
            factor,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn sample(&self, rng: &mut RandomSource) -> LogitVector<S> {
        let values = match &self.factor {
            Factor::Diagonal(sd) => self
                .mean
                .iter()
                .zip(sd)
                .map(|(&mu, &s)| {
                    if s == S::zero() {
                        mu
                    } else {
                        mu + s * S::lit(rng.standard_normal())
                    }
                })
                .collect(),
            Factor::Lower { dim, l } => {
                let n = *dim;
                let e: Vec<S> = (0..n).map(|_| S::lit(rng.standard_normal())).collect();
                (0..n)
                    .map(|i| {
                        let row = &l[i * n..i * n + i + 1];
                        let shift = scalar::sum(row.iter().zip(&e).map(|(&a, &b)| a * b));
                        self.mean[i] + shift
                    })
                    .collect()
            }
        };
        LogitVector { values }
    }
}

/// One draw from `N(mu, cov)`.
pub fn sample_gaussian_logits<S: Scalar>(
    mu: &LogitVector<S>,
    cov: &Covariance<S>,
    rng: &mut RandomSource,
) -> Result<LogitVector<S>> {
    Ok(GaussianLogitSampler::new(mu, cov)?.sample(rng))
}

/// Lower-triangular factor `L` with `L L^T = a`, tolerating zero pivots of
/// positive semi-definite input.
fn cholesky_psd<S: Scalar>(n: usize, a: &[S]) -> Result<Vec<S>> {
    let scale = (0..n)
        .map(|i| a[i * n + i].abs())
        .fold(S::zero(), S::max)
        .max(S::one());
    let tol = S::lit(1e-12) * scale * S::from_usize(n.max(1)).unwrap();
    for i in 0..n {
        for j in 0..i {
            if (a[i * n + j] - a[j * n + i]).abs() > tol {
                return Err(Error::InvalidInput(format!(
                    "covariance not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    let mut l = vec![S::zero(); n * n];
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d = d - l[j * n + k] * l[j * n + k];
        }
        if d < -tol || !d.is_finite() {
            return Err(Error::Decomposition {
                row: j,
                pivot: d.as_f64(),
            });
        }
        if d <= tol {
            // zero pivot: the rest of column j must vanish for PSD input
            for i in j + 1..n {
                let mut s = a[i * n + j];
                for k in 0..j {
                    s = s - l[i * n + k] * l[j * n + k];
                }
                if s.abs() > tol.sqrt() {
                    return Err(Error::Decomposition {
                        row: j,
                        pivot: d.as_f64(),
                    });
                }
            }
            continue;
        }
        let ljj = d.sqrt();
        l[j * n + j] = ljj;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s = s - l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / ljj;
        }
    }
    Ok(l)
}

/// Independent per-coordinate Student-t logits: `loc[i] + scale[i] * t_df`.
pub fn sample_student_t_logits<S: Scalar>(
    df: f64,
    loc: &LogitVector<S>,
    scale: &[S],
    rng: &mut RandomSource,
) -> Result<LogitVector<S>> {
    check_dims(loc.len(), scale.len())?;
    if let Some(i) = scale.iter().position(|&s| !(s >= S::zero()) || !s.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "scale {i} must be finite and non-negative"
        )));
    }
    let t = StudentT::new(df)?;
    let values = loc
        .values()
        .iter()
        .zip(scale)
        .map(|(&mu, &s)| {
            let draw = t.sample(rng);
            if s == S::zero() {
                mu
            } else {
                mu + s * S::lit(draw)
            }
        })
        .collect();
    Ok(LogitVector { values })
}

/// Dirichlet(1) distribution over `support` (uniform on that face of the simplex).
pub fn random_simplex_on<S: Scalar>(
    support: &SupportSet,
    rng: &mut RandomSource,
) -> Result<ProbVector<S>> {
    if support.is_empty() {
        return Err(Error::EmptySupport);
    }
    let w = rng.uniform_simplex(support.len());
    let mut values = vec![S::zero(); support.vocab_size()];
    for (i, x) in support.iter().zip(w) {
        values[i] = S::lit(x);
    }
    ProbVector::from_weights(values)
}

/// Dirichlet(1) distribution over the whole vocabulary.
pub fn random_simplex<S: Scalar>(vocab: usize, rng: &mut RandomSource) -> Result<ProbVector<S>> {
    random_simplex_on(&SupportSet::full(vocab), rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pv(v: &[f64]) -> ProbVector<f64> {
        ProbVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn softmax_of_zeros_is_uniform() {
        let p = softmax(&LogitVector::new(vec![0.0, 0.0]).unwrap()).unwrap();
        assert_eq!(p.values(), &[0.5, 0.5]);
    }

    #[test]
    fn softmax_reference_values() {
        // exp(k - 3) / (e^-2 + e^-1 + 1), evaluated independently
        let denom = (-2.0f64).exp() + (-1.0f64).exp() + 1.0;
        let expect = [(-2.0f64).exp() / denom, (-1.0f64).exp() / denom, 1.0 / denom];
        assert!((expect[0] - 0.09003).abs() < 1e-5);
        assert!((expect[1] - 0.24473).abs() < 1e-5);
        assert!((expect[2] - 0.66524).abs() < 1e-5);
        let p = softmax(&LogitVector::new(vec![1.0, 2.0, 3.0]).unwrap()).unwrap();
        for (a, b) in p.values().iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn softmax_rejects_non_finite() {
        assert!(LogitVector::new(vec![0.0, f64::NAN]).is_err());
        assert!(matches!(
            softmax_slice(&[0.0f64, f64::INFINITY]),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn softmax_keeps_full_support_under_underflow() {
        let p = softmax(&LogitVector::new(vec![0.0, -2000.0]).unwrap()).unwrap();
        assert!(p.values()[1] > 0.0);
        assert_eq!(p.support().len(), 2);
    }

    #[test]
    fn softmax_shift_is_bitwise_for_exact_shifts() {
        let z = vec![-3.0, 0.5, 2.25, 7.0, -1.75];
        let base = softmax_slice(&z).unwrap();
        for c in [1.0, -4.0, 1024.0, -0.5] {
            let shifted: Vec<f64> = z.iter().map(|x| x + c).collect();
            let s = softmax_slice(&shifted).unwrap();
            for (a, b) in base.iter().zip(&s) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn restrict_examples() {
        let p = pv(&[0.5, 0.3, 0.2]);
        let r = restrict(&p, &SupportSet::new(vec![0, 1], 3).unwrap()).unwrap();
        assert_eq!(r.values(), &[0.5, 0.3, 0.0]);
        assert!((r.mass() - 0.8).abs() < 1e-15);
        assert_eq!(r.kind(), MassKind::Sub);

        let full = restrict(&p, &SupportSet::full(3)).unwrap();
        assert_eq!(full.values(), p.values());

        let p2 = pv(&[0.0, 0.0, 1.0]);
        let z = restrict(&p2, &SupportSet::new(vec![0, 1], 3).unwrap()).unwrap();
        assert_eq!(z.mass(), 0.0);
        assert!(z.support().is_empty());
    }

    #[test]
    fn renormalize_examples() {
        let r = ProbVector::<f64>::sub_probability(vec![0.5, 0.3, 0.0]).unwrap();
        let n = renormalize(&r).unwrap();
        assert!((n[0] - 0.625).abs() < 1e-15);
        assert!((n[1] - 0.375).abs() < 1e-15);
        assert_eq!(n[2], 0.0);
        assert!(n.is_full());

        let p = pv(&[0.25, 0.75]);
        assert_eq!(renormalize(&p).unwrap(), p);

        let z = ProbVector::<f64>::sub_probability(vec![0.0; 3]).unwrap();
        assert!(matches!(renormalize(&z), Err(Error::EmptyMass)));
    }

    #[test]
    fn prob_vector_validation() {
        assert!(ProbVector::new(vec![0.5, 0.6]).is_err());
        assert!(ProbVector::new(vec![-0.1, 1.1]).is_err());
        assert!(ProbVector::<f64>::new(vec![]).is_err());
        assert!(ProbVector::sub_probability(vec![0.5, 0.6]).is_err());
        let p = pv(&[0.0, 1.0, 0.0]);
        assert_eq!(p.support().indices(), &[1]);
    }

    #[test]
    fn support_set_validation_and_ops() {
        assert!(SupportSet::new(vec![1, 1], 3).is_err());
        assert!(SupportSet::new(vec![2, 1], 3).is_err());
        assert!(SupportSet::new(vec![3], 3).is_err());
        let a = SupportSet::new(vec![0, 2, 4], 6).unwrap();
        let b = SupportSet::from_unsorted([4, 1, 2, 2], 6).unwrap();
        assert_eq!(a.intersection(&b).indices(), &[2, 4]);
        assert_eq!(a.difference(&b).indices(), &[0]);
        assert!(SupportSet::new(vec![2], 6).unwrap().is_subset_of(&a));
        assert!(!b.is_subset_of(&a));
        assert_eq!(a.position(4), Some(2));
        assert!(VocabSpace::new(0).is_err());
    }

    #[test]
    fn draw_token_one_hot_and_rejects_sub_probability() {
        let mut rng = RandomSource::new(5);
        let p = ProbVector::<f64>::one_hot(6, 3).unwrap();
        for _ in 0..1000 {
            assert_eq!(draw_token(&p, &mut rng).unwrap(), 3);
        }
        let sub = ProbVector::sub_probability(vec![0.2, 0.3]).unwrap();
        assert!(matches!(
            draw_token(&sub, &mut rng),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn draw_token_binomial_frequency() {
        let mut rng = RandomSource::new(11);
        let p = pv(&[0.6, 0.4]);
        let n = 100_000;
        let hits = (0..n)
            .filter(|_| draw_token(&p, &mut rng).unwrap() == 0)
            .count();
        let f = hits as f64 / n as f64;
        assert!((f - 0.6).abs() <= 0.006, "frequency {f}");
    }

    #[test]
    fn draw_token_uniform_chi_square() {
        let mut rng = RandomSource::new(12);
        let p = ProbVector::<f64>::uniform(10).unwrap();
        let n = 100_000usize;
        let mut counts = [0usize; 10];
        for _ in 0..n {
            counts[draw_token(&p, &mut rng).unwrap()] += 1;
        }
        let e = n as f64 / 10.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
        // chi-square(9) upper 0.001 quantile
        assert!(chi2 < 27.877, "chi2 = {chi2}");
    }

    #[test]
    fn draw_token_is_reproducible() {
        let p = random_simplex::<f64>(50, &mut RandomSource::new(1)).unwrap();
        let a: Vec<usize> = {
            let mut r = RandomSource::new(99);
            (0..200).map(|_| draw_token(&p, &mut r).unwrap()).collect()
        };
        let b: Vec<usize> = {
            let mut r = RandomSource::new(99);
            (0..200).map(|_| draw_token(&p, &mut r).unwrap()).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn gaussian_zero_covariance_returns_mean() {
        let mu = LogitVector::new(vec![1.5, -2.0, 0.25]).unwrap();
        let mut rng = RandomSource::new(0);
        let z = sample_gaussian_logits(&mu, &Covariance::Diagonal(vec![0.0; 3]), &mut rng).unwrap();
        assert_eq!(z, mu);
        let dense = Covariance::Dense {
            dim: 3,
            entries: vec![0.0; 9],
        };
        assert_eq!(sample_gaussian_logits(&mu, &dense, &mut rng).unwrap(), mu);
    }

    #[test]
    fn gaussian_diagonal_means() {
        let mu = LogitVector::new(vec![1.0, -3.0, 0.0]).unwrap();
        let var = vec![1.0, 4.0, 0.25];
        let s = GaussianLogitSampler::new(&mu, &Covariance::Diagonal(var.clone())).unwrap();
        let mut rng = RandomSource::new(21);
        let n = 100_000;
        let mut sums = [0.0; 3];
        for _ in 0..n {
            for (a, b) in sums.iter_mut().zip(s.sample(&mut rng).values()) {
                *a += b;
            }
        }
        for i in 0..3 {
            let mean = sums[i] / n as f64;
            let tol = 4.0 * var[i].sqrt() / (n as f64).sqrt();
            assert!((mean - mu.values()[i]).abs() < tol, "coord {i}: {mean}");
        }
    }

    #[test]
    fn gaussian_dense_covariance_moments() {
        let mu = LogitVector::<f64>::new(vec![0.0, 0.0]).unwrap();
        let cov = Covariance::Dense {
            dim: 2,
            entries: vec![1.0, 0.5, 0.5, 1.0],
        };
        let s = GaussianLogitSampler::new(&mu, &cov).unwrap();
        let mut rng = RandomSource::new(22);
        let n = 100_000;
        let draws: Vec<Vec<f64>> = (0..n).map(|_| s.sample(&mut rng).into_values()).collect();
        let mean: Vec<f64> = (0..2)
            .map(|k| draws.iter().map(|d| d[k]).sum::<f64>() / n as f64)
            .collect();
        let target = [[1.0, 0.5], [0.5, 1.0]];
        for a in 0..2 {
            for b in 0..2 {
                let c = draws
                    .iter()
                    .map(|d| (d[a] - mean[a]) * (d[b] - mean[b]))
                    .sum::<f64>()
                    / (n as f64 - 1.0);
                assert!((c - target[a][b]).abs() < 0.02, "cov[{a}][{b}] = {c}");
            }
        }
    }

    #[test]
    fn gaussian_singular_psd_is_accepted_and_indefinite_rejected() {
        let mu = LogitVector::<f64>::new(vec![0.0, 0.0]).unwrap();
        let singular = Covariance::Dense {
            dim: 2,
            entries: vec![0.5, 0.5, 0.5, 0.5],
        };
        let s = GaussianLogitSampler::new(&mu, &singular).unwrap();
        let mut rng = RandomSource::new(2);
        for _ in 0..100 {
            let z = s.sample(&mut rng);
            assert!((z.values()[0] - z.values()[1]).abs() < 1e-12);
        }
        let indefinite = Covariance::Dense {
            dim: 2,
            entries: vec![1.0, 2.0, 2.0, 1.0],
        };
        assert!(matches!(
            GaussianLogitSampler::new(&mu, &indefinite),
            Err(Error::Decomposition { .. })
        ));
    }

    #[test]
    fn student_t_degenerate_scale_and_bad_df() {
        let loc = LogitVector::new(vec![0.5, -1.0]).unwrap();
        let mut rng = RandomSource::new(3);
        let z = sample_student_t_logits(5.0, &loc, &[0.0, 0.0], &mut rng).unwrap();
        assert_eq!(z, loc);
        assert!(matches!(
            sample_student_t_logits(0.0, &loc, &[1.0, 1.0], &mut rng),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            sample_student_t_logits(-2.0, &loc, &[1.0, 1.0], &mut rng),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn student_t_median_and_heavy_tails() {
        let n = 1_000_000;
        let loc = LogitVector::zeros(n).unwrap();
        let scale = vec![1.0; n];
        let mut rng = RandomSource::new(8);
        let mut z = sample_student_t_logits(5.0, &loc, &scale, &mut rng)
            .unwrap()
            .into_values();
        let mean = z.iter().sum::<f64>() / n as f64;
        let m2 = z.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        let m4 = z.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n as f64;
        let kurtosis = m4 / (m2 * m2);
        assert!(kurtosis > 3.0, "kurtosis {kurtosis}");
        z.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = 0.5 * (z[n / 2 - 1] + z[n / 2]);
        assert!(median.abs() < 0.01, "median {median}");
    }
}
