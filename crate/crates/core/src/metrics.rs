//! Acceptance rate, drafter kernel and L1 distance.
//!
//! For full distributions these satisfy `alpha = 1 - |k|_1 = 1 - |p - q|_1 / 2`.

use crate::error::{check_dims, Result};
use crate::prob::ProbVector;
use crate::scalar::{self, Scalar};

/// Excess drafter mass `max(0, q - p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelVector<S> {
    values: Vec<S>,
}

impl<S: Scalar> KernelVector<S> {
    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn l1_norm(&self) -> S {
        scalar::sum(self.values.iter().copied())
    }
}

/// `sum_i min(p_i, q_i)`. `q` may be a sub-probability (masked drafter); the
/// missing mass then simply contributes no overlap.
pub fn acceptance_rate<S: Scalar>(p: &ProbVector<S>, q: &ProbVector<S>) -> Result<S> {
    check_dims(p.len(), q.len())?;
    Ok(scalar::sum(p.iter().zip(q.iter()).map(|(a, b)| a.min(b))))
}

pub fn drafter_kernel<S: Scalar>(p: &ProbVector<S>, q: &ProbVector<S>) -> Result<KernelVector<S>> {
    check_dims(p.len(), q.len())?;
    let values = p
        .iter()
        .zip(q.iter())
        .map(|(a, b)| (b - a).max(S::zero()))
        .collect();
    Ok(KernelVector { values })
}

pub fn l1_distance<S: Scalar>(p: &ProbVector<S>, q: &ProbVector<S>) -> Result<S> {
    check_dims(p.len(), q.len())?;
    Ok(l1_slices(p.values(), q.values()))
}

/// L1 distance of two equal-length real slices.
pub fn l1_slices<S: Scalar>(a: &[S], b: &[S]) -> S {
    debug_assert_eq!(a.len(), b.len());
    scalar::sum(a.iter().zip(b).map(|(&x, &y)| (x - y).abs()))
}

/// Half the L1 distance.
pub fn total_variation<S: Scalar>(p: &ProbVector<S>, q: &ProbVector<S>) -> Result<S> {
    Ok(l1_distance(p, q)? / S::lit(2.0))
}
