//! Drafter pruning and the out-of-vocabulary redistribution schemes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::affinity::{apply_exact, taylor_redistribute, AffinityMatrix};
use crate::error::{check_dims, Error, Result};
use crate::frequency::TokenFrequencyTable;
use crate::prob::{renormalize, restrict, ProbVector, SupportSet};
use crate::scalar::Scalar;

/// A drafter vocabulary reduced to `retained`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrunedDrafter {
    retained: SupportSet,
}

impl PrunedDrafter {
    pub fn new(retained: SupportSet) -> Result<Self> {
        if retained.is_empty() {
            return Err(Error::EmptySupport);
        }
        Ok(Self { retained })
    }

    pub fn retained(&self) -> &SupportSet {
        &self.retained
    }

    pub fn original_size(&self) -> usize {
        self.retained.vocab_size()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeId {
    MaskedOnly,
    Tli,
    RdkExact,
    RdkTaylor,
}

impl SchemeId {
    pub const ALL: [SchemeId; 4] = [Self::MaskedOnly, Self::Tli, Self::RdkExact, Self::RdkTaylor];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::MaskedOnly => "masked_only",
            Self::Tli => "tli",
            Self::RdkExact => "rdk_exact",
            Self::RdkTaylor => "rdk_taylor",
        }
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchemeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown scheme '{s}'")))
    }
}

fn check_keep(keep: usize, vocab: usize) -> Result<()> {
    if keep == 0 || keep > vocab {
        return Err(Error::InvalidParameter(format!(
            "keep must lie in 1..={vocab}, got {keep}"
        )));
    }
    Ok(())
}

/// Keeps the `keep` most frequent tokens; ties go to the lower index.
pub fn fr_prune(freq: &TokenFrequencyTable, keep: usize) -> Result<PrunedDrafter> {
    check_keep(keep, freq.vocab_size())?;
    let mut ranked = freq.ranked();
    ranked.truncate(keep);
    PrunedDrafter::new(SupportSet::from_unsorted(ranked, freq.vocab_size())?)
}

/// Keeps the `keep` highest-probability tokens of `p`; ties go to the lower index.
pub fn top_prob_prune<S: Scalar>(p: &ProbVector<S>, keep: usize) -> Result<PrunedDrafter> {
    check_keep(keep, p.len())?;
    let mut ids: Vec<usize> = (0..p.len()).collect();
    let order = |&a: &usize, &b: &usize| {
        p.get(b)
            .partial_cmp(&p.get(a))
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    };
    if keep < ids.len() {
        ids.select_nth_unstable_by(keep - 1, order);
        ids.truncate(keep);
    }
    PrunedDrafter::new(SupportSet::from_unsorted(ids, p.len())?)
}

/// Token-level intersection: drop drafter mass outside `T` and renormalize.
pub fn tli_redistribute<S: Scalar>(q: &ProbVector<S>, target: &SupportSet) -> Result<ProbVector<S>> {
    check_dims(q.len(), target.vocab_size())?;
    q.require_full("tli_redistribute")?;
    if q.support().is_subset_of(target) {
        return Ok(q.clone());
    }
    renormalize(&restrict(q, target)?).map_err(|e| match e {
        Error::EmptyMass => Error::EmptyIntersection,
        e => e,
    })
}

/// TLI followed by `p' = M^T q'`. `M` must be defined over `T`.
pub fn rdk_redistribute<S: Scalar>(
    q: &ProbVector<S>,
    target: &SupportSet,
    m: &AffinityMatrix<S>,
) -> Result<ProbVector<S>> {
    if m.support() != target {
        return Err(Error::Support(
            "affinity matrix is defined over a different target support".into(),
        ));
    }
    apply_exact(m, &tli_redistribute(q, target)?)
}

/// TLI followed by the first-order approximation driven by `p_ref`.
pub fn rdk_taylor_redistribute<S: Scalar>(
    q: &ProbVector<S>,
    target: &SupportSet,
    p_ref: &ProbVector<S>,
) -> Result<ProbVector<S>> {
    taylor_redistribute(p_ref, &tli_redistribute(q, target)?, target)
}

/// Pruning without redistribution: the out-of-vocabulary mass is discarded.
pub fn masked_only<S: Scalar>(q: &ProbVector<S>, target: &SupportSet) -> Result<ProbVector<S>> {
    restrict(q, target)
}
