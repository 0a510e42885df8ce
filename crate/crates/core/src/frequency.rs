//! Token frequency tables and coverage statistics.

use rand_distr::{Distribution, Zipf};

use crate::error::{Error, Result};
use crate::prob::ProbVector;
use crate::rng::RandomSource;
use crate::scalar::Scalar;

/// Occurrence counts per token id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenFrequencyTable {
    counts: Vec<u64>,
    total: u64,
}

/// One point of the cumulative coverage curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoveragePoint {
    /// 1-based rank by descending count.
    pub rank: usize,
    pub token: usize,
    pub count: u64,
    pub cum_fraction: f64,
}

impl TokenFrequencyTable {
    pub fn from_counts(counts: Vec<u64>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::InvalidParameter("vocabulary size must be >= 1".into()));
        }
        let total = counts.iter().try_fold(0u64, |a, &c| a.checked_add(c)).ok_or_else(|| {
            Error::InvalidInput("token counts overflow u64".into())
        })?;
        Ok(Self { counts, total })
    }

    /// Counts a token stream. The vocabulary is `vocab` if given, otherwise
    /// one past the largest id seen.
    pub fn from_tokens<I: IntoIterator<Item = usize>>(tokens: I, vocab: Option<usize>) -> Result<Self> {
        let mut counts = vec![0u64; vocab.unwrap_or(0)];
        for t in tokens {
            if t >= counts.len() {
                if vocab.is_some() {
                    return Err(Error::Support(format!(
                        "token {t} outside vocabulary of size {}",
                        counts.len()
                    )));
                }
                counts.resize(t + 1, 0);
            }
            counts[t] += 1;
        }
        if counts.is_empty() {
            return Err(Error::InsufficientData { needed: 1, got: 0 });
        }
        Self::from_counts(counts)
    }

    /// Expected counts of a Zipf(`s`) law over `vocab` ids scaled so the most
    /// frequent token (id 0) has `top_count` occurrences.
    pub fn zipf(vocab: usize, s: f64, top_count: u64) -> Result<Self> {
        if !(s >= 0.0) || !s.is_finite() {
            return Err(Error::InvalidParameter(format!("zipf exponent {s}")));
        }
        let counts = (0..vocab)
            .map(|i| ((top_count as f64) / ((i + 1) as f64).powf(s)).round().max(1.0) as u64)
            .collect();
        Self::from_counts(counts)
    }

    pub fn vocab_size(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn count(&self, token: usize) -> u64 {
        self.counts[token]
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Token ids by descending count; ties go to the lower id.
    pub fn ranked(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = (0..self.counts.len()).collect();
        ids.sort_by(|&a, &b| self.counts[b].cmp(&self.counts[a]).then(a.cmp(&b)));
        ids
    }

    /// Cumulative coverage over tokens with a non-zero count.
    pub fn coverage_curve(&self) -> Vec<CoveragePoint> {
        let mut cum = 0u64;
        self.ranked()
            .into_iter()
            .take_while(|&t| self.counts[t] > 0)
            .enumerate()
            .map(|(r, token)| {
                cum += self.counts[token];
                CoveragePoint {
                    rank: r + 1,
                    token,
                    count: self.counts[token],
                    cum_fraction: cum as f64 / self.total as f64,
                }
            })
            .collect()
    }

    /// Fewest top-ranked tokens whose counts reach `quantile` of the total.
    pub fn tokens_for_quantile(&self, quantile: f64) -> Result<usize> {
        if !(quantile > 0.0 && quantile <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "quantile must lie in (0, 1], got {quantile}"
            )));
        }
        if self.total == 0 {
            return Err(Error::EmptyMass);
        }
        let curve = self.coverage_curve();
        let k = curve
            .iter()
            .position(|p| p.cum_fraction >= quantile)
            .map_or(curve.len(), |i| i + 1);
        Ok(k)
    }

    /// Normalized counts as a distribution over the vocabulary.
    pub fn to_distribution<S: Scalar>(&self) -> Result<ProbVector<S>> {
        ProbVector::from_weights(self.counts.iter().map(|&c| S::lit(c as f64)).collect())
    }
}

/// `len` i.i.d. token ids with `P(id = k) ~ 1 / (k + 1)^s` over `0..vocab`.
pub fn sample_zipf_stream(len: usize, vocab: usize, s: f64, rng: &mut RandomSource) -> Result<Vec<usize>> {
    let dist = Zipf::new(vocab as f64, s)
        .map_err(|e| Error::InvalidParameter(format!("zipf({vocab}, {s}): {e}")))?;
    Ok((0..len)
        .map(|_| {
            let k: f64 = dist.sample(rng);
            k as usize - 1
        })
        .collect())
}
