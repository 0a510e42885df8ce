//! Seeded, splittable random source.
//!
//! Every experiment derives per-trial streams with [`RandomSource::child`], so
//! results do not depend on the order in which trials are executed.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, Exp1, Gamma, StandardNormal};

use crate::error::{Error, Result};

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for stream `index` under `master`.
#[inline]
pub fn derive_seed(master: u64, index: u64) -> u64 {
    mix64(mix64(master) ^ index.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

#[derive(Debug, Clone)]
pub struct RandomSource {
    seed: u64,
    inner: ChaCha8Rng,
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent stream keyed by `(self.seed, index)`. Does not advance `self`.
    pub fn child(&self, index: u64) -> Self {
        Self::new(derive_seed(self.seed, index))
    }

    /// Uniform on `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// Uniform on `[lo, hi)`.
    #[inline]
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in `0..n`. `n` must be positive.
    #[inline]
    pub fn index(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    #[inline]
    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }

    #[inline]
    pub fn exponential(&mut self) -> f64 {
        Exp1.sample(&mut self.inner)
    }

    pub fn gamma(&mut self, shape: f64) -> Result<f64> {
        let dist = Gamma::new(shape, 1.0)
            .map_err(|e| Error::InvalidParameter(format!("gamma shape {shape}: {e}")))?;
        Ok(dist.sample(&mut self.inner))
    }

    pub fn chi_squared(&mut self, df: f64) -> Result<f64> {
        let dist = ChiSquared::new(df)
            .map_err(|e| Error::InvalidParameter(format!("chi-squared df {df}: {e}")))?;
        Ok(dist.sample(&mut self.inner))
    }

    /// Standard Student-t draw built as `Z / sqrt(V / df)` with `V ~ chi2(df)`.
    pub fn student_t(&mut self, df: f64) -> Result<f64> {
        let sampler = StudentT::new(df)?;
        Ok(sampler.sample(self))
    }

    /// Draw from a symmetric Dirichlet(1) over `n` coordinates.
    pub fn uniform_simplex(&mut self, n: usize) -> Vec<f64> {
        let mut v: Vec<f64> = (0..n).map(|_| self.exponential()).collect();
        let total: f64 = crate::scalar::sum(v.iter().copied());
        for x in &mut v {
            *x /= total;
        }
        v
    }

    /// Draw from Dirichlet(`alpha`).
    pub fn dirichlet(&mut self, alpha: &[f64]) -> Result<Vec<f64>> {
        if alpha.is_empty() {
            return Err(Error::InvalidParameter("empty Dirichlet parameter".into()));
        }
        let mut v = Vec::with_capacity(alpha.len());
        for &a in alpha {
            v.push(self.gamma(a)?);
        }
        let total: f64 = crate::scalar::sum(v.iter().copied());
        for x in &mut v {
            *x /= total;
        }
        Ok(v)
    }

    /// `k` distinct indices from `0..n`, sorted ascending.
    pub fn subset(&mut self, n: usize, k: usize) -> Vec<usize> {
        let k = k.min(n);
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.index(n - i);
            pool.swap(i, j);
        }
        pool.truncate(k);
        pool.sort_unstable();
        pool
    }
}

impl RngCore for RandomSource {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// Reusable Student-t sampler (df may be any positive real).
#[derive(Debug, Clone, Copy)]
pub struct StudentT {
    df: f64,
    chi: ChiSquared<f64>,
}

impl StudentT {
    pub fn new(df: f64) -> Result<Self> {
        if !(df > 0.0) || !df.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "degrees of freedom must be positive and finite, got {df}"
            )));
        }
        let chi = ChiSquared::new(df)
            .map_err(|e| Error::InvalidParameter(format!("chi-squared df {df}: {e}")))?;
        Ok(Self { df, chi })
    }

    pub fn df(&self) -> f64 {
        self.df
    }

    #[inline]
    pub fn sample(&self, rng: &mut RandomSource) -> f64 {
        let z: f64 = StandardNormal.sample(&mut rng.inner);
        let v = self.chi.sample(&mut rng.inner);
        z / (v / self.df).sqrt()
    }
}
