//! Price paths, log returns and the scrambled surrogate.

use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Checks the invariants of a price path: at least two values, all finite and
/// strictly positive.
pub fn validate_prices(values: &[f64]) -> Result<()> {
    if values.len() < 2 {
        return Err(Error::TooShort { len: values.len() });
    }
    for (index, &value) in values.iter().enumerate() {
        if !value.is_finite() {
            return Err(Error::NonFinite { index });
        }
        if value <= 0.0 {
            return Err(Error::NonPositivePrice { index, value });
        }
    }
    Ok(())
}

/// Closing prices on a uniform day grid, `values[0..=T]`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct PriceSeries {
    label: String,
    values: Vec<f64>,
}

impl PriceSeries {
    /// Every value must be finite and strictly positive, and there must be at
    /// least two of them.
    pub fn new(label: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        validate_prices(&values)?;
        Ok(Self {
            label: label.into(),
            values,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of return days `T` (one less than the number of prices).
    pub fn days(&self) -> usize {
        self.values.len() - 1
    }

    pub fn first(&self) -> f64 {
        self.values[0]
    }

    pub fn last(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn log_prices(&self) -> Vec<f64> {
        self.values.iter().map(|&v| libm::log(v)).collect()
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }
}

/// Daily log returns `values[t-1] = log(I_t / I_{t-1})` for `t = 1..=T`,
/// plus the day-0 price needed to rebuild the path.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ReturnSeries {
    pub values: Vec<f64>,
    pub base_value: f64,
}

pub fn log_returns(prices: &PriceSeries) -> ReturnSeries {
    let values = prices
        .values
        .windows(2)
        .map(|w| libm::log(w[1] / w[0]))
        .collect();
    ReturnSeries {
        values,
        base_value: prices.first(),
    }
}

/// Rebuilds `base_value * exp(cumulative sum)`.
pub fn reconstruct(returns: &ReturnSeries, label: impl Into<String>) -> Result<PriceSeries> {
    if !(returns.base_value.is_finite() && returns.base_value > 0.0) {
        return Err(Error::NonPositivePrice {
            index: 0,
            value: returns.base_value,
        });
    }
    let mut values = Vec::with_capacity(returns.values.len() + 1);
    values.push(returns.base_value);
    let mut cumulative = 0.0;
    for (i, &r) in returns.values.iter().enumerate() {
        if !r.is_finite() {
            return Err(Error::NonFinite { index: i + 1 });
        }
        cumulative += r;
        let v = returns.base_value * libm::exp(cumulative);
        if !v.is_finite() || v <= 0.0 {
            return Err(Error::Overflow { index: i + 1 });
        }
        values.push(v);
    }
    PriceSeries::new(label, values)
}

/// Permutation generator used for scrambling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum ScrambleAlgorithm {
    /// Fisher–Yates shuffle driven by ChaCha8 seeded with `seed_from_u64`;
    /// each swap index is drawn with `random_range(0..=i)` over `u64`.
    #[default]
    Chacha8FisherYates,
    /// Leaves the order untouched. Used to check that the scramble pipeline
    /// itself is transparent.
    Identity,
}

impl ScrambleAlgorithm {
    pub fn name(self) -> &'static str {
        match self {
            ScrambleAlgorithm::Chacha8FisherYates => "chacha8-fisher-yates",
            ScrambleAlgorithm::Identity => "identity",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScrambleSpec {
    pub seed: u64,
    pub algorithm: ScrambleAlgorithm,
}

impl ScrambleSpec {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            algorithm: ScrambleAlgorithm::Chacha8FisherYates,
        }
    }

    pub fn identity() -> Self {
        Self {
            seed: 0,
            algorithm: ScrambleAlgorithm::Identity,
        }
    }

    /// Zero-based permutation `j` of `0..len`; the scrambled sequence is
    /// `x[j[0]], x[j[1]], ...`.
    pub fn permutation(&self, len: usize) -> Vec<usize> {
        let mut perm: Vec<usize> = (0..len).collect();
        if self.algorithm == ScrambleAlgorithm::Identity {
            return perm;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        for i in (1..len).rev() {
            let j = rng.random_range(0..=i as u64) as usize;
            perm.swap(i, j);
        }
        perm
    }
}

/// Reorders the returns by `perm`, keeping the base value.
pub fn permute_returns(returns: &ReturnSeries, perm: &[usize]) -> Result<ReturnSeries> {
    let n = returns.values.len();
    let mut seen = alloc::vec![false; n];
    if perm.len() != n {
        return Err(Error::InvalidPermutation {
            got: perm.len(),
            expected: n,
        });
    }
    for &j in perm {
        if j >= n || seen[j] {
            return Err(Error::InvalidPermutation {
                got: perm.len(),
                expected: n,
            });
        }
        seen[j] = true;
    }
    Ok(ReturnSeries {
        values: perm.iter().map(|&j| returns.values[j]).collect(),
        base_value: returns.base_value,
    })
}

pub fn scramble_returns(returns: &ReturnSeries, spec: &ScrambleSpec) -> ReturnSeries {
    let perm = spec.permutation(returns.values.len());
    permute_returns(returns, &perm).expect("generated permutation is valid")
}

/// Random-permutation surrogate: same first price, same multiset of log
/// returns, temporal order destroyed.
pub fn scramble(prices: &PriceSeries, spec: &ScrambleSpec) -> Result<PriceSeries> {
    let perm = spec.permutation(prices.days());
    scramble_with_permutation(prices, &perm)
}

pub fn scramble_with_permutation(prices: &PriceSeries, perm: &[usize]) -> Result<PriceSeries> {
    let returns = log_returns(prices);
    let permuted = permute_returns(&returns, perm)?;
    let label = alloc::format!("{} (scrambled)", prices.label());
    if perm.iter().enumerate().all(|(i, &j)| i == j) {
        return Ok(prices.clone().with_label(label));
    }
    reconstruct(&permuted, label)
}
