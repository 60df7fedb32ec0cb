//! First-passage times of log-return barriers.
//!
//! For a start day `t` and barrier `rho > 0` the wait is the smallest `s >= 1`
//! with `log(I_{t+s} / I_t) >= rho`; for `rho < 0` the inequality flips. Every
//! start `t = 0..T-1` is scanned, overlapping windows included. Starts whose
//! barrier is never reached before the series ends are censored: counted, but
//! kept out of the empirical distribution.

use alloc::vec;
use alloc::vec::Vec;

use crate::gengamma::{fit_gen_gamma_weighted, FitWeighting, GenGammaFit, MIN_FIT_SUPPORT};
use crate::series::PriceSeries;
use crate::{Error, Result};

/// Absolute slack (in log units) on the barrier comparison, so that paths built
/// as `exp(k * step)` reach `k * step` despite round-off.
pub const CROSSING_TOLERANCE: f64 = 1e-12;

/// Minimum crossings per barrier before a mode is trusted by [`asymmetry_stat`].
pub const DEFAULT_MIN_CROSSINGS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct Barrier(f64);

impl Barrier {
    pub fn new(rho: f64) -> Result<Self> {
        if rho == 0.0 || !rho.is_finite() {
            return Err(Error::InvalidBarrier(rho));
        }
        Ok(Self(rho))
    }

    pub fn rho(self) -> f64 {
        self.0
    }

    pub fn is_gain(self) -> bool {
        self.0 > 0.0
    }

    /// Whether a log return `change` counts as reaching this barrier.
    #[inline]
    pub fn reached_by(self, change: f64) -> bool {
        if self.0 > 0.0 {
            change >= self.0 - CROSSING_TOLERANCE
        } else {
            change <= self.0 + CROSSING_TOLERANCE
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct FptSamples {
    pub rho: Barrier,
    /// Waits in days, in start order; censored starts are skipped.
    pub waits: Vec<u32>,
    pub starts_total: usize,
    pub starts_censored: usize,
}

/// Segment tree over log prices answering "first index at or after `from`
/// whose value is at least / at most a threshold" in `O(log T)`.
struct ExtremaTree {
    size: usize,
    max: Vec<f64>,
    min: Vec<f64>,
}

impl ExtremaTree {
    fn new(values: &[f64]) -> Self {
        let size = values.len().next_power_of_two();
        let mut max = vec![f64::NEG_INFINITY; 2 * size];
        let mut min = vec![f64::INFINITY; 2 * size];
        max[size..size + values.len()].copy_from_slice(values);
        min[size..size + values.len()].copy_from_slice(values);
        for node in (1..size).rev() {
            max[node] = max[2 * node].max(max[2 * node + 1]);
            min[node] = min[2 * node].min(min[2 * node + 1]);
        }
        Self { size, max, min }
    }

    fn first_at_least(&self, from: usize, threshold: f64) -> Option<usize> {
        self.descend(1, 0, self.size, from, &|node| self.max[node] >= threshold)
    }

    fn first_at_most(&self, from: usize, threshold: f64) -> Option<usize> {
        self.descend(1, 0, self.size, from, &|node| self.min[node] <= threshold)
    }

    /// Leftmost leaf `>= from` in the subtree `[lo, hi)` of `node` for which
    /// `hit` holds; `hit` must be monotone from children to parents.
    fn descend(
        &self,
        node: usize,
        lo: usize,
        hi: usize,
        from: usize,
        hit: &dyn Fn(usize) -> bool,
    ) -> Option<usize> {
        if hi <= from || !hit(node) {
            return None;
        }
        if hi - lo == 1 {
            return Some(lo);
        }
        let mid = (lo + hi) / 2;
        self.descend(2 * node, lo, mid, from, hit)
            .or_else(|| self.descend(2 * node + 1, mid, hi, from, hit))
    }
}

pub fn first_passage_times(prices: &PriceSeries, barrier: Barrier) -> FptSamples {
    let log_prices = prices.log_prices();
    let tree = ExtremaTree::new(&log_prices);
    let days = prices.days();
    let rho = barrier.rho();
    // The tree is searched with a slightly looser threshold; each candidate is
    // then confirmed with the exact difference test.
    let slack = 1e-9 * (1.0 + rho.abs());

    let mut waits = Vec::new();
    let mut censored = 0;
    for start in 0..days {
        let base = log_prices[start];
        let mut from = start + 1;
        let hit = loop {
            let candidate = if barrier.is_gain() {
                tree.first_at_least(from, base + rho - CROSSING_TOLERANCE - slack)
            } else {
                tree.first_at_most(from, base + rho + CROSSING_TOLERANCE + slack)
            };
            match candidate {
                Some(j) if barrier.reached_by(log_prices[j] - base) => break Some(j),
                Some(j) => from = j + 1,
                None => break None,
            }
        };
        match hit {
            Some(j) => waits.push((j - start) as u32),
            None => censored += 1,
        }
    }
    FptSamples {
        rho: barrier,
        waits,
        starts_total: days,
        starts_censored: censored,
    }
}

/// Normalized histogram of waits on the integer support `1..=t_max`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct EmpiricalPmf {
    /// `mass[i]` is the probability of a wait of `i + 1` days.
    pub mass: Vec<f64>,
    /// Observed waits behind the estimate.
    pub samples: usize,
    /// Waits longer than `t_max`. They count in the denominator only, so the
    /// masses sum to less than one when this is nonzero.
    pub truncated: usize,
}

impl EmpiricalPmf {
    pub fn t_max(&self) -> u32 {
        self.mass.len() as u32
    }

    pub fn support(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.mass
            .iter()
            .enumerate()
            .map(|(i, &m)| ((i + 1) as u32, m))
    }

    /// Smallest support point attaining the maximal mass.
    pub fn mode(&self) -> u32 {
        let mut best = 0;
        for (i, &m) in self.mass.iter().enumerate() {
            if m > self.mass[best] {
                best = i;
            }
        }
        (best + 1) as u32
    }

    pub fn mean(&self) -> f64 {
        let total: f64 = self.mass.iter().sum();
        self.support().map(|(t, m)| t as f64 * m).sum::<f64>() / total
    }

    pub fn positive_support(&self) -> usize {
        self.mass.iter().filter(|&&m| m > 0.0).count()
    }

    /// Bin-wise average of several estimates, padded to the longest support.
    pub fn average(pmfs: &[EmpiricalPmf]) -> Option<EmpiricalPmf> {
        let len = pmfs.iter().map(|p| p.mass.len()).max()?;
        let mut mass = vec![0.0; len];
        for pmf in pmfs {
            for (acc, &m) in mass.iter_mut().zip(&pmf.mass) {
                *acc += m;
            }
        }
        let k = pmfs.len() as f64;
        mass.iter_mut().for_each(|m| *m /= k);
        Some(EmpiricalPmf {
            mass,
            samples: pmfs.iter().map(|p| p.samples).sum(),
            truncated: pmfs.iter().map(|p| p.truncated).sum(),
        })
    }
}

/// `t_max = None` uses the longest observed wait, so nothing is truncated.
pub fn empirical_pmf(samples: &FptSamples, t_max: Option<u32>) -> Result<EmpiricalPmf> {
    if samples.waits.is_empty() {
        return Err(Error::NoCrossings {
            rho: samples.rho.rho(),
        });
    }
    let longest = samples.waits.iter().copied().max().unwrap_or(1);
    let t_max = t_max.unwrap_or(longest).max(1);
    let mut counts = vec![0usize; t_max as usize];
    let mut truncated = 0;
    for &w in &samples.waits {
        if w <= t_max {
            counts[(w - 1) as usize] += 1;
        } else {
            truncated += 1;
        }
    }
    let n = samples.waits.len() as f64;
    Ok(EmpiricalPmf {
        mass: counts.into_iter().map(|c| c as f64 / n).collect(),
        samples: samples.waits.len(),
        truncated,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ModeEstimate {
    /// Argmax of the fitted density; absent when the fit did not converge.
    pub fitted: Option<f64>,
    pub empirical: u32,
}

pub fn most_likely_time(fit: Option<&GenGammaFit>, pmf: &EmpiricalPmf) -> ModeEstimate {
    ModeEstimate {
        fitted: fit.filter(|f| f.converged).map(|f| f.params.mode()),
        empirical: pmf.mode(),
    }
}

/// `mode(+rho_abs) - mode(-rho_abs)` of the empirical first-passage
/// distributions, in days. Positive values mean losses of size `rho_abs` are
/// most likely reached sooner than gains of the same size.
pub fn asymmetry_stat(prices: &PriceSeries, rho_abs: f64, min_crossings: usize) -> Result<f64> {
    if !(rho_abs > 0.0) {
        return Err(Error::InvalidBarrier(rho_abs));
    }
    let mut modes = [0u32; 2];
    for (slot, rho) in modes.iter_mut().zip([rho_abs, -rho_abs]) {
        let samples = first_passage_times(prices, Barrier::new(rho)?);
        if samples.waits.len() < min_crossings.max(1) {
            return Err(Error::TooFewCrossings {
                rho,
                got: samples.waits.len(),
                needed: min_crossings.max(1),
            });
        }
        *slot = empirical_pmf(&samples, None)?.mode();
    }
    Ok(modes[0] as f64 - modes[1] as f64)
}

/// Everything reported for one barrier.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct BarrierAnalysis {
    pub rho: Barrier,
    pub starts_total: usize,
    pub starts_censored: usize,
    pub pmf: EmpiricalPmf,
    /// `None` when the pmf has fewer than the minimum support points.
    pub fit: Option<GenGammaFit>,
    pub modes: ModeEstimate,
}

impl BarrierAnalysis {
    pub fn from_pmf(
        rho: Barrier,
        starts_total: usize,
        starts_censored: usize,
        pmf: EmpiricalPmf,
        weighting: FitWeighting,
    ) -> Self {
        let fit = if pmf.positive_support() >= MIN_FIT_SUPPORT {
            fit_gen_gamma_weighted(&pmf, weighting).ok()
        } else {
            None
        };
        let modes = most_likely_time(fit.as_ref(), &pmf);
        Self {
            rho,
            starts_total,
            starts_censored,
            pmf,
            fit,
            modes,
        }
    }
}

pub fn analyze_barrier(
    prices: &PriceSeries,
    rho: Barrier,
    t_max: Option<u32>,
    weighting: FitWeighting,
) -> Result<BarrierAnalysis> {
    let samples = first_passage_times(prices, rho);
    let pmf = empirical_pmf(&samples, t_max)?;
    Ok(BarrierAnalysis::from_pmf(
        rho,
        samples.starts_total,
        samples.starts_censored,
        pmf,
        weighting,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{scramble, ScrambleSpec};
    use crate::synthetic::{generate_gbm, GbmSpec};
    use proptest::prelude::*;
    use std::vec::Vec;

    fn brute_force(prices: &[f64], rho: f64) -> (Vec<u32>, usize) {
        let mut waits = Vec::new();
        let mut censored = 0;
        for t in 0..prices.len() - 1 {
            let mut found = None;
            for s in 1..prices.len() - t {
                let change = (prices[t + s] / prices[t]).ln();
                let hit = if rho > 0.0 {
                    change >= rho - 1e-12
                } else {
                    change <= rho + 1e-12
                };
                if hit {
                    found = Some(s as u32);
                    break;
                }
            }
            match found {
                Some(s) => waits.push(s),
                None => censored += 1,
            }
        }
        (waits, censored)
    }

    fn series(values: Vec<f64>) -> PriceSeries {
        PriceSeries::new("t", values).unwrap()
    }

    #[test]
    fn single_exact_crossing() {
        let p = series(vec![1.0, 0.05f64.exp()]);
        let s = first_passage_times(&p, Barrier::new(0.05).unwrap());
        assert_eq!(s.waits, vec![1]);
        assert_eq!(s.starts_total, 1);
        assert_eq!(s.starts_censored, 0);
    }

    #[test]
    fn deterministic_drift() {
        let p = series((0..=10).map(|t| (0.01 * t as f64).exp()).collect());
        let s = first_passage_times(&p, Barrier::new(0.05).unwrap());
        assert_eq!(s.waits, vec![5; 6]);
        assert_eq!(s.starts_censored, 4);
        assert_eq!(s.starts_total, 10);
    }

    #[test]
    fn increasing_series_never_falls() {
        let p = series((1..=20).map(|t| t as f64).collect());
        let s = first_passage_times(&p, Barrier::new(-0.05).unwrap());
        assert!(s.waits.is_empty());
        assert_eq!(s.starts_censored, 19);
    }

    #[test]
    fn zero_barrier_rejected() {
        assert_eq!(Barrier::new(0.0), Err(Error::InvalidBarrier(0.0)));
        assert!(Barrier::new(f64::NAN).is_err());
    }

    #[test]
    fn matches_brute_force_on_gbm() {
        for seed in 0..5 {
            let p = generate_gbm(&GbmSpec {
                mu: 0.0,
                sigma: 0.01,
                days: 200,
                seed,
            })
            .unwrap();
            for rho in [0.03, -0.03] {
                let s = first_passage_times(&p, Barrier::new(rho).unwrap());
                let (waits, censored) = brute_force(p.values(), rho);
                assert_eq!(s.waits, waits);
                assert_eq!(s.starts_censored, censored);
            }
        }
    }

    #[test]
    fn pmf_examples() {
        let samples = |waits: Vec<u32>| FptSamples {
            rho: Barrier::new(0.05).unwrap(),
            starts_total: waits.len(),
            starts_censored: 0,
            waits,
        };
        let pmf = empirical_pmf(&samples(vec![5; 6]), None).unwrap();
        assert_eq!(pmf.mass, vec![0.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(pmf.mode(), 5);

        let pmf = empirical_pmf(&samples(vec![1, 2, 2, 3]), None).unwrap();
        assert_eq!(pmf.mass, vec![0.25, 0.5, 0.25]);

        let pmf = empirical_pmf(&samples(vec![1, 2, 2, 9]), Some(3)).unwrap();
        assert_eq!(pmf.truncated, 1);
        assert_eq!(pmf.mass, vec![0.25, 0.5, 0.0]);

        assert_eq!(
            empirical_pmf(&samples(vec![]), None),
            Err(Error::NoCrossings { rho: 0.05 })
        );
    }

    #[test]
    fn mode_prefers_smallest_tie() {
        let pmf = EmpiricalPmf {
            mass: vec![0.1, 0.4, 0.1, 0.4],
            samples: 10,
            truncated: 0,
        };
        assert_eq!(pmf.mode(), 2);
    }

    #[test]
    fn averaged_pmf_pads_supports() {
        let a = EmpiricalPmf {
            mass: vec![1.0],
            samples: 2,
            truncated: 0,
        };
        let b = EmpiricalPmf {
            mass: vec![0.0, 0.5, 0.5],
            samples: 4,
            truncated: 0,
        };
        let avg = EmpiricalPmf::average(&[a, b]).unwrap();
        assert_eq!(avg.mass, vec![0.5, 0.25, 0.25]);
        assert_eq!(avg.samples, 6);
        assert!(EmpiricalPmf::average(&[]).is_none());
    }

    #[test]
    fn asymmetry_rejects_one_sided_series() {
        let p = series((0..200).map(|t| (0.01 * t as f64).exp()).collect());
        match asymmetry_stat(&p, 0.05, DEFAULT_MIN_CROSSINGS) {
            Err(Error::TooFewCrossings { rho, got: 0, .. }) => assert_eq!(rho, -0.05),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn scrambled_one_day_series_keeps_waits() {
        let p = series(vec![1.0, 1.1]);
        let s = scramble(&p, &ScrambleSpec::new(3)).unwrap();
        let b = Barrier::new(0.05).unwrap();
        assert_eq!(first_passage_times(&p, b), first_passage_times(&s, b));
    }

    fn arb_path() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-0.03f64..0.03, 1..300).prop_map(|r| {
            let mut v = Vec::with_capacity(r.len() + 1);
            v.push(1.0f64);
            for x in r {
                let last = *v.last().unwrap();
                v.push(last * x.exp());
            }
            v
        })
    }

    proptest! {
        #[test]
        fn agrees_with_brute_force(path in arb_path(), rho in prop::sample::select(vec![0.01, -0.01, 0.03, -0.03, 0.05, -0.05])) {
            let p = series(path);
            let s = first_passage_times(&p, Barrier::new(rho).unwrap());
            let (waits, censored) = brute_force(p.values(), rho);
            prop_assert_eq!(s.waits.len() + s.starts_censored, s.starts_total);
            prop_assert_eq!(s.waits, waits);
            prop_assert_eq!(s.starts_censored, censored);
        }

        #[test]
        fn higher_barrier_never_sooner(path in arb_path(), low in 0.005f64..0.03, extra in 0.0f64..0.03) {
            let p = series(path);
            for sign in [1.0, -1.0] {
                let near = first_passage_times(&p, Barrier::new(sign * low).unwrap());
                let far = first_passage_times(&p, Barrier::new(sign * (low + extra)).unwrap());
                prop_assert!(far.starts_censored >= near.starts_censored);
                let lp = p.log_prices();
                for t in 0..p.days() {
                    let wait = |rho: f64| (t + 1..=p.days()).find(|&j| Barrier::new(rho).unwrap().reached_by(lp[j] - lp[t]));
                    match (wait(sign * low), wait(sign * (low + extra))) {
                        (Some(a), Some(b)) => prop_assert!(b >= a),
                        (None, Some(_)) => prop_assert!(false, "far barrier reached before near one"),
                        _ => {}
                    }
                }
            }
        }

        #[test]
        fn pmf_sums_to_one(waits in prop::collection::vec(1u32..60, 1..500)) {
            let s = FptSamples { rho: Barrier::new(0.05).unwrap(), starts_total: waits.len(), starts_censored: 0, waits: waits.clone() };
            let pmf = empirical_pmf(&s, None).unwrap();
            let total: f64 = pmf.mass.iter().sum();
            prop_assert!((total - 1.0).abs() <= 1e-12);
            for (t, m) in pmf.support() {
                let count = waits.iter().filter(|&&w| w == t).count();
                prop_assert_eq!(m, count as f64 / waits.len() as f64);
            }
        }
    }
}
