//! Dependence between index constituents during index upturns and downturns.
//!
//! The day grid of the artificial index is cut into consecutive windows of
//! `L` days. Days in windows over which the index rose form the up set `U`,
//! days in falling windows form `D`. For each stock `n` the log returns of the
//! stock and of its leave-one-out index are paired on `U` days and on `D` days,
//! and two dependence measures (plug-in mutual information and Pearson
//! correlation) are averaged over the stocks.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::index::{build_index, leave_one_out_index, PricePanel};
use crate::series::{log_returns, PriceSeries};
use crate::{Error, Result};

/// Window lengths swept by default: 5, 10, ..., 100 days.
pub const DEFAULT_WINDOWS: [usize; 20] = [
    5, 10, 15, 20, 25, 30, 35, 40, 45, 50, 55, 60, 65, 70, 75, 80, 85, 90, 95, 100,
];

/// Each margin and each of `U`, `D` needs this many samples per bin.
pub const SAMPLES_PER_BIN: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum Direction {
    Up,
    Down,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Up => "up (U)",
            Direction::Down => "down (D)",
        })
    }
}

/// Day indices refer to return days `1..=T`: day `t` is the return from
/// `t - 1` to `t`.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct WindowPartition {
    pub window: usize,
    pub up_days: Vec<usize>,
    pub down_days: Vec<usize>,
    pub flat_windows: usize,
    pub tail_days_dropped: usize,
}

impl WindowPartition {
    pub fn days(&self, direction: Direction) -> &[usize] {
        match direction {
            Direction::Up => &self.up_days,
            Direction::Down => &self.down_days,
        }
    }
}

/// Classifies window `k` by the raw level change `I_{kL} - I_{(k-1)L}`.
pub fn partition_updown(index: &PriceSeries, window: usize) -> Result<WindowPartition> {
    let days = index.days();
    if window == 0 || window > days {
        return Err(Error::WindowTooLong { window, days });
    }
    let levels = index.values();
    let windows = days / window;
    let mut partition = WindowPartition {
        window,
        up_days: Vec::new(),
        down_days: Vec::new(),
        flat_windows: 0,
        tail_days_dropped: days - windows * window,
    };
    for k in 1..=windows {
        let change = levels[k * window] - levels[(k - 1) * window];
        let span = (k - 1) * window + 1..=k * window;
        if change > 0.0 {
            partition.up_days.extend(span);
        } else if change < 0.0 {
            partition.down_days.extend(span);
        } else {
            partition.flat_windows += 1;
        }
    }
    Ok(partition)
}

/// Quantile discretization for the plug-in estimator: each margin is ranked
/// (ties broken by position) and rank `r` of `n` goes to bin `r * B / n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Binning {
    pub bins: usize,
}

impl Default for Binning {
    fn default() -> Self {
        Self { bins: 8 }
    }
}

impl Binning {
    pub fn new(bins: usize) -> Result<Self> {
        if bins < 2 {
            return Err(Error::TooFewBins(bins));
        }
        Ok(Self { bins })
    }

    pub fn min_samples(&self) -> usize {
        SAMPLES_PER_BIN * self.bins
    }

    pub fn assign(&self, values: &[f64]) -> Vec<usize> {
        let n = values.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| values[i].total_cmp(&values[j]).then(i.cmp(&j)));
        let mut bins = vec![0; n];
        for (rank, &i) in order.iter().enumerate() {
            bins[i] = rank * self.bins / n;
        }
        bins
    }
}

fn check_pair(x: &[f64], y: &[f64], min_len: usize) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < min_len {
        return Err(Error::TooFewSamples {
            got: x.len(),
            needed: min_len,
        });
    }
    if let Some(index) = x.iter().chain(y).position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            index: index % x.len(),
        });
    }
    Ok(())
}

fn is_constant(values: &[f64]) -> bool {
    values.iter().all(|&v| v == values[0])
}

/// Plug-in mutual information in nats:
/// `Σ p(x,y) ln(p(x,y) / (p(x) p(y)))` over occupied cells of the quantile
/// grid. The result lies in `[0, ln B]`.
pub fn plugin_mutual_information(x: &[f64], y: &[f64], binning: &Binning) -> Result<f64> {
    let binning = Binning::new(binning.bins)?;
    check_pair(x, y, binning.min_samples())?;
    if is_constant(x) || is_constant(y) {
        return Err(Error::ZeroEntropyMargin);
    }
    let b = binning.bins;
    let bx = binning.assign(x);
    let by = binning.assign(y);
    let mut joint = vec![0usize; b * b];
    let mut margin_x = vec![0usize; b];
    let mut margin_y = vec![0usize; b];
    for (&i, &j) in bx.iter().zip(&by) {
        joint[i * b + j] += 1;
        margin_x[i] += 1;
        margin_y[j] += 1;
    }
    let n = x.len() as f64;
    let mut mi = 0.0;
    for i in 0..b {
        for j in 0..b {
            let c = joint[i * b + j];
            if c == 0 {
                continue;
            }
            let c = c as f64;
            mi += c / n * libm::log(c * n / (margin_x[i] as f64 * margin_y[j] as f64));
        }
    }
    Ok(mi.clamp(0.0, libm::log(b as f64)))
}

/// Product-moment correlation, computed from centered sums.
pub fn pearson_correlation(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y, 2)?;
    let n = x.len() as f64;
    let mean_x = x.iter().sum::<f64>() / n;
    let mean_y = y.iter().sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let dx = a - mean_x;
        let dy = b - mean_y;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ConstantMargin);
    }
    Ok((sxy / (libm::sqrt(sxx) * libm::sqrt(syy))).clamp(-1.0, 1.0))
}

/// `values[t - 1]` for every day `t` in `days`.
pub fn select_days(values: &[f64], days: &[usize]) -> Vec<f64> {
    days.iter().map(|&t| values[t - 1]).collect()
}

/// Log returns of every stock and of its leave-one-out index, plus the full
/// artificial index used for the up/down partition.
#[derive(Debug, Clone)]
pub struct ConstituentReturns {
    pub index: PriceSeries,
    pub stock: Vec<Vec<f64>>,
    pub rest: Vec<Vec<f64>>,
}

impl ConstituentReturns {
    pub fn new(panel: &PricePanel) -> Result<Self> {
        let mut stock = Vec::with_capacity(panel.stocks());
        let mut rest = Vec::with_capacity(panel.stocks());
        for n in 0..panel.stocks() {
            stock.push(log_returns(&panel.series(n)?).values);
            rest.push(log_returns(&leave_one_out_index(panel, n)?).values);
        }
        Ok(Self {
            index: build_index(panel),
            stock,
            rest,
        })
    }

    pub fn stocks(&self) -> usize {
        self.stock.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct DependenceEstimate {
    pub window: usize,
    pub mi_up: f64,
    pub mi_down: f64,
    pub corr_up: f64,
    pub corr_down: f64,
    pub up_days: usize,
    pub down_days: usize,
}

pub fn mean_dependence(
    panel: &PricePanel,
    window: usize,
    binning: &Binning,
) -> Result<DependenceEstimate> {
    mean_dependence_from(&ConstituentReturns::new(panel)?, window, binning)
}

pub fn mean_dependence_from(
    returns: &ConstituentReturns,
    window: usize,
    binning: &Binning,
) -> Result<DependenceEstimate> {
    let binning = Binning::new(binning.bins)?;
    let partition = partition_updown(&returns.index, window)?;
    let needed = binning.min_samples();
    for direction in [Direction::Up, Direction::Down] {
        let got = partition.days(direction).len();
        if got < needed {
            return Err(Error::InsufficientDays {
                direction,
                got,
                needed,
            });
        }
    }

    let mut sums = [0.0f64; 4];
    for (stock, rest) in returns.stock.iter().zip(&returns.rest) {
        for (slot, direction) in [Direction::Up, Direction::Down].into_iter().enumerate() {
            let days = partition.days(direction);
            let x = select_days(stock, days);
            let y = select_days(rest, days);
            sums[slot] += plugin_mutual_information(&x, &y, &binning)?;
            sums[2 + slot] += pearson_correlation(&x, &y)?;
        }
    }
    let n = returns.stocks() as f64;
    Ok(DependenceEstimate {
        window,
        mi_up: sums[0] / n,
        mi_down: sums[1] / n,
        corr_up: sums[2] / n,
        corr_down: sums[3] / n,
        up_days: partition.up_days.len(),
        down_days: partition.down_days.len(),
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct DependenceRow {
    pub window: usize,
    pub estimate: Option<DependenceEstimate>,
    /// Why the estimate is missing.
    pub absent: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct DependenceReport {
    pub bins: usize,
    pub rows: Vec<DependenceRow>,
}

/// One row per window length, in input order; infeasible windows give rows
/// without an estimate.
pub fn dependence_sweep(
    panel: &PricePanel,
    windows: &[usize],
    binning: &Binning,
) -> Result<DependenceReport> {
    let returns = ConstituentReturns::new(panel)?;
    let rows = windows
        .iter()
        .map(
            |&window| match mean_dependence_from(&returns, window, binning) {
                Ok(estimate) => DependenceRow {
                    window,
                    estimate: Some(estimate),
                    absent: None,
                },
                Err(err) => DependenceRow {
                    window,
                    estimate: None,
                    absent: Some(err.to_string()),
                },
            },
        )
        .collect();
    Ok(DependenceReport {
        bins: binning.bins,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;
    use proptest::prelude::*;
    use std::vec::Vec;

    #[test]
    fn hand_partition() {
        let i =
            PriceSeries::new("i", vec![1.0, 1.1, 1.2, 1.3, 1.2, 1.1, 1.0, 1.05, 1.1, 1.2]).unwrap();
        let p = partition_updown(&i, 3).unwrap();
        assert_eq!(p.up_days, vec![1, 2, 3, 7, 8, 9]);
        assert_eq!(p.down_days, vec![4, 5, 6]);
        assert_eq!(p.flat_windows, 0);
        assert_eq!(p.tail_days_dropped, 0);

        let p = partition_updown(&i, 4).unwrap();
        assert_eq!(p.up_days, vec![1, 2, 3, 4]);
        assert_eq!(p.down_days, vec![5, 6, 7, 8]);
        assert_eq!(p.tail_days_dropped, 1);
    }

    #[test]
    fn constant_index_is_all_flat() {
        let i = PriceSeries::new("c", vec![2.0; 11]).unwrap();
        let p = partition_updown(&i, 3).unwrap();
        assert!(p.up_days.is_empty() && p.down_days.is_empty());
        assert_eq!(p.flat_windows, 3);
        assert_eq!(p.tail_days_dropped, 1);
    }

    #[test]
    fn window_longer_than_series() {
        let i = PriceSeries::new("c", vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(
            partition_updown(&i, 3),
            Err(Error::WindowTooLong { window: 3, days: 2 })
        );
        assert!(partition_updown(&i, 0).is_err());
    }

    #[test]
    fn mi_rejections() {
        let x: Vec<f64> = (0..100).map(|v| v as f64).collect();
        let c = vec![1.0; 100];
        let b = Binning::default();
        assert_eq!(
            plugin_mutual_information(&x, &c, &b),
            Err(Error::ZeroEntropyMargin)
        );
        assert_eq!(
            plugin_mutual_information(&x[..50], &x[..50], &b),
            Err(Error::TooFewSamples {
                got: 50,
                needed: 80
            })
        );
        assert!(matches!(
            plugin_mutual_information(&x, &x[..90], &b),
            Err(Error::LengthMismatch { .. })
        ));
        assert_eq!(Binning::new(1), Err(Error::TooFewBins(1)));
    }

    #[test]
    fn mi_of_identity_is_log_bins() {
        let x: Vec<f64> = (0..800).map(|v| ((v * 7919) % 800) as f64 * 0.37).collect();
        let mi = plugin_mutual_information(&x, &x, &Binning::default()).unwrap();
        assert!((mi - 8f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn quantile_bins_are_balanced() {
        let x: Vec<f64> = (0..103).map(|v| (v as f64 * 1.7).sin()).collect();
        let bins = Binning::new(4).unwrap().assign(&x);
        let mut counts = [0; 4];
        bins.iter().for_each(|&b| counts[b] += 1);
        assert!(counts.iter().all(|&c| c == 25 || c == 26), "{counts:?}");
    }

    #[test]
    fn correlation_examples() {
        let x: Vec<f64> = (0..30).map(|v| (v as f64).cos()).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let z: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson_correlation(&x, &y).unwrap() - 1.0).abs() < 1e-12);
        assert!((pearson_correlation(&x, &z).unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(
            pearson_correlation(&x, &vec![3.0; 30]),
            Err(Error::ConstantMargin)
        );
        assert!(pearson_correlation(&x[..1], &y[..1]).is_err());
    }

    #[test]
    fn sweep_of_nothing_is_empty() {
        let rows = vec![vec![1.0, 1.1, 1.2], vec![2.0, 2.1, 1.9]];
        let names = vec!["a".into(), "b".into()];
        let panel = PricePanel::new(names, rows).unwrap();
        let report = dependence_sweep(&panel, &[], &Binning::default()).unwrap();
        assert!(report.rows.is_empty());
        let report = dependence_sweep(&panel, &[1], &Binning::default()).unwrap();
        assert!(report.rows[0].estimate.is_none());
        assert!(report.rows[0].absent.is_some());
    }

    #[test]
    fn insufficient_days_names_the_set() {
        // Rising index: D stays empty.
        let rows: Vec<Vec<f64>> = (0..2)
            .map(|n| {
                (0..200)
                    .map(|t| (1.0 + n as f64) * (0.001 * t as f64).exp())
                    .collect()
            })
            .collect();
        let names = (0..2).map(|n| format!("s{n}")).collect();
        let panel = PricePanel::new(names, rows).unwrap();
        match mean_dependence(&panel, 5, &Binning::default()) {
            Err(Error::InsufficientDays { direction, .. }) => {
                assert_eq!(direction, Direction::Down)
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    proptest! {
        #[test]
        fn partition_matches_windowing(
            steps in prop::collection::vec(-0.05f64..0.05, 20..200),
            window in 1usize..20,
        ) {
            let mut values = vec![1.0f64];
            for s in &steps {
                let last = *values.last().unwrap();
                values.push(last * s.exp());
            }
            let index = PriceSeries::new("i", values.clone()).unwrap();
            let p = partition_updown(&index, window).unwrap();
            let days = values.len() - 1;
            let mut up = Vec::new();
            let mut down = Vec::new();
            for t in 1..=days - days % window {
                let k = (t - 1) / window + 1;
                let change = values[k * window] - values[(k - 1) * window];
                if change > 0.0 { up.push(t) } else if change < 0.0 { down.push(t) }
            }
            prop_assert_eq!(&p.up_days, &up);
            prop_assert_eq!(&p.down_days, &down);
            prop_assert!(p.up_days.iter().all(|d| !p.down_days.contains(d)));
            prop_assert_eq!(p.tail_days_dropped, days % window);
        }

        #[test]
        fn mi_is_symmetric_and_bounded(
            pairs in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 40..300),
            bins in 2usize..5,
        ) {
            let x: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let y: Vec<f64> = pairs.iter().map(|p| p.0 * 0.5 + p.1).collect();
            let binning = Binning::new(bins).unwrap();
            prop_assume!(x.len() >= binning.min_samples());
            let a = plugin_mutual_information(&x, &y, &binning).unwrap();
            let b = plugin_mutual_information(&y, &x, &binning).unwrap();
            prop_assert!((a - b).abs() <= 1e-12);
            prop_assert!(a >= 0.0 && a <= (bins as f64).ln() + 1e-15);
        }

        #[test]
        fn correlation_bounded(pairs in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 3..100)) {
            let x: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let y: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            if let Ok(r) = pearson_correlation(&x, &y) {
                prop_assert!((-1.0..=1.0).contains(&r));
            }
        }
    }
}
