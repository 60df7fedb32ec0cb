//! Seeded generators: an i.i.d. (GBM) null model and a regime-switching panel
//! whose constituents move together more strongly in downturns.

use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::index::PricePanel;
use crate::series::PriceSeries;
use crate::{Error, Result};

/// Geometric Brownian motion on a daily grid: log returns i.i.d. `N(mu, sigma^2)`,
/// starting at 1.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GbmSpec {
    pub mu: f64,
    pub sigma: f64,
    pub days: usize,
    pub seed: u64,
}

fn cumulate(returns: impl Iterator<Item = f64>, days: usize) -> Result<Vec<f64>> {
    let mut values = Vec::with_capacity(days + 1);
    values.push(1.0);
    let mut log_level = 0.0;
    for (t, r) in returns.enumerate() {
        log_level += r;
        let v = libm::exp(log_level);
        if !v.is_finite() || v <= 0.0 {
            return Err(Error::Overflow { index: t + 1 });
        }
        values.push(v);
    }
    Ok(values)
}

pub fn generate_gbm(spec: &GbmSpec) -> Result<PriceSeries> {
    if !(spec.sigma >= 0.0 && spec.sigma.is_finite() && spec.mu.is_finite()) {
        return Err(Error::InvalidSpec(
            "sigma must be finite and >= 0, mu finite",
        ));
    }
    if spec.days == 0 {
        return Err(Error::InvalidSpec("days must be >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let returns = (0..spec.days).map(|_| {
        let z: f64 = rng.sample(StandardNormal);
        spec.mu + spec.sigma * z
    });
    let values = cumulate(returns, spec.days)?;
    PriceSeries::new(format!("gbm-{}", spec.seed), values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum Regime {
    Up,
    Down,
}

/// Two-regime equicorrelated panel.
///
/// The hidden regime lasts a geometric number of days with mean
/// `regime_mean_length`; when it ends, the next regime is `Down` with
/// probability `p_down` and `Up` otherwise (so a regime may renew itself, and
/// the long-run share of down days is `p_down`). On each day stock `n` has log
/// return `drift + sigma * (sqrt(rho) * F + sqrt(1 - rho) * e_n)` with one
/// common factor `F` and idiosyncratic `e_n`, all standard normal, and
/// `(drift, rho)` taken from the current regime. Prices start at 1.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RegimeSpec {
    pub stocks: usize,
    pub days: usize,
    pub p_down: f64,
    pub regime_mean_length: f64,
    pub rho_up: f64,
    pub rho_down: f64,
    pub drift_up: f64,
    pub drift_down: f64,
    pub sigma: f64,
    pub seed: u64,
}

impl Default for RegimeSpec {
    /// 12 stocks over 10^5 days. `p_down = 1/3` makes the average stock drift
    /// zero for the default drifts.
    fn default() -> Self {
        Self {
            stocks: 12,
            days: 100_000,
            p_down: 1.0 / 3.0,
            regime_mean_length: 20.0,
            rho_up: 0.1,
            rho_down: 0.6,
            drift_up: 4e-4,
            drift_down: -8e-4,
            sigma: 0.01,
            seed: 0,
        }
    }
}

impl RegimeSpec {
    /// Same spec with the down-regime coupling and drift copied from the up
    /// regime, which removes every regime effect.
    pub fn uncoupled(self) -> Self {
        Self {
            rho_down: self.rho_up,
            drift_down: self.drift_up,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.stocks < 2 {
            return Err(Error::InvalidSpec("at least 2 stocks required"));
        }
        if self.days == 0 {
            return Err(Error::InvalidSpec("days must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.p_down) {
            return Err(Error::InvalidSpec("p_down must lie in [0, 1]"));
        }
        if !(self.regime_mean_length >= 1.0 && self.regime_mean_length.is_finite()) {
            return Err(Error::InvalidSpec("regime_mean_length must be >= 1"));
        }
        if !(0.0 <= self.rho_up && self.rho_up <= self.rho_down && self.rho_down <= 1.0) {
            return Err(Error::InvalidSpec("need 0 <= rho_up <= rho_down <= 1"));
        }
        if !(self.sigma >= 0.0
            && self.sigma.is_finite()
            && self.drift_up.is_finite()
            && self.drift_down.is_finite())
        {
            return Err(Error::InvalidSpec(
                "sigma must be finite and >= 0, drifts finite",
            ));
        }
        Ok(())
    }
}

/// Regime of each return day `1..=T` (entry `t - 1`).
pub fn regime_path(spec: &RegimeSpec) -> Result<Vec<Regime>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(1);
    let draw = |rng: &mut ChaCha8Rng| {
        if rng.random::<f64>() < spec.p_down {
            Regime::Down
        } else {
            Regime::Up
        }
    };
    let end_probability = 1.0 / spec.regime_mean_length;
    let mut current = draw(&mut rng);
    let mut path = Vec::with_capacity(spec.days);
    for _ in 0..spec.days {
        path.push(current);
        if rng.random::<f64>() < end_probability {
            current = draw(&mut rng);
        }
    }
    Ok(path)
}

pub fn generate_regime_panel(spec: &RegimeSpec) -> Result<PricePanel> {
    generate_regime_panel_with_states(spec).map(|(panel, _)| panel)
}

pub fn generate_regime_panel_with_states(spec: &RegimeSpec) -> Result<(PricePanel, Vec<Regime>)> {
    let regimes = regime_path(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(2);

    let params = |regime: Regime| match regime {
        Regime::Up => (spec.drift_up, spec.rho_up),
        Regime::Down => (spec.drift_down, spec.rho_down),
    };
    let mut log_levels = alloc::vec![0.0f64; spec.stocks];
    let mut rows: Vec<Vec<f64>> = (0..spec.stocks)
        .map(|_| {
            let mut row = Vec::with_capacity(spec.days + 1);
            row.push(1.0);
            row
        })
        .collect();
    for (t, &regime) in regimes.iter().enumerate() {
        let (drift, rho) = params(regime);
        let common_weight = libm::sqrt(rho);
        let own_weight = libm::sqrt(1.0 - rho);
        let factor: f64 = rng.sample(StandardNormal);
        for (level, row) in log_levels.iter_mut().zip(rows.iter_mut()) {
            let own: f64 = rng.sample(StandardNormal);
            *level += drift + spec.sigma * (common_weight * factor + own_weight * own);
            let v = libm::exp(*level);
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::Overflow { index: t + 1 });
            }
            row.push(v);
        }
    }
    let names = (1..=spec.stocks).map(|n| format!("S{n:02}")).collect();
    Ok((PricePanel::new(names, rows)?, regimes))
}
