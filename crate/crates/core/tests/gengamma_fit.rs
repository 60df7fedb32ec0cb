use gainloss_core::fpt::{empirical_pmf, most_likely_time, Barrier, FptSamples};
use gainloss_core::gengamma::{fit_gen_gamma, GenGamma};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

/// Five-point Gauss–Legendre nodes and weights on [-1, 1].
const GL_NODES: [f64; 5] = [
    0.0,
    -0.538_469_310_105_683_1,
    0.538_469_310_105_683_1,
    -0.906_179_845_938_664,
    0.906_179_845_938_664,
];
const GL_WEIGHTS: [f64; 5] = [
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
    0.236_926_885_056_189_1,
];

fn gauss_legendre(f: impl Fn(f64) -> f64, lo: f64, hi: f64, panels: usize) -> f64 {
    let h = (hi - lo) / panels as f64;
    (0..panels)
        .map(|k| {
            let mid = lo + (k as f64 + 0.5) * h;
            GL_NODES
                .iter()
                .zip(GL_WEIGHTS)
                .map(|(x, w)| w * f(mid + 0.5 * h * x))
                .sum::<f64>()
                * 0.5
                * h
        })
        .sum()
}

/// Integral of `density` over `(t0, inf)`. Substituting `t = t0 + a y^(1/d)`
/// removes the `(t - t0)^(d-1)` edge behaviour (for `d < 0` the map reverses
/// direction, hence `|d|`); the range is cut where `y^(p/d) = 60`.
fn total_mass(g: &GenGamma) -> f64 {
    let upper = 60f64.powf(g.d / g.p);
    let integrand = |y: f64| {
        let t = g.t0 + g.a * y.powf(1.0 / g.d);
        g.density(t) * g.a / g.d.abs() * y.powf(1.0 / g.d - 1.0)
    };
    gauss_legendre(integrand, 0.0, upper, 20_000)
}

fn exponential_waits(mean: f64, draws: usize, seed: u64) -> FptSamples {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let exp = Exp::new(1.0 / mean).unwrap();
    let waits: Vec<u32> = (0..draws)
        .map(|_| exp.sample(&mut rng).ceil().max(1.0) as u32)
        .collect();
    FptSamples {
        rho: Barrier::new(0.05).unwrap(),
        starts_total: waits.len(),
        starts_censored: 0,
        waits,
    }
}

#[test]
fn quadrature_oracle_is_sane() {
    let g = GenGamma {
        a: 1.0,
        d: 1.0,
        p: 1.0,
        t0: 0.0,
    };
    assert!((total_mass(&g) - 1.0).abs() < 1e-10);
    let weibull = GenGamma {
        a: 2.0,
        d: 0.7,
        p: 0.7,
        t0: 0.3,
    };
    assert!((total_mass(&weibull) - 1.0).abs() < 1e-10);
    let levy = GenGamma {
        a: 3.0,
        d: -0.5,
        p: -1.0,
        t0: 0.2,
    };
    assert!((total_mass(&levy) - 1.0).abs() < 1e-10);
}

#[test]
fn levy_density_matches_closed_form() {
    // Brownian first passage to level c with unit diffusion:
    // c / sqrt(2 pi t^3) exp(-c^2 / 2t), i.e. a = c^2 / 2, d = -1/2, p = -1.
    let c: f64 = 2.0;
    let g = GenGamma {
        a: c * c / 2.0,
        d: -0.5,
        p: -1.0,
        t0: 0.0,
    };
    for t in [0.3f64, 1.0, 4.0, 50.0] {
        let expected =
            c / (2.0 * std::f64::consts::PI * t.powi(3)).sqrt() * (-c * c / (2.0 * t)).exp();
        assert!(
            (g.density(t) - expected).abs() <= 1e-14 * expected.max(1e-300),
            "{t}"
        );
    }
    assert!((g.mode() - c * c / 3.0).abs() < 1e-12);
}

#[test]
fn heavy_tailed_pmf_selects_negative_branch() {
    let truth = GenGamma {
        a: 12.0,
        d: -0.5,
        p: -1.0,
        t0: 0.0,
    };
    let mut mass: Vec<f64> = (1..=3000).map(|t| truth.density(t as f64)).collect();
    let total: f64 = mass.iter().sum();
    mass.iter_mut().for_each(|m| *m /= total);
    let pmf = gainloss_core::fpt::EmpiricalPmf {
        mass,
        samples: 100_000,
        truncated: 0,
    };
    let fit = fit_gen_gamma(&pmf).unwrap();
    println!("{fit:?}");
    assert!(fit.converged);
    assert!(fit.params.p < 0.0 && fit.params.d < 0.0);
    assert!((fit.params.mode() - truth.mode()).abs() < 0.5, "{fit:?}");
    assert!((total_mass(&fit.params) - 1.0).abs() < 1e-6);
}

#[test]
fn recovers_exponential_special_case() {
    let samples = exponential_waits(10.0, 100_000, 2024);
    let pmf = empirical_pmf(&samples, None).unwrap();
    let fit = fit_gen_gamma(&pmf).unwrap();
    println!("{fit:?}");
    assert!(fit.converged);
    let g = fit.params;
    assert!((g.a - 10.0).abs() / 10.0 < 0.10, "a = {}", g.a);
    assert!((g.d - 1.0).abs() < 0.10, "d = {}", g.d);
    assert!((g.p - 1.0).abs() < 0.10, "p = {}", g.p);
    assert!((total_mass(&g) - 1.0).abs() < 1e-6);

    let modes = most_likely_time(Some(&fit), &pmf);
    assert_eq!(modes.empirical, 1);
}

#[test]
fn fitted_densities_are_normalized() {
    for (mean, seed) in [(4.0, 1), (25.0, 2)] {
        let samples = exponential_waits(mean, 20_000, seed);
        let pmf = empirical_pmf(&samples, None).unwrap();
        let fit = fit_gen_gamma(&pmf).unwrap();
        assert!(fit.converged, "{fit:?}");
        assert!((total_mass(&fit.params) - 1.0).abs() < 1e-6, "{fit:?}");
    }
}

#[test]
fn unconverged_fit_has_no_fitted_mode() {
    let pmf = empirical_pmf(&exponential_waits(10.0, 2_000, 5), None).unwrap();
    let mut fit = fit_gen_gamma(&pmf).unwrap();
    fit.converged = false;
    let modes = most_likely_time(Some(&fit), &pmf);
    assert!(modes.fitted.is_none());
    assert!(most_likely_time(None, &pmf).fitted.is_none());
}
