//! Nelder–Mead simplex minimization.

use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMead {
    pub max_evaluations: usize,
    /// Stop once every vertex lies within `tolerance * max(1, |best|)` of the
    /// best vertex (Euclidean distance).
    pub tolerance: f64,
    /// Offset of the initial simplex vertices along each axis.
    pub initial_step: f64,
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self {
            max_evaluations: 2000,
            tolerance: 1e-8,
            initial_step: 0.25,
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

fn norm(a: &[f64]) -> f64 {
    libm::sqrt(a.iter().map(|v| v * v).sum())
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    libm::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

/// `origin + coef * (target - origin)`
fn along(origin: &[f64], target: &[f64], coef: f64) -> Vec<f64> {
    origin
        .iter()
        .zip(target)
        .map(|(o, t)| o + coef * (t - o))
        .collect()
}

impl NelderMead {
    /// Non-finite objective values are treated as `+inf`, so the simplex moves
    /// away from infeasible regions instead of failing.
    pub fn minimize<F>(&self, mut objective: F, start: &[f64]) -> Minimum
    where
        F: FnMut(&[f64]) -> f64,
    {
        let dim = start.len();
        let evaluations = core::cell::Cell::new(0usize);
        let mut eval = |x: &[f64]| {
            evaluations.set(evaluations.get() + 1);
            let v = objective(x);
            if v.is_nan() {
                f64::INFINITY
            } else {
                v
            }
        };

        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
        let v0 = eval(start);
        simplex.push((start.to_vec(), v0));
        for i in 0..dim {
            let mut x = start.to_vec();
            x[i] += self.initial_step;
            let v = eval(&x);
            simplex.push((x, v));
        }

        let mut converged = false;
        loop {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let best = &simplex[0].0;
            let diameter = simplex[1..]
                .iter()
                .map(|(x, _)| distance(x, best))
                .fold(0.0, f64::max);
            if diameter < self.tolerance * norm(best).max(1.0) {
                converged = true;
                break;
            }
            if evaluations.get() >= self.max_evaluations {
                break;
            }

            let mut centroid = alloc::vec![0.0; dim];
            for (x, _) in &simplex[..dim] {
                for (c, xi) in centroid.iter_mut().zip(x) {
                    *c += xi / dim as f64;
                }
            }
            let (worst, worst_value) = simplex[dim].clone();
            let second_worst = simplex[dim - 1].1;
            let best_value = simplex[0].1;

            let reflected = along(&centroid, &worst, -self.reflection);
            let reflected_value = eval(&reflected);
            if reflected_value < best_value {
                let expanded = along(&centroid, &worst, -self.reflection * self.expansion);
                let expanded_value = eval(&expanded);
                simplex[dim] = if expanded_value < reflected_value {
                    (expanded, expanded_value)
                } else {
                    (reflected, reflected_value)
                };
                continue;
            }
            if reflected_value < second_worst {
                simplex[dim] = (reflected, reflected_value);
                continue;
            }
            let (contracted, contracted_value) = if reflected_value < worst_value {
                let x = along(&centroid, &reflected, self.contraction);
                let v = eval(&x);
                (x, v)
            } else {
                let x = along(&centroid, &worst, self.contraction);
                let v = eval(&x);
                (x, v)
            };
            if contracted_value < worst_value.min(reflected_value) {
                simplex[dim] = (contracted, contracted_value);
                continue;
            }
            let anchor = simplex[0].0.clone();
            for vertex in simplex.iter_mut().skip(1) {
                let x = along(&anchor, &vertex.0, self.shrink);
                let v = eval(&x);
                *vertex = (x, v);
            }
        }

        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (x, value) = simplex.swap_remove(0);
        Minimum {
            x,
            value,
            evaluations: evaluations.get(),
            converged,
        }
    }
}
