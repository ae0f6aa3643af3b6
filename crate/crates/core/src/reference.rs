//! Brute-force reference values: multistart local maximisation of the
//! noiseless Bell value. Used where no closed form is available (Mermin,
//! CGLMP) and as an independent check on the CHSH closed form.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::quantum::QuantumState;
use crate::scenario::{bell_value, ScenarioId};

#[derive(Clone, Debug, PartialEq)]
pub struct LocalSearch {
    pub max_iterations: usize,
    /// Central-difference step.
    pub h: f64,
    /// Stop when the gradient norm falls below this.
    pub gradient_tol: f64,
}

impl Default for LocalSearch {
    fn default() -> Self {
        Self {
            max_iterations: 400,
            h: 1e-6,
            gradient_tol: 1e-7,
        }
    }
}

fn gradient<F: FnMut(&[f64]) -> f64>(f: &mut F, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

impl LocalSearch {
    /// Gradient ascent with an adaptive step and a sufficient-increase test.
    pub fn maximize<F: FnMut(&[f64]) -> f64>(&self, f: &mut F, x0: &[f64]) -> (Vec<f64>, f64) {
        let mut x = x0.to_vec();
        let mut fx = f(&x);
        let mut step = 0.5;
        for _ in 0..self.max_iterations {
            let g = gradient(f, &x, self.h);
            let g2: f64 = g.iter().map(|v| v * v).sum();
            if g2.sqrt() < self.gradient_tol {
                break;
            }
            let mut accepted = false;
            while step > 1e-14 {
                let trial: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a + step * b).collect();
                let ft = f(&trial);
                if ft >= fx + 1e-4 * step * g2 {
                    x = trial;
                    fx = ft;
                    step = (step * 2.0).min(10.0);
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        (x, fx)
    }
}

/// Best of `restarts` local searches from uniform random points in `[0, 2π)^dim`.
pub fn multistart_maximize<F, R>(
    f: &mut F,
    dim: usize,
    restarts: usize,
    search: &LocalSearch,
    rng: &mut R,
) -> (Vec<f64>, f64)
where
    F: FnMut(&[f64]) -> f64,
    R: Rng + ?Sized,
{
    let mut best = (Vec::new(), f64::NEG_INFINITY);
    for _ in 0..restarts.max(1) {
        let x0: Vec<f64> = (0..dim).map(|_| rng.random_range(0.0..TAU)).collect();
        let (x, fx) = search.maximize(f, &x0);
        if fx > best.1 {
            best = (x, fx);
        }
    }
    best
}

/// Numerical maximal Bell value of `state` for `scenario`.
pub fn numeric_mbv(state: &QuantumState, scenario: ScenarioId, restarts: usize, seed: u64) -> Result<f64> {
    let dim = scenario.scenario().theta_dim();
    // surface dimension errors before searching
    bell_value(state, scenario, &vec![0.0; dim])?;
    let mut f = |x: &[f64]| bell_value(state, scenario, x).expect("validated dimensions");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (_, best) = multistart_maximize(&mut f, dim, restarts, &LocalSearch::default(), &mut rng);
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_maximum_of_smooth_function() {
        let mut f = |x: &[f64]| x[0].cos() + (x[1] - 1.0).cos() * 2.0;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (x, fx) = multistart_maximize(&mut f, 2, 5, &LocalSearch::default(), &mut rng);
        assert!((fx - 3.0).abs() < 1e-10, "{fx} at {x:?}");
    }

    #[test]
    fn rejects_mismatched_state() {
        assert!(numeric_mbv(&crate::states::singlet(), ScenarioId::Mermin3, 1, 0).is_err());
    }
}
