//! Self-guided stochastic gradient ascent.
//!
//! Each iteration probes the objective at `Θ_k ± β_k Δ_k` with a random ±1
//! direction `Δ_k`, forms the scalar slope
//! `g_k = (V₊ − V₋) / (2β_k)` and moves along the same direction:
//! `Θ_{k+1} = Θ_k + α_k g_k Δ_k`. Gains decay as `α_k = a/(k+1)^s` and
//! `β_k = b/(k+1)^t`.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{ScenarioId, SettingsVector};

/// A black-box objective `Θ → V` that the optimizer may only sample.
pub trait Oracle {
    fn dim(&self) -> usize;

    /// A measured value at `theta`; counts against the measurement budget.
    fn evaluate(&mut self, theta: &[f64]) -> Result<f64>;

    /// A value reported for telemetry only. Not counted in [`Oracle::shots_used`].
    fn observe(&mut self, theta: &[f64]) -> Result<f64> {
        self.evaluate(theta)
    }

    /// Cumulative photon pairs consumed by [`Oracle::evaluate`].
    fn shots_used(&self) -> u64 {
        0
    }

    fn scenario(&self) -> Option<ScenarioId> {
        None
    }
}

impl<O: Oracle + ?Sized> Oracle for &mut O {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn evaluate(&mut self, theta: &[f64]) -> Result<f64> {
        (**self).evaluate(theta)
    }

    fn observe(&mut self, theta: &[f64]) -> Result<f64> {
        (**self).observe(theta)
    }

    fn shots_used(&self) -> u64 {
        (**self).shots_used()
    }

    fn scenario(&self) -> Option<ScenarioId> {
        (**self).scenario()
    }
}

/// Wraps a deterministic closure as an [`Oracle`].
pub struct FnOracle<F> {
    dim: usize,
    f: F,
}

impl<F: FnMut(&[f64]) -> f64> FnOracle<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: FnMut(&[f64]) -> f64> Oracle for FnOracle<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn evaluate(&mut self, theta: &[f64]) -> Result<f64> {
        if theta.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: theta.len(),
            });
        }
        Ok((self.f)(theta))
    }
}

/// Gain constants, iteration count and RNG seed.
///
/// | field | default | role |
/// |-------|---------|------|
/// | `a`   | 0.2     | update gain numerator |
/// | `b`   | 0.2     | probe gain numerator |
/// | `s`   | 2       | update decay exponent |
/// | `t`   | 1       | probe decay exponent |
/// | `iterations` | 50 | number of updates `N` |
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpsaConfig {
    pub a: f64,
    pub b: f64,
    pub s: f64,
    pub t: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for SpsaConfig {
    fn default() -> Self {
        Self {
            a: 0.2,
            b: 0.2,
            s: 2.0,
            t: 1.0,
            iterations: 50,
            seed: 0,
        }
    }
}

impl SpsaConfig {
    /// Defaults with the iteration count used for each scenario (50, 80, 100).
    pub fn for_scenario(scenario: ScenarioId) -> Self {
        Self {
            iterations: default_iterations(scenario),
            ..Self::default()
        }
    }

    /// Conventional SPSA decay exponents (0.602, 0.101) with `a = 0.5`,
    /// `b = 0.2`. With the default `s = 2` the update gains sum to about
    /// `0.33·a`, which freezes the search after a handful of steps from a
    /// random start; these gains keep moving for the whole run.
    pub fn calibrated(scenario: ScenarioId) -> Self {
        Self {
            a: 0.5,
            b: 0.2,
            s: 0.602,
            t: 0.101,
            iterations: default_iterations(scenario),
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_iterations(mut self, iterations: usize) -> Self {
        self.iterations = iterations;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("a", self.a), ("b", self.b), ("s", self.s), ("t", self.t)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!("gain '{name}' must be positive, got {v}")));
            }
        }
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("iteration count must be at least 1".into()));
        }
        Ok(())
    }

    /// The optimizer's RNG stream for this seed.
    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

pub fn default_iterations(scenario: ScenarioId) -> usize {
    match scenario {
        ScenarioId::Chsh => 50,
        ScenarioId::Mermin3 => 80,
        ScenarioId::Cglmp3 => 100,
    }
}

/// `(α_k, β_k) = (a/(k+1)^s, b/(k+1)^t)`
pub fn gain_schedule(k: usize, config: &SpsaConfig) -> (f64, f64) {
    let kp1 = (k + 1) as f64;
    (config.a / kp1.powf(config.s), config.b / kp1.powf(config.t))
}

/// Independent Rademacher (±1) components.
pub fn sample_perturbation<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    (0..dim)
        .map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 })
        .collect()
}

/// Uniform in `[0, 2π)` per component.
pub fn random_initial_theta<R: Rng + ?Sized>(scenario: ScenarioId, rng: &mut R) -> SettingsVector {
    let n = scenario.scenario().theta_dim();
    let values = (0..n).map(|_| rng.random_range(0.0..TAU)).collect();
    SettingsVector::new(scenario, values).expect("sampled angles are finite")
}

/// Telemetry for one update.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    /// Θ_k, the point that was probed.
    pub theta: Vec<f64>,
    pub alpha: f64,
    pub beta: f64,
    pub delta: Vec<f64>,
    pub g: f64,
    pub v_plus: f64,
    pub v_minus: f64,
    /// Oracle value at the updated point Θ_{k+1}.
    pub v_current: f64,
    /// Photon pairs consumed by the two probes of this iteration.
    pub shots_used: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub config: SpsaConfig,
    pub scenario: Option<ScenarioId>,
    pub initial_theta: Vec<f64>,
    pub initial_value: f64,
    pub records: Vec<IterationRecord>,
    pub final_theta: Vec<f64>,
    /// Oracle value at Θ_N.
    pub final_value: f64,
}

impl RunTrace {
    /// Sum of per-iteration probe shots.
    pub fn total_shots(&self) -> u64 {
        self.records.iter().map(|r| r.shots_used).sum()
    }

    /// `V` after each iteration.
    pub fn values(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.v_current).collect()
    }
}

/// One update with a caller-supplied direction.
pub fn spsa_step_with_delta<O: Oracle + ?Sized>(
    oracle: &mut O,
    theta: &[f64],
    k: usize,
    config: &SpsaConfig,
    delta: Vec<f64>,
) -> Result<(Vec<f64>, IterationRecord)> {
    if theta.len() != oracle.dim() || delta.len() != oracle.dim() {
        return Err(Error::DimensionMismatch {
            expected: oracle.dim(),
            found: if theta.len() != oracle.dim() {
                theta.len()
            } else {
                delta.len()
            },
        });
    }
    let (alpha, beta) = gain_schedule(k, config);
    let plus: Vec<f64> = theta.iter().zip(&delta).map(|(x, d)| x + beta * d).collect();
    let minus: Vec<f64> = theta.iter().zip(&delta).map(|(x, d)| x - beta * d).collect();

    let shots_before = oracle.shots_used();
    let v_plus = oracle.evaluate(&plus)?;
    let v_minus = oracle.evaluate(&minus)?;
    let shots_used = oracle.shots_used() - shots_before;

    let g = (v_plus - v_minus) / (2.0 * beta);
    let next: Vec<f64> = theta.iter().zip(&delta).map(|(x, d)| x + alpha * g * d).collect();
    let v_current = oracle.observe(&next)?;

    let record = IterationRecord {
        k,
        theta: theta.to_vec(),
        alpha,
        beta,
        delta,
        g,
        v_plus,
        v_minus,
        v_current,
        shots_used,
    };
    Ok((next, record))
}

/// One update with a freshly sampled Rademacher direction.
pub fn spsa_step<O: Oracle + ?Sized, R: Rng + ?Sized>(
    oracle: &mut O,
    theta: &[f64],
    k: usize,
    config: &SpsaConfig,
    rng: &mut R,
) -> Result<(Vec<f64>, IterationRecord)> {
    let delta = sample_perturbation(oracle.dim(), rng);
    spsa_step_with_delta(oracle, theta, k, config, delta)
}

/// `config.iterations` updates from `theta0`.
pub fn run<O: Oracle + ?Sized, R: Rng + ?Sized>(
    oracle: &mut O,
    theta0: &[f64],
    config: &SpsaConfig,
    rng: &mut R,
) -> Result<RunTrace> {
    config.validate()?;
    if theta0.len() != oracle.dim() {
        return Err(Error::DimensionMismatch {
            expected: oracle.dim(),
            found: theta0.len(),
        });
    }
    if theta0.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidConfig("initial point must be finite".into()));
    }
    let initial_value = oracle.observe(theta0)?;
    let mut theta = theta0.to_vec();
    let mut records = Vec::with_capacity(config.iterations);
    for k in 0..config.iterations {
        let (next, record) = spsa_step(oracle, &theta, k, config, rng)?;
        theta = next;
        records.push(record);
    }
    let final_value = records.last().map(|r| r.v_current).unwrap_or(initial_value);
    Ok(RunTrace {
        config: config.clone(),
        scenario: oracle.scenario(),
        initial_theta: theta0.to_vec(),
        initial_value,
        records,
        final_theta: theta,
        final_value,
    })
}

/// Draws Θ₀ from the optimizer stream, then runs. The whole run is a function
/// of `config.seed` and the oracle.
pub fn run_from_random_start<O: Oracle + ?Sized>(
    oracle: &mut O,
    scenario: ScenarioId,
    config: &SpsaConfig,
) -> Result<RunTrace> {
    let mut rng = config.rng();
    let theta0 = random_initial_theta(scenario, &mut rng);
    run(oracle, theta0.values(), config, &mut rng)
}
