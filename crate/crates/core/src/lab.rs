//! Simulated Bell experiments.
//!
//! A [`MeasurementOracle`] hides a state and a scenario behind `Θ → V` and
//! layers experimental imperfections on top: angle errors and an unknown
//! calibration offset act on the settings, and finite photon statistics act
//! on the outcome distributions.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{tensor_all, ComplexMatrix, QuantumState};
use crate::scenario::{
    bell_value_for, build_measurements, cglmp_coefficients, correlator_terms, MeasurementSet, ScenarioId,
};
use crate::spsa::Oracle;

/// RNG stream used for an oracle's measurement noise.
pub const NOISE_STREAM: u64 = 1;
/// RNG stream used to draw a hidden calibration offset.
pub const OFFSET_STREAM: u64 = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseStage {
    /// `shots` photon pairs per joint setting combination per evaluation.
    FiniteShot { shots: u64 },
    /// Fresh Gaussian error (std `sigma`, radians) on every setting parameter.
    SettingError { sigma: f64 },
    /// Fixed additive offset on every setting parameter.
    Untrusted { offset: Vec<f64> },
}

/// Ordered list of imperfections; empty means ideal.
///
/// Setting-level stages are applied in list order, then outcomes are sampled
/// if a [`NoiseStage::FiniteShot`] stage is present.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub stages: Vec<NoiseStage>,
}

impl NoiseModel {
    pub fn ideal() -> Self {
        Self::default()
    }

    pub fn finite_shot(shots: u64) -> Self {
        Self::ideal().then(NoiseStage::FiniteShot { shots })
    }

    pub fn setting_error(sigma: f64) -> Self {
        Self::ideal().then(NoiseStage::SettingError { sigma })
    }

    pub fn untrusted(offset: Vec<f64>) -> Self {
        Self::ideal().then(NoiseStage::Untrusted { offset })
    }

    pub fn then(mut self, stage: NoiseStage) -> Self {
        self.stages.push(stage);
        self
    }

    pub fn is_ideal(&self) -> bool {
        self.stages.is_empty()
    }

    pub fn shots(&self) -> Option<u64> {
        self.stages.iter().find_map(|s| match s {
            NoiseStage::FiniteShot { shots } => Some(*shots),
            _ => None,
        })
    }

    pub fn sigma(&self) -> f64 {
        self.stages
            .iter()
            .map(|s| match s {
                NoiseStage::SettingError { sigma } => *sigma,
                _ => 0.0,
            })
            .fold(0.0, |acc, s| (acc * acc + s * s).sqrt())
    }

    pub fn validate(&self, theta_dim: usize) -> Result<()> {
        let mut shot_stages = 0;
        for stage in &self.stages {
            match stage {
                NoiseStage::FiniteShot { shots } => {
                    shot_stages += 1;
                    if *shots == 0 {
                        return Err(Error::InvalidConfig(
                            "photon pairs per setting must be at least 1".into(),
                        ));
                    }
                }
                NoiseStage::SettingError { sigma } => {
                    if !(sigma.is_finite() && *sigma >= 0.0) {
                        return Err(Error::InvalidConfig(format!(
                            "angle error sigma must be >= 0, got {sigma}"
                        )));
                    }
                }
                NoiseStage::Untrusted { offset } => {
                    if offset.len() != theta_dim {
                        return Err(Error::DimensionMismatch {
                            expected: theta_dim,
                            found: offset.len(),
                        });
                    }
                    if offset.iter().any(|x| !x.is_finite()) {
                        return Err(Error::InvalidConfig("offset must be finite".into()));
                    }
                }
            }
        }
        if shot_stages > 1 {
            return Err(Error::InvalidConfig("at most one finite-shot stage".into()));
        }
        Ok(())
    }

    /// Applies the setting-level stages to `theta`.
    pub fn distort<R: Rng + ?Sized>(&self, theta: &[f64], rng: &mut R) -> Vec<f64> {
        let mut out = theta.to_vec();
        for stage in &self.stages {
            match stage {
                NoiseStage::SettingError { sigma } if *sigma > 0.0 => {
                    let normal = Normal::new(0.0, *sigma).expect("validated sigma");
                    for x in &mut out {
                        *x += normal.sample(rng);
                    }
                }
                NoiseStage::Untrusted { offset } => {
                    for (x, o) in out.iter_mut().zip(offset) {
                        *x += o;
                    }
                }
                _ => {}
            }
        }
        out
    }
}

/// Outcome probabilities for one joint setting choice.
///
/// Entries are indexed row-major over the parties' outcome indices, party 0
/// most significant.
#[derive(Clone, Debug, PartialEq)]
pub struct JointDistribution {
    pub outcomes_per_party: Vec<usize>,
    pub probs: Vec<f64>,
}

impl JointDistribution {
    /// Index of an outcome tuple.
    pub fn index(&self, outcomes: &[usize]) -> usize {
        outcomes
            .iter()
            .zip(&self.outcomes_per_party)
            .fold(0, |acc, (o, n)| acc * n + o)
    }

    pub fn prob(&self, outcomes: &[usize]) -> f64 {
        self.probs[self.index(outcomes)]
    }

    /// Outcome tuple of a flat index.
    pub fn outcomes(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.outcomes_per_party.len()];
        for (slot, n) in out.iter_mut().zip(&self.outcomes_per_party).rev() {
            *slot = index % n;
            index /= n;
        }
        out
    }
}

/// `P(o_1, …, o_m) = Tr(ρ · ⊗_p P_{p, o_p})` for the chosen setting of each party.
pub fn true_joint_distribution(
    state: &QuantumState,
    measurements: &MeasurementSet,
    settings: &[usize],
) -> Result<JointDistribution> {
    if settings.len() != measurements.parties() {
        return Err(Error::DimensionMismatch {
            expected: measurements.parties(),
            found: settings.len(),
        });
    }
    let projectors: Vec<Vec<ComplexMatrix>> = settings
        .iter()
        .enumerate()
        .map(|(p, &s)| measurements.get(p, s).projectors())
        .collect();
    let outcomes_per_party: Vec<usize> = projectors.iter().map(Vec::len).collect();
    let total_dim: usize = projectors.iter().map(|p| p[0].rows()).product();
    if total_dim != state.dim() {
        return Err(Error::DimensionMismatch {
            expected: state.dim(),
            found: total_dim,
        });
    }
    let mut dist = JointDistribution {
        probs: vec![0.0; outcomes_per_party.iter().product()],
        outcomes_per_party,
    };
    for i in 0..dist.probs.len() {
        let outcome = dist.outcomes(i);
        let op = tensor_all(outcome.iter().enumerate().map(|(p, &o)| &projectors[p][o]));
        // round-off can leave tiny negatives
        dist.probs[i] = state.rho().trace_product(&op).re.max(0.0);
    }
    let total: f64 = dist.probs.iter().sum();
    for p in &mut dist.probs {
        *p /= total;
    }
    Ok(dist)
}

/// Multinomial counts by sequential conditional binomials.
pub fn sample_counts<R: Rng + ?Sized>(shots: u64, probs: &[f64], rng: &mut R) -> Vec<u64> {
    let mut counts = vec![0; probs.len()];
    let mut remaining = shots;
    let mut mass = 1.0;
    for (i, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if i + 1 == probs.len() {
            counts[i] = remaining;
            break;
        }
        let q = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 0.0 };
        let k = Binomial::new(remaining, q).expect("probability in [0, 1]").sample(rng);
        counts[i] = k;
        remaining -= k;
        mass -= p;
    }
    counts
}

/// Black-box Bell experiment: owns the state, the noise and its RNG stream.
#[derive(Clone, Debug)]
pub struct MeasurementOracle {
    state: QuantumState,
    scenario: ScenarioId,
    noise: NoiseModel,
    rng: ChaCha8Rng,
    shot_counter: u64,
}

impl MeasurementOracle {
    pub fn new(state: QuantumState, scenario: ScenarioId, noise: NoiseModel, seed: u64) -> Result<Self> {
        let sc = scenario.scenario();
        if state.dim() != sc.state_dim() {
            return Err(Error::DimensionMismatch {
                expected: sc.state_dim(),
                found: state.dim(),
            });
        }
        noise.validate(sc.theta_dim())?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(NOISE_STREAM);
        Ok(Self {
            state,
            scenario,
            noise,
            rng,
            shot_counter: 0,
        })
    }

    pub fn ideal(state: QuantumState, scenario: ScenarioId) -> Result<Self> {
        Self::new(state, scenario, NoiseModel::ideal(), 0)
    }

    pub fn state(&self) -> &QuantumState {
        &self.state
    }

    /// Noiseless value at the nominal settings, ignoring every noise stage.
    pub fn ideal_value(&self, theta: &[f64]) -> Result<f64> {
        let ms = build_measurements(self.scenario, theta)?;
        bell_value_for(&self.state, &ms)
    }

    /// Photon pairs per noisy evaluation (zero for exact evaluation).
    pub fn shots_per_evaluation(&self) -> u64 {
        self.noise
            .shots()
            .map(|n| n * self.scenario.scenario().setting_combinations().len() as u64)
            .unwrap_or(0)
    }

    /// The hidden calibration offset. Test hook; a search must not use it.
    #[doc(hidden)]
    pub fn inspect_offset(&self) -> Option<Vec<f64>> {
        let mut total: Option<Vec<f64>> = None;
        for stage in &self.noise.stages {
            if let NoiseStage::Untrusted { offset } = stage {
                let acc = total.get_or_insert_with(|| vec![0.0; offset.len()]);
                for (a, o) in acc.iter_mut().zip(offset) {
                    *a += o;
                }
            }
        }
        total
    }

    fn measure(&mut self, theta: &[f64], counted: bool) -> Result<f64> {
        let sc = self.scenario.scenario();
        if theta.len() != sc.theta_dim() {
            return Err(Error::DimensionMismatch {
                expected: sc.theta_dim(),
                found: theta.len(),
            });
        }
        let actual = self.noise.distort(theta, &mut self.rng);
        let ms = build_measurements(self.scenario, &actual)?;
        let Some(shots) = self.noise.shots() else {
            return bell_value_for(&self.state, &ms);
        };
        let value = sampled_value(&self.state, &ms, shots, &mut self.rng)?;
        if counted {
            self.shot_counter += shots * sc.setting_combinations().len() as u64;
        }
        Ok(value)
    }
}

/// Bell value estimated from `shots` samples of each joint setting combination.
pub fn sampled_value<R: Rng + ?Sized>(
    state: &QuantumState,
    ms: &MeasurementSet,
    shots: u64,
    rng: &mut R,
) -> Result<f64> {
    if shots == 0 {
        return Err(Error::InvalidConfig(
            "photon pairs per setting must be at least 1".into(),
        ));
    }
    let n = shots as f64;
    match correlator_terms(ms.scenario()) {
        Some(terms) => {
            let mut total = 0.0;
            for (coeff, settings) in terms {
                let dist = true_joint_distribution(state, ms, &settings)?;
                let counts = sample_counts(shots, &dist.probs, rng);
                let mut corr = 0.0;
                for (i, c) in counts.iter().enumerate() {
                    // outcome 0 is +1 and outcome 1 is -1 for every party
                    let sign = if dist.outcomes(i).iter().filter(|o| **o == 1).count() % 2 == 0 {
                        1.0
                    } else {
                        -1.0
                    };
                    corr += sign * *c as f64;
                }
                total += coeff * corr / n;
            }
            Ok(total.abs())
        }
        None => {
            let coeffs = cglmp_coefficients();
            let combos = ms.scenario().scenario().setting_combinations();
            let mut total = 0.0;
            for (settings, table) in combos.iter().zip(&coeffs) {
                let dist = true_joint_distribution(state, ms, settings)?;
                let counts = sample_counts(shots, &dist.probs, rng);
                for (i, c) in counts.iter().enumerate() {
                    total += table[i / 3][i % 3] * *c as f64 / n;
                }
            }
            Ok(total)
        }
    }
}

impl Oracle for MeasurementOracle {
    fn dim(&self) -> usize {
        self.scenario.scenario().theta_dim()
    }

    fn evaluate(&mut self, theta: &[f64]) -> Result<f64> {
        self.measure(theta, true)
    }

    fn observe(&mut self, theta: &[f64]) -> Result<f64> {
        self.measure(theta, false)
    }

    fn shots_used(&self) -> u64 {
        self.shot_counter
    }

    fn scenario(&self) -> Option<ScenarioId> {
        Some(self.scenario)
    }
}

/// Hidden offset uniform in `[0, 2π)` per parameter, drawn from `seed`.
pub fn draw_offset(scenario: ScenarioId, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(OFFSET_STREAM);
    (0..scenario.scenario().theta_dim())
        .map(|_| rng.random_range(0.0..TAU))
        .collect()
}

/// Oracle whose settings carry an unknown fixed offset drawn from `seed`.
pub fn make_untrusted(state: QuantumState, scenario: ScenarioId, seed: u64) -> Result<MeasurementOracle> {
    make_untrusted_with(state, scenario, NoiseModel::ideal(), seed)
}

/// [`make_untrusted`] with further imperfections applied after the offset.
pub fn make_untrusted_with(
    state: QuantumState,
    scenario: ScenarioId,
    extra: NoiseModel,
    seed: u64,
) -> Result<MeasurementOracle> {
    let mut noise = NoiseModel::untrusted(draw_offset(scenario, seed));
    noise.stages.extend(extra.stages);
    MeasurementOracle::new(state, scenario, noise, seed)
}
