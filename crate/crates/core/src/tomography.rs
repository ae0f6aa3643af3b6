//! Two-qubit tomography baseline: measure all nine Pauli setting pairs,
//! reconstruct ρ by linear inversion, project it onto the physical set and
//! read off the maximal CHSH value in closed form.

use std::f64::consts::FRAC_PI_2;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::lab::{sample_counts, NoiseModel, NoiseStage};
use crate::quantum::{c64, hermitian_eig, pauli_x, pauli_y, pauli_z, tensor, ComplexMatrix, QuantumState, C64};
use crate::scenario::{qubit_observable, LocalMeasurement};

/// Bloch angles `(θ, φ)` of the nominal x, y and z axes.
pub const PAULI_AXES: [(f64, f64); 3] = [(FRAC_PI_2, 0.0), (FRAC_PI_2, FRAC_PI_2), (0.0, 0.0)];

/// Setting pairs are indexed `3·i + j` for Alice's axis `i` and Bob's axis `j`
/// (x, y, z). Outcomes are indexed `2·a + b` with `0 = +1`, `1 = −1`.
pub type PauliFrequencies = [[f64; 4]; 9];

#[derive(Clone, Debug, PartialEq)]
pub struct TomographyData {
    pub shots_per_setting: u64,
    pub counts: [[u64; 4]; 9],
}

impl TomographyData {
    pub fn total_shots(&self) -> u64 {
        9 * self.shots_per_setting
    }

    pub fn validate(&self) -> Result<()> {
        if self.shots_per_setting == 0 {
            return Err(Error::MalformedData("zero shots per setting".into()));
        }
        for (i, row) in self.counts.iter().enumerate() {
            let sum: u64 = row.iter().sum();
            if sum != self.shots_per_setting {
                return Err(Error::MalformedData(format!(
                    "setting {i}: counts sum to {sum}, expected {}",
                    self.shots_per_setting
                )));
            }
        }
        Ok(())
    }

    pub fn frequencies(&self) -> PauliFrequencies {
        let n = self.shots_per_setting as f64;
        self.counts.map(|row| row.map(|c| c as f64 / n))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReconstructedState {
    pub rho: QuantumState,
    /// Linear-inversion estimate before projection; may be unphysical.
    pub raw_linear_inversion: ComplexMatrix,
    /// Frobenius distance between `raw_linear_inversion` and `rho`.
    pub projection_distance: f64,
}

fn joint_probs(state: &QuantumState, alice: &ComplexMatrix, bob: &ComplexMatrix) -> [f64; 4] {
    let pa = LocalMeasurement::Qubit(alice.clone()).projectors();
    let pb = LocalMeasurement::Qubit(bob.clone()).projectors();
    let mut out = [0.0; 4];
    for a in 0..2 {
        for b in 0..2 {
            out[2 * a + b] = state.rho().trace_product(&tensor(&pa[a], &pb[b])).re.max(0.0);
        }
    }
    let total: f64 = out.iter().sum();
    out.map(|p| p / total)
}

fn check_two_qubit(state: &QuantumState) -> Result<()> {
    if state.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            found: state.dim(),
        });
    }
    Ok(())
}

/// Angle error of the model; finite-shot stages are redundant here and an
/// unknown calibration makes tomography meaningless.
fn tomography_sigma(noise: &NoiseModel) -> Result<f64> {
    let mut sigma2 = 0.0;
    for stage in &noise.stages {
        match stage {
            NoiseStage::SettingError { sigma } => {
                if !(sigma.is_finite() && *sigma >= 0.0) {
                    return Err(Error::InvalidConfig(format!(
                        "angle error sigma must be >= 0, got {sigma}"
                    )));
                }
                sigma2 += sigma * sigma;
            }
            NoiseStage::FiniteShot { .. } => {
                return Err(Error::InvalidConfig(
                    "tomography takes its shot count explicitly; drop the finite-shot stage".into(),
                ))
            }
            NoiseStage::Untrusted { .. } => {
                return Err(Error::Unsupported(
                    "tomography requires calibrated measurement devices".into(),
                ))
            }
        }
    }
    Ok(sigma2.sqrt())
}

/// Samples all nine Pauli setting pairs. Angle errors perturb the nominal
/// axes of both parties independently for every setting pair.
pub fn tomography_measure<R: Rng + ?Sized>(
    state: &QuantumState,
    shots_per_setting: u64,
    noise: &NoiseModel,
    rng: &mut R,
) -> Result<TomographyData> {
    check_two_qubit(state)?;
    if shots_per_setting == 0 {
        return Err(Error::InvalidConfig("shots per setting must be at least 1".into()));
    }
    let sigma = tomography_sigma(noise)?;
    let normal = Normal::new(0.0, sigma.max(f64::MIN_POSITIVE)).expect("finite sigma");
    let jitter = |x: f64, rng: &mut R| if sigma > 0.0 { x + normal.sample(rng) } else { x };

    let mut counts = [[0u64; 4]; 9];
    for i in 0..3 {
        for j in 0..3 {
            let (ta, pa) = PAULI_AXES[i];
            let (tb, pb) = PAULI_AXES[j];
            let alice = qubit_observable(jitter(ta, rng), jitter(pa, rng));
            let bob = qubit_observable(jitter(tb, rng), jitter(pb, rng));
            let probs = joint_probs(state, &alice, &bob);
            let c = sample_counts(shots_per_setting, &probs, rng);
            counts[3 * i + j].copy_from_slice(&c);
        }
    }
    Ok(TomographyData {
        shots_per_setting,
        counts,
    })
}

/// Infinite-statistics limit of [`tomography_measure`] without angle errors.
pub fn exact_frequencies(state: &QuantumState) -> Result<PauliFrequencies> {
    check_two_qubit(state)?;
    let axes = [pauli_x(), pauli_y(), pauli_z()];
    let mut out = [[0.0; 4]; 9];
    for i in 0..3 {
        for j in 0..3 {
            out[3 * i + j] = joint_probs(state, &axes[i], &axes[j]);
        }
    }
    Ok(out)
}

pub fn reconstruct(data: &TomographyData) -> Result<ReconstructedState> {
    data.validate()?;
    reconstruct_from_frequencies(&data.frequencies())
}

/// Linear inversion `ρ = ¼ Σ ⟨σ_i⊗σ_j⟩ σ_i⊗σ_j` (i, j ∈ {0, x, y, z}) followed
/// by eigenvalue truncation and trace renormalisation. Single-party terms
/// are averaged over the three settings of the other party.
pub fn reconstruct_from_frequencies(freqs: &PauliFrequencies) -> Result<ReconstructedState> {
    for (i, row) in freqs.iter().enumerate() {
        let sum: f64 = row.iter().sum();
        if row.iter().any(|p| !p.is_finite() || *p < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::MalformedData(format!("setting {i}: not a probability vector")));
        }
    }
    let mut corr = [[0.0; 3]; 3];
    let mut alice = [0.0; 3];
    let mut bob = [0.0; 3];
    for i in 0..3 {
        for j in 0..3 {
            let [pp, pm, mp, mm] = freqs[3 * i + j];
            corr[i][j] = pp - pm - mp + mm;
            alice[i] += (pp + pm - mp - mm) / 3.0;
            bob[j] += (pp - pm + mp - mm) / 3.0;
        }
    }

    let paulis = [ComplexMatrix::identity(2), pauli_x(), pauli_y(), pauli_z()];
    let mut raw = tensor(&paulis[0], &paulis[0]);
    for i in 0..3 {
        raw = &raw + &tensor(&paulis[i + 1], &paulis[0]).scale(alice[i]);
        raw = &raw + &tensor(&paulis[0], &paulis[i + 1]).scale(bob[i]);
        for j in 0..3 {
            raw = &raw + &tensor(&paulis[i + 1], &paulis[j + 1]).scale(corr[i][j]);
        }
    }
    let raw = raw.scale(0.25);

    let (values, vectors) = hermitian_eig(&raw)?;
    let rho = if values[0] >= -1e-12 {
        raw.clone()
    } else {
        let clipped: Vec<f64> = values.iter().map(|v| v.max(0.0)).collect();
        let total: f64 = clipped.iter().sum();
        if total.is_nan() || total <= 0.0 {
            return Err(Error::MalformedData("reconstruction has no positive part".into()));
        }
        let diag: Vec<C64> = clipped.iter().map(|v| c64(v / total, 0.0)).collect();
        let m = &(&vectors * &ComplexMatrix::diagonal(&diag)) * &vectors.adjoint();
        // symmetrise away round-off
        (&m + &m.adjoint()).scale(0.5)
    };
    let projection_distance = (&raw - &rho).frobenius_norm();
    Ok(ReconstructedState {
        rho: QuantumState::new(rho)?,
        raw_linear_inversion: raw,
        projection_distance,
    })
}

/// Correlation matrix `T_ij = Tr(ρ σ_i⊗σ_j)`.
pub fn correlation_matrix(state: &QuantumState) -> Result<[[f64; 3]; 3]> {
    check_two_qubit(state)?;
    let axes = [pauli_x(), pauli_y(), pauli_z()];
    let mut t = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            t[i][j] = state.rho().trace_product(&tensor(&axes[i], &axes[j])).re;
        }
    }
    Ok(t)
}

/// Largest CHSH value over all settings: `2√(t₁ + t₂)` with `t₁ ≥ t₂` the two
/// largest eigenvalues of `TᵀT`.
pub fn chsh_mbv_from_state(state: &QuantumState) -> Result<f64> {
    let t = correlation_matrix(state)?;
    let mut m = [0.0; 9];
    for r in 0..3 {
        for c in 0..3 {
            m[3 * r + c] = (0..3).map(|k| t[k][r] * t[k][c]).sum();
        }
    }
    let (vals, _) = hermitian_eig(&ComplexMatrix::from_real(3, 3, &m)?)?;
    Ok(2.0 * (vals[1].max(0.0) + vals[2].max(0.0)).sqrt())
}

/// One tomography repetition: measure, reconstruct, maximise.
pub fn cvt_run<R: Rng + ?Sized>(
    state: &QuantumState,
    shots_per_setting: u64,
    noise: &NoiseModel,
    rng: &mut R,
) -> Result<f64> {
    let data = tomography_measure(state, shots_per_setting, noise, rng)?;
    let rec = reconstruct(&data)?;
    chsh_mbv_from_state(&rec.rho)
}

/// Tomography shots per setting that give `cvt_reps` repetitions the same
/// total photon budget as one search of `sga_iterations` iterations with
/// `shots` pairs per CHSH setting (two probes × four settings per iteration).
pub fn matched_shots_per_setting(sga_iterations: usize, shots: u64, cvt_reps: usize) -> u64 {
    let sga_total = sga_iterations as f64 * 2.0 * 4.0 * shots as f64;
    ((sga_total / (cvt_reps as f64 * 9.0)).round() as u64).max(1)
}
