//! The three Bell scenarios: CHSH (2 qubits), Mermin (3 qubits) and CGLMP
//! for two qutrits.
//!
//! A [`SettingsVector`] is laid out party-major, then setting-major, then
//! parameter-major: the parameters of party `p`, setting `s` start at
//! `(p * 2 + s) * params_per_setting`. Qubit settings take two Bloch angles
//! `(θ, φ)`; qutrit settings take eight Gell-Mann coefficients.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{
    c64, expectation, pauli_x, pauli_y, pauli_z, tensor, tensor_all, unitary_from_hermitian, ComplexMatrix,
    HermitianGenerator, QuantumState, C64,
};

pub const SETTINGS_PER_PARTY: usize = 2;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioId {
    Chsh,
    Mermin3,
    Cglmp3,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 3] = [ScenarioId::Chsh, ScenarioId::Mermin3, ScenarioId::Cglmp3];

    pub fn scenario(self) -> BellScenario {
        BellScenario::new(self)
    }

    pub fn name(self) -> &'static str {
        match self {
            ScenarioId::Chsh => "chsh",
            ScenarioId::Mermin3 => "mermin3",
            ScenarioId::Cglmp3 => "cglmp3",
        }
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "chsh" => Ok(ScenarioId::Chsh),
            "mermin3" | "mermin" => Ok(ScenarioId::Mermin3),
            "cglmp3" | "cglmp" => Ok(ScenarioId::Cglmp3),
            other => Err(Error::InvalidConfig(format!("unknown scenario '{other}'"))),
        }
    }
}

/// Party/setting/outcome structure of a scenario.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct BellScenario {
    pub id: ScenarioId,
    pub parties: usize,
    pub settings_per_party: usize,
    pub outcomes_per_setting: usize,
    pub params_per_setting: usize,
    pub local_dim: usize,
}

impl BellScenario {
    pub const fn new(id: ScenarioId) -> Self {
        let (parties, outcomes, params, local_dim) = match id {
            ScenarioId::Chsh => (2, 2, 2, 2),
            ScenarioId::Mermin3 => (3, 2, 2, 2),
            ScenarioId::Cglmp3 => (2, 3, 8, 3),
        };
        Self {
            id,
            parties,
            settings_per_party: SETTINGS_PER_PARTY,
            outcomes_per_setting: outcomes,
            params_per_setting: params,
            local_dim,
        }
    }

    pub const fn theta_dim(&self) -> usize {
        self.parties * self.settings_per_party * self.params_per_setting
    }

    pub fn state_dim(&self) -> usize {
        self.local_dim.pow(self.parties as u32)
    }

    /// Offset of the first parameter of `(party, setting)` in Θ.
    pub const fn param_offset(&self, party: usize, setting: usize) -> usize {
        (party * self.settings_per_party + setting) * self.params_per_setting
    }

    /// Joint setting choices that enter the Bell expression, one entry per
    /// party. The same four combinations are what a finite-statistics
    /// experiment has to measure.
    pub fn setting_combinations(&self) -> Vec<Vec<usize>> {
        match self.id {
            ScenarioId::Chsh => CHSH_TERMS.iter().map(|t| t.1.to_vec()).collect(),
            ScenarioId::Mermin3 => MERMIN_TERMS.iter().map(|t| t.1.to_vec()).collect(),
            ScenarioId::Cglmp3 => CGLMP_PAIRS.iter().map(|p| p.to_vec()).collect(),
        }
    }

    /// Local (classical) bound of the expression. The Mermin value is
    /// standard background knowledge rather than something derived here.
    pub fn local_bound(&self) -> f64 {
        2.0
    }
}

/// Signed correlator terms `(coefficient, settings)` of the CHSH operator.
const CHSH_TERMS: [(f64, [usize; 2]); 4] = [(1.0, [0, 0]), (1.0, [0, 1]), (1.0, [1, 0]), (-1.0, [1, 1])];

/// A1B0C0 + A0B1C0 + A0B0C1 − A1B1C1
const MERMIN_TERMS: [(f64, [usize; 3]); 4] = [(1.0, [1, 0, 0]), (1.0, [0, 1, 0]), (1.0, [0, 0, 1]), (-1.0, [1, 1, 1])];

const CGLMP_PAIRS: [[usize; 2]; 4] = [[0, 0], [0, 1], [1, 0], [1, 1]];

/// Coefficient table `c[j][l]` of `P(A_a = j, B_b = l)` for each setting
/// pair in [`CGLMP_PAIRS`] order.
///
/// The expression is
/// `[P(A0=B0) + P(B0=A1+1) + P(A1=B1) + P(B1=A0)]
///  − [P(A0=B0−1) + P(B0=A1) + P(A1=B1−1) + P(B1=A0−1)]`,
/// rewritten so every event reads `A_a = B_b + k (mod 3)`.
pub fn cglmp_coefficients() -> [[[f64; 3]; 3]; 4] {
    // (pair index, k, sign)
    const EVENTS: [(usize, i32, f64); 8] = [
        (0, 0, 1.0),   // A0 = B0
        (2, -1, 1.0),  // B0 = A1 + 1  <=>  A1 = B0 - 1
        (3, 0, 1.0),   // A1 = B1
        (1, 0, 1.0),   // B1 = A0
        (0, -1, -1.0), // A0 = B0 - 1
        (2, 0, -1.0),  // B0 = A1
        (3, -1, -1.0), // A1 = B1 - 1
        (1, 1, -1.0),  // B1 = A0 - 1  <=>  A0 = B1 + 1
    ];
    let mut table = [[[0.0; 3]; 3]; 4];
    for &(pair, k, sign) in &EVENTS {
        for l in 0..3i32 {
            let j = (l + k).rem_euclid(3);
            table[pair][j as usize][l as usize] += sign;
        }
    }
    table
}

/// Flat real parameter vector for one scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct SettingsVector {
    scenario: ScenarioId,
    values: Vec<f64>,
}

impl SettingsVector {
    pub fn new(scenario: ScenarioId, values: Vec<f64>) -> Result<Self> {
        let expected = scenario.scenario().theta_dim();
        if values.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("settings must be finite".into()));
        }
        Ok(Self { scenario, values })
    }

    pub fn zeros(scenario: ScenarioId) -> Self {
        Self {
            scenario,
            values: vec![0.0; scenario.scenario().theta_dim()],
        }
    }

    pub fn scenario(&self) -> ScenarioId {
        self.scenario
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// One local measurement: a ±1 qubit observable or a labelled qutrit basis.
#[derive(Clone, Debug, PartialEq)]
pub enum LocalMeasurement {
    Qubit(ComplexMatrix),
    /// Columns of the unitary are the eigenvectors for outcomes 0, 1, 2.
    Qutrit(ComplexMatrix),
}

impl LocalMeasurement {
    /// Projectors onto each outcome, in outcome order.
    ///
    /// Qubit outcomes are ordered `(+1, −1)`, i.e. `(I ± A)/2`.
    pub fn projectors(&self) -> Vec<ComplexMatrix> {
        match self {
            LocalMeasurement::Qubit(a) => {
                let id = ComplexMatrix::identity(2);
                vec![(&id + a).scale(0.5), (&id - a).scale(0.5)]
            }
            LocalMeasurement::Qutrit(u) => (0..3).map(|j| ComplexMatrix::outer(&u.column(j))).collect(),
        }
    }

    /// Numeric value attached to each outcome (±1 for qubits, 0/1/2 for qutrits).
    pub fn outcome_values(&self) -> &'static [f64] {
        match self {
            LocalMeasurement::Qubit(_) => &[1.0, -1.0],
            LocalMeasurement::Qutrit(_) => &[0.0, 1.0, 2.0],
        }
    }

    /// The observable itself: `A` for qubits, `Σ j P_j` for qutrits.
    pub fn observable(&self) -> ComplexMatrix {
        match self {
            LocalMeasurement::Qubit(a) => a.clone(),
            LocalMeasurement::Qutrit(_) => {
                let p = self.projectors();
                &p[1] + &p[2].scale(2.0)
            }
        }
    }
}

/// Local measurements for every party and setting.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementSet {
    scenario: ScenarioId,
    /// `local[party][setting]`
    local: Vec<Vec<LocalMeasurement>>,
}

impl MeasurementSet {
    pub fn scenario(&self) -> ScenarioId {
        self.scenario
    }

    pub fn get(&self, party: usize, setting: usize) -> &LocalMeasurement {
        &self.local[party][setting]
    }

    pub fn parties(&self) -> usize {
        self.local.len()
    }
}

/// `a⃗(θ, φ)·σ⃗` with `a⃗ = (sinθ cosφ, sinθ sinφ, cosθ)`.
pub fn qubit_observable(theta: f64, phi: f64) -> ComplexMatrix {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    let x = pauli_x().scale(st * cp);
    let y = pauli_y().scale(st * sp);
    let z = pauli_z().scale(ct);
    &(&x + &y) + &z
}

/// Orthonormal qutrit basis `U|0⟩, U|1⟩, U|2⟩` with `U = exp(i Σ θ_i λ_i)`,
/// returned as the columns of `U`.
pub fn qutrit_basis(thetas: &[f64]) -> Result<ComplexMatrix> {
    let generator = HermitianGenerator::new(3, thetas.to_vec())?;
    Ok(unitary_from_hermitian(&generator))
}

/// Rank-one projectors onto the basis of [`qutrit_basis`].
pub fn qutrit_projectors(thetas: &[f64]) -> Result<[ComplexMatrix; 3]> {
    let u = qutrit_basis(thetas)?;
    Ok([0, 1, 2].map(|j| ComplexMatrix::outer(&u.column(j))))
}

pub fn build_measurements(scenario: ScenarioId, theta: &[f64]) -> Result<MeasurementSet> {
    let sc = scenario.scenario();
    if theta.len() != sc.theta_dim() {
        return Err(Error::DimensionMismatch {
            expected: sc.theta_dim(),
            found: theta.len(),
        });
    }
    let mut local = Vec::with_capacity(sc.parties);
    for party in 0..sc.parties {
        let mut settings = Vec::with_capacity(sc.settings_per_party);
        for setting in 0..sc.settings_per_party {
            let off = sc.param_offset(party, setting);
            let params = &theta[off..off + sc.params_per_setting];
            let m = match scenario {
                ScenarioId::Chsh | ScenarioId::Mermin3 => {
                    LocalMeasurement::Qubit(qubit_observable(params[0], params[1]))
                }
                ScenarioId::Cglmp3 => LocalMeasurement::Qutrit(qutrit_basis(params)?),
            };
            settings.push(m);
        }
        local.push(settings);
    }
    Ok(MeasurementSet { scenario, local })
}

/// Noiseless Bell value of `state` under the settings `theta`.
///
/// CHSH and Mermin return `|Tr(ρ B(Θ))|`. CGLMP returns the signed
/// expression: its negative side reaches −4 with deterministic local
/// strategies, so an absolute value would not measure a violation.
pub fn bell_value(state: &QuantumState, scenario: ScenarioId, theta: &[f64]) -> Result<f64> {
    let sc = scenario.scenario();
    if state.dim() != sc.state_dim() {
        return Err(Error::DimensionMismatch {
            expected: sc.state_dim(),
            found: state.dim(),
        });
    }
    let ms = build_measurements(scenario, theta)?;
    bell_value_for(state, &ms)
}

/// [`bell_value`] for already-built measurements.
pub fn bell_value_for(state: &QuantumState, ms: &MeasurementSet) -> Result<f64> {
    let sc = ms.scenario.scenario();
    if state.dim() != sc.state_dim() {
        return Err(Error::DimensionMismatch {
            expected: sc.state_dim(),
            found: state.dim(),
        });
    }
    match ms.scenario {
        ScenarioId::Chsh => {
            let op = correlator_operator(ms, CHSH_TERMS.iter().map(|(c, s)| (*c, &s[..])));
            Ok(expectation(state, &op)?.abs())
        }
        ScenarioId::Mermin3 => {
            let op = correlator_operator(ms, MERMIN_TERMS.iter().map(|(c, s)| (*c, &s[..])));
            Ok(expectation(state, &op)?.abs())
        }
        ScenarioId::Cglmp3 => {
            let coeffs = cglmp_coefficients();
            let mut total = 0.0;
            for (pair, table) in CGLMP_PAIRS.iter().zip(&coeffs) {
                let pa = ms.get(0, pair[0]).projectors();
                let pb = ms.get(1, pair[1]).projectors();
                for (j, row) in table.iter().enumerate() {
                    for (l, c) in row.iter().enumerate() {
                        if *c != 0.0 {
                            total += c * state.rho().trace_product(&tensor(&pa[j], &pb[l])).re;
                        }
                    }
                }
            }
            Ok(total)
        }
    }
}

fn correlator_operator<'a>(ms: &MeasurementSet, terms: impl Iterator<Item = (f64, &'a [usize])>) -> ComplexMatrix {
    let mut op: Option<ComplexMatrix> = None;
    for (coeff, settings) in terms {
        let factors: Vec<&ComplexMatrix> = settings
            .iter()
            .enumerate()
            .map(|(party, &s)| match ms.get(party, s) {
                LocalMeasurement::Qubit(a) => a,
                LocalMeasurement::Qutrit(_) => unreachable!("correlator terms are qubit-only"),
            })
            .collect();
        let term = tensor_all(factors).scale(coeff);
        op = Some(match op {
            Some(acc) => &acc + &term,
            None => term,
        });
    }
    op.expect("non-empty term list")
}

/// Signed correlator terms of a ±1-outcome scenario, `None` for CGLMP.
pub fn correlator_terms(scenario: ScenarioId) -> Option<Vec<(f64, Vec<usize>)>> {
    match scenario {
        ScenarioId::Chsh => Some(CHSH_TERMS.iter().map(|(c, s)| (*c, s.to_vec())).collect()),
        ScenarioId::Mermin3 => Some(MERMIN_TERMS.iter().map(|(c, s)| (*c, s.to_vec())).collect()),
        ScenarioId::Cglmp3 => None,
    }
}

/// Reference quantum value: 2√2 (CHSH), 4 (Mermin on GHZ), 4/(6√3−9) (CGLMP on the
/// maximally entangled qutrit pair).
pub fn quantum_maximum(scenario: ScenarioId) -> f64 {
    match scenario {
        ScenarioId::Chsh => 2.0 * std::f64::consts::SQRT_2,
        ScenarioId::Mermin3 => 4.0,
        ScenarioId::Cglmp3 => 4.0 / (6.0 * 3f64.sqrt() - 9.0),
    }
}

/// Computational basis vector `|index⟩` of dimension `dim`.
pub fn basis_vector(dim: usize, index: usize) -> Vec<C64> {
    let mut v = vec![c64(0.0, 0.0); dim];
    v[index] = c64(1.0, 0.0);
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI, SQRT_2};

    const CHSH_OPT: [f64; 8] = [0.0, 0.0, FRAC_PI_2, 0.0, 3.0 * PI / 4.0, PI, 3.0 * PI / 4.0, 0.0];

    #[test]
    fn theta_dims() {
        assert_eq!(ScenarioId::Chsh.scenario().theta_dim(), 8);
        assert_eq!(ScenarioId::Mermin3.scenario().theta_dim(), 12);
        assert_eq!(ScenarioId::Cglmp3.scenario().theta_dim(), 32);
        for id in ScenarioId::ALL {
            let s = id.scenario();
            assert_eq!(s.theta_dim(), s.parties * s.settings_per_party * s.params_per_setting);
        }
    }

    #[test]
    fn scenario_names_round_trip() {
        for id in ScenarioId::ALL {
            assert_eq!(id.name().parse::<ScenarioId>().unwrap(), id);
        }
        assert!("cglmp4".parse::<ScenarioId>().is_err());
    }

    #[test]
    fn bloch_axes() {
        assert!(qubit_observable(0.0, 1.234).max_abs_diff(&pauli_z()) < 1e-15);
        assert!(qubit_observable(FRAC_PI_2, 0.0).max_abs_diff(&pauli_x()) < 1e-15);
        assert!(qubit_observable(FRAC_PI_2, FRAC_PI_2).max_abs_diff(&pauli_y()) < 1e-15);
    }

    #[test]
    fn zero_qutrit_angles_give_computational_basis() {
        let p = qutrit_projectors(&[0.0; 8]).unwrap();
        for (j, pj) in p.iter().enumerate() {
            assert!(pj.max_abs_diff(&ComplexMatrix::outer(&basis_vector(3, j))) < 1e-15);
        }
    }

    #[test]
    fn chsh_measurements_at_optimum() {
        let ms = build_measurements(ScenarioId::Chsh, &CHSH_OPT).unwrap();
        let (x, z) = (pauli_x(), pauli_z());
        let s = FRAC_1_SQRT_2;
        let b0 = (&z + &x).scale(-s);
        let b1 = (&x - &z).scale(s);
        let obs = |p, k| ms.get(p, k).observable();
        assert!(obs(0, 0).max_abs_diff(&z) < 1e-15);
        assert!(obs(0, 1).max_abs_diff(&x) < 1e-15);
        assert!(obs(1, 0).max_abs_diff(&b0) < 1e-15);
        assert!(obs(1, 1).max_abs_diff(&b1) < 1e-15);
    }

    #[test]
    fn mermin_y_x_settings() {
        let mut theta = vec![];
        for _ in 0..3 {
            theta.extend([FRAC_PI_2, FRAC_PI_2, FRAC_PI_2, 0.0]);
        }
        let ms = build_measurements(ScenarioId::Mermin3, &theta).unwrap();
        for p in 0..3 {
            assert!(ms.get(p, 0).observable().max_abs_diff(&pauli_y()) < 1e-15);
            assert!(ms.get(p, 1).observable().max_abs_diff(&pauli_x()) < 1e-15);
        }
        let v = bell_value(&states::ghz3(), ScenarioId::Mermin3, &theta).unwrap();
        assert!((v - 4.0).abs() < 1e-12, "{v}");
    }

    #[test]
    fn build_rejects_wrong_length() {
        assert!(matches!(
            build_measurements(ScenarioId::Chsh, &[0.0; 7]),
            Err(Error::DimensionMismatch { expected: 8, found: 7 })
        ));
        assert!(SettingsVector::new(ScenarioId::Cglmp3, vec![0.0; 31]).is_err());
        assert!(SettingsVector::new(ScenarioId::Chsh, vec![f64::NAN; 8]).is_err());
    }

    #[test]
    fn cglmp_zero_settings_on_max_entangled() {
        let ms = build_measurements(ScenarioId::Cglmp3, &[0.0; 32]).unwrap();
        for p in 0..2 {
            for s in 0..2 {
                let pr = ms.get(p, s).projectors();
                for (j, pj) in pr.iter().enumerate() {
                    assert!(pj.max_abs_diff(&ComplexMatrix::outer(&basis_vector(3, j))) < 1e-15);
                }
            }
        }
        let v = bell_value(&states::max_entangled_qutrits(), ScenarioId::Cglmp3, &[0.0; 32]).unwrap();
        assert!((v - 2.0).abs() < 1e-12, "{v}");
    }

    #[test]
    fn cglmp_table_sums() {
        // each event covers three cells; four positive and four negative events
        let t = cglmp_coefficients();
        let total: f64 = t.iter().flatten().flatten().sum();
        assert_eq!(total, 0.0);
        let positive: f64 = t.iter().flatten().flatten().filter(|c| **c > 0.0).sum();
        assert_eq!(positive, 12.0);
    }

    #[test]
    fn singlet_chsh_optimum() {
        let v = bell_value(&states::singlet(), ScenarioId::Chsh, &CHSH_OPT).unwrap();
        assert!((v - 2.0 * SQRT_2).abs() < 1e-12, "{v}");
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let r = bell_value(&states::singlet(), ScenarioId::Mermin3, &[0.0; 12]);
        assert!(matches!(r, Err(Error::DimensionMismatch { expected: 8, found: 4 })));
    }

    #[test]
    fn reference_values() {
        assert!((quantum_maximum(ScenarioId::Chsh) - 2.828_427_124_746_19).abs() < 1e-12);
        assert_eq!(quantum_maximum(ScenarioId::Mermin3), 4.0);
        assert!((quantum_maximum(ScenarioId::Cglmp3) - 2.872_934_051_172_335).abs() < 1e-12);
    }
}
