//! Named target states and the plain-text density-matrix file format.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::quantum::{c64, ComplexMatrix, QuantumState};
use crate::scenario::basis_vector;

/// (|01⟩ − |10⟩)/√2
pub fn singlet() -> QuantumState {
    let s = FRAC_1_SQRT_2;
    QuantumState::pure(&[c64(0.0, 0.0), c64(s, 0.0), c64(-s, 0.0), c64(0.0, 0.0)]).expect("singlet is a valid state")
}

/// (|000⟩ + |111⟩)/√2
pub fn ghz3() -> QuantumState {
    let mut v = vec![c64(0.0, 0.0); 8];
    v[0] = c64(1.0, 0.0);
    v[7] = c64(1.0, 0.0);
    QuantumState::pure(&v).expect("GHZ is a valid state")
}

/// (|00⟩ + |11⟩ + |22⟩)/√3
pub fn max_entangled_qutrits() -> QuantumState {
    let mut v = vec![c64(0.0, 0.0); 9];
    v[0] = c64(1.0, 0.0);
    v[4] = c64(1.0, 0.0);
    v[8] = c64(1.0, 0.0);
    QuantumState::pure(&v).expect("maximally entangled qutrits are a valid state")
}

/// `p·singlet + (1−p)·I/4`
pub fn werner(p: f64) -> Result<QuantumState> {
    QuantumState::mixture(p, &singlet(), &QuantumState::maximally_mixed(4))
}

/// cos γ|00⟩ + sin γ|11⟩
pub fn partially_entangled(gamma: f64) -> Result<QuantumState> {
    let (s, c) = gamma.sin_cos();
    QuantumState::pure(&[c64(c, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(s, 0.0)])
}

/// `p·GHZ + (1−p)·I/8`
pub fn ghz_mixture(p: f64) -> Result<QuantumState> {
    QuantumState::mixture(p, &ghz3(), &QuantumState::maximally_mixed(8))
}

/// `p·|Φ3⟩⟨Φ3| + (1−p)·I/9`
pub fn qutrit_isotropic(p: f64) -> Result<QuantumState> {
    QuantumState::mixture(p, &max_entangled_qutrits(), &QuantumState::maximally_mixed(9))
}

/// |0…0⟩ for `parties` systems of dimension `local_dim`.
pub fn product_zero(local_dim: usize, parties: usize) -> QuantumState {
    let dim = local_dim.pow(parties as u32);
    QuantumState::pure(&basis_vector(dim, 0)).expect("basis state is valid")
}

/// Haar-random pure state of dimension `dim`.
pub fn random_pure<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> QuantumState {
    let amps: Vec<_> = (0..dim)
        .map(|_| c64(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    QuantumState::pure(&amps).expect("gaussian vector is nonzero")
}

/// Random full-rank mixed state `G G† / Tr(G G†)` with a Gaussian `G`.
pub fn random_mixed<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> QuantumState {
    let g = ComplexMatrix::new(
        dim,
        dim,
        (0..dim * dim)
            .map(|_| c64(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect(),
    )
    .expect("square data");
    let m = &g * &g.adjoint();
    let tr = m.trace().re;
    let mut rho = m.scale(1.0 / tr);
    // remove rounding asymmetry
    let sym = &rho + &rho.adjoint();
    rho = sym.scale(0.5);
    QuantumState::new(rho).expect("gram matrix is a density matrix")
}

/// A named, parameterised state family.
#[derive(Copy, Clone, Debug, PartialEq)]
pub enum StatePreset {
    Singlet,
    Werner(f64),
    PartiallyEntangled(f64),
    Product2,
    Ghz3,
    GhzMixture(f64),
    MaxEntangledQutrits,
    QutritIsotropic(f64),
}

impl StatePreset {
    pub fn build(&self) -> Result<QuantumState> {
        match *self {
            StatePreset::Singlet => Ok(singlet()),
            StatePreset::Werner(p) => werner(p),
            StatePreset::PartiallyEntangled(g) => partially_entangled(g),
            StatePreset::Product2 => Ok(product_zero(2, 2)),
            StatePreset::Ghz3 => Ok(ghz3()),
            StatePreset::GhzMixture(p) => ghz_mixture(p),
            StatePreset::MaxEntangledQutrits => Ok(max_entangled_qutrits()),
            StatePreset::QutritIsotropic(p) => qutrit_isotropic(p),
        }
    }

    /// Presets used for convergence studies of each scenario: the maximally
    /// entangled state first, then a mixed and (for qubits) a partially
    /// entangled state.
    pub fn convergence_set(scenario: crate::ScenarioId) -> Vec<StatePreset> {
        use crate::ScenarioId::*;
        match scenario {
            Chsh => vec![
                StatePreset::Singlet,
                StatePreset::Werner(0.9),
                StatePreset::PartiallyEntangled(std::f64::consts::FRAC_PI_6),
            ],
            Mermin3 => vec![
                StatePreset::Ghz3,
                StatePreset::GhzMixture(0.9),
                StatePreset::GhzMixture(0.75),
            ],
            Cglmp3 => vec![
                StatePreset::MaxEntangledQutrits,
                StatePreset::QutritIsotropic(0.9),
                StatePreset::QutritIsotropic(0.8),
            ],
        }
    }
}

impl fmt::Display for StatePreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StatePreset::Singlet => write!(f, "singlet"),
            StatePreset::Werner(p) => write!(f, "werner:{p}"),
            StatePreset::PartiallyEntangled(g) => write!(f, "partial:{g}"),
            StatePreset::Product2 => write!(f, "product"),
            StatePreset::Ghz3 => write!(f, "ghz3"),
            StatePreset::GhzMixture(p) => write!(f, "ghz-mix:{p}"),
            StatePreset::MaxEntangledQutrits => write!(f, "qutrit-max"),
            StatePreset::QutritIsotropic(p) => write!(f, "qutrit-iso:{p}"),
        }
    }
}

impl FromStr for StatePreset {
    type Err = Error;

    /// Accepts `name` or `name:param`, e.g. `werner:0.9` or `partial:0.5236`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let param = |default: Option<f64>| -> Result<f64> {
            match arg {
                Some(a) => a
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidConfig(format!("bad preset parameter '{a}'"))),
                None => default.ok_or_else(|| Error::InvalidConfig(format!("preset '{name}' needs a parameter"))),
            }
        };
        let preset = match name.to_ascii_lowercase().as_str() {
            "singlet" => StatePreset::Singlet,
            "werner" => StatePreset::Werner(param(None)?),
            "partial" => StatePreset::PartiallyEntangled(param(None)?),
            "product" => StatePreset::Product2,
            "ghz" | "ghz3" => StatePreset::Ghz3,
            "ghz-mix" => StatePreset::GhzMixture(param(None)?),
            "qutrit-max" => StatePreset::MaxEntangledQutrits,
            "qutrit-iso" => StatePreset::QutritIsotropic(param(None)?),
            other => return Err(Error::InvalidConfig(format!("unknown state preset '{other}'"))),
        };
        // reject bad parameters here rather than at run time
        preset.build()?;
        Ok(preset)
    }
}

/// Parses the plain-text format: first line `dim`, then `dim²` lines of
/// `re im` in row-major order. Blank lines and `#` comments are skipped.
pub fn parse_state_text(text: &str) -> Result<QuantumState> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    let dim: usize = lines
        .next()
        .ok_or_else(|| Error::InvalidState("empty state file".into()))?
        .parse()
        .map_err(|_| Error::InvalidState("first line must be the dimension".into()))?;
    if dim == 0 {
        return Err(Error::InvalidState("dimension must be positive".into()));
    }
    let mut data = Vec::with_capacity(dim * dim);
    for (i, line) in lines.enumerate() {
        let mut parts = line.split_whitespace();
        let mut next = || -> Result<f64> {
            parts
                .next()
                .ok_or_else(|| Error::InvalidState(format!("entry {i}: expected 're im'")))?
                .parse()
                .map_err(|_| Error::InvalidState(format!("entry {i}: not a number")))
        };
        let re = next()?;
        let im = next()?;
        if parts.next().is_some() {
            return Err(Error::InvalidState(format!("entry {i}: trailing data")));
        }
        data.push(c64(re, im));
    }
    if data.len() != dim * dim {
        return Err(Error::InvalidState(format!(
            "expected {} entries, found {}",
            dim * dim,
            data.len()
        )));
    }
    QuantumState::new(ComplexMatrix::new(dim, dim, data)?)
}

/// Inverse of [`parse_state_text`].
pub fn format_state_text(state: &QuantumState) -> String {
    let mut out = format!("{}\n", state.dim());
    for z in state.rho().as_slice() {
        out.push_str(&format!("{:e} {:e}\n", z.re, z.im));
    }
    out
}
