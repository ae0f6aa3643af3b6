//! Self-guided search for maximal Bell violations.
//!
//! The crate is organised bottom-up:
//!
//! - [`quantum`]: dense complex matrices, density matrices, Hermitian
//!   eigendecomposition, `exp(iH)` and the Gell-Mann generators.
//! - [`scenario`]: CHSH, Mermin and CGLMP (d = 3) scenarios, the map from a
//!   flat settings vector to local measurements, and noiseless Bell values.
//! - [`spsa`]: the stochastic gradient ascent that only ever queries an
//!   [`Oracle`].
//! - [`lab`]: simulated experiments with finite statistics, angle errors and
//!   uncalibrated devices.
//! - [`tomography`]: the full-tomography baseline for two qubits.
//! - [`states`] and [`reference`]: target states and brute-force reference values.

pub mod error;
pub mod lab;
pub mod quantum;
pub mod reference;
pub mod scenario;
pub mod spsa;
pub mod states;
pub mod tomography;

pub use error::{Error, Result};
pub use lab::{make_untrusted, true_joint_distribution, MeasurementOracle, NoiseModel, NoiseStage};
pub use quantum::{ComplexMatrix, HermitianGenerator, QuantumState, C64};
pub use scenario::{bell_value, build_measurements, quantum_maximum, BellScenario, ScenarioId, SettingsVector};
pub use spsa::{gain_schedule, run, spsa_step, IterationRecord, Oracle, RunTrace, SpsaConfig};
pub use states::StatePreset;
pub use tomography::{
    chsh_mbv_from_state, cvt_run, reconstruct, tomography_measure, ReconstructedState, TomographyData,
};
