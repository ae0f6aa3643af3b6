use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use mbv_core::states::{parse_state_text, StatePreset};
use mbv_core::{NoiseModel, NoiseStage, QuantumState, ScenarioId, SpsaConfig};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Independent runs of one configuration.
    Single,
    /// Noiseless convergence for several states of a scenario.
    Convergence,
    /// Final values versus photon pairs per setting.
    ShotNoiseSweep,
    /// Search versus tomography at equal photon budget under angle errors.
    SgaVsCvt,
    /// Search with uncalibrated (offset) settings.
    Untrusted,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Single => "single",
            ExperimentKind::Convergence => "convergence",
            ExperimentKind::ShotNoiseSweep => "shot_noise_sweep",
            ExperimentKind::SgaVsCvt => "sga_vs_cvt",
            ExperimentKind::Untrusted => "untrusted",
        }
    }

    pub fn requires_chsh(self) -> bool {
        matches!(
            self,
            ExperimentKind::ShotNoiseSweep | ExperimentKind::SgaVsCvt | ExperimentKind::Untrusted
        )
    }
}

/// Where the target state comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum StateSpec {
    Preset(StatePreset),
    File { path: PathBuf, state: QuantumState },
}

impl StateSpec {
    /// A preset name, or a path to a state file when no preset matches.
    pub fn parse(s: &str) -> anyhow::Result<Self> {
        match s.parse::<StatePreset>() {
            Ok(p) => Ok(StateSpec::Preset(p)),
            Err(preset_err) => {
                let path = Path::new(s);
                if !path.exists() {
                    bail!("'{s}' is neither a state preset ({preset_err}) nor an existing file");
                }
                let text =
                    std::fs::read_to_string(path).with_context(|| format!("reading state file {}", path.display()))?;
                let state =
                    parse_state_text(&text).with_context(|| format!("parsing state file {}", path.display()))?;
                Ok(StateSpec::File {
                    path: path.to_path_buf(),
                    state,
                })
            }
        }
    }

    pub fn build(&self) -> anyhow::Result<QuantumState> {
        match self {
            StateSpec::Preset(p) => Ok(p.build()?),
            StateSpec::File { state, .. } => Ok(state.clone()),
        }
    }

    pub fn label(&self) -> String {
        match self {
            StateSpec::Preset(p) => p.to_string(),
            StateSpec::File { path, .. } => path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "state".into()),
        }
    }

    pub fn default_for(scenario: ScenarioId) -> Self {
        StateSpec::Preset(match scenario {
            ScenarioId::Chsh => StatePreset::Singlet,
            ScenarioId::Mermin3 => StatePreset::Ghz3,
            ScenarioId::Cglmp3 => StatePreset::MaxEntangledQutrits,
        })
    }
}

impl fmt::Display for StateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateSpec::Preset(p) => write!(f, "{p}"),
            StateSpec::File { path, .. } => write!(f, "{}", path.display()),
        }
    }
}

impl Serialize for StateSpec {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

/// One `--noise` component.
#[derive(Clone, Debug, PartialEq)]
pub enum NoiseOption {
    Ideal,
    Shot(u64),
    Angle(f64),
    Untrusted,
}

impl FromStr for NoiseOption {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        Ok(match (name, arg) {
            ("ideal", None) => NoiseOption::Ideal,
            ("untrusted", None) => NoiseOption::Untrusted,
            ("shot", Some(a)) => {
                let n: u64 = a.parse().with_context(|| format!("bad photon count '{a}'"))?;
                if n == 0 {
                    bail!("shot count must be at least 1");
                }
                NoiseOption::Shot(n)
            }
            ("angle", Some(a)) => {
                let sigma: f64 = a.parse().with_context(|| format!("bad angle sigma '{a}'"))?;
                if !(sigma.is_finite() && sigma >= 0.0) {
                    bail!("angle sigma must be >= 0");
                }
                NoiseOption::Angle(sigma)
            }
            _ => bail!("unknown noise '{s}' (expected ideal, shot:N, angle:SIGMA or untrusted)"),
        })
    }
}

impl fmt::Display for NoiseOption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseOption::Ideal => write!(f, "ideal"),
            NoiseOption::Shot(n) => write!(f, "shot:{n}"),
            NoiseOption::Angle(s) => write!(f, "angle:{s}"),
            NoiseOption::Untrusted => write!(f, "untrusted"),
        }
    }
}

impl Serialize for NoiseOption {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

/// Parses a comma-separated `--noise` value.
pub fn parse_noise_list(s: &str) -> anyhow::Result<Vec<NoiseOption>> {
    let opts: Vec<NoiseOption> = s
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(str::parse)
        .collect::<anyhow::Result<_>>()?;
    if opts.iter().filter(|o| matches!(o, NoiseOption::Shot(_))).count() > 1 {
        bail!("at most one shot:N component");
    }
    Ok(opts.into_iter().filter(|o| *o != NoiseOption::Ideal).collect())
}

/// Builds the noise model for one repetition. Angle-level stages keep their
/// order; an untrusted offset is drawn from `rep_seed`.
pub fn noise_model(options: &[NoiseOption], scenario: ScenarioId, rep_seed: u64) -> NoiseModel {
    let mut model = NoiseModel::ideal();
    let mut shots = None;
    for opt in options {
        match opt {
            NoiseOption::Ideal => {}
            NoiseOption::Shot(n) => shots = Some(*n),
            NoiseOption::Angle(sigma) => model = model.then(NoiseStage::SettingError { sigma: *sigma }),
            NoiseOption::Untrusted => {
                model = model.then(NoiseStage::Untrusted {
                    offset: mbv_core::lab::draw_offset(scenario, rep_seed),
                })
            }
        }
    }
    if let Some(n) = shots {
        model = model.then(NoiseStage::FiniteShot { shots: n });
    }
    model
}

/// Fully resolved experiment description, echoed into every summary.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    /// Scenarios to run; convergence studies may cover several.
    pub scenarios: Vec<ScenarioId>,
    /// Explicit state; `None` uses the experiment's default state(s).
    pub state: Option<StateSpec>,
    /// Gains and iteration count. `iterations = None` means the scenario default.
    pub a: f64,
    pub b: f64,
    pub s: f64,
    pub t: f64,
    pub iterations: Option<usize>,
    pub noise: Vec<NoiseOption>,
    pub repetitions: usize,
    pub seed: u64,
    pub out: PathBuf,
    /// Photon pairs per setting swept by the shot-noise experiment.
    pub shot_levels: Vec<u64>,
    /// Angle-error levels (radians) of the tomography comparison.
    pub angle_levels: Vec<f64>,
    /// Photon pairs per setting for the search in the tomography comparison.
    pub shots: u64,
    /// Tomography repetitions per paired trial.
    pub cvt_reps: usize,
}

impl ExperimentConfig {
    /// Defaults for an experiment writing to `out`.
    pub fn new(experiment: ExperimentKind, out: impl Into<PathBuf>) -> Self {
        let gains = SpsaConfig::default();
        let (repetitions, iterations) = match experiment {
            ExperimentKind::Single | ExperimentKind::Convergence => (1, None),
            ExperimentKind::ShotNoiseSweep => (10, Some(50)),
            ExperimentKind::SgaVsCvt => (10, Some(60)),
            ExperimentKind::Untrusted => (5, Some(50)),
        };
        let scenarios = match experiment {
            ExperimentKind::Convergence => ScenarioId::ALL.to_vec(),
            _ => vec![ScenarioId::Chsh],
        };
        Self {
            experiment,
            scenarios,
            state: None,
            a: gains.a,
            b: gains.b,
            s: gains.s,
            t: gains.t,
            iterations,
            noise: if experiment == ExperimentKind::Untrusted {
                vec![NoiseOption::Untrusted]
            } else {
                Vec::new()
            },
            repetitions,
            seed: 0,
            out: out.into(),
            shot_levels: vec![200, 500, 1000, 5000, 10_000],
            angle_levels: vec![0.02, 0.05, 0.10],
            shots: 1000,
            cvt_reps: 60,
        }
    }

    pub fn with_gains(mut self, gains: &SpsaConfig) -> Self {
        self.a = gains.a;
        self.b = gains.b;
        self.s = gains.s;
        self.t = gains.t;
        self
    }

    /// Optimizer configuration for one repetition.
    pub fn spsa(&self, scenario: ScenarioId, rep_seed: u64) -> SpsaConfig {
        SpsaConfig {
            a: self.a,
            b: self.b,
            s: self.s,
            t: self.t,
            iterations: self
                .iterations
                .unwrap_or_else(|| mbv_core::spsa::default_iterations(scenario)),
            seed: rep_seed,
        }
    }

    /// Seed of repetition `r`: `seed + r`.
    pub fn rep_seed(&self, r: usize) -> u64 {
        self.seed.wrapping_add(r as u64)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.repetitions == 0 {
            bail!("repetitions must be at least 1");
        }
        if self.scenarios.is_empty() {
            bail!("no scenario selected");
        }
        if self.experiment.requires_chsh() && self.scenarios != [ScenarioId::Chsh] {
            bail!("experiment '{}' requires the chsh scenario", self.experiment.name());
        }
        for &sc in &self.scenarios {
            self.spsa(sc, 0).validate()?;
        }
        if let Some(state) = &self.state {
            let st = state.build()?;
            for &sc in &self.scenarios {
                let need = sc.scenario().state_dim();
                if st.dim() != need {
                    bail!("state '{state}' has dimension {}, scenario {sc} needs {need}", st.dim());
                }
            }
        }
        match self.experiment {
            ExperimentKind::ShotNoiseSweep => {
                if self.shot_levels.is_empty() || self.shot_levels.contains(&0) {
                    bail!("shot levels must be non-empty and positive");
                }
            }
            ExperimentKind::SgaVsCvt => {
                if self.angle_levels.is_empty() || self.angle_levels.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
                    bail!("angle levels must be non-empty and >= 0");
                }
                if self.shots == 0 || self.cvt_reps == 0 {
                    bail!("shots and cvt repetitions must be positive");
                }
                if self.noise.iter().any(|n| matches!(n, NoiseOption::Untrusted)) {
                    bail!("tomography cannot run with untrusted devices");
                }
            }
            _ => {}
        }
        Ok(())
    }
}
