use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use mbv_core::reference::numeric_mbv;
use mbv_core::spsa::run_from_random_start;
use mbv_core::states::StatePreset;
use mbv_core::tomography::matched_shots_per_setting;
use mbv_core::{chsh_mbv_from_state, cvt_run, MeasurementOracle, NoiseModel, QuantumState, RunTrace, ScenarioId};

use crate::config::{noise_model, ExperimentConfig, ExperimentKind, NoiseOption, StateSpec};
use crate::summary::{write_json_atomic, Summary};
use crate::trace::write_trace;

/// RNG stream of the tomography baseline.
pub const CVT_STREAM: u64 = 2;

/// Restarts used for numeric reference values in convergence studies.
pub const REFERENCE_RESTARTS: usize = 8;

/// One batch of repetitions sharing scenario, state and noise.
#[derive(Clone, Debug)]
struct Group {
    name: String,
    scenario: ScenarioId,
    state: StateSpec,
    noise: Vec<NoiseOption>,
    shots: Option<u64>,
    sigma: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CvtSummary {
    pub shots_per_setting: u64,
    pub reps_per_trial: usize,
    /// Mean tomography estimate of each paired trial.
    pub trial_means: Summary,
}

#[derive(Clone, Debug, Serialize)]
pub struct GroupSummary {
    pub name: String,
    pub scenario: ScenarioId,
    pub state: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shots: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_value: Option<f64>,
    /// Trace paths relative to the output directory, one per repetition.
    pub traces: Vec<String>,
    #[serde(flatten)]
    pub summary: Summary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cvt: Option<CvtSummary>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    #[serde(flatten)]
    pub summary: Summary,
    pub wall_time_seconds: f64,
    pub groups: Vec<GroupSummary>,
}

struct RepOutcome {
    trace: RunTrace,
    cvt: Vec<f64>,
}

fn file_safe(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '.' || c == '-' || c == '_' {
                c
            } else {
                '-'
            }
        })
        .collect()
}

fn groups(config: &ExperimentConfig) -> Vec<Group> {
    let base = |scenario: ScenarioId, state: StateSpec, noise: Vec<NoiseOption>| Group {
        name: file_safe(&format!("{scenario}-{}", state.label())),
        scenario,
        state,
        noise,
        shots: None,
        sigma: None,
    };
    let without_shots = |opts: &[NoiseOption]| -> Vec<NoiseOption> {
        opts.iter()
            .filter(|o| !matches!(o, NoiseOption::Shot(_)))
            .cloned()
            .collect()
    };
    match config.experiment {
        ExperimentKind::Single => {
            let sc = config.scenarios[0];
            let state = config.state.clone().unwrap_or_else(|| StateSpec::default_for(sc));
            let mut g = base(sc, state, config.noise.clone());
            g.shots = config.noise.iter().find_map(|o| match o {
                NoiseOption::Shot(n) => Some(*n),
                _ => None,
            });
            vec![g]
        }
        ExperimentKind::Convergence => config
            .scenarios
            .iter()
            .flat_map(|&sc| {
                let states: Vec<StateSpec> = match &config.state {
                    Some(s) => vec![s.clone()],
                    None => StatePreset::convergence_set(sc)
                        .into_iter()
                        .map(StateSpec::Preset)
                        .collect(),
                };
                states.into_iter().map(move |st| (sc, st))
            })
            .map(|(sc, st)| base(sc, st, config.noise.clone()))
            .collect(),
        ExperimentKind::ShotNoiseSweep => {
            let state = config
                .state
                .clone()
                .unwrap_or_else(|| StateSpec::default_for(ScenarioId::Chsh));
            config
                .shot_levels
                .iter()
                .map(|&n| {
                    let mut noise = without_shots(&config.noise);
                    noise.push(NoiseOption::Shot(n));
                    let mut g = base(ScenarioId::Chsh, state.clone(), noise);
                    g.name = format!("shots-{n}");
                    g.shots = Some(n);
                    g
                })
                .collect()
        }
        ExperimentKind::SgaVsCvt => {
            let state = config
                .state
                .clone()
                .unwrap_or_else(|| StateSpec::default_for(ScenarioId::Chsh));
            config
                .angle_levels
                .iter()
                .map(|&sigma| {
                    let mut noise: Vec<NoiseOption> = without_shots(&config.noise)
                        .into_iter()
                        .filter(|o| !matches!(o, NoiseOption::Angle(_)))
                        .collect();
                    noise.push(NoiseOption::Angle(sigma));
                    noise.push(NoiseOption::Shot(config.shots));
                    let mut g = base(ScenarioId::Chsh, state.clone(), noise);
                    g.name = file_safe(&format!("angle-{sigma}"));
                    g.shots = Some(config.shots);
                    g.sigma = Some(sigma);
                    g
                })
                .collect()
        }
        ExperimentKind::Untrusted => {
            let state = config
                .state
                .clone()
                .unwrap_or_else(|| StateSpec::default_for(ScenarioId::Chsh));
            let mut noise = config.noise.clone();
            if !noise.contains(&NoiseOption::Untrusted) {
                noise.insert(0, NoiseOption::Untrusted);
            }
            let mut g = base(ScenarioId::Chsh, state, noise);
            g.name = "untrusted".into();
            vec![g]
        }
    }
}

fn trace_path(group: &Group, rep: usize) -> String {
    format!("traces/{}/rep-{rep:03}.csv", group.name)
}

fn run_rep(config: &ExperimentConfig, group: &Group, state: &QuantumState, rep: usize) -> anyhow::Result<RepOutcome> {
    let seed = config.rep_seed(rep);
    let sc = group.scenario;
    let noise = noise_model(&group.noise, sc, seed);
    let spsa = config.spsa(sc, seed);
    let mut oracle = MeasurementOracle::new(state.clone(), sc, noise, seed)?;
    let trace = run_from_random_start(&mut oracle, sc, &spsa)?;

    let mut cvt = Vec::new();
    if let Some(sigma) = group.sigma {
        let per_setting = matched_shots_per_setting(spsa.iterations, config.shots, config.cvt_reps);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(CVT_STREAM);
        let model = NoiseModel::setting_error(sigma);
        for _ in 0..config.cvt_reps {
            cvt.push(cvt_run(state, per_setting, &model, &mut rng)?);
        }
    }
    Ok(RepOutcome { trace, cvt })
}

fn reference_value(scenario: ScenarioId, state: &QuantumState, seed: u64) -> anyhow::Result<f64> {
    Ok(match scenario {
        ScenarioId::Chsh => chsh_mbv_from_state(state)?,
        _ => numeric_mbv(state, scenario, REFERENCE_RESTARTS, seed)?,
    })
}

/// Runs every repetition, writes traces (and `cvt.csv` for the tomography
/// comparison), then writes `summary.json` last. Nothing is written when the
/// configuration is invalid.
pub fn run_experiment(config: &ExperimentConfig) -> anyhow::Result<ExperimentReport> {
    config.validate()?;
    let start = Instant::now();
    let groups = groups(config);
    let states: Vec<QuantumState> = groups.iter().map(|g| g.state.build()).collect::<anyhow::Result<_>>()?;
    for (g, st) in groups.iter().zip(&states) {
        noise_model(&g.noise, g.scenario, 0).validate(g.scenario.scenario().theta_dim())?;
        let need = g.scenario.scenario().state_dim();
        anyhow::ensure!(
            st.dim() == need,
            "state '{}' does not fit scenario {}",
            g.state,
            g.scenario
        );
    }

    let jobs: Vec<(usize, usize)> = (0..groups.len())
        .flat_map(|gi| (0..config.repetitions).map(move |r| (gi, r)))
        .collect();
    let outcomes: Vec<RepOutcome> = jobs
        .par_iter()
        .map(|&(gi, r)| run_rep(config, &groups[gi], &states[gi], r))
        .collect::<anyhow::Result<_>>()?;

    let references: Vec<Option<f64>> = if config.experiment == ExperimentKind::Convergence {
        groups
            .par_iter()
            .zip(&states)
            .map(|(g, st)| reference_value(g.scenario, st, config.seed).map(Some))
            .collect::<anyhow::Result<_>>()?
    } else {
        vec![None; groups.len()]
    };

    std::fs::create_dir_all(&config.out).with_context(|| format!("creating {}", config.out.display()))?;
    let mut cvt_writer = if config.experiment == ExperimentKind::SgaVsCvt {
        let mut w = csv::Writer::from_path(config.out.join("cvt.csv"))?;
        w.write_record(["sigma", "trial", "rep", "shots_per_setting", "estimate"])?;
        Some(w)
    } else {
        None
    };

    let mut group_summaries = Vec::with_capacity(groups.len());
    let mut all_finals = Vec::new();
    let mut all_shots = 0u64;
    for (gi, group) in groups.iter().enumerate() {
        let mut finals = Vec::new();
        let mut paths = Vec::new();
        let mut shots = 0u64;
        let mut cvt_means = Vec::new();
        let mut cvt_shots = 0u64;
        let per_setting =
            matched_shots_per_setting(config.spsa(group.scenario, 0).iterations, config.shots, config.cvt_reps);
        for r in 0..config.repetitions {
            let out = &outcomes[gi * config.repetitions + r];
            let rel = trace_path(group, r);
            write_trace(&out.trace, &config.out.join(&rel))?;
            paths.push(rel);
            finals.push(out.trace.final_value);
            shots += out.trace.total_shots();
            if let (Some(w), Some(sigma)) = (cvt_writer.as_mut(), group.sigma) {
                for (i, v) in out.cvt.iter().enumerate() {
                    w.write_record([
                        sigma.to_string(),
                        r.to_string(),
                        i.to_string(),
                        per_setting.to_string(),
                        v.to_string(),
                    ])?;
                }
                cvt_means.push(out.cvt.iter().sum::<f64>() / out.cvt.len() as f64);
                cvt_shots += 9 * per_setting * out.cvt.len() as u64;
            }
        }
        all_finals.extend_from_slice(&finals);
        all_shots += shots;
        let cvt = if group.sigma.is_some() {
            Some(CvtSummary {
                shots_per_setting: per_setting,
                reps_per_trial: config.cvt_reps,
                trial_means: Summary::from_values(cvt_means, cvt_shots)?,
            })
        } else {
            None
        };
        group_summaries.push(GroupSummary {
            name: group.name.clone(),
            scenario: group.scenario,
            state: group.state.to_string(),
            shots: group.shots,
            sigma: group.sigma,
            reference_value: references[gi],
            traces: paths,
            summary: Summary::from_values(finals, shots)?,
            cvt,
        });
    }
    if let Some(mut w) = cvt_writer {
        w.flush()?;
    }

    let report = ExperimentReport {
        config: config.clone(),
        summary: Summary::from_values(all_finals, all_shots)?,
        wall_time_seconds: start.elapsed().as_secs_f64(),
        groups: group_summaries,
    };
    write_json_atomic(&report, &summary_path(&config.out))?;
    Ok(report)
}

pub fn summary_path(out: &Path) -> PathBuf {
    out.join("summary.json")
}
