//! The default gains decay too fast to leave a random start, so these runs
//! use `SpsaConfig::calibrated` and check the same thresholds the acceptance
//! suite applies to the defaults.

use mbv_cli::{run_experiment, ExperimentConfig, ExperimentKind, ExperimentReport, StateSpec};
use mbv_core::states::StatePreset;
use mbv_core::{ScenarioId, SpsaConfig};

fn calibrated(
    kind: ExperimentKind,
    scenario: ScenarioId,
    tweak: impl FnOnce(&mut ExperimentConfig),
) -> ExperimentReport {
    let dir = tempfile::tempdir().unwrap();
    let mut c = ExperimentConfig::new(kind, dir.path()).with_gains(&SpsaConfig::calibrated(scenario));
    c.scenarios = vec![scenario];
    tweak(&mut c);
    run_experiment(&c).unwrap()
}

fn median(v: &[f64]) -> f64 {
    let mut v = v.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    0.5 * (v[v.len() / 2 - 1] + v[v.len() / 2])
}

#[test]
fn chsh_singlet_converges() {
    let r = calibrated(ExperimentKind::Single, ScenarioId::Chsh, |c| {
        c.iterations = Some(50);
        c.repetitions = 10;
    });
    assert!(median(&r.summary.final_values) >= 2.80, "{:?}", r.summary.final_values);
    assert!((r.summary.max - 2.8284).abs() <= 0.01);
}

#[test]
fn mermin_ghz_converges() {
    let r = calibrated(ExperimentKind::Single, ScenarioId::Mermin3, |c| {
        c.state = Some(StateSpec::Preset(StatePreset::Ghz3));
        c.iterations = Some(80);
        c.repetitions = 10;
    });
    assert!(median(&r.summary.final_values) >= 3.95, "{:?}", r.summary.final_values);
}

#[test]
fn cglmp_improves_on_local_bound_but_stays_short_of_maximum() {
    let r = calibrated(ExperimentKind::Single, ScenarioId::Cglmp3, |c| {
        c.iterations = Some(100);
        c.repetitions = 10;
    });
    let med = median(&r.summary.final_values);
    assert!(med > 2.0, "{med}");
    assert!(med < 2.8729, "{med}");
}

#[test]
fn shot_noise_sweep() {
    let r = calibrated(ExperimentKind::ShotNoiseSweep, ScenarioId::Chsh, |c| {
        c.shot_levels = vec![200, 1000, 10_000];
    });
    let stats: Vec<(f64, f64)> = r.groups.iter().map(|g| (g.summary.mean, g.summary.std)).collect();
    assert!((2.65..=2.83).contains(&stats[0].0), "{stats:?}");
    for w in stats.windows(2) {
        assert!(w[1].0 >= w[0].0 - w[0].1.max(w[1].1), "{stats:?}");
    }
}

#[test]
fn search_beats_tomography_under_angle_errors() {
    let r = calibrated(ExperimentKind::SgaVsCvt, ScenarioId::Chsh, |_| {});
    for g in r.groups.iter().filter(|g| g.sigma.unwrap() >= 0.05) {
        let cvt = g.cvt.as_ref().unwrap().trial_means.mean;
        assert!(g.summary.mean >= cvt, "{}: {} < {cvt}", g.name, g.summary.mean);
    }
}

#[test]
fn untrusted_devices() {
    let r = calibrated(ExperimentKind::Untrusted, ScenarioId::Chsh, |_| {});
    assert_eq!(r.summary.final_values.len(), 5);
    assert!(
        r.summary.final_values.iter().all(|v| *v >= 2.78),
        "{:?}",
        r.summary.final_values
    );
}
