use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use mbv_core::spsa::run_from_random_start;
use mbv_core::states;
use mbv_core::tomography::tomography_measure;
use mbv_core::{bell_value, reconstruct, MeasurementOracle, NoiseModel, ScenarioId, SpsaConfig};

fn bell_values(c: &mut Criterion) {
    let cases = [
        (ScenarioId::Chsh, states::singlet()),
        (ScenarioId::Mermin3, states::ghz3()),
        (ScenarioId::Cglmp3, states::max_entangled_qutrits()),
    ];
    for (sc, st) in cases {
        let theta: Vec<f64> = (0..sc.scenario().theta_dim()).map(|i| 0.37 * i as f64).collect();
        c.bench_function(&format!("bell_value/{sc}"), |b| {
            b.iter(|| bell_value(black_box(&st), sc, black_box(&theta)).unwrap())
        });
    }
}

fn spsa_runs(c: &mut Criterion) {
    let cfg = SpsaConfig::for_scenario(ScenarioId::Chsh);
    c.bench_function("spsa/chsh_ideal_50", |b| {
        b.iter(|| {
            let mut o = MeasurementOracle::ideal(states::singlet(), ScenarioId::Chsh).unwrap();
            run_from_random_start(&mut o, ScenarioId::Chsh, &cfg)
                .unwrap()
                .final_value
        })
    });
    c.bench_function("spsa/chsh_shot1000_50", |b| {
        b.iter(|| {
            let mut o =
                MeasurementOracle::new(states::singlet(), ScenarioId::Chsh, NoiseModel::finite_shot(1000), 1).unwrap();
            run_from_random_start(&mut o, ScenarioId::Chsh, &cfg)
                .unwrap()
                .final_value
        })
    });
}

fn tomography(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let data = tomography_measure(&states::singlet(), 1000, &NoiseModel::ideal(), &mut rng).unwrap();
    c.bench_function("tomography/reconstruct", |b| {
        b.iter(|| reconstruct(black_box(&data)).unwrap())
    });
}

criterion_group!(benches, bell_values, spsa_runs, tomography);
criterion_main!(benches);
