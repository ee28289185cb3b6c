use criterion::{black_box, criterion_group, criterion_main, Criterion};
use tripprice::equilibrium::{calibrate_demand, solve_sue, SolverConfig};
use tripprice::netmodel::builtin;
use tripprice::optimizer::{minimize, OptimizerConfig};
use tripprice::pricing::{objective, DesignProblem, Priceable, SchemeKind, Weights};

fn equilibrium(c: &mut Criterion) {
    let cfg = SolverConfig::default();
    let car = builtin("nd-car-only").unwrap();
    let zero = vec![0.0; car.paths().len()];
    c.bench_function("sue/nd-car-only", |b| b.iter(|| solve_sue(black_box(&car), &zero, &cfg).unwrap()));

    let base = builtin("nd-multimodal").unwrap();
    let calibrated = calibrate_demand(&base, &vec![2000.0; base.ods().len()], &cfg).unwrap().scenario;
    let zero = vec![0.0; calibrated.paths().len()];
    c.bench_function("sue/nd-multimodal", |b| b.iter(|| solve_sue(black_box(&calibrated), &zero, &cfg).unwrap()));
}

fn pricing(c: &mut Criterion) {
    let s = builtin("nd-car-only").unwrap();
    for scheme in [SchemeKind::Trip, SchemeKind::Road] {
        let problem =
            DesignProblem::new(s.clone(), scheme, Priceable::CarOnly, Weights::preset("all").unwrap(), None, SolverConfig::default()).unwrap();
        let x: Vec<f64> = (0..problem.dimension()).map(|i| (i % 5) as f64 * 0.5).collect();
        c.bench_function(&format!("objective/{scheme}/all"), |b| b.iter(|| objective(&problem, black_box(&x)).unwrap()));
    }

    let problem =
        DesignProblem::new(s, SchemeKind::Trip, Priceable::CarOnly, Weights::preset("eff").unwrap(), None, SolverConfig::default()).unwrap();
    let cfg = OptimizerConfig {
        population: 20,
        generations: 10,
        restarts: 1,
        polish_evals: 50,
        threads: Some(1),
        ..OptimizerConfig::default()
    };
    let mut group = c.benchmark_group("search");
    group.sample_size(10);
    group.bench_function("trip/eff/small", |b| b.iter(|| minimize(&problem, &cfg, &[]).unwrap()));
    group.finish();
}

criterion_group!(benches, equilibrium, pricing);
criterion_main!(benches);
