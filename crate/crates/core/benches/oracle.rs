//! Parallel vs sequential evaluation of the exhaustive oracle and of fault
//! sweeps.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64;
use std::hint::black_box;
use vsc_fault::io::case::Case;
use vsc_fault::network::{BusId, FaultKind, FaultSpec};
use vsc_fault::random::{generate, GeneratorConfig};
use vsc_fault::saturation::{exhaustive_oracle, sweep, AlgorithmOptions, Execution, ENUMERATION_CAP};

const MODES: [(&str, Execution); 2] = [("parallel", Execution::Parallel), ("sequential", Execution::Sequential)];

fn oracle(c: &mut Criterion) {
    let opts = AlgorithmOptions::default();
    let ts2 = Case::test_system_2().fault_ready(&opts).expect("fixture pre-fault point");
    let fault = FaultSpec { bus: BusId("12".into()), kind: FaultKind::ThreePhaseToGround, z_ft: Complex64::new(0.0, 0.05) };
    let mut g = c.benchmark_group("oracle_test_system_2");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| exhaustive_oracle(black_box(&ts2), &fault, &opts.solve, exec, ENUMERATION_CAP).unwrap())
        });
    }
    g.finish();
}

fn random_sweep(c: &mut Criterion) {
    let opts = AlgorithmOptions::default();
    let cfg = GeneratorConfig { min_converters: 3, ..GeneratorConfig::default() };
    let cases: Vec<_> = (0..8).map(|seed| generate(seed, &cfg)).collect();
    let mut g = c.benchmark_group("sweep_random");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                for case in &cases {
                    let faults = FaultKind::ALL_FAULTS
                        .iter()
                        .flat_map(|k| {
                            case.system.network.buses.iter().map(move |bus| FaultSpec {
                                bus: bus.id.clone(),
                                kind: *k,
                                z_ft: case.z_ft,
                            })
                        })
                        .collect();
                    black_box(sweep(&case.system, faults, &opts, exec).unwrap());
                }
            })
        });
    }
    g.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = oracle, random_sweep
}
criterion_main!(benches);
