//! Probe-batch throughput: sequential vs. rayon execution.
//!
//! One probe batch is `m + 1` independent forward solves of the neural
//! field, which is exactly the workload the monotone descent spends almost
//! all of its time on.  On a multi-core host the rayon path should win by
//! roughly the core count (capped by `m + 1`); on a single core the two
//! should tie, which is itself worth knowing.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use banach_oc::dynamics::{ControlTrajectory, TimeGrid};
use banach_oc::exec::Parallelism;
use banach_oc::monotone::probe_xi;
use banach_oc::spectral::{CircleGrid, GridFunction};
use banach_oc::systems::{AmariParams, AmariSystem, ControlAffineSystem, ControlVector};

struct Setup {
    system: AmariSystem,
    ubar: ControlTrajectory,
    x: GridFunction,
}

fn setup() -> Setup {
    let params = AmariParams::default();
    let grid = CircleGrid::new(64).unwrap();
    let system = AmariSystem::new(params, grid).unwrap();
    let tgrid = TimeGrid::new(3.0, 150).unwrap();
    let m = system.control_dim();
    let values: Vec<ControlVector> = (0..150)
        .map(|i| {
            ControlVector(
                (0..m)
                    .map(|j| 0.4 * ((i * (j + 1)) as f64 * 0.13).sin())
                    .collect(),
            )
        })
        .collect();
    let ubar = ControlTrajectory::new(tgrid, values).unwrap();
    let x = GridFunction::from_fn(grid, |theta| 0.3 * theta.cos());
    Setup { system, ubar, x }
}

fn bench_probe_batch(c: &mut Criterion) {
    let s = setup();
    let mut group = c.benchmark_group("probe_batch");
    group.sample_size(20);

    let mut modes: Vec<(&str, Parallelism)> = vec![("sequential", Parallelism::Sequential)];
    #[cfg(feature = "parallel")]
    modes.push(("rayon", Parallelism::Rayon));

    for (name, par) in modes {
        group.bench_with_input(BenchmarkId::from_parameter(name), &par, |b, par| {
            b.iter(|| {
                // Probe at an early node so each solve covers most of the
                // horizon, like the costly early subintervals of a sweep.
                probe_xi(&s.system, &s.ubar, 10, &s.x, 1.0 / 32.0, par).unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, bench_probe_batch);
criterion_main!(benches);
