//! Built-in invariant checks, runnable in the field via `banach-oc
//! selftest`.
//!
//! Each check exercises one structural guarantee end to end — quadrature
//! exactness, spectral round trips, the flow semigroup property, the
//! adjoint gradient against finite differences, the exact cost-increment
//! identity, probe/adjoint route agreement, the closed-form toy optimum,
//! smoothing arithmetic, and bit-level determinism of a descent run — and
//! reports one pass/fail line.  The process exits nonzero if any fail.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use banach_oc::cost::{cost_gradient, increment, pair_gradient, total_cost};
use banach_oc::dynamics::{integrate_adjoint, integrate_forward, ControlTrajectory, TimeGrid};
use banach_oc::exec::Parallelism;
use banach_oc::monotone::{
    assemble_probe_vector, monotone_descend, probe_xi, smooth_control, MonotoneConfig,
};
use banach_oc::pmp::{pmp_descend, PmpConfig};
use banach_oc::spectral::{circular_convolution, dft, idft, quadrature, CircleGrid, GridFunction};
use banach_oc::systems::{
    lq_toy_system, AmariParams, AmariSystem, ControlAffineSystem, ControlVector, LqToyParams,
};

type Check = fn() -> Result<String, String>;

/// Run every check; returns `Ok(true)` when all of them pass.
pub fn run() -> anyhow::Result<bool> {
    let checks: &[(&str, Check)] = &[
        ("quadrature trig exactness", check_quadrature),
        ("spectral round trip", check_dft_round_trip),
        ("convolution dual route", check_convolution),
        ("flow semigroup", check_semigroup),
        ("adjoint gradient vs finite differences", check_gradient),
        ("exact cost-increment identity", check_increment),
        ("probe route vs adjoint route", check_probe_route),
        ("toy oracle via adjoint descent", check_lq_pmp),
        ("toy oracle via sample-and-hold", check_lq_monotone),
        ("smoothing window arithmetic", check_smoothing),
        ("descent determinism", check_determinism),
    ];
    let mut all = true;
    for (name, check) in checks {
        match check() {
            Ok(detail) => println!("ok   {name}: {detail}"),
            Err(detail) => {
                all = false;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!(
        "selftest: {}",
        if all { "all checks passed" } else { "FAILURES present" }
    );
    Ok(all)
}

fn core_err(e: banach_oc::Error) -> String {
    e.to_string()
}

fn random_grid_function(grid: CircleGrid, seed: u64) -> GridFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    GridFunction::new(grid, (0..grid.n()).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .expect("random samples are finite")
}

fn random_control(grid: TimeGrid, m: usize, amplitude: f64, seed: u64) -> ControlTrajectory {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..grid.steps())
        .map(|_| ControlVector((0..m).map(|_| rng.gen_range(-amplitude..amplitude)).collect()))
        .collect();
    ControlTrajectory::new(grid, values).expect("random control matches the grid")
}

fn cost_of<S: ControlAffineSystem>(
    system: &S,
    x0: &S::State,
    u: &ControlTrajectory,
) -> Result<f64, String> {
    let path =
        integrate_forward(system, x0, u, 0, u.grid().steps()).map_err(core_err)?;
    Ok(total_cost(system, &path, u).map_err(core_err)?.total)
}

fn small_field() -> Result<AmariSystem, String> {
    let grid = CircleGrid::new(64).map_err(core_err)?;
    AmariSystem::new(AmariParams::default(), grid).map_err(core_err)
}

fn check_quadrature() -> Result<String, String> {
    let grid = CircleGrid::new(64).map_err(core_err)?;
    let sq = GridFunction::from_fn(grid, |t| t.cos() * t.cos());
    let err = (quadrature(&sq) - PI).abs();
    if err > 1e-12 {
        return Err(format!("integral of cos^2 off by {err:.3e}"));
    }
    Ok(format!("cos^2 integral error {err:.1e}"))
}

fn check_dft_round_trip() -> Result<String, String> {
    let grid = CircleGrid::new(64).map_err(core_err)?;
    let y = random_grid_function(grid, 1);
    let back = idft(grid, &dft(&y)).map_err(core_err)?;
    let sup = y
        .values()
        .iter()
        .zip(back.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    if sup > 1e-12 {
        return Err(format!("round-trip sup error {sup:.3e}"));
    }
    Ok(format!("round-trip sup error {sup:.1e}"))
}

fn check_convolution() -> Result<String, String> {
    let n = 128;
    let grid = CircleGrid::new(n).map_err(core_err)?;
    // Unit-mass kernel: the constant function must pass through unchanged.
    let w = GridFunction::from_fn(grid, |t| (1.0 + 0.5 * t.cos()) / TAU);
    let y = random_grid_function(grid, 2);

    let fast = circular_convolution(&w, &y).map_err(core_err)?;
    let dtheta = TAU / n as f64;
    let mut sup = 0.0f64;
    for i in 0..n {
        let direct: f64 = (0..n)
            .map(|j| w.values()[(i + n - j) % n] * y.values()[j])
            .sum::<f64>()
            * dtheta;
        sup = sup.max((fast.values()[i] - direct).abs());
    }
    if sup > 1e-10 {
        return Err(format!("spectral vs direct-sum sup error {sup:.3e}"));
    }

    let ones = GridFunction::constant(grid, 1.0);
    let through = circular_convolution(&w, &ones).map_err(core_err)?;
    let mass_err = through
        .values()
        .iter()
        .map(|v| (v - 1.0).abs())
        .fold(0.0f64, f64::max);
    if mass_err > 1e-12 {
        return Err(format!("unit-mass kernel distorts constants by {mass_err:.3e}"));
    }
    Ok(format!("dual-route sup error {sup:.1e}, mass error {mass_err:.1e}"))
}

fn check_semigroup() -> Result<String, String> {
    let system = small_field()?;
    let grid = TimeGrid::new(1.5, 90).map_err(core_err)?;
    let u = random_control(grid, system.control_dim(), 0.3, 3);
    let x0 = GridFunction::from_fn(system.grid(), |t| 0.3 * t.cos());

    let full = integrate_forward(&system, &x0, &u, 0, 90).map_err(core_err)?;
    let first = integrate_forward(&system, &x0, &u, 0, 45).map_err(core_err)?;
    let second = integrate_forward(&system, first.terminal(), &u, 45, 90).map_err(core_err)?;

    if second.terminal().values() != full.terminal().values() {
        let sup = second
            .terminal()
            .values()
            .iter()
            .zip(full.terminal().values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        return Err(format!("composed flow deviates by {sup:.3e}"));
    }
    Ok("composed and direct flows agree bitwise".into())
}

fn check_gradient() -> Result<String, String> {
    let system = lq_toy_system(LqToyParams {
        alpha: 0.7,
        target: 1.3,
        horizon: 2.0,
    })
    .map_err(core_err)?;
    let grid = TimeGrid::new(2.0, 240).map_err(core_err)?;
    let u = random_control(grid, 1, 0.5, 7);
    let x0 = 0.0;

    let x = integrate_forward(&system, &x0, &u, 0, 240).map_err(core_err)?;
    let psi = integrate_adjoint(&system, &x, &u).map_err(core_err)?;
    let grad = cost_gradient(&system, &x, &psi, &u).map_err(core_err)?;

    let eta = 1e-5;
    let mut worst = 0.0f64;
    for seed in [8, 9, 10] {
        let d = random_control(grid, 1, 1.0, seed);
        let predicted = pair_gradient(&grad, &d);

        let mut up = u.clone();
        let mut down = u.clone();
        for i in 0..240 {
            up.values_mut()[i].scaled_add(eta, d.at(i));
            down.values_mut()[i].scaled_add(-eta, d.at(i));
        }
        let fd = (cost_of(&system, &x0, &up)? - cost_of(&system, &x0, &down)?) / (2.0 * eta);
        let rel = (predicted - fd).abs() / fd.abs().max(1e-12);
        worst = worst.max(rel);
    }
    if worst > 1e-6 {
        return Err(format!("worst relative gradient error {worst:.3e}"));
    }
    Ok(format!("worst relative gradient error {worst:.1e}"))
}

fn check_increment() -> Result<String, String> {
    let system = lq_toy_system(LqToyParams::default()).map_err(core_err)?;
    let grid = TimeGrid::new(1.0, 160).map_err(core_err)?;
    let ubar = ControlTrajectory::constant(grid, ControlVector(vec![0.2]));
    let u = ControlTrajectory::constant(grid, ControlVector(vec![0.7]));
    let x0 = 0.0;

    // For the scalar integrator the terminal cost pulled back along the
    // baseline flow is 1/2 (x + 0.2 (T - t) - target)^2, so its gradient
    // along the path of `u` is available in closed form.
    let path = integrate_forward(&system, &x0, &u, 0, 160).map_err(core_err)?;
    let target = system.params().target;
    let horizon = system.params().horizon;
    let probes: Vec<ControlVector> = (0..=160)
        .map(|i| {
            let t = grid.node(i);
            ControlVector(vec![path.state(i) + 0.2 * (horizon - t) - target])
        })
        .collect();

    let predicted = increment(&system, &ubar, &u, &probes).map_err(core_err)?;
    let actual = cost_of(&system, &x0, &u)? - cost_of(&system, &x0, &ubar)?;
    let err = (predicted - actual).abs();
    if err > 1e-12 {
        return Err(format!(
            "identity off by {err:.3e} (predicted {predicted:.6e}, actual {actual:.6e})"
        ));
    }
    Ok(format!("identity error {err:.1e}"))
}

fn check_probe_route() -> Result<String, String> {
    let system = small_field()?;
    let grid = TimeGrid::new(1.5, 90).map_err(core_err)?;
    let ubar = random_control(grid, system.control_dim(), 0.2, 11);
    let x0 = GridFunction::zeros(system.grid());

    let xbar = integrate_forward(&system, &x0, &ubar, 0, 90).map_err(core_err)?;
    let psi = integrate_adjoint(&system, &xbar, &ubar).map_err(core_err)?;

    let step = 30;
    let t = grid.node(step);
    let via_adjoint = system.control_adjoint(t, xbar.state(step), psi.state(step));

    let probe = probe_xi(&system, &ubar, step, xbar.state(step), 1e-4, &Parallelism::Sequential)
        .map_err(core_err)?;
    let via_probe = assemble_probe_vector(&system, t, xbar.state(step), &probe);

    let mut diff = via_probe.clone();
    diff.scaled_add(-1.0, &via_adjoint);
    let rel = diff.norm() / via_adjoint.norm().max(1e-12);
    if rel > 1e-3 {
        return Err(format!("probe and adjoint routes disagree by {rel:.3e} (relative)"));
    }
    Ok(format!("route disagreement {rel:.1e} (relative)"))
}

fn check_lq_pmp() -> Result<String, String> {
    let system = lq_toy_system(LqToyParams::default()).map_err(core_err)?;
    let grid = TimeGrid::new(1.0, 640).map_err(core_err)?;
    let u0 = ControlTrajectory::zero(grid, 1);
    let report =
        pmp_descend(&system, &0.0, &u0, &PmpConfig::default()).map_err(core_err)?;

    let rel = (report.final_cost().total - system.optimal_cost()).abs() / system.optimal_cost();
    let dev = report
        .control
        .sup_distance(&ControlTrajectory::constant(
            grid,
            ControlVector(vec![system.optimal_constant()]),
        ));
    if !report.monotone_ok(0.0) {
        return Err("cost log is not nonincreasing".into());
    }
    if rel > 1e-6 || dev > 1e-3 {
        return Err(format!("cost off by {rel:.3e} (relative), control off by {dev:.3e}"));
    }
    Ok(format!("cost error {rel:.1e}, control sup deviation {dev:.1e}"))
}

fn check_lq_monotone() -> Result<String, String> {
    let system = lq_toy_system(LqToyParams::default()).map_err(core_err)?;
    let grid = TimeGrid::new(1.0, 640).map_err(core_err)?;
    let u0 = ControlTrajectory::zero(grid, 1);
    let cfg = MonotoneConfig {
        subintervals: 64,
        epsilon: 1.0 / 4096.0,
        max_iters: 60,
        tol_rel: 1e-12,
        ..MonotoneConfig::default()
    };
    let report = monotone_descend(&system, &0.0, &u0, &cfg).map_err(core_err)?;

    let rel = (report.final_cost().total - system.optimal_cost()).abs() / system.optimal_cost();
    let dev = report
        .control
        .sup_distance(&ControlTrajectory::constant(
            grid,
            ControlVector(vec![system.optimal_constant()]),
        ));
    if !report.monotone_ok(0.0) {
        return Err("cost log is not nonincreasing".into());
    }
    if rel > 1e-6 || dev > 1e-3 {
        return Err(format!("cost off by {rel:.3e} (relative), control off by {dev:.3e}"));
    }
    Ok(format!("cost error {rel:.1e}, control sup deviation {dev:.1e}"))
}

fn check_smoothing() -> Result<String, String> {
    let grid = TimeGrid::new(1.0, 8).map_err(core_err)?;
    let c = 0.9;
    let values = (0..8)
        .map(|i| ControlVector(vec![if i < 4 { 0.0 } else { c }]))
        .collect();
    let u = ControlTrajectory::new(grid, values).map_err(core_err)?;
    let smoothed = smooth_control(&u, 3, 1e6).map_err(core_err)?;

    let before = smoothed.at(3).0[0];
    let after = smoothed.at(4).0[0];
    let err = (before - c / 3.0).abs().max((after - 2.0 * c / 3.0).abs());
    let edges = smoothed.at(0).0[0].abs().max((smoothed.at(7).0[0] - c).abs());
    if err > 1e-15 || edges > 1e-15 {
        return Err(format!(
            "window-3 average across a jump gave {before} / {after}, edge error {edges:.1e}"
        ));
    }
    Ok("jump smooths to c/3 and 2c/3, edges clamped".into())
}

fn check_determinism() -> Result<String, String> {
    let system = small_field()?;
    let grid = TimeGrid::new(1.5, 96).map_err(core_err)?;
    let u0 = ControlTrajectory::zero(grid, system.control_dim());
    let x0 = GridFunction::zeros(system.grid());
    let cfg = MonotoneConfig {
        subintervals: 16,
        epsilon: 1.0 / 16.0,
        max_iters: 2,
        tol_rel: 1e-12,
        ..MonotoneConfig::default()
    };

    let a = monotone_descend(&system, &x0, &u0, &cfg).map_err(core_err)?;
    let b = monotone_descend(&system, &x0, &u0, &cfg).map_err(core_err)?;

    if a.accepted_iterations() == 0 {
        return Err("no sweep was accepted".into());
    }
    if a.control.sup_distance(&b.control) != 0.0 {
        return Err("two identical runs returned different controls".into());
    }
    if a.final_cost().total.to_bits() != b.final_cost().total.to_bits() {
        return Err("two identical runs returned different costs".into());
    }
    Ok(format!(
        "{} accepted sweeps, repeated run bitwise identical",
        a.accepted_iterations()
    ))
}
