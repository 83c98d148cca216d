//! The three reference experiments: forward simulation, descent runs, and
//! the two-method comparison, each emitting plot-ready CSV files.

use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use banach_oc::cost::total_cost;
use banach_oc::dynamics::{integrate_forward, ControlTrajectory, TimeGrid};
use banach_oc::monotone::monotone_descend;
use banach_oc::pmp::{pmp_descend, pmp_residual};
use banach_oc::report::DescentReport;
use banach_oc::spectral::{quadrature, CircleGrid, GridFunction};
use banach_oc::systems::{
    lq_toy_system, AmariParams, AmariSystem, ControlAffineSystem, ControlVector, LqSystem,
    LqToyParams,
};

use crate::config::{ExperimentConfig, InitialControl, InitialState, Method, SystemKind};
use crate::csvio::{self, fmt};

/// What a system must expose so its runs can be written out as CSV.
pub trait StateReport: ControlAffineSystem {
    /// One row per spatial coordinate for `profile.csv`:
    /// `(coordinate, terminal value, desired value)`.  The scalar toy
    /// reports its single state as one row at coordinate 0.
    fn profile_rows(&self, terminal: &Self::State) -> Vec<[f64; 3]>;
    /// The L2 norm of a state, for `energy.csv`.
    fn state_norm(&self, x: &Self::State) -> f64;
}

impl StateReport for AmariSystem {
    fn profile_rows(&self, terminal: &GridFunction) -> Vec<[f64; 3]> {
        let grid = self.grid();
        let target = self.target();
        (0..grid.n())
            .map(|j| [grid.theta(j), terminal.values()[j], target.values()[j]])
            .collect()
    }

    fn state_norm(&self, x: &GridFunction) -> f64 {
        quadrature(&x.map(|v| v * v)).sqrt()
    }
}

impl StateReport for LqSystem {
    fn profile_rows(&self, terminal: &f64) -> Vec<[f64; 3]> {
        vec![[0.0, *terminal, self.params().target]]
    }

    fn state_norm(&self, x: &f64) -> f64 {
        x.abs()
    }
}

/// A fully constructed problem instance.
enum Built {
    Amari { system: AmariSystem, x0: GridFunction },
    Lq { system: LqSystem, x0: f64 },
}

fn build(cfg: &ExperimentConfig) -> Result<Built> {
    if !(cfg.initial_amplitude >= 0.0) || !cfg.initial_amplitude.is_finite() {
        bail!(
            "invalid configuration: initial_amplitude must be nonnegative and finite, got {}",
            cfg.initial_amplitude
        );
    }
    match cfg.system {
        SystemKind::Amari => {
            let a = &cfg.amari;
            let grid = CircleGrid::new(a.n)?;
            let params = AmariParams {
                gamma: a.gamma,
                beta: a.beta,
                vartheta: a.vartheta,
                kappa: a.kappa,
                k: a.cutoff,
                a_d: a.target_amplitude,
                kappa_d: a.target_concentration,
                theta_star: a.target_center,
                alpha: a.alpha,
                r: a.bound,
            };
            let mut system = AmariSystem::new(params, grid)?;
            if a.disable_drift {
                system = system.with_drift_disabled();
            }
            let x0 = match a.x0 {
                InitialState::Zero => GridFunction::zeros(grid),
                InitialState::Target => system.target().clone(),
            };
            Ok(Built::Amari { system, x0 })
        }
        SystemKind::LqToy => {
            let system = lq_toy_system(LqToyParams {
                alpha: cfg.lq.alpha,
                target: cfg.lq.target,
                horizon: cfg.horizon,
            })?;
            Ok(Built::Lq { system, x0: 0.0 })
        }
    }
}

/// The configured starting control for descent runs.
fn initial_control<S: ControlAffineSystem>(
    system: &S,
    grid: TimeGrid,
    cfg: &ExperimentConfig,
) -> ControlTrajectory {
    let m = system.control_dim();
    match cfg.initial_control {
        InitialControl::Zero => ControlTrajectory::zero(grid, m),
        InitialControl::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let a = cfg.initial_amplitude;
            let values = (0..grid.steps())
                .map(|_| ControlVector((0..m).map(|_| rng.gen_range(-a..=a)).collect()))
                .collect();
            let mut u = ControlTrajectory::new(grid, values)
                .expect("generated control matches the grid by construction");
            u.project_ball(system.control_bound());
            u
        }
    }
}

fn write_profile<S: StateReport>(path: &Path, system: &S, terminal: &S::State) -> Result<()> {
    let rows: Vec<Vec<String>> = system
        .profile_rows(terminal)
        .into_iter()
        .map(|[theta, value, desired]| vec![fmt(theta), fmt(value), fmt(desired)])
        .collect();
    csvio::write_csv(path, &["theta", "N_T", "N_des"], &rows)
}

fn write_control(path: &Path, u: &ControlTrajectory) -> Result<()> {
    let grid = u.grid();
    let mut header = vec!["t".to_string()];
    header.extend(csvio::channel_labels(u.control_dim()));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows: Vec<Vec<String>> = (0..grid.steps())
        .map(|i| {
            let mut row = vec![fmt(grid.node(i))];
            row.extend(u.at(i).0.iter().map(|v| fmt(*v)));
            row
        })
        .collect();
    csvio::write_csv(path, &header_refs, &rows)
}

fn write_cost_log<S>(path: &Path, report: &DescentReport<S>) -> Result<()> {
    let rows: Vec<Vec<String>> = report
        .records
        .iter()
        .map(|r| {
            vec![
                r.iter.to_string(),
                fmt(r.cost.total),
                fmt(r.cost.terminal),
                fmt(r.cost.energy),
                fmt(r.wall_ms),
            ]
        })
        .collect();
    csvio::write_csv(path, &["iter", "total", "terminal", "energy", "wall_ms"], &rows)
}

/// Integrate the system under `u = 0` or a stored control and write
/// `profile.csv` + `energy.csv`.
pub fn run_simulate(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let grid = TimeGrid::new(cfg.horizon, cfg.steps)?;
    match build(cfg)? {
        Built::Amari { system, x0 } => simulate_on(&system, &x0, grid, cfg, out),
        Built::Lq { system, x0 } => simulate_on(&system, &x0, grid, cfg, out),
    }
}

fn simulate_on<S: StateReport>(
    system: &S,
    x0: &S::State,
    grid: TimeGrid,
    cfg: &ExperimentConfig,
    out: &Path,
) -> Result<()> {
    let m = system.control_dim();
    let u = match &cfg.control_file {
        Some(file) => csvio::read_control(Path::new(file), grid, m)?,
        None => ControlTrajectory::zero(grid, m),
    };
    let bound = system.control_bound();
    if !u.within_ball(bound, 1e-9 * bound.max(1.0)) {
        println!("note: stored control exceeds the admissible bound {bound}; integrating anyway");
    }

    let path = integrate_forward(system, x0, &u, 0, grid.steps())?;
    let cost = total_cost(system, &path, &u)?;

    write_profile(&out.join("profile.csv"), system, path.terminal())?;
    let rows: Vec<Vec<String>> = (0..=grid.steps())
        .map(|i| vec![fmt(grid.node(i)), fmt(system.state_norm(path.state(i)))])
        .collect();
    csvio::write_csv(&out.join("energy.csv"), &["t", "l2_norm"], &rows)?;

    println!(
        "simulate: terminal cost {}, control energy {}, total {}",
        fmt(cost.terminal),
        fmt(cost.energy),
        fmt(cost.total)
    );
    println!("wrote profile.csv, energy.csv in {}", out.display());
    Ok(())
}

/// Run the selected descent method(s) from the configured initial control.
/// Returns whether every recorded cost sequence was nonincreasing.
pub fn run_optimize(cfg: &ExperimentConfig, out: &Path) -> Result<bool> {
    let grid = TimeGrid::new(cfg.horizon, cfg.steps)?;
    match build(cfg)? {
        Built::Amari { system, x0 } => optimize_on(&system, &x0, grid, cfg, out),
        Built::Lq { system, x0 } => optimize_on(&system, &x0, grid, cfg, out),
    }
}

fn optimize_on<S: StateReport>(
    system: &S,
    x0: &S::State,
    grid: TimeGrid,
    cfg: &ExperimentConfig,
    out: &Path,
) -> Result<bool> {
    let u0 = initial_control(system, grid, cfg);
    let labels: &[&str] = match cfg.method {
        Method::Pmp => &["pmp"],
        Method::Monotone => &["monotone"],
        Method::Both => &["pmp", "monotone"],
    };
    // With a single method the contract filenames are used as-is; running
    // both in one invocation would collide, so the outputs get a method
    // suffix instead.
    let file_name = |stem: &str, label: &str| {
        if labels.len() == 1 {
            format!("{stem}.csv")
        } else {
            format!("{stem}_{label}.csv")
        }
    };

    let mut all_monotone = true;
    let mut summary_rows = Vec::new();
    for label in labels {
        let started = Instant::now();
        let report = match *label {
            "pmp" => pmp_descend(system, x0, &u0, &cfg.pmp_config())?,
            _ => monotone_descend(system, x0, &u0, &cfg.monotone_config())?,
        };
        let seconds = started.elapsed().as_secs_f64();

        write_cost_log(&out.join(file_name("cost_log", label)), &report)?;
        write_control(&out.join(file_name("control", label)), &report.control)?;
        write_profile(&out.join(file_name("profile", label)), system, report.path.terminal())?;
        if let Some(smoothed) = &report.smoothed {
            write_control(&out.join(file_name("control_smoothed", label)), &smoothed.control)?;
            println!(
                "{label}: smoothed control written (cost {} vs raw {})",
                fmt(smoothed.cost.total),
                fmt(report.final_cost().total)
            );
        }

        let nonincreasing = report.monotone_ok(0.0);
        all_monotone &= nonincreasing;
        // Sup-norm deviation from the pointwise feedback minimizer along
        // the returned control's own trajectory; only defined for a
        // positive energy weight.
        let residual = if system.energy_weight() > 0.0 {
            pmp_residual(system, x0, &report.control)?
        } else {
            f64::NAN
        };
        let cost = report.final_cost();
        summary_rows.push(vec![
            (*label).to_string(),
            report.accepted_iterations().to_string(),
            fmt(cost.total),
            fmt(cost.terminal),
            fmt(cost.energy),
            fmt(residual),
        ]);
        println!(
            "{label}: {} accepted iterations in {seconds:.2} s, total cost {} \
             (terminal {}, energy {}), extremality residual {:.3e}, cost log {}",
            report.accepted_iterations(),
            fmt(cost.total),
            fmt(cost.terminal),
            fmt(cost.energy),
            residual,
            if nonincreasing { "nonincreasing" } else { "INCREASED" }
        );
    }

    csvio::write_csv(
        &out.join("summary.csv"),
        &["method", "iterations", "total", "terminal", "energy", "residual"],
        &summary_rows,
    )?;
    println!("wrote results in {}", out.display());
    Ok(all_monotone)
}

/// Run both methods on the same problem and write the merged comparison
/// files.  Returns whether both recorded cost sequences were nonincreasing.
pub fn run_compare(cfg: &ExperimentConfig, out: &Path) -> Result<bool> {
    let grid = TimeGrid::new(cfg.horizon, cfg.steps)?;
    match build(cfg)? {
        Built::Amari { system, x0 } => compare_on(&system, &x0, grid, cfg, out),
        Built::Lq { system, x0 } => compare_on(&system, &x0, grid, cfg, out),
    }
}

fn compare_on<S: StateReport>(
    system: &S,
    x0: &S::State,
    grid: TimeGrid,
    cfg: &ExperimentConfig,
    out: &Path,
) -> Result<bool> {
    let m = system.control_dim();
    let u0 = initial_control(system, grid, cfg);

    let zero = ControlTrajectory::zero(grid, m);
    let uncontrolled = integrate_forward(system, x0, &zero, 0, grid.steps())?;
    let base = total_cost(system, &uncontrolled, &zero)?;

    let pmp_report = pmp_descend(system, x0, &u0, &cfg.pmp_config())?;
    let mon_report = monotone_descend(system, x0, &u0, &cfg.monotone_config())?;

    let rows_pmp = system.profile_rows(pmp_report.path.terminal());
    let rows_mon = system.profile_rows(mon_report.path.terminal());
    let profile_rows: Vec<Vec<String>> = rows_pmp
        .iter()
        .zip(&rows_mon)
        .map(|(p, q)| vec![fmt(p[0]), fmt(p[2]), fmt(p[1]), fmt(q[1])])
        .collect();
    csvio::write_csv(
        &out.join("compare_profiles.csv"),
        &["theta", "N_des", "N_T_pmp", "N_T_monotone"],
        &profile_rows,
    )?;

    let labels = csvio::channel_labels(m);
    let mut header = vec!["t".to_string()];
    header.extend(labels.iter().map(|l| format!("{l}_pmp")));
    header.extend(labels.iter().map(|l| format!("{l}_monotone")));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let control_rows: Vec<Vec<String>> = (0..grid.steps())
        .map(|i| {
            let mut row = vec![fmt(grid.node(i))];
            row.extend(pmp_report.control.at(i).0.iter().map(|v| fmt(*v)));
            row.extend(mon_report.control.at(i).0.iter().map(|v| fmt(*v)));
            row
        })
        .collect();
    csvio::write_csv(&out.join("compare_controls.csv"), &header_refs, &control_rows)?;

    let pc = pmp_report.final_cost();
    let mc = mon_report.final_cost();
    println!(
        "uncontrolled: terminal cost {}",
        fmt(base.terminal)
    );
    println!(
        "pmp:      {} accepted iterations, total {} (terminal {}, energy {})",
        pmp_report.accepted_iterations(),
        fmt(pc.total),
        fmt(pc.terminal),
        fmt(pc.energy)
    );
    println!(
        "monotone: {} accepted iterations, total {} (terminal {}, energy {})",
        mon_report.accepted_iterations(),
        fmt(mc.total),
        fmt(mc.terminal),
        fmt(mc.energy)
    );
    println!("wrote compare_profiles.csv, compare_controls.csv in {}", out.display());

    Ok(pmp_report.monotone_ok(0.0) && mon_report.monotone_ok(0.0))
}
