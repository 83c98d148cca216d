//! Flat `key = value` experiment configuration.
//!
//! One assignment per line, `#` starts a comment (anywhere on the line),
//! dotted keys group per-module settings (`amari.*`, `lq.*`, `pmp.*`,
//! `monotone.*`).  Unknown keys and duplicate assignments are rejected with
//! the offending line number, so a typo cannot silently fall back to a
//! default.  Every run writes its complete effective configuration back to
//! the output directory; reloading that file reproduces the run.

use anyhow::{anyhow, bail, Result};
use std::collections::HashMap;
use std::fmt::Write as _;

use banach_oc::monotone::MonotoneConfig;
use banach_oc::pmp::PmpConfig;
use banach_oc::systems::AmariParams;

/// Which model the experiment runs on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SystemKind {
    /// Neural field on the circle with Fourier-mode actuation.
    Amari,
    /// Scalar integrator with closed-form optimum (validation oracle).
    LqToy,
}

/// Which descent method(s) `optimize` runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Pmp,
    Monotone,
    Both,
}

/// Initial state for the neural field (test hook).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialState {
    Zero,
    Target,
}

/// Initial control for the descent methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialControl {
    Zero,
    Random,
}

/// `amari.*` keys — the neural-field model and its tracking objective.
#[derive(Debug, Clone, PartialEq)]
pub struct AmariSection {
    pub n: usize,
    pub gamma: f64,
    pub beta: f64,
    pub vartheta: f64,
    pub kappa: f64,
    pub cutoff: usize,
    pub target_amplitude: f64,
    pub target_concentration: f64,
    pub target_center: f64,
    pub alpha: f64,
    pub bound: f64,
    pub x0: InitialState,
    pub disable_drift: bool,
}

impl Default for AmariSection {
    fn default() -> Self {
        // Mirror the library defaults so the two cannot drift apart.
        let p = AmariParams::default();
        Self {
            n: 256,
            gamma: p.gamma,
            beta: p.beta,
            vartheta: p.vartheta,
            kappa: p.kappa,
            cutoff: p.k,
            target_amplitude: p.a_d,
            target_concentration: p.kappa_d,
            target_center: p.theta_star,
            alpha: p.alpha,
            bound: p.r,
            x0: InitialState::Zero,
            disable_drift: false,
        }
    }
}

/// `lq.*` keys — the scalar toy problem (shares the horizon `T`).
#[derive(Debug, Clone, PartialEq)]
pub struct LqSection {
    pub alpha: f64,
    pub target: f64,
}

impl Default for LqSection {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            target: 1.0,
        }
    }
}

/// `pmp.*` keys — the adjoint-based descent.
#[derive(Debug, Clone, PartialEq)]
pub struct PmpSection {
    pub max_iters: usize,
    pub eta0: f64,
    pub backtrack_factor: f64,
    pub eta_min: f64,
    pub tol_rel: f64,
}

impl Default for PmpSection {
    fn default() -> Self {
        let c = PmpConfig::default();
        Self {
            max_iters: c.max_iters,
            eta0: c.eta0,
            backtrack_factor: c.backtrack_factor,
            eta_min: c.eta_min,
            tol_rel: c.tol_rel,
        }
    }
}

/// `monotone.*` keys — the sample-and-hold descent.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneSection {
    pub subintervals: usize,
    pub epsilon: f64,
    pub max_iters: usize,
    pub tol_rel: f64,
    pub smooth_output: bool,
    /// 0 picks the hold-interval stride automatically.
    pub smooth_window: usize,
    pub probes_per_subinterval: usize,
}

impl Default for MonotoneSection {
    fn default() -> Self {
        let c = MonotoneConfig::default();
        Self {
            subintervals: c.subintervals,
            epsilon: c.epsilon,
            // The runner defaults to the single-sweep reference experiment;
            // raise this for repeated sweeps.
            max_iters: 1,
            tol_rel: c.tol_rel,
            smooth_output: c.smooth_output,
            smooth_window: 0,
            probes_per_subinterval: c.probes_per_subinterval,
        }
    }
}

/// The complete experiment description.  Defaults reproduce the bundled
/// neural-field tracking setup: horizon 3, 600 steps, a 256-node circle,
/// 7 Fourier control channels, energy weight 0.1, 32 hold intervals, and
/// 40 adjoint-descent iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub system: SystemKind,
    pub method: Method,
    /// Time horizon `T` (config key `T`).
    pub horizon: f64,
    pub steps: usize,
    pub out: String,
    pub seed: u64,
    /// Optional stored control played back by `simulate`.
    pub control_file: Option<String>,
    pub initial_control: InitialControl,
    pub initial_amplitude: f64,
    pub amari: AmariSection,
    pub lq: LqSection,
    pub pmp: PmpSection,
    pub monotone: MonotoneSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            system: SystemKind::Amari,
            method: Method::Both,
            horizon: 3.0,
            steps: 600,
            out: "out".into(),
            seed: 0,
            control_file: None,
            initial_control: InitialControl::Zero,
            initial_amplitude: 0.1,
            amari: AmariSection::default(),
            lq: LqSection::default(),
            pmp: PmpSection::default(),
            monotone: MonotoneSection::default(),
        }
    }
}

/// Parse a configuration file; `source` names the file in diagnostics.
pub fn parse(text: &str, source: &str) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("{source}:{lineno}: expected `key = value`, got `{}`", raw.trim());
        };
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() {
            bail!("{source}:{lineno}: missing key before `=`");
        }
        if let Some(first) = seen.insert(key.to_string(), lineno) {
            bail!("{source}:{lineno}: duplicate key `{key}` (first assigned on line {first})");
        }
        cfg.apply(key, value)
            .map_err(|msg| anyhow!("{source}:{lineno}: {msg}"))?;
    }
    Ok(cfg)
}

fn parse_f64(key: &str, value: &str) -> Result<f64, String> {
    let v: f64 = value
        .parse()
        .map_err(|_| format!("key `{key}`: `{value}` is not a number"))?;
    if !v.is_finite() {
        return Err(format!("key `{key}`: value must be finite, got `{value}`"));
    }
    Ok(v)
}

fn parse_usize(key: &str, value: &str) -> Result<usize, String> {
    value
        .parse()
        .map_err(|_| format!("key `{key}`: `{value}` is not an unsigned integer"))
}

fn parse_u64(key: &str, value: &str) -> Result<u64, String> {
    value
        .parse()
        .map_err(|_| format!("key `{key}`: `{value}` is not an unsigned integer"))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, String> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("key `{key}`: expected `true` or `false`, got `{value}`")),
    }
}

impl ExperimentConfig {
    /// Apply one assignment; the error message carries no line info (the
    /// parser adds it).
    fn apply(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key {
            "system" => {
                self.system = match value {
                    "amari" => SystemKind::Amari,
                    "lq_toy" => SystemKind::LqToy,
                    _ => return Err(format!("key `system`: expected `amari` or `lq_toy`, got `{value}`")),
                }
            }
            "method" => {
                self.method = match value {
                    "pmp" => Method::Pmp,
                    "monotone" => Method::Monotone,
                    "both" => Method::Both,
                    _ => {
                        return Err(format!(
                            "key `method`: expected `pmp`, `monotone` or `both`, got `{value}`"
                        ))
                    }
                }
            }
            "T" => self.horizon = parse_f64(key, value)?,
            "steps" => self.steps = parse_usize(key, value)?,
            "out" => self.out = value.to_string(),
            "seed" => self.seed = parse_u64(key, value)?,
            "control_file" => {
                self.control_file = if value.is_empty() {
                    None
                } else {
                    Some(value.to_string())
                }
            }
            "initial_control" => {
                self.initial_control = match value {
                    "zero" => InitialControl::Zero,
                    "random" => InitialControl::Random,
                    _ => {
                        return Err(format!(
                            "key `initial_control`: expected `zero` or `random`, got `{value}`"
                        ))
                    }
                }
            }
            "initial_amplitude" => self.initial_amplitude = parse_f64(key, value)?,
            "amari.n" => self.amari.n = parse_usize(key, value)?,
            "amari.gamma" => self.amari.gamma = parse_f64(key, value)?,
            "amari.beta" => self.amari.beta = parse_f64(key, value)?,
            "amari.vartheta" => self.amari.vartheta = parse_f64(key, value)?,
            "amari.kappa" => self.amari.kappa = parse_f64(key, value)?,
            "amari.cutoff" => self.amari.cutoff = parse_usize(key, value)?,
            "amari.target_amplitude" => self.amari.target_amplitude = parse_f64(key, value)?,
            "amari.target_concentration" => {
                self.amari.target_concentration = parse_f64(key, value)?
            }
            "amari.target_center" => self.amari.target_center = parse_f64(key, value)?,
            "amari.alpha" => self.amari.alpha = parse_f64(key, value)?,
            "amari.bound" => self.amari.bound = parse_f64(key, value)?,
            "amari.x0" => {
                self.amari.x0 = match value {
                    "zero" => InitialState::Zero,
                    "target" => InitialState::Target,
                    _ => {
                        return Err(format!(
                            "key `amari.x0`: expected `zero` or `target`, got `{value}`"
                        ))
                    }
                }
            }
            "amari.disable_drift" => self.amari.disable_drift = parse_bool(key, value)?,
            "lq.alpha" => self.lq.alpha = parse_f64(key, value)?,
            "lq.target" => self.lq.target = parse_f64(key, value)?,
            "pmp.max_iters" => self.pmp.max_iters = parse_usize(key, value)?,
            "pmp.eta0" => self.pmp.eta0 = parse_f64(key, value)?,
            "pmp.backtrack_factor" => self.pmp.backtrack_factor = parse_f64(key, value)?,
            "pmp.eta_min" => self.pmp.eta_min = parse_f64(key, value)?,
            "pmp.tol_rel" => self.pmp.tol_rel = parse_f64(key, value)?,
            "monotone.subintervals" => self.monotone.subintervals = parse_usize(key, value)?,
            "monotone.epsilon" => self.monotone.epsilon = parse_f64(key, value)?,
            "monotone.max_iters" => self.monotone.max_iters = parse_usize(key, value)?,
            "monotone.tol_rel" => self.monotone.tol_rel = parse_f64(key, value)?,
            "monotone.smooth_output" => self.monotone.smooth_output = parse_bool(key, value)?,
            "monotone.smooth_window" => self.monotone.smooth_window = parse_usize(key, value)?,
            "monotone.probes_per_subinterval" => {
                self.monotone.probes_per_subinterval = parse_usize(key, value)?
            }
            _ => {
                return Err(format!(
                    "unknown key `{key}` (any run writes the full key list to effective_config.txt)"
                ))
            }
        }
        Ok(())
    }

    /// The complete configuration in the same format [`parse`] reads.
    /// Floats are printed with the shortest representation that parses
    /// back to the identical bits, so the round trip is lossless.
    pub fn serialize(&self) -> String {
        let mut s = String::with_capacity(2048);
        let system = match self.system {
            SystemKind::Amari => "amari",
            SystemKind::LqToy => "lq_toy",
        };
        let method = match self.method {
            Method::Pmp => "pmp",
            Method::Monotone => "monotone",
            Method::Both => "both",
        };
        let x0 = match self.amari.x0 {
            InitialState::Zero => "zero",
            InitialState::Target => "target",
        };
        let initial_control = match self.initial_control {
            InitialControl::Zero => "zero",
            InitialControl::Random => "random",
        };
        let _ = writeln!(s, "# Effective experiment configuration.");
        let _ = writeln!(s, "# One `key = value` per line; `#` starts a comment.");
        let _ = writeln!(s);
        let _ = writeln!(s, "system = {system}");
        let _ = writeln!(s, "method = {method}");
        let _ = writeln!(s, "T = {}", self.horizon);
        let _ = writeln!(s, "steps = {}", self.steps);
        let _ = writeln!(s, "out = {}", self.out);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s);
        let _ = writeln!(s, "# simulate plays back `control_file` (a control.csv) if set;");
        let _ = writeln!(s, "# `initial_control = random` starts descent from a seeded");
        let _ = writeln!(s, "# uniform control with per-channel amplitude `initial_amplitude`.");
        let _ = writeln!(s, "control_file = {}", self.control_file.as_deref().unwrap_or(""));
        let _ = writeln!(s, "initial_control = {initial_control}");
        let _ = writeln!(s, "initial_amplitude = {}", self.initial_amplitude);
        let _ = writeln!(s);
        let _ = writeln!(s, "# Neural field on an n-node circle: decay gamma, firing slope");
        let _ = writeln!(s, "# beta and threshold vartheta, synaptic concentration kappa,");
        let _ = writeln!(s, "# Fourier cutoff (2*cutoff + 1 control channels), von Mises");
        let _ = writeln!(s, "# target bump, energy weight alpha, control bound.");
        let _ = writeln!(s, "amari.n = {}", self.amari.n);
        let _ = writeln!(s, "amari.gamma = {}", self.amari.gamma);
        let _ = writeln!(s, "amari.beta = {}", self.amari.beta);
        let _ = writeln!(s, "amari.vartheta = {}", self.amari.vartheta);
        let _ = writeln!(s, "amari.kappa = {}", self.amari.kappa);
        let _ = writeln!(s, "amari.cutoff = {}", self.amari.cutoff);
        let _ = writeln!(s, "amari.target_amplitude = {}", self.amari.target_amplitude);
        let _ = writeln!(s, "amari.target_concentration = {}", self.amari.target_concentration);
        let _ = writeln!(s, "amari.target_center = {}", self.amari.target_center);
        let _ = writeln!(s, "amari.alpha = {}", self.amari.alpha);
        let _ = writeln!(s, "amari.bound = {}", self.amari.bound);
        let _ = writeln!(s, "amari.x0 = {x0}");
        let _ = writeln!(s, "amari.disable_drift = {}", self.amari.disable_drift);
        let _ = writeln!(s);
        let _ = writeln!(s, "# Scalar toy problem xdot = u (shares the horizon T).");
        let _ = writeln!(s, "lq.alpha = {}", self.lq.alpha);
        let _ = writeln!(s, "lq.target = {}", self.lq.target);
        let _ = writeln!(s);
        let _ = writeln!(s, "# Adjoint-based descent.");
        let _ = writeln!(s, "pmp.max_iters = {}", self.pmp.max_iters);
        let _ = writeln!(s, "pmp.eta0 = {}", self.pmp.eta0);
        let _ = writeln!(s, "pmp.backtrack_factor = {}", self.pmp.backtrack_factor);
        let _ = writeln!(s, "pmp.eta_min = {}", self.pmp.eta_min);
        let _ = writeln!(s, "pmp.tol_rel = {}", self.pmp.tol_rel);
        let _ = writeln!(s);
        let _ = writeln!(s, "# Sample-and-hold descent; max_iters = 1 is the single-sweep");
        let _ = writeln!(s, "# reference run.  smooth_window = 0 picks the hold-interval");
        let _ = writeln!(s, "# stride automatically.");
        let _ = writeln!(s, "monotone.subintervals = {}", self.monotone.subintervals);
        let _ = writeln!(s, "monotone.epsilon = {}", self.monotone.epsilon);
        let _ = writeln!(s, "monotone.max_iters = {}", self.monotone.max_iters);
        let _ = writeln!(s, "monotone.tol_rel = {}", self.monotone.tol_rel);
        let _ = writeln!(s, "monotone.smooth_output = {}", self.monotone.smooth_output);
        let _ = writeln!(s, "monotone.smooth_window = {}", self.monotone.smooth_window);
        let _ = writeln!(
            s,
            "monotone.probes_per_subinterval = {}",
            self.monotone.probes_per_subinterval
        );
        s
    }

    /// The adjoint-descent settings in library form.
    pub fn pmp_config(&self) -> PmpConfig {
        PmpConfig {
            max_iters: self.pmp.max_iters,
            eta0: self.pmp.eta0,
            backtrack_factor: self.pmp.backtrack_factor,
            eta_min: self.pmp.eta_min,
            tol_rel: self.pmp.tol_rel,
        }
    }

    /// The sample-and-hold settings in library form.
    pub fn monotone_config(&self) -> MonotoneConfig {
        MonotoneConfig {
            subintervals: self.monotone.subintervals,
            epsilon: self.monotone.epsilon,
            max_iters: self.monotone.max_iters,
            tol_rel: self.monotone.tol_rel,
            smooth_output: self.monotone.smooth_output,
            smooth_window: match self.monotone.smooth_window {
                0 => None,
                w => Some(w),
            },
            probes_per_subinterval: self.monotone.probes_per_subinterval,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_input_gives_reference_defaults() {
        let cfg = parse("", "cfg").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.system, SystemKind::Amari);
        assert_eq!(cfg.method, Method::Both);
        assert_eq!(cfg.horizon, 3.0);
        assert_eq!(cfg.steps, 600);
        assert_eq!(cfg.amari.n, 256);
        assert_eq!(cfg.amari.gamma, 1.0);
        assert_eq!(cfg.amari.beta, 2.0);
        assert_eq!(cfg.amari.kappa, 4.0);
        assert_eq!(cfg.amari.cutoff, 3);
        assert_eq!(cfg.amari.target_amplitude, 0.8);
        assert_eq!(cfg.amari.target_concentration, 6.0);
        assert!((cfg.amari.target_center - std::f64::consts::FRAC_PI_3).abs() < 1e-15);
        assert_eq!(cfg.amari.alpha, 0.1);
        assert_eq!(cfg.amari.x0, InitialState::Zero);
        assert_eq!(cfg.monotone.subintervals, 32);
        assert_eq!(cfg.monotone.max_iters, 1);
        assert_eq!(cfg.pmp.max_iters, 40);
    }

    #[test]
    fn comments_blanks_and_dotted_keys() {
        let text = "\
# a full-line comment

system = lq_toy   # trailing comment
T = 1
steps = 40
lq.alpha = 0.25
pmp.max_iters = 7
monotone.epsilon = 0.125
";
        let cfg = parse(text, "cfg").unwrap();
        assert_eq!(cfg.system, SystemKind::LqToy);
        assert_eq!(cfg.horizon, 1.0);
        assert_eq!(cfg.steps, 40);
        assert_eq!(cfg.lq.alpha, 0.25);
        assert_eq!(cfg.pmp.max_iters, 7);
        assert_eq!(cfg.monotone.epsilon, 0.125);
        // Untouched keys keep their defaults.
        assert_eq!(cfg.amari.n, 256);
    }

    #[test]
    fn unknown_key_reports_source_and_line() {
        let text = "steps = 10\n\namari.gama = 1\n";
        let err = parse(text, "exp.txt").unwrap_err().to_string();
        assert!(err.contains("exp.txt:3"), "got: {err}");
        assert!(err.contains("amari.gama"), "got: {err}");
    }

    #[test]
    fn bad_value_reports_key_and_line() {
        let err = parse("steps = soon\n", "c").unwrap_err().to_string();
        assert!(err.contains("c:1"), "got: {err}");
        assert!(err.contains("steps"), "got: {err}");

        let err = parse("T = 1\nmethod = newton\n", "c").unwrap_err().to_string();
        assert!(err.contains("c:2"), "got: {err}");
        assert!(err.contains("newton"), "got: {err}");

        let err = parse("T = inf\n", "c").unwrap_err().to_string();
        assert!(err.contains("finite"), "got: {err}");
    }

    #[test]
    fn missing_equals_and_duplicates_are_rejected() {
        let err = parse("steps 10\n", "c").unwrap_err().to_string();
        assert!(err.contains("c:1") && err.contains("key = value"), "got: {err}");

        let err = parse("steps = 10\nsteps = 20\n", "c").unwrap_err().to_string();
        assert!(err.contains("c:2"), "got: {err}");
        assert!(err.contains("duplicate") && err.contains("line 1"), "got: {err}");
    }

    #[test]
    fn serialize_parse_round_trip_is_lossless() {
        let mut cfg = ExperimentConfig::default();
        cfg.system = SystemKind::LqToy;
        cfg.method = Method::Pmp;
        cfg.horizon = 2.5;
        cfg.steps = 123;
        cfg.out = "results/run one".into();
        cfg.seed = 42;
        cfg.control_file = Some("prev/control.csv".into());
        cfg.initial_control = InitialControl::Random;
        cfg.initial_amplitude = 0.37;
        cfg.amari.n = 64;
        cfg.amari.vartheta = -0.25;
        cfg.amari.target_center = std::f64::consts::FRAC_PI_3;
        cfg.amari.alpha = 1e-3;
        cfg.amari.x0 = InitialState::Target;
        cfg.amari.disable_drift = true;
        cfg.lq.target = -1.75;
        cfg.pmp.eta_min = 1e-7;
        cfg.monotone.epsilon = 1.0 / 4096.0;
        cfg.monotone.max_iters = 60;
        cfg.monotone.smooth_output = true;
        cfg.monotone.smooth_window = 5;

        let text = cfg.serialize();
        let reparsed = parse(&text, "round").unwrap();
        assert_eq!(reparsed, cfg);
    }

    #[test]
    fn empty_control_file_round_trips_to_none() {
        let cfg = ExperimentConfig::default();
        assert!(cfg.control_file.is_none());
        let reparsed = parse(&cfg.serialize(), "round").unwrap();
        assert!(reparsed.control_file.is_none());
    }

    #[test]
    fn library_config_mapping_translates_auto_window() {
        let mut cfg = ExperimentConfig::default();
        cfg.monotone.smooth_window = 0;
        assert_eq!(cfg.monotone_config().smooth_window, None);
        cfg.monotone.smooth_window = 9;
        assert_eq!(cfg.monotone_config().smooth_window, Some(9));
        let p = cfg.pmp_config();
        assert_eq!(p.max_iters, 40);
        p.validate().unwrap();
        cfg.monotone_config().validate().unwrap();
    }
}
