//! Experiment configuration: a single JSON document. See `docs/config.md`.

use opencontrol::models::{ion_trap_model, ising_chain, ControlSystem, NoiseKind};
use opencontrol::optim::{FdScheme, InitStyle, OptimizeOptions};
use opencontrol::protocols::SwapTiming;
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Simulate,
    Optimize,
    Hlp,
    Protocol,
    Controllability,
    Majorize,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Simulate => "simulate",
            Mode::Optimize => "optimize",
            Mode::Hlp => "hlp",
            Mode::Protocol => "protocol",
            Mode::Controllability => "controllability",
            Mode::Majorize => "majorize",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Optional; when present it must agree with the subcommand.
    #[serde(default)]
    pub mode: Option<Mode>,
    pub system: SystemSpec,
    #[serde(default)]
    pub initial: Option<StateSpec>,
    #[serde(default)]
    pub target: Option<StateSpec>,
    #[serde(default)]
    pub total_time: Option<f64>,
    #[serde(default)]
    pub slices: Option<usize>,
    /// Piecewise-constant amplitudes for `simulate`, or the starting point
    /// of `optimize`.
    #[serde(default)]
    pub controls: Option<ControlSpec>,
    #[serde(default)]
    pub optimizer: OptimizerSpec,
    #[serde(default)]
    pub hlp: HlpSpec,
    #[serde(default)]
    pub protocol: Option<ProtocolSpec>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemSpec {
    IsingChain {
        qubits: usize,
        #[serde(default = "one")]
        coupling: f64,
        noise: NoiseKind,
        /// 1-based; defaults to the last qubit.
        #[serde(default)]
        noisy_site: Option<usize>,
        gamma_star: f64,
        #[serde(default)]
        dephasing: Option<f64>,
    },
    IonTrap {
        gamma_star: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl SystemSpec {
    pub fn qubits(&self) -> usize {
        match self {
            SystemSpec::IsingChain { qubits, .. } => *qubits,
            SystemSpec::IonTrap { .. } => 4,
        }
    }

    pub fn gamma_star(&self) -> f64 {
        match self {
            SystemSpec::IsingChain { gamma_star, .. } | SystemSpec::IonTrap { gamma_star } => *gamma_star,
        }
    }

    pub fn coupling(&self) -> f64 {
        match self {
            SystemSpec::IsingChain { coupling, .. } => *coupling,
            SystemSpec::IonTrap { .. } => 1.0,
        }
    }

    pub fn noise(&self) -> NoiseKind {
        match self {
            SystemSpec::IsingChain { noise, .. } => *noise,
            SystemSpec::IonTrap { .. } => NoiseKind::Amp,
        }
    }

    pub fn build(&self) -> opencontrol::error::Result<ControlSystem> {
        match self {
            SystemSpec::IsingChain { qubits, coupling, noise, noisy_site, gamma_star, dephasing } => {
                ising_chain(*qubits, *coupling, *noise, noisy_site.unwrap_or(*qubits), *gamma_star, *dephasing)
            }
            SystemSpec::IonTrap { gamma_star } => ion_trap_model(*gamma_star),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSpec {
    /// Gibbs state of the drift at inverse temperature `beta`; `beta = 0`
    /// is the maximally mixed state.
    Thermal {
        #[serde(default)]
        beta: f64,
    },
    Zero,
    Ghz,
    Random { seed: u64 },
    /// Diagonal state with these populations, in computational-basis order.
    Spectrum { values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ControlSpec {
    /// The same amplitudes on every slice.
    Constant { u: Vec<f64>, gamma: Vec<f64> },
    /// One row per slice.
    PerSlice { u_slices: Vec<Vec<f64>>, gamma_slices: Vec<Vec<f64>> },
}

impl ControlSpec {
    /// Per-slice rows for `slices` slices.
    pub fn rows(&self, slices: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        match self {
            ControlSpec::Constant { u, gamma } => (vec![u.clone(); slices], vec![gamma.clone(); slices]),
            ControlSpec::PerSlice { u_slices, gamma_slices } => (u_slices.clone(), gamma_slices.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSpec {
    pub max_iters: usize,
    pub tol: f64,
    pub fd_scheme: FdScheme,
    pub fd_step: Option<f64>,
    pub memory: usize,
    pub restarts: usize,
    pub init: InitStyle,
    pub parallel: bool,
}

impl Default for OptimizerSpec {
    fn default() -> Self {
        let o = OptimizeOptions::default();
        Self {
            max_iters: o.max_iters,
            tol: o.tol,
            fd_scheme: o.fd_scheme,
            fd_step: o.fd_step,
            memory: o.memory,
            restarts: 1,
            init: InitStyle::UniformRandom,
            parallel: o.parallel,
        }
    }
}

impl OptimizerSpec {
    pub fn options(&self, seed: u64) -> OptimizeOptions {
        OptimizeOptions {
            max_iters: self.max_iters,
            tol: self.tol,
            fd_scheme: self.fd_scheme,
            fd_step: self.fd_step,
            seed,
            memory: self.memory,
            parallel: self.parallel,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HlpSpec {
    pub residual_target: f64,
    /// Propagate the executed schedule; needs a bit-flip chain.
    pub execute: bool,
    pub trotter_cycles: usize,
}

impl Default for HlpSpec {
    fn default() -> Self {
        Self { residual_target: 1e-4, execute: false, trotter_cycles: 64 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolName {
    /// Initialisation `1/2ⁿ → |0…0⟩` by amplitude damping.
    Init,
    /// Erasure `|0…0⟩ → 1/2ⁿ` by amplitude damping.
    EraseAmp,
    /// Erasure `|0…0⟩ → 1/2ⁿ` by bit-flip noise.
    EraseBitflip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSpec {
    pub name: ProtocolName,
    /// Target `δ_F`; alternative to `noise_time` for `init` and `erase_bitflip`.
    #[serde(default)]
    pub delta: Option<f64>,
    /// Total noise time `T_n`.
    #[serde(default)]
    pub noise_time: Option<f64>,
    #[serde(default = "charged")]
    pub swap_timing: SwapTiming,
}

fn charged() -> SwapTiming {
    SwapTiming::Charged
}

/// A problem found in a config, anchored to a line of the source when the
/// offending key can be located.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: Option<usize>,
    pub path: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}: {}", self.path, self.message),
            None => write!(f, "{}: {}", self.path, self.message),
        }
    }
}

/// 1-based line of the first occurrence of `"key"` in `src`.
fn line_of(src: &str, key: &str) -> Option<usize> {
    let needle = format!("\"{key}\"");
    src.lines().position(|l| l.contains(&needle)).map(|i| i + 1)
}

pub fn parse(src: &str) -> Result<ExperimentConfig, Diagnostic> {
    serde_json::from_str(src).map_err(|e| Diagnostic {
        line: (e.line() > 0).then_some(e.line()),
        path: "config".into(),
        message: e.to_string(),
    })
}

struct Collector<'a> {
    src: &'a str,
    out: Vec<Diagnostic>,
}

impl Collector<'_> {
    fn push(&mut self, path: &str, message: impl Into<String>) {
        let key = path.rsplit('.').next().unwrap_or(path);
        self.out.push(Diagnostic { line: line_of(self.src, key), path: path.into(), message: message.into() });
    }

    fn positive(&mut self, path: &str, v: f64) {
        if !(v > 0.0 && v.is_finite()) {
            self.push(path, format!("must be positive and finite, got {v}"));
        }
    }
}

/// Every violation in `cfg` for `mode`, without running anything.
pub fn validate(cfg: &ExperimentConfig, mode: Mode, src: &str) -> Vec<Diagnostic> {
    let mut c = Collector { src, out: Vec::new() };
    if let Some(m) = cfg.mode {
        if m != mode {
            c.push("mode", format!("config says '{}' but the command is '{}'", m.name(), mode.name()));
        }
    }
    check_system(&mut c, &cfg.system);
    let n = cfg.system.qubits();
    let dim = if (1..=12).contains(&n) { Some(1usize << n) } else { None };

    let needs_states = !matches!(mode, Mode::Controllability | Mode::Protocol);
    for (key, spec) in [("initial", &cfg.initial), ("target", &cfg.target)] {
        match spec {
            None if needs_states => c.push(key, format!("required by mode '{}'", mode.name())),
            None => {}
            Some(s) => check_state(&mut c, key, s, n, dim),
        }
    }

    if matches!(mode, Mode::Simulate | Mode::Optimize) {
        match cfg.total_time {
            None => c.push("total_time", "required"),
            Some(t) => c.positive("total_time", t),
        }
        match cfg.slices {
            None | Some(0) => c.push("slices", "required and must be at least 1"),
            Some(_) => {}
        }
        if mode == Mode::Simulate && cfg.controls.is_none() {
            c.push("controls", "required by mode 'simulate'");
        }
        if let (Some(ctrl), Ok(system)) = (&cfg.controls, cfg.system.build()) {
            check_controls(&mut c, ctrl, &system, cfg.slices.unwrap_or(1));
        }
    }
    if mode == Mode::Optimize {
        let o = &cfg.optimizer;
        c.positive("optimizer.tol", o.tol);
        if o.max_iters == 0 {
            c.push("optimizer.max_iters", "must be at least 1");
        }
        if o.memory == 0 {
            c.push("optimizer.memory", "must be at least 1");
        }
        if o.restarts == 0 {
            c.push("optimizer.restarts", "must be at least 1");
        }
        if let Some(s) = o.fd_step {
            c.positive("optimizer.fd_step", s);
        }
        if cfg.controls.is_some() && o.restarts > 1 {
            c.push("optimizer.restarts", "explicit controls give a single start; set restarts to 1");
        }
    }
    if mode == Mode::Hlp {
        c.positive("hlp.residual_target", cfg.hlp.residual_target);
        if cfg.hlp.execute {
            if cfg.hlp.trotter_cycles == 0 {
                c.push("hlp.trotter_cycles", "must be at least 1");
            }
            let ok = matches!(
                &cfg.system,
                SystemSpec::IsingChain { noise: NoiseKind::Bitflip, noisy_site, qubits, dephasing: None, .. }
                    if noisy_site.is_none_or(|s| s == *qubits)
            );
            if !ok {
                c.push("hlp.execute", "execution needs an ising_chain with bitflip noise on the last qubit and no dephasing");
            }
        }
    }
    if mode == Mode::Protocol {
        check_protocol(&mut c, cfg);
    }
    c.out
}

fn check_system(c: &mut Collector, s: &SystemSpec) {
    c.positive("system.gamma_star", s.gamma_star());
    if let SystemSpec::IsingChain { qubits, coupling, noise, noisy_site, dephasing, .. } = s {
        if !(1..=6).contains(qubits) {
            c.push("system.qubits", format!("must lie in 1..=6, got {qubits}"));
        }
        c.positive("system.coupling", *coupling);
        if let NoiseKind::Theta(t) = noise {
            if !(0.0..=1.0).contains(t) {
                c.push("system.noise", format!("theta must lie in [0, 1], got {t}"));
            }
        }
        if let Some(site) = noisy_site {
            if *site == 0 || site > qubits {
                c.push("system.noisy_site", format!("must lie in 1..={qubits}, got {site}"));
            }
        }
        if let Some(r) = dephasing {
            if !(*r >= 0.0 && r.is_finite()) {
                c.push("system.dephasing", format!("must be non-negative, got {r}"));
            }
        }
    }
}

fn check_state(c: &mut Collector, key: &str, s: &StateSpec, n: usize, dim: Option<usize>) {
    match s {
        StateSpec::Spectrum { values } => {
            if let Some(d) = dim {
                if values.len() != d {
                    c.push(&format!("{key}.values"), format!("has {} entries but the system dimension is {d}", values.len()));
                }
            }
            if values.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                c.push(&format!("{key}.values"), "populations must be finite and non-negative");
            }
            let sum: f64 = values.iter().sum();
            if (sum - 1.0).abs() > 1e-10 {
                c.push(&format!("{key}.values"), format!("populations sum to {sum}, expected 1"));
            }
        }
        StateSpec::Ghz if n < 2 => c.push(&format!("{key}.kind"), "ghz needs at least two qubits"),
        StateSpec::Thermal { beta } if !(beta.is_finite() && *beta >= 0.0) => {
            c.push(&format!("{key}.beta"), format!("must be finite and non-negative, got {beta}"))
        }
        _ => {}
    }
}

fn check_controls(c: &mut Collector, ctrl: &ControlSpec, system: &ControlSystem, slices: usize) {
    let (m, gmax) = (system.controls().len(), system.gamma_max());
    let (u, g) = ctrl.rows(slices);
    let (ukey, gkey) = match ctrl {
        ControlSpec::Constant { .. } => ("controls.u", "controls.gamma"),
        ControlSpec::PerSlice { .. } => ("controls.u_slices", "controls.gamma_slices"),
    };
    if u.len() != slices || g.len() != slices {
        c.push(ukey, format!("need {slices} rows for u and gamma, got {} and {}", u.len(), g.len()));
        return;
    }
    if let Some(row) = u.iter().find(|r| r.len() != m) {
        c.push(ukey, format!("rows need {m} control amplitudes, got {}", row.len()));
    }
    if u.iter().flatten().any(|v| !v.is_finite()) {
        c.push(ukey, "amplitudes must be finite");
    }
    if let Some(row) = g.iter().find(|r| r.len() != gmax.len()) {
        c.push(gkey, format!("rows need {} noise amplitudes, got {}", gmax.len(), row.len()));
        return;
    }
    let bad = g.iter().flat_map(|r| r.iter().zip(&gmax)).find(|(v, hi)| !(**v >= 0.0 && **v <= **hi));
    if let Some((v, hi)) = bad {
        c.push(gkey, format!("noise amplitude {v} outside [0, gamma_star = {hi}]"));
    }
}

fn check_protocol(c: &mut Collector, cfg: &ExperimentConfig) {
    let Some(p) = &cfg.protocol else {
        c.push("protocol", "required by mode 'protocol'");
        return;
    };
    if !matches!(cfg.system, SystemSpec::IsingChain { .. }) {
        c.push("system.model", "protocols run on an ising_chain");
        return;
    }
    let want = match p.name {
        ProtocolName::Init | ProtocolName::EraseAmp => NoiseKind::Amp,
        ProtocolName::EraseBitflip => NoiseKind::Bitflip,
    };
    if cfg.system.noise() != want {
        c.push("system.noise", format!("protocol {:?} needs '{}' noise", p.name, want.label()));
    }
    if let SystemSpec::IsingChain { noisy_site, qubits, dephasing, .. } = &cfg.system {
        if noisy_site.is_some_and(|s| s != *qubits) {
            c.push("system.noisy_site", "protocols put the noise on the last qubit");
        }
        if dephasing.is_some() {
            c.push("system.dephasing", "protocols assume no background dephasing");
        }
    }
    match (p.name, p.delta, p.noise_time) {
        (ProtocolName::EraseAmp, None, None) => {}
        (ProtocolName::EraseAmp, _, _) => c.push("protocol.name", "erase_amp takes neither delta nor noise_time"),
        (_, Some(_), Some(_)) | (_, None, None) => c.push("protocol.name", "give exactly one of delta and noise_time"),
        (_, Some(d), None) => {
            if !(d > 0.0 && d < 1.0) {
                c.push("protocol.delta", format!("must lie in (0, 1), got {d}"));
            }
        }
        (_, None, Some(t)) => c.positive("protocol.noise_time", t),
    }
}
