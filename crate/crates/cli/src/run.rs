//! Mode runners. Each returns the artifacts to write; nothing here touches
//! the filesystem.

use crate::config::{ControlSpec, ExperimentConfig, Mode, ProtocolName, StateSpec, SystemSpec};
use opencontrol::error::{Error, Result};
use opencontrol::models::{ghz_state, ControlSystem};
use opencontrol::optim::{self, ControlSequence, OptimizeResult, RestartReport, TransferProblem};
use opencontrol::protocols::{self, ProtocolReport};
use opencontrol::qops::{c, eigh_descending, hermitian_spectrum, random_density, vec, CMatrix, DensityOperator};
use opencontrol::reach::{self, HlpExecuteOptions};
use opencontrol::schedule::{run_schedule, Schedule, Segment};
use serde_json::{json, Value};

/// Eigenvalues of emitted states must lie in `[−tol, 1 + tol]` and sum to
/// `1 ± tol`.
pub const SPECTRAL_TOL: f64 = 1e-8;

/// A CSV table: header plus rows of numbers, or of pre-rendered cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Artifacts {
    pub trajectory: Option<Table>,
    pub sequence: Option<Table>,
    pub result: Value,
}

pub fn build_state(spec: &StateSpec, system: &ControlSystem) -> Result<DensityOperator> {
    let n = system.qubits();
    match spec {
        StateSpec::Thermal { beta } if *beta == 0.0 => Ok(DensityOperator::maximally_mixed(n)),
        StateSpec::Thermal { beta } => {
            let (e, v) = eigh_descending(system.drift().matrix())?;
            let e0 = e.iter().copied().fold(f64::INFINITY, f64::min);
            let w: Vec<f64> = e.iter().map(|x| (-beta * (x - e0)).exp()).collect();
            let z: f64 = w.iter().sum();
            let d = CMatrix::from_diagonal(&w.iter().map(|x| c(x / z)).collect::<Vec<_>>().into());
            DensityOperator::new(&v * d * v.adjoint())
        }
        StateSpec::Zero => Ok(DensityOperator::zero_state(n)),
        StateSpec::Ghz => ghz_state(n),
        StateSpec::Random { seed } => Ok(random_density(n, *seed)),
        StateSpec::Spectrum { values } => DensityOperator::from_diagonal(values),
    }
}

fn states(cfg: &ExperimentConfig, system: &ControlSystem) -> Result<(DensityOperator, DensityOperator)> {
    let need = |s: &Option<StateSpec>, key: &str| {
        s.clone().ok_or_else(|| Error::Argument(format!("'{key}' state is required")))
    };
    Ok((build_state(&need(&cfg.initial, "initial")?, system)?, build_state(&need(&cfg.target, "target")?, system)?))
}

fn spectrum_header(dim: usize) -> Vec<String> {
    let mut h = vec!["time".to_string()];
    h.extend((1..=dim).map(|i| format!("lambda_{i}")));
    h.push("delta_f".into());
    h
}

/// Check a descending spectrum before it is emitted.
fn spectral_check(values: &[f64], time: f64) -> Result<()> {
    let sum: f64 = values.iter().sum();
    let bad = values.iter().any(|v| !(*v >= -SPECTRAL_TOL && *v <= 1.0 + SPECTRAL_TOL));
    if bad || (sum - 1.0).abs() > SPECTRAL_TOL {
        return Err(Error::Numerical(format!("state at t = {time} has spectrum {values:?} outside the physical range")));
    }
    Ok(())
}

fn trajectory_row(time: f64, spectrum: Vec<f64>, delta: f64) -> Result<Vec<Cell>> {
    spectral_check(&spectrum, time)?;
    let mut row = vec![Cell::Num(time)];
    row.extend(spectrum.into_iter().map(Cell::Num));
    row.push(Cell::Num(delta));
    Ok(row)
}

fn sequence_table(system: &ControlSystem, seq: &ControlSequence) -> Table {
    let mut header = vec!["slice".to_string(), "start".to_string()];
    header.extend(system.controls().iter().map(|(l, _)| format!("u_{l}")));
    header.extend(system.noises().iter().map(|n| format!("gamma_{}", n.op.label())));
    let rows = (0..seq.slices())
        .map(|k| {
            let mut row = vec![Cell::Text(k.to_string()), Cell::Num(seq.dt * k as f64)];
            row.extend(seq.u[k].iter().copied().map(Cell::Num));
            row.extend(seq.gamma[k].iter().copied().map(Cell::Num));
            row
        })
        .collect();
    Table { header, rows }
}

fn schedule_table(system: &ControlSystem, schedule: &Schedule) -> Table {
    let mut header = vec!["segment".to_string(), "label".to_string(), "start".to_string(), "duration".to_string()];
    header.extend(system.noises().iter().map(|n| format!("gamma_{}", n.op.label())));
    let mut t = 0.0;
    let rows = schedule
        .segments
        .iter()
        .enumerate()
        .map(|(i, seg)| {
            let mut row = vec![Cell::Text(i.to_string()), Cell::Text(seg.label()), Cell::Num(t), Cell::Num(seg.duration())];
            let gamma = match seg {
                Segment::Evolve { gamma, .. } | Segment::Decoupled { gamma, .. } => gamma.clone(),
                Segment::Unitary { .. } => vec![0.0; system.noises().len()],
            };
            row.extend(gamma.into_iter().map(Cell::Num));
            t += seg.duration();
            row
        })
        .collect();
    Table { header, rows }
}

fn problem(cfg: &ExperimentConfig) -> Result<TransferProblem> {
    let system = cfg.system.build()?;
    let (rho0, target) = states(cfg, &system)?;
    let (t, m) = match (cfg.total_time, cfg.slices) {
        (Some(t), Some(m)) => (t, m),
        _ => return Err(Error::Argument("total_time and slices are required".into())),
    };
    TransferProblem::new(system, rho0, target, t, m)
}

fn explicit_sequence(p: &TransferProblem, spec: &ControlSpec) -> ControlSequence {
    let (u, gamma) = spec.rows(p.slices);
    ControlSequence { dt: p.dt(), u, gamma }
}

/// Trajectory table of a sequence: one row per slice boundary.
fn propagate_table(p: &TransferProblem, seq: &ControlSequence) -> Result<Table> {
    let tr = optim::propagate(p, seq)?;
    let target = vec(p.target.matrix()).into_vector();
    let rows = tr
        .times
        .iter()
        .zip(&tr.states)
        .zip(&tr.sorted_eigenvalues)
        .map(|((&t, x), ev)| trajectory_row(t, ev.clone(), (x.vector() - &target).norm()))
        .collect::<Result<_>>()?;
    Ok(Table { header: spectrum_header(p.system.dim()), rows })
}

fn noise_time(seq: &ControlSequence) -> f64 {
    seq.gamma.iter().filter(|g| g.iter().any(|&x| x > 0.0)).count() as f64 * seq.dt
}

pub fn run(cfg: &ExperimentConfig, mode: Mode) -> Result<Artifacts> {
    match mode {
        Mode::Simulate => simulate(cfg),
        Mode::Optimize => optimize(cfg),
        Mode::Hlp => hlp(cfg),
        Mode::Protocol => protocol(cfg),
        Mode::Controllability => controllability(cfg),
        Mode::Majorize => majorize(cfg),
    }
}

fn simulate(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let p = problem(cfg)?;
    let spec = cfg.controls.as_ref().ok_or_else(|| Error::Argument("simulate needs 'controls'".into()))?;
    let seq = explicit_sequence(&p, spec);
    let trajectory = propagate_table(&p, &seq)?;
    let final_error = optim::error(&p, &seq)?;
    let result = json!({
        "mode": "simulate",
        "seed": cfg.seed,
        "final_error": final_error,
        "duration": seq.duration(),
        "noise_duration": noise_time(&seq),
        "slices": seq.slices(),
    });
    Ok(Artifacts { trajectory: Some(trajectory), sequence: Some(sequence_table(&p.system, &seq)), result })
}

fn optimize(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let p = problem(cfg)?;
    let opts = cfg.optimizer.options(cfg.seed);
    let report = match &cfg.controls {
        Some(spec) => {
            let best: OptimizeResult = optim::optimize(&p, &explicit_sequence(&p, spec), &opts)?;
            RestartReport { final_errors: vec![best.final_error], best_index: 0, best }
        }
        None => optim::optimize_restarts(&p, cfg.optimizer.restarts, cfg.optimizer.init, &opts)?,
    };
    let best = &report.best;
    let seeds: Vec<u64> = (0..report.final_errors.len()).map(|r| cfg.seed.wrapping_add(r as u64)).collect();
    let result = json!({
        "mode": "optimize",
        "seed": cfg.seed,
        "seeds": seeds,
        "best_seed": seeds[report.best_index],
        "best_index": report.best_index,
        "restart_final_errors": report.final_errors,
        "final_error": best.final_error,
        "error_history": best.error_history,
        "iterations": best.iterations,
        "termination": best.termination,
        "duration": best.sequence.duration(),
        "noise_duration": noise_time(&best.sequence),
        "slices": best.sequence.slices(),
        "optimizer": cfg.optimizer,
    });
    Ok(Artifacts {
        trajectory: Some(propagate_table(&p, &best.sequence)?),
        sequence: Some(sequence_table(&p.system, &best.sequence)),
        result,
    })
}

fn frobenius_to(m: &CMatrix, target: &DensityOperator) -> f64 {
    (m - target.matrix()).norm()
}

fn schedule_trajectory(system: &ControlSystem, rho0: &DensityOperator, target: &DensityOperator, s: &Schedule) -> Result<Table> {
    let tr = run_schedule(system, rho0, s)?;
    let rows = tr
        .times
        .iter()
        .zip(&tr.states)
        .map(|(&t, m)| trajectory_row(t, hermitian_spectrum(m)?, frobenius_to(m, target)))
        .collect::<Result<_>>()?;
    Ok(Table { header: spectrum_header(system.dim()), rows })
}

fn hlp(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let system = cfg.system.build()?;
    let (rho0, target) = states(cfg, &system)?;
    let plan = reach::hlp_plan_states(&rho0, &target, cfg.system.gamma_star(), cfg.hlp.residual_target)?;
    let mut result = json!({
        "mode": "hlp",
        "seed": cfg.seed,
        "total_dissipative_time": plan.total_dissipative_time,
        "residual": plan.residual,
        "steps": plan.steps.len(),
        "plan": plan.to_record(),
    });
    if !cfg.hlp.execute {
        // Spectra along the plan, with the unitary parts taken as free.
        let mut sorted_target = plan.target.clone();
        sorted_target.sort_by(|a, b| b.total_cmp(a));
        let row = |t: f64, y: &[f64]| {
            let mut s = y.to_vec();
            s.sort_by(|a, b| b.total_cmp(a));
            let d = s.iter().zip(&sorted_target).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            trajectory_row(t, s, d)
        };
        let mut rows = vec![row(0.0, &plan.initial)?];
        let (mut y, mut t) = (plan.initial.clone(), 0.0);
        for s in &plan.steps {
            let sorted: Vec<f64> = s.pre_permutation.iter().map(|&i| y[i]).collect();
            y = reach::t_transform(&sorted, s.pair, s.lambda_effective)?;
            t += s.tau;
            rows.push(row(t, &y)?);
        }
        let trajectory = Table { header: spectrum_header(system.dim()), rows };
        return Ok(Artifacts { trajectory: Some(trajectory), sequence: None, result });
    }
    let schedule = reach::hlp_execute(&plan, &system, &HlpExecuteOptions { trotter_cycles: cfg.hlp.trotter_cycles })?;
    let trajectory = schedule_trajectory(&system, &rho0, &target, &schedule)?;
    let executed = match trajectory.rows.last().and_then(|r| r.last()) {
        Some(Cell::Num(d)) => *d,
        _ => unreachable!("trajectory rows end in delta_f"),
    };
    result["executed_error"] = json!(executed);
    result["trotter_cycles"] = json!(cfg.hlp.trotter_cycles);
    result["duration"] = json!(schedule.total_duration());
    Ok(Artifacts { trajectory: Some(trajectory), sequence: Some(schedule_table(&system, &schedule)), result })
}

fn protocol_report(cfg: &ExperimentConfig) -> Result<ProtocolReport> {
    let spec = cfg.protocol.as_ref().ok_or_else(|| Error::Argument("protocol mode needs 'protocol'".into()))?;
    let (n, g, j) = (cfg.system.qubits(), cfg.system.gamma_star(), cfg.system.coupling());
    let timing = spec.swap_timing;
    match (spec.name, spec.delta, spec.noise_time) {
        (ProtocolName::EraseAmp, ..) => protocols::erase_protocol_amp(n, g, j, timing),
        (ProtocolName::Init, Some(d), _) => protocols::init_protocol_for_error(n, g, j, d, timing),
        (ProtocolName::Init, None, Some(t)) => protocols::init_protocol(n, g, j, t, timing),
        (ProtocolName::EraseBitflip, Some(d), _) => {
            // The duration formula charges C(n,2)/J of swaps; the rest is noise.
            let total = protocols::erase_duration_bitflip(n, g, j, d)?;
            let noise = (total - protocols::swap_count(n) as f64 / j).max(0.0);
            protocols::erase_protocol_bitflip(n, g, j, noise, timing)
        }
        (ProtocolName::EraseBitflip, None, Some(t)) => protocols::erase_protocol_bitflip(n, g, j, t, timing),
        (_, None, None) => Err(Error::Argument("protocol needs delta or noise_time".into())),
    }
}

fn protocol(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let report = protocol_report(cfg)?;
    let trajectory = schedule_trajectory(&report.system, &report.initial, &report.target, &report.schedule)?;
    let simulated = protocols::simulate_report(&report)?;
    let result = json!({
        "mode": "protocol",
        "seed": cfg.seed,
        "duration": report.predicted_duration,
        "predicted_error": report.predicted_error,
        "simulated_error": simulated,
        "summary": report.summary(),
    });
    Ok(Artifacts { trajectory: Some(trajectory), sequence: Some(schedule_table(&report.system, &report.schedule)), result })
}

fn controllability(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let system = cfg.system.build()?;
    let dim = reach::lie_closure_dimension(&system.hamiltonians());
    let su = system.dim() * system.dim() - 1;
    let result = json!({
        "mode": "controllability",
        "seed": cfg.seed,
        "lie_closure_dimension": dim,
        "su_dimension": su,
        "fully_controllable": dim >= su,
        "model": match cfg.system { SystemSpec::IsingChain { .. } => "ising_chain", SystemSpec::IonTrap { .. } => "ion_trap" },
    });
    Ok(Artifacts { trajectory: None, sequence: None, result })
}

fn partial_sums(v: &[f64]) -> Vec<f64> {
    v.iter()
        .scan(0.0, |s, x| {
            *s += x;
            Some(*s)
        })
        .collect()
}

fn majorize(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let system = cfg.system.build()?;
    let (rho0, target) = states(cfg, &system)?;
    let (y, x) = (opencontrol::qops::sorted_spectrum(&rho0), opencontrol::qops::sorted_spectrum(&target));
    let result = json!({
        "mode": "majorize",
        "seed": cfg.seed,
        "initial_spectrum": y,
        "target_spectrum": x,
        "initial_partial_sums": partial_sums(&y),
        "target_partial_sums": partial_sums(&x),
        "target_majorised_by_initial": reach::is_majorised_by(&x, &y)?,
        "initial_majorised_by_target": reach::is_majorised_by(&y, &x)?,
    });
    Ok(Artifacts { trajectory: None, sequence: None, result })
}
