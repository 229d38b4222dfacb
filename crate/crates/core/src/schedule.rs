//! Piecewise schedules mixing ideal instantaneous unitaries with noisy
//! evolution, as produced by the HLP executor and the analytic protocols.

use crate::error::{bail_arg, Result};
use crate::lindblad::{assemble_liouvillian, propagator, Superoperator};
use crate::models::ControlSystem;
use crate::qops::{kron, vec, CMatrix, DensityOperator, VectorizedState};

#[derive(Debug, Clone, PartialEq)]
pub enum Segment {
    /// Ideal gate `ρ ↦ UρU†`. `duration` is only charged to the clock.
    Unitary { label: String, matrix: CMatrix, duration: f64 },
    /// Constant controls `u` and noise amplitudes `gamma` for `duration`.
    Evolve { duration: f64, u: Vec<f64>, gamma: Vec<f64> },
    /// Drift plus noise `gamma` with no coherent control, split into `cycles`
    /// symmetric cycles `E(h/4) P E(h/2) P E(h/4)` where `h = duration/cycles`
    /// and `P` is the ideal `pulse`.
    Decoupled { duration: f64, gamma: Vec<f64>, cycles: usize, pulse: CMatrix },
}

impl Segment {
    pub fn duration(&self) -> f64 {
        match self {
            Segment::Unitary { duration, .. } | Segment::Evolve { duration, .. } | Segment::Decoupled { duration, .. } => *duration,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Segment::Unitary { label, .. } => label.clone(),
            Segment::Evolve { .. } => "evolve".into(),
            Segment::Decoupled { .. } => "decoupled-noise".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Schedule {
    pub segments: Vec<Segment>,
}

impl Schedule {
    pub fn new(segments: Vec<Segment>) -> Self {
        Self { segments }
    }

    /// Clock time including durations charged to unitaries.
    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(Segment::duration).sum()
    }

    /// Time during which some noise amplitude is non-zero.
    pub fn noise_duration(&self) -> f64 {
        self.segments
            .iter()
            .map(|s| match s {
                Segment::Evolve { duration, gamma, .. } | Segment::Decoupled { duration, gamma, .. }
                    if gamma.iter().any(|&g| g > 0.0) =>
                {
                    *duration
                }
                _ => 0.0,
            })
            .sum()
    }
}

/// States after each segment of a schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleTrajectory {
    /// Clock time at the end of each segment, starting with 0 for the input.
    pub times: Vec<f64>,
    pub labels: Vec<String>,
    pub states: Vec<CMatrix>,
}

impl ScheduleTrajectory {
    pub fn final_state(&self) -> &CMatrix {
        self.states.last().expect("trajectory holds the initial state")
    }
}

fn conjugation_superop(u: &CMatrix) -> Superoperator {
    Superoperator::from_matrix(kron(&u.conjugate(), u)).expect("square unitary")
}

fn check_unitary(u: &CMatrix, dim: usize, label: &str) -> Result<()> {
    if u.nrows() != dim || u.ncols() != dim {
        bail_arg!("unitary '{label}' is {}x{}, expected {dim}x{dim}", u.nrows(), u.ncols());
    }
    let dev = (u.adjoint() * u - CMatrix::identity(dim, dim)).norm();
    if dev > 1e-9 {
        bail_arg!("segment '{label}' is not unitary (deviation {dev:.3e})");
    }
    Ok(())
}

/// One-cycle superoperator of a decoupled noise segment.
pub fn decoupled_cycle(system: &ControlSystem, gamma: &[f64], h: f64, pulse: &CMatrix) -> Result<Superoperator> {
    let zeros = vec![0.0; system.controls().len()];
    let l = assemble_liouvillian(system, &zeros, gamma)?;
    let quarter = propagator(&l, h / 4.0)?;
    let half = propagator(&l, h / 2.0)?;
    let p = conjugation_superop(pulse);
    Ok(quarter.compose(&p).compose(&half).compose(&p).compose(&quarter))
}

/// Apply every segment of `schedule` to `rho0`.
pub fn run_schedule(system: &ControlSystem, rho0: &DensityOperator, schedule: &Schedule) -> Result<ScheduleTrajectory> {
    let dim = system.dim();
    if rho0.dim() != dim {
        bail_arg!("state dimension {} does not match system dimension {dim}", rho0.dim());
    }
    let mut t = 0.0;
    let mut rho = rho0.matrix().clone();
    let mut out = ScheduleTrajectory { times: vec![0.0], labels: vec!["initial".into()], states: vec![rho.clone()] };
    for seg in &schedule.segments {
        if !(seg.duration() >= 0.0) {
            bail_arg!("segment durations must be non-negative");
        }
        match seg {
            Segment::Unitary { label, matrix, .. } => {
                check_unitary(matrix, dim, label)?;
                rho = matrix * &rho * matrix.adjoint();
            }
            Segment::Evolve { duration, u, gamma } => {
                let l = assemble_liouvillian(system, u, gamma)?;
                rho = propagator(&l, *duration)?.apply(&vec(&rho))?.unvec();
            }
            Segment::Decoupled { duration, gamma, cycles, pulse } => {
                if *cycles == 0 {
                    bail_arg!("decoupled segment needs at least one cycle");
                }
                check_unitary(pulse, dim, "pulse")?;
                let cycle = decoupled_cycle(system, gamma, duration / *cycles as f64, pulse)?;
                let mut v = vec(&rho).into_vector();
                for _ in 0..*cycles {
                    v = cycle.matrix() * v;
                }
                rho = VectorizedState::from_vector(v)?.unvec();
            }
        }
        // Keep the state Hermitian against round-off drift.
        rho = (&rho + rho.adjoint()) * crate::qops::c(0.5);
        t += seg.duration();
        out.times.push(t);
        out.labels.push(seg.label());
        out.states.push(rho.clone());
    }
    Ok(out)
}
