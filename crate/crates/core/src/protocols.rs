//! Closed-form initialisation and erasure protocols on an Ising chain whose
//! last qubit carries the switchable noise, with their error and duration
//! formulas.
//!
//! Every protocol works qubit by qubit: step `q` brings a fresh qubit onto the
//! noisy site with `q − 1` nearest-neighbour swaps (each charged `1/J` unless
//! swaps are ideal and instantaneous), then switches the noise on for an equal
//! share of the total noise time.

use serde::{Deserialize, Serialize};

use crate::error::{bail_arg, Result};
use crate::models::{ising_chain, ControlSystem, NoiseKind};
use crate::qops::{embed_local, pauli, permutation_matrix, CMatrix, DensityOperator};
use crate::schedule::{Schedule, Segment};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormulaId {
    /// Residual error of n-step initialisation.
    Th0est,
    /// Linearised initialisation time bound.
    TimeEx1,
    /// Residual error of n-step bit-flip erasure.
    ZerothEst,
    /// Exact erasure by amplitude damping.
    EraseAmp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwapTiming {
    /// Each nearest-neighbour swap takes `1/J`.
    #[default]
    Charged,
    /// Swaps are instantaneous (oracle mode).
    Instantaneous,
}

/// A protocol together with the system it runs on and its predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolReport {
    pub system: ControlSystem,
    pub initial: DensityOperator,
    pub target: DensityOperator,
    pub schedule: Schedule,
    pub predicted_error: f64,
    pub predicted_duration: f64,
    pub swap_duration: f64,
    pub noise_duration: f64,
    pub formula_id: FormulaId,
}

/// Serializable digest of a [`ProtocolReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolSummary {
    pub formula_id: FormulaId,
    pub qubits: usize,
    pub predicted_error: f64,
    pub predicted_duration: f64,
    pub swap_duration: f64,
    pub noise_duration: f64,
    pub segments: Vec<String>,
}

impl ProtocolReport {
    pub fn summary(&self) -> ProtocolSummary {
        ProtocolSummary {
            formula_id: self.formula_id,
            qubits: self.system.qubits(),
            predicted_error: self.predicted_error,
            predicted_duration: self.predicted_duration,
            swap_duration: self.swap_duration,
            noise_duration: self.noise_duration,
            segments: self.schedule.segments.iter().map(|s| s.label()).collect(),
        }
    }
}

fn binomial2(n: usize) -> f64 {
    (n * n.saturating_sub(1) / 2) as f64
}

/// Total swap count `C(n, 2)` of the n-step protocols.
pub fn swap_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// SWAP of neighbouring qubits `q`, `q + 1` (1-based, qubit 1 leftmost).
pub fn neighbour_swap(q: usize, n: usize) -> Result<CMatrix> {
    if q == 0 || q >= n {
        bail_arg!("no neighbour pair ({q}, {}) on {n} qubits", q + 1);
    }
    let (a, b) = (n - q, n - q - 1);
    let map: Vec<usize> = (0..1usize << n)
        .map(|i| {
            let (x, y) = ((i >> a) & 1, (i >> b) & 1);
            if x == y {
                i
            } else {
                i ^ (1 << a) ^ (1 << b)
            }
        })
        .collect();
    Ok(permutation_matrix(&map))
}

fn check_common(n: usize, gamma_star: f64, coupling: f64) -> Result<()> {
    if n == 0 {
        bail_arg!("protocols need at least one qubit");
    }
    if n > 8 {
        bail_arg!("protocol simulation is limited to 8 qubits, got {n}");
    }
    if !(gamma_star > 0.0) || !(coupling > 0.0) {
        bail_arg!("need gamma_star > 0 and J > 0, got {gamma_star} and {coupling}");
    }
    Ok(())
}

struct Builder {
    n: usize,
    swap_time: f64,
    controls: usize,
    gamma_star: f64,
    segments: Vec<Segment>,
    swap_duration: f64,
    noise_duration: f64,
}

impl Builder {
    fn new(n: usize, coupling: f64, gamma_star: f64, timing: SwapTiming) -> Self {
        let swap_time = match timing {
            SwapTiming::Charged => 1.0 / coupling,
            SwapTiming::Instantaneous => 0.0,
        };
        Self { n, swap_time, controls: 2 * n, gamma_star, segments: Vec::new(), swap_duration: 0.0, noise_duration: 0.0 }
    }

    /// Bring qubit `n − q + 1` onto the noisy site (step `q`, 1-based).
    fn bring_fresh_qubit(&mut self, q: usize) -> Result<()> {
        for p in (self.n + 1 - q)..self.n {
            self.segments.push(Segment::Unitary {
                label: format!("swap{p}{}", p + 1),
                matrix: neighbour_swap(p, self.n)?,
                duration: self.swap_time,
            });
            self.swap_duration += self.swap_time;
        }
        Ok(())
    }

    fn flip_noisy_qubit(&mut self) -> Result<()> {
        self.segments.push(Segment::Unitary {
            label: format!("flip{}", self.n),
            matrix: embed_local(&pauli::x(), self.n, self.n)?,
            duration: 0.0,
        });
        Ok(())
    }

    fn noise(&mut self, tau: f64) {
        if tau > 0.0 {
            self.segments.push(Segment::Evolve { duration: tau, u: vec![0.0; self.controls], gamma: vec![self.gamma_star] });
            self.noise_duration += tau;
        }
    }
}

/// `δ_F² = 1 − 2(1 − ε/2)ⁿ + (1 − ε + ε²/2)ⁿ`, `ε = e^{−γ* T_n / n}`: error
/// of n-step initialisation of the maximally mixed state to `|0…0⟩`.
pub fn init_error(n: usize, gamma_star: f64, total_noise_time: f64) -> Result<f64> {
    if n == 0 || !(gamma_star > 0.0) || !(total_noise_time >= 0.0) {
        bail_arg!("need n >= 1, gamma_star > 0, noise time >= 0");
    }
    let eps = (-gamma_star * total_noise_time / n as f64).exp();
    Ok(init_error_eps(n, eps))
}

/// Initialisation error as a function of the per-qubit residual `ε`.
pub fn init_error_eps(n: usize, eps: f64) -> f64 {
    let ni = n as i32;
    let d2 = 1.0 - 2.0 * (1.0 - eps / 2.0).powi(ni) + (1.0 - eps + 0.5 * eps * eps).powi(ni);
    d2.max(0.0).sqrt()
}

/// `T_a ≈ C(n,2)/J + (n/γ*) ln(√(n(n+1)) / (2δ))`, the linearised duration
/// for initialisation error `δ`.
pub fn init_time_bound(n: usize, gamma_star: f64, coupling: f64, delta: f64) -> Result<f64> {
    check_common(n, gamma_star, coupling)?;
    if !(delta > 0.0 && delta < 1.0) {
        bail_arg!("target error must lie in (0, 1), got {delta}");
    }
    let nf = n as f64;
    Ok(binomial2(n) / coupling + nf / gamma_star * ((nf * (nf + 1.0)).sqrt() / (2.0 * delta)).ln())
}

/// Cool the maximally mixed state towards `|0…0⟩` with amplitude damping on
/// the last qubit, `T_n/n` per qubit.
pub fn init_protocol(n: usize, gamma_star: f64, coupling: f64, total_noise_time: f64, timing: SwapTiming) -> Result<ProtocolReport> {
    check_common(n, gamma_star, coupling)?;
    if !(total_noise_time >= 0.0) || !total_noise_time.is_finite() {
        bail_arg!("noise time must be finite and non-negative, got {total_noise_time}");
    }
    let tau = total_noise_time / n as f64;
    let mut b = Builder::new(n, coupling, gamma_star, timing);
    for q in 1..=n {
        b.bring_fresh_qubit(q)?;
        b.noise(tau);
    }
    finish(b, NoiseKind::Amp, coupling, DensityOperator::maximally_mixed(n), DensityOperator::zero_state(n), init_error(n, gamma_star, total_noise_time)?, FormulaId::Th0est)
}

/// Initialisation with the noise time taken from [`init_time_bound`]; the
/// reported error is the exact residual of that protocol.
pub fn init_protocol_for_error(n: usize, gamma_star: f64, coupling: f64, delta: f64, timing: SwapTiming) -> Result<ProtocolReport> {
    let total = init_time_bound(n, gamma_star, coupling, delta)?;
    let noise = (total - binomial2(n) / coupling).max(0.0);
    let mut report = init_protocol(n, gamma_star, coupling, noise, timing)?;
    report.formula_id = FormulaId::TimeEx1;
    Ok(report)
}

/// Exact erasure `|0…0⟩ → 1/2ⁿ` by amplitude damping: flip each fresh qubit
/// to `|1⟩` and damp for `ln 2/γ*`, which leaves it at `(½, ½)`.
/// Duration `C(n,2)/J + n ln 2/γ*`.
pub fn erase_protocol_amp(n: usize, gamma_star: f64, coupling: f64, timing: SwapTiming) -> Result<ProtocolReport> {
    check_common(n, gamma_star, coupling)?;
    let mut b = Builder::new(n, coupling, gamma_star, timing);
    for q in 1..=n {
        b.bring_fresh_qubit(q)?;
        b.flip_noisy_qubit()?;
        b.noise(std::f64::consts::LN_2 / gamma_star);
    }
    finish(b, NoiseKind::Amp, coupling, DensityOperator::zero_state(n), DensityOperator::maximally_mixed(n), 0.0, FormulaId::EraseAmp)
}

/// `δ_F² = 2⁻ⁿ((1 + ε̃²)ⁿ − 1)`, `ε̃ = e^{−γ* T_n/(2n)}`: residual of n-step
/// bit-flip erasure of `|0…0⟩`.
pub fn erase_error_bitflip(n: usize, gamma_star: f64, total_noise_time: f64) -> Result<f64> {
    if n == 0 || !(gamma_star > 0.0) || !(total_noise_time >= 0.0) {
        bail_arg!("need n >= 1, gamma_star > 0, noise time >= 0");
    }
    let e = (-gamma_star * total_noise_time / (2.0 * n as f64)).exp();
    Ok(erase_error_bitflip_eps(n, e))
}

pub fn erase_error_bitflip_eps(n: usize, eps: f64) -> f64 {
    let d2 = ((1.0 + eps * eps).powi(n as i32) - 1.0) / 2f64.powi(n as i32);
    d2.max(0.0).sqrt()
}

/// Bit-flip erasure error when the whole protocol must fit in `total_time`:
/// swaps take `C(n,2)/J` and the rest is noise (none if the swaps alone
/// exceed the budget).
pub fn erase_bound_bitflip_at(n: usize, gamma_star: f64, coupling: f64, total_time: f64) -> Result<f64> {
    check_common(n, gamma_star, coupling)?;
    erase_error_bitflip(n, gamma_star, (total_time - binomial2(n) / coupling).max(0.0))
}

/// `T_b = C(n,2)/J − (n/γ*) ln((2ⁿδ² + 1)^{1/n} − 1)`, the duration of
/// bit-flip erasure reaching error `δ ∈ (0, √(1 − 2⁻ⁿ))`.
pub fn erase_duration_bitflip(n: usize, gamma_star: f64, coupling: f64, delta: f64) -> Result<f64> {
    check_common(n, gamma_star, coupling)?;
    let max = (1.0 - 2f64.powi(-(n as i32))).sqrt();
    if !(delta > 0.0 && delta < max) {
        bail_arg!("bit-flip erasure error must lie in (0, {max:.6}), got {delta}");
    }
    let nf = n as f64;
    let inner = (2f64.powi(n as i32) * delta * delta + 1.0).powf(1.0 / nf) - 1.0;
    Ok(binomial2(n) / coupling - nf / gamma_star * inner.ln())
}

/// Erase `|0…0⟩` towards `1/2ⁿ` with bit-flip noise, `T_n/n` per qubit.
pub fn erase_protocol_bitflip(n: usize, gamma_star: f64, coupling: f64, total_noise_time: f64, timing: SwapTiming) -> Result<ProtocolReport> {
    check_common(n, gamma_star, coupling)?;
    if !(total_noise_time >= 0.0) || !total_noise_time.is_finite() {
        bail_arg!("noise time must be finite and non-negative, got {total_noise_time}");
    }
    let tau = total_noise_time / n as f64;
    let mut b = Builder::new(n, coupling, gamma_star, timing);
    for q in 1..=n {
        b.bring_fresh_qubit(q)?;
        b.noise(tau);
    }
    let err = erase_error_bitflip(n, gamma_star, total_noise_time)?;
    finish(b, NoiseKind::Bitflip, coupling, DensityOperator::zero_state(n), DensityOperator::maximally_mixed(n), err, FormulaId::ZerothEst)
}

fn finish(
    b: Builder,
    noise: NoiseKind,
    coupling: f64,
    initial: DensityOperator,
    target: DensityOperator,
    predicted_error: f64,
    formula_id: FormulaId,
) -> Result<ProtocolReport> {
    let system = ising_chain(b.n, coupling, noise, b.n, b.gamma_star, None)?;
    Ok(ProtocolReport {
        system,
        initial,
        target,
        schedule: Schedule::new(b.segments),
        predicted_error,
        predicted_duration: b.swap_duration + b.noise_duration,
        swap_duration: b.swap_duration,
        noise_duration: b.noise_duration,
        formula_id,
    })
}

/// Simulate a report's schedule and return `δ_F` of the final state.
pub fn simulate_report(report: &ProtocolReport) -> Result<f64> {
    let tr = crate::schedule::run_schedule(&report.system, &report.initial, &report.schedule)?;
    Ok((tr.final_state() - report.target.matrix()).norm())
}
