//! Open-loop optimal control of n-qubit open systems in which the Markovian
//! noise on a single qubit can be switched on and off.
//!
//! The crate is organised bottom-up:
//!
//! * [`qops`]: dense complex operators, tensor embeddings, vectorisation,
//!   spectra and distances.
//! * [`lindblad`]: commutator and dissipator superoperators, Liouvillian
//!   assembly, the Padé matrix exponential, closed-form channels and
//!   heat-bath generators.
//! * [`reach`]: majorisation, T-transforms, switch times, the HLP transfer
//!   planner and the Lie-closure controllability test.
//! * [`models`]: Ising chains and the four-ion trap.
//! * [`optim`]: piecewise-constant propagation, the Frobenius error,
//!   finite-difference gradients and a box-constrained quasi-Newton optimiser.
//! * [`schedule`]: sequences mixing ideal instantaneous gates with timed
//!   evolutions, used by analytic protocols and HLP execution.
//! * [`protocols`]: closed-form initialisation and erasure protocols.
//!
//! Vectorisation is column stacking throughout, so that
//! `vec(A ρ B) = (Bᵀ ⊗ A) vec(ρ)`, and the equation of motion is
//! `d vec(ρ)/dt = −L vec(ρ)` with `L = iĤ + Γ̂`.

pub mod error;
pub mod lindblad;
pub mod models;
pub mod optim;
pub mod par;
pub mod protocols;
pub mod qops;
pub mod reach;
pub mod schedule;

pub use error::{Error, Result};
