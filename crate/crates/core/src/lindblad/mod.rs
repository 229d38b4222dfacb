//! Liouville-space generators and propagators.
//!
//! Conventions, fixed once for the whole crate:
//!
//! * `vec` is column stacking, so `vec(AρB) = (Bᵀ ⊗ A) vec(ρ)`;
//! * `d vec(ρ)/dt = −L vec(ρ)` with `L = iĤ + Σ γ_ℓ Γ̂_ℓ`;
//! * `Ĥ vec(ρ) = vec([H, ρ])` and `Γ̂_V = −(V̄ ⊗ V − ½ 1 ⊗ V†V − ½ (V†V)ᵀ ⊗ 1)`,
//!   i.e. `Γ̂` is the negated dissipator.

mod channels;
pub mod expm;

pub use channels::{
    diag_channel_theta, heat_bath_generator, occupation, theta_channel_closed_form,
    theta_generator_closed_form, trotter_decoupled_propagator, v_theta, BathParams,
    BathStatistics, ThetaChannelParams,
};
pub use expm::expm;

use crate::error::{bail_arg, Error, Result};
use crate::models::ControlSystem;
use crate::qops::{kron, CMatrix, HermitianOperator, LindbladOperator, VectorizedState, I};

/// A dense `N² × N²` Liouville-space operator acting on column-stacked states.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    matrix: CMatrix,
}

impl Superoperator {
    pub fn from_matrix(matrix: CMatrix) -> Result<Self> {
        let d = matrix.nrows();
        let n = (d as f64).sqrt().round() as usize;
        if matrix.ncols() != d || n * n != d || d == 0 {
            bail_arg!("superoperator must be square with perfect-square size, got {}x{}", d, matrix.ncols());
        }
        Ok(Self { matrix })
    }

    pub fn identity(state_dim: usize) -> Self {
        let d = state_dim * state_dim;
        Self { matrix: CMatrix::identity(d, d) }
    }

    pub fn zeros(state_dim: usize) -> Self {
        let d = state_dim * state_dim;
        Self { matrix: CMatrix::zeros(d, d) }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    /// Liouville-space dimension `N²`.
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Hilbert-space dimension `N`.
    pub fn state_dim(&self) -> usize {
        (self.dim() as f64).sqrt().round() as usize
    }

    pub fn apply(&self, state: &VectorizedState) -> Result<VectorizedState> {
        if state.vector().len() != self.dim() {
            bail_arg!("state length {} does not match superoperator {}", state.vector().len(), self.dim());
        }
        VectorizedState::from_vector(&self.matrix * state.vector())
    }

    /// `self ∘ other`, i.e. `other` acts first.
    pub fn compose(&self, other: &Superoperator) -> Superoperator {
        Superoperator { matrix: &self.matrix * &other.matrix }
    }

    pub fn scale(&self, s: f64) -> Superoperator {
        Superoperator { matrix: self.matrix.scale(s) }
    }
}

/// `Ĥ = 1 ⊗ H − Hᵀ ⊗ 1` on a raw matrix.
pub fn commutator_matrix(h: &CMatrix) -> CMatrix {
    let n = h.nrows();
    let id = CMatrix::identity(n, n);
    kron(&id, h) - kron(&h.transpose(), &id)
}

/// `Γ̂_V` on a raw matrix, unit amplitude.
pub fn dissipator_matrix(v: &CMatrix) -> CMatrix {
    let n = v.nrows();
    let id = CMatrix::identity(n, n);
    let vdv = v.adjoint() * v;
    let jump = kron(&v.conjugate(), v);
    let anti = (kron(&id, &vdv) + kron(&vdv.transpose(), &id)).scale(0.5);
    anti - jump
}

/// Commutator superoperator `Ĥ` with `Ĥ vec(ρ) = vec(Hρ − ρH)`.
pub fn commutator_superop(h: &HermitianOperator) -> Superoperator {
    Superoperator { matrix: commutator_matrix(h.matrix()) }
}

/// Unit-amplitude Lindblad term `Γ̂_V` in the `−L` convention: `−Γ̂_V vec(ρ)`
/// is `vec(VρV† − ½{V†V, ρ})`.
pub fn dissipator_superop(v: &LindbladOperator) -> Superoperator {
    Superoperator { matrix: dissipator_matrix(v.matrix()) }
}

/// `L = iĤ(H₀ + Σ u_j H_j) + Σ γ_ℓ Γ̂_ℓ + background`.
pub fn assemble_liouvillian(system: &ControlSystem, u: &[f64], gamma: &[f64]) -> Result<Superoperator> {
    if u.len() != system.controls().len() {
        bail_arg!("expected {} coherent amplitudes, got {}", system.controls().len(), u.len());
    }
    if gamma.len() != system.noises().len() {
        bail_arg!("expected {} noise amplitudes, got {}", system.noises().len(), gamma.len());
    }
    for (g, noise) in gamma.iter().zip(system.noises()) {
        if !(0.0..=noise.gamma_max).contains(g) {
            bail_arg!("noise amplitude {g} for '{}' outside [0, {}]", noise.op.label(), noise.gamma_max);
        }
    }
    if u.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical("non-finite coherent amplitude".into()));
    }
    Ok(Superoperator { matrix: system.superops().liouvillian(u, gamma) })
}

/// `X = exp(−dt · L)`.
pub fn propagator(l: &Superoperator, dt: f64) -> Result<Superoperator> {
    if !(dt >= 0.0) {
        bail_arg!("time step must be non-negative, got {dt}");
    }
    Ok(Superoperator { matrix: expm(&l.matrix.scale(-dt))? })
}

/// The Choi matrix `Σ_ij |i⟩⟨j| ⊗ Φ(|i⟩⟨j|)` of a superoperator; positive
/// semidefinite exactly when the map is completely positive.
pub fn choi_matrix(x: &Superoperator) -> CMatrix {
    let n = x.state_dim();
    let mut choi = CMatrix::zeros(n * n, n * n);
    for i in 0..n {
        for j in 0..n {
            // vec(|i⟩⟨j|) has its single 1 at index j·N + i.
            let image = x.matrix.column(j * n + i);
            for a in 0..n {
                for b in 0..n {
                    choi[(i * n + a, j * n + b)] = image[b * n + a];
                }
            }
        }
    }
    choi
}

/// `i · Ĥ` for a Hermitian `H`, the coherent part of `L`.
pub(crate) fn coherent_generator(h: &CMatrix) -> CMatrix {
    commutator_matrix(h) * I
}
