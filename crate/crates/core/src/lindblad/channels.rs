//! Closed-form single-qubit channels, heat-bath generators and the Trotter
//! decoupling product used to protect invariant subspaces.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{coherent_generator, dissipator_matrix, expm, Superoperator};
use crate::error::{bail_arg, Result};
use crate::qops::{c, kron, pauli, CMatrix, HermitianOperator, ZERO};

/// Parameters of the generalised generator `V_θ = [[0, 1−θ], [θ, 0]]` switched
/// on at rate `γ*` for a time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaChannelParams {
    pub theta: f64,
    pub gamma_star: f64,
    pub t: f64,
}

impl ThetaChannelParams {
    pub fn new(theta: f64, gamma_star: f64, t: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&theta) {
            bail_arg!("theta must lie in [0, 1], got {theta}");
        }
        if !(gamma_star > 0.0) {
            bail_arg!("gamma_star must be positive, got {gamma_star}");
        }
        if !(t >= 0.0) {
            bail_arg!("time must be non-negative, got {t}");
        }
        Ok(Self { theta, gamma_star, t })
    }

    pub fn theta_bar(&self) -> f64 {
        1.0 - self.theta
    }

    /// `c_θ = 1 / (θ̄² + θ²)`.
    pub fn c_theta(&self) -> f64 {
        1.0 / (self.theta_bar().powi(2) + self.theta.powi(2))
    }

    /// `ε_θ = exp(−γ* t / c_θ)`, the population relaxation factor.
    pub fn epsilon(&self) -> f64 {
        (-self.gamma_star * self.t / self.c_theta()).exp()
    }

    /// `ε'_θ = exp(γ* t (θ̄θ − ½))`, the coherence prefactor.
    pub fn epsilon_prime(&self) -> f64 {
        (self.gamma_star * self.t * (self.theta_bar() * self.theta - 0.5)).exp()
    }
}

/// The 2×2 jump operator `V_θ`.
pub fn v_theta(theta: f64) -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, c(1.0 - theta), c(theta), ZERO])
}

/// Closed-form single-qubit generator `Γ(θ)` written out entry by entry.
pub fn theta_generator_closed_form(theta: f64) -> CMatrix {
    let tb = 1.0 - theta;
    let (t2, tb2, m) = (theta * theta, tb * tb, tb * theta);
    let rows = [
        [-t2, 0.0, 0.0, tb2],
        [0.0, m - 0.5, m, 0.0],
        [0.0, m, m - 0.5, 0.0],
        [t2, 0.0, 0.0, -tb2],
    ];
    CMatrix::from_fn(4, 4, |i, j| c(-rows[i][j]))
}

/// Closed-form `exp(−γ* t Γ(θ))` on a single qubit.
pub fn theta_channel_closed_form(p: &ThetaChannelParams) -> CMatrix {
    let (th, tb) = (p.theta, p.theta_bar());
    let (t2, tb2) = (th * th, tb * tb);
    let ct = p.c_theta();
    let eps = p.epsilon();
    let epsp = p.epsilon_prime();
    let arg = p.gamma_star * p.t * tb * th;
    let (ch, sh) = (epsp * arg.cosh(), epsp * arg.sinh());
    let rows = [
        [ct * (tb2 + t2 * eps), 0.0, 0.0, ct * tb2 * (1.0 - eps)],
        [0.0, ch, sh, 0.0],
        [0.0, sh, ch, 0.0],
        [ct * t2 * (1.0 - eps), 0.0, 0.0, ct * (t2 + tb2 * eps)],
    ];
    CMatrix::from_fn(4, 4, |i, j| c(rows[i][j]))
}

/// Action of the θ-channel on the diagonal of an `n`-qubit state with the
/// noise on qubit `n`: `1^{⊗(n−1)} ⊗ R`, where `R` is the 2×2 column-stochastic
/// block. `θ = 0` is pure amplitude damping, `θ = ½` pure bit flip.
pub fn diag_channel_theta(p: &ThetaChannelParams, n: usize) -> DMatrix<f64> {
    assert!(n >= 1, "need at least one qubit");
    let (th, tb) = (p.theta, p.theta_bar());
    let (t2, tb2) = (th * th, tb * tb);
    let ct = p.c_theta();
    let eps = p.epsilon();
    let block = DMatrix::from_row_slice(
        2,
        2,
        &[ct * (tb2 + t2 * eps), ct * tb2 * (1.0 - eps), ct * t2 * (1.0 - eps), ct * (t2 + tb2 * eps)],
    );
    DMatrix::<f64>::identity(1 << (n - 1), 1 << (n - 1)).kronecker(&block)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BathStatistics {
    Bosonic,
    Fermionic,
}

/// A qubit with splitting `ħω₀` (ħ = 1) coupled to a thermal bath.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BathParams {
    pub statistics: BathStatistics,
    /// Inverse temperature; `f64::INFINITY` is the zero-temperature bath.
    pub beta: f64,
    pub omega0: f64,
    pub gamma: f64,
}

/// Planck (bosonic) or Fermi occupation `1 / (e^{βω₀} ∓ 1)`.
pub fn occupation(p: &BathParams) -> Result<f64> {
    if !(p.beta >= 0.0) {
        bail_arg!("inverse temperature must be non-negative, got {}", p.beta);
    }
    let x = p.beta * p.omega0;
    match p.statistics {
        BathStatistics::Bosonic => {
            if !(x > 0.0) {
                bail_arg!("bosonic occupation diverges for beta*omega0 = {x}");
            }
            Ok(1.0 / x.exp_m1())
        }
        BathStatistics::Fermionic => {
            if x.is_nan() {
                bail_arg!("beta*omega0 is undefined");
            }
            Ok(1.0 / (x.exp() + 1.0))
        }
    }
}

/// Single-qubit heat-bath generator `γ(1 ± n)Γ̂_{σ⁻} + γ n Γ̂_{σ⁺}`, with the
/// upper sign for bosons and the lower for fermions.
pub fn heat_bath_generator(p: &BathParams) -> Result<Superoperator> {
    let n = occupation(p)?;
    let down_weight = match p.statistics {
        BathStatistics::Bosonic => 1.0 + n,
        BathStatistics::Fermionic => 1.0 - n,
    };
    let down = dissipator_matrix(&pauli::lowering());
    let up = dissipator_matrix(&pauli::raising());
    Superoperator::from_matrix(down * c(p.gamma * down_weight) + up * c(p.gamma * n))
}

/// First-order decoupling product
/// `[exp(−(t/2k)(Γ̂ + iĤ')) · exp(−(t/2k)(Γ̂ − iĤ'))]^k` with `H' = H₀₂ ⊗ σ_z`
/// and `Γ̂` the bit-flip generator `γ Γ̂_{1 ⊗ σ_x/2}` on the last qubit. The
/// sign flip of `H'` is what an ideal π pulse about x on the last qubit does.
pub fn trotter_decoupled_propagator(h02: &HermitianOperator, gamma: f64, t: f64, k: usize) -> Result<Superoperator> {
    if k == 0 {
        bail_arg!("Trotter number must be at least 1");
    }
    if !(t >= 0.0) {
        bail_arg!("time must be non-negative, got {t}");
    }
    let half = h02.dim();
    let v = kron(&CMatrix::identity(half, half), &pauli::x().scale(0.5));
    let gen_noise = dissipator_matrix(&v) * c(gamma);
    let h_prime = coherent_generator(&kron(h02.matrix(), &pauli::z()));
    let h = t / (2.0 * k as f64);
    let plus = expm(&((&gen_noise + &h_prime) * c(-h)))?;
    let minus = expm(&((&gen_noise - &h_prime) * c(-h)))?;
    let cycle = plus * minus;
    let mut out = cycle.clone();
    for _ in 1..k {
        out = &out * &cycle;
    }
    Superoperator::from_matrix(out)
}
