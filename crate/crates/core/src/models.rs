//! Control systems: Ising-ZZ chains with local x/y controls and one switchable
//! noise channel, and the four-ion trap with collective controls.

use serde::{Deserialize, Serialize};

use crate::error::{bail_arg, Result};
use crate::lindblad::{coherent_generator, dissipator_matrix, v_theta};
use crate::qops::{c, embed_local, pauli, CMatrix, CVector, DensityOperator, HermitianOperator, LindbladOperator};
use std::f64::consts::PI;

/// A noise channel whose amplitude is a control in `[0, gamma_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseChannel {
    pub op: LindbladOperator,
    pub gamma_max: f64,
}

/// A noise channel that is always on at a fixed rate.
#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundNoise {
    pub op: LindbladOperator,
    pub rate: f64,
}

/// Liouville-space pieces of a system, assembled once.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSuperops {
    /// `iĤ₀ + Σ rate · Γ̂` for the background channels.
    pub fixed: CMatrix,
    /// `iĤ_j` per coherent control.
    pub controls: Vec<CMatrix>,
    /// `Γ̂_ℓ` per switchable noise channel.
    pub noises: Vec<CMatrix>,
}

impl SystemSuperops {
    /// `L(u, γ)`; amplitudes are not validated here.
    pub fn liouvillian(&self, u: &[f64], gamma: &[f64]) -> CMatrix {
        let mut l = self.fixed.clone();
        for (a, g) in u.iter().zip(&self.controls) {
            if *a != 0.0 {
                l.zip_apply(g, |x, y| *x += y * c(*a));
            }
        }
        for (a, g) in gamma.iter().zip(&self.noises) {
            if *a != 0.0 {
                l.zip_apply(g, |x, y| *x += y * c(*a));
            }
        }
        l
    }
}

/// Drift, labelled coherent controls, switchable noises and background noise
/// of an n-qubit register.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSystem {
    n: usize,
    drift: HermitianOperator,
    controls: Vec<(String, HermitianOperator)>,
    noises: Vec<NoiseChannel>,
    background: Vec<BackgroundNoise>,
    superops: SystemSuperops,
}

impl ControlSystem {
    pub fn new(
        n: usize,
        drift: HermitianOperator,
        controls: Vec<(String, HermitianOperator)>,
        noises: Vec<NoiseChannel>,
        background: Vec<BackgroundNoise>,
    ) -> Result<Self> {
        if n == 0 {
            bail_arg!("a control system needs at least one qubit");
        }
        let dim = 1usize << n;
        if drift.dim() != dim {
            bail_arg!("drift has dimension {}, expected {dim}", drift.dim());
        }
        for (label, h) in &controls {
            if h.dim() != dim {
                bail_arg!("control '{label}' has dimension {}, expected {dim}", h.dim());
            }
        }
        for noise in &noises {
            if noise.op.dim() != dim {
                bail_arg!("noise '{}' has dimension {}, expected {dim}", noise.op.label(), noise.op.dim());
            }
            if !(noise.gamma_max > 0.0) {
                bail_arg!("noise '{}' needs gamma_max > 0, got {}", noise.op.label(), noise.gamma_max);
            }
        }
        for b in &background {
            if b.op.dim() != dim {
                bail_arg!("background '{}' has dimension {}, expected {dim}", b.op.label(), b.op.dim());
            }
            if !(b.rate >= 0.0) {
                bail_arg!("background '{}' needs a non-negative rate, got {}", b.op.label(), b.rate);
            }
        }
        let mut fixed = coherent_generator(drift.matrix());
        for b in &background {
            fixed += dissipator_matrix(b.op.matrix()) * c(b.rate);
        }
        let superops = SystemSuperops {
            fixed,
            controls: controls.iter().map(|(_, h)| coherent_generator(h.matrix())).collect(),
            noises: noises.iter().map(|v| dissipator_matrix(v.op.matrix())).collect(),
        };
        Ok(Self { n, drift, controls, noises, background, superops })
    }

    pub fn qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn drift(&self) -> &HermitianOperator {
        &self.drift
    }

    pub fn controls(&self) -> &[(String, HermitianOperator)] {
        &self.controls
    }

    pub fn noises(&self) -> &[NoiseChannel] {
        &self.noises
    }

    pub fn background(&self) -> &[BackgroundNoise] {
        &self.background
    }

    pub fn superops(&self) -> &SystemSuperops {
        &self.superops
    }

    pub fn gamma_max(&self) -> Vec<f64> {
        self.noises.iter().map(|n| n.gamma_max).collect()
    }

    /// Hamiltonians whose Lie closure decides unitary controllability: the
    /// drift followed by every control.
    pub fn hamiltonians(&self) -> Vec<HermitianOperator> {
        std::iter::once(self.drift.clone()).chain(self.controls.iter().map(|(_, h)| h.clone())).collect()
    }

    /// Index of the noise channel with the given label.
    pub fn noise_index(&self, label: &str) -> Option<usize> {
        self.noises.iter().position(|n| n.op.label() == label)
    }
}

/// Kind of switchable noise on the noisy qubit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    /// `|0⟩⟨1|`
    Amp,
    /// `σ_x / 2`
    Bitflip,
    /// `V_θ = [[0, 1−θ], [θ, 0]]`
    Theta(f64),
}

impl NoiseKind {
    pub fn label(&self) -> &'static str {
        match self {
            NoiseKind::Amp => "amp",
            NoiseKind::Bitflip => "bitflip",
            NoiseKind::Theta(_) => "theta",
        }
    }

    pub fn local_operator(&self) -> Result<CMatrix> {
        Ok(match self {
            NoiseKind::Amp => pauli::lowering(),
            NoiseKind::Bitflip => pauli::x().scale(0.5),
            NoiseKind::Theta(t) => {
                if !(0.0..=1.0).contains(t) {
                    bail_arg!("theta must lie in [0, 1], got {t}");
                }
                v_theta(*t)
            }
        })
    }
}

/// Ising-ZZ chain `H₀ = πJ Σ_k ½ σ_z^(k) σ_z^(k+1)` with controls
/// `σ_x^(q)/2`, `σ_y^(q)/2` on every qubit, one switchable noise channel on
/// `noisy_site` (1-based) and optional constant `σ_z/2` dephasing on every
/// qubit.
pub fn ising_chain(
    n: usize,
    coupling: f64,
    noise: NoiseKind,
    noisy_site: usize,
    gamma_star: f64,
    dephasing: Option<f64>,
) -> Result<ControlSystem> {
    if n == 0 {
        bail_arg!("chain needs at least one qubit");
    }
    if noisy_site == 0 || noisy_site > n {
        bail_arg!("noisy site {noisy_site} out of range for {n} qubits");
    }
    let dim = 1usize << n;
    let mut drift = CMatrix::zeros(dim, dim);
    for k in 1..n {
        let zz = embed_local(&pauli::z(), k, n)? * embed_local(&pauli::z(), k + 1, n)?;
        drift += zz * c(0.5 * PI * coupling);
    }
    let mut controls = Vec::with_capacity(2 * n);
    for q in 1..=n {
        controls.push((format!("x{q}"), HermitianOperator::new(embed_local(&pauli::x().scale(0.5), q, n)?)?));
        controls.push((format!("y{q}"), HermitianOperator::new(embed_local(&pauli::y().scale(0.5), q, n)?)?));
    }
    let op = LindbladOperator::new(
        format!("{}{}", noise.label(), noisy_site),
        embed_local(&noise.local_operator()?, noisy_site, n)?,
    )?;
    let noises = vec![NoiseChannel { op, gamma_max: gamma_star }];
    let mut background = Vec::new();
    if let Some(rate) = dephasing {
        for q in 1..=n {
            let op = LindbladOperator::new(format!("dephase{q}"), embed_local(&pauli::z().scale(0.5), q, n)?)?;
            background.push(BackgroundNoise { op, rate });
        }
    }
    ControlSystem::new(n, HermitianOperator::new(drift)?, controls, noises, background)
}

/// Collective spin operator `F_ν = ½ Σ_j σ_ν^(j)` on `n` qubits.
pub fn collective(op: &CMatrix, n: usize) -> Result<CMatrix> {
    let dim = 1usize << n;
    let mut f = CMatrix::zeros(dim, dim);
    for q in 1..=n {
        f += embed_local(&op.scale(0.5), q, n)?;
    }
    Ok(f)
}

/// Four trapped ions: local `σ_z/2` controls, collective `F_x`, `F_y` and their
/// squares, no drift, switchable amplitude damping on qubit 4. Amplitudes are
/// in units of the interaction strength `a`.
pub fn ion_trap_model(gamma_star: f64) -> Result<ControlSystem> {
    let n = 4;
    let mut controls = Vec::with_capacity(8);
    for q in 1..=n {
        controls.push((format!("z{q}"), HermitianOperator::new(embed_local(&pauli::z().scale(0.5), q, n)?)?));
    }
    let fx = collective(&pauli::x(), n)?;
    let fy = collective(&pauli::y(), n)?;
    controls.push(("Fx2".into(), HermitianOperator::new(&fx * &fx)?));
    controls.push(("Fy2".into(), HermitianOperator::new(&fy * &fy)?));
    controls.insert(4, ("Fx".into(), HermitianOperator::new(fx)?));
    controls.insert(5, ("Fy".into(), HermitianOperator::new(fy)?));
    let op = LindbladOperator::new("amp4", embed_local(&pauli::lowering(), n, n)?)?;
    ControlSystem::new(
        n,
        HermitianOperator::zeros(1 << n),
        controls,
        vec![NoiseChannel { op, gamma_max: gamma_star }],
        Vec::new(),
    )
}

/// `|GHZ_n⟩⟨GHZ_n|` with `|GHZ_n⟩ = (|0…0⟩ + |1…1⟩)/√2`.
pub fn ghz_state(n: usize) -> Result<DensityOperator> {
    if n < 2 {
        bail_arg!("GHZ state needs at least two qubits, got {n}");
    }
    let dim = 1usize << n;
    let mut ket = CVector::zeros(dim);
    ket[0] = c(std::f64::consts::FRAC_1_SQRT_2);
    ket[dim - 1] = c(std::f64::consts::FRAC_1_SQRT_2);
    DensityOperator::pure(&ket)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lindblad::{assemble_liouvillian, propagator};
    use crate::qops::{frobenius_norm, sorted_spectrum, vec, ZERO};
    use crate::reach::lie_closure_dimension;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_qubit_chain() {
        let s = ising_chain(1, 1.0, NoiseKind::Amp, 1, 5.0, None).unwrap();
        assert_eq!(frobenius_norm(s.drift().matrix()), 0.0);
        assert_eq!(s.controls().len(), 2);
        assert_eq!(s.noises().len(), 1);
    }

    #[test]
    fn three_qubit_chain_is_controllable() {
        let s = ising_chain(3, 1.0, NoiseKind::Amp, 3, 5.0, None).unwrap();
        assert_eq!(s.controls().len(), 6);
        assert_eq!(lie_closure_dimension(&s.hamiltonians()), 63);
    }

    #[test]
    fn dephasing_adds_background_generators() {
        let s = ising_chain(3, 1.0, NoiseKind::Amp, 3, 5.0, Some(0.2)).unwrap();
        assert_eq!(s.background().len(), 3);
        assert!(s.background().iter().all(|b| b.rate == 0.2));
    }

    #[test]
    fn invalid_site_rejected() {
        assert!(ising_chain(3, 1.0, NoiseKind::Amp, 4, 5.0, None).is_err());
        assert!(ising_chain(3, 1.0, NoiseKind::Amp, 0, 5.0, None).is_err());
        assert!(ising_chain(2, 1.0, NoiseKind::Theta(1.5), 2, 5.0, None).is_err());
    }

    #[test]
    fn chain_drift_is_diagonal() {
        for n in 1..=4 {
            let s = ising_chain(n, 1.3, NoiseKind::Bitflip, n, 5.0, None).unwrap();
            let h = s.drift().matrix();
            for i in 0..h.nrows() {
                for j in 0..h.ncols() {
                    if i != j {
                        assert_eq!(h[(i, j)], ZERO);
                    }
                }
            }
        }
    }

    #[test]
    fn diagonal_states_stay_diagonal_without_controls() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for kind in [NoiseKind::Amp, NoiseKind::Bitflip, NoiseKind::Theta(0.2)] {
            let s = ising_chain(3, 1.0, kind, 3, 5.0, None).unwrap();
            let l = assemble_liouvillian(&s, &[0.0; 6], &[5.0]).unwrap();
            for _ in 0..5 {
                let mut p: Vec<f64> = (0..8).map(|_| rng.random::<f64>()).collect();
                let sum: f64 = p.iter().sum();
                p.iter_mut().for_each(|x| *x /= sum);
                let rho = DensityOperator::from_diagonal(&p).unwrap();
                let t: f64 = rng.random::<f64>() * 2.0;
                let out = propagator(&l, t).unwrap().apply(&vec(rho.matrix())).unwrap().unvec();
                let mut off = 0.0;
                for i in 0..8 {
                    for j in 0..8 {
                        if i != j {
                            off += out[(i, j)].norm_sqr();
                        }
                    }
                }
                assert!(off.sqrt() < 1e-12, "{kind:?}: off-diagonal norm {}", off.sqrt());
            }
        }
    }

    #[test]
    fn ion_trap_has_eight_controls_and_terminal_noise() {
        let s = ion_trap_model(1.0).unwrap();
        assert_eq!(s.controls().len(), 8);
        let labels: Vec<&str> = s.controls().iter().map(|(l, _)| l.as_str()).collect();
        assert_eq!(labels, ["z1", "z2", "z3", "z4", "Fx", "Fy", "Fx2", "Fy2"]);
        assert_eq!(s.noises()[0].op.label(), "amp4");
    }

    #[test]
    fn collective_x_spreads_excitation() {
        let fx = collective(&pauli::x(), 4).unwrap();
        let col = fx.column(0);
        for idx in 0..16usize {
            let expected = if idx.count_ones() == 1 { c(0.5) } else { ZERO };
            assert_eq!(col[idx], expected, "index {idx}");
        }
    }

    #[test]
    fn ion_trap_is_fully_controllable() {
        let s = ion_trap_model(1.0).unwrap();
        assert_eq!(lie_closure_dimension(&s.hamiltonians()), 255);
    }

    #[test]
    fn ghz_examples() {
        let bell = ghz_state(2).unwrap();
        let s = sorted_spectrum(&bell);
        assert!((s[0] - 1.0).abs() < 1e-14 && s[1..].iter().all(|x| x.abs() < 1e-14));
        let g4 = ghz_state(4).unwrap();
        assert!((g4.matrix()[(0, 15)].re - 0.5).abs() < 1e-15);
        assert!((g4.purity() - 1.0).abs() < 1e-14);
        assert!(ghz_state(1).is_err());
    }
}
