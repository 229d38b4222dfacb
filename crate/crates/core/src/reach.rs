//! Reachability tools: majorisation, T-transforms, switch times, θ-channel
//! fixed points, the Hardy–Littlewood–Pólya transfer planner and the
//! Lie-closure controllability test.

use serde::{Deserialize, Serialize};

use crate::error::{bail_arg, Error, Result};
use crate::lindblad::ThetaChannelParams;
use crate::models::ControlSystem;
use crate::qops::{
    c, eigh_descending, embed_local, pauli, permutation_matrix, CMatrix, DensityOperator, HermitianOperator,
    MatrixRecord,
};
use crate::schedule::{Schedule, Segment};

/// Absolute tolerance on partial sums in majorisation tests.
pub const MAJORISATION_TOL: f64 = 1e-10;

fn descending(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// `x ≺ y`: every descending partial sum of `x` is at most the matching
/// partial sum of `y`, and the totals agree (tolerance `1e-10`).
pub fn is_majorised_by(x: &[f64], y: &[f64]) -> Result<bool> {
    is_majorised_by_tol(x, y, MAJORISATION_TOL)
}

pub fn is_majorised_by_tol(x: &[f64], y: &[f64], tol: f64) -> Result<bool> {
    if x.len() != y.len() {
        bail_arg!("majorisation needs equal lengths, got {} and {}", x.len(), y.len());
    }
    let (xs, ys) = (descending(x), descending(y));
    let (mut sx, mut sy) = (0.0, 0.0);
    for (a, b) in xs.iter().zip(&ys) {
        sx += a;
        sy += b;
        if sx > sy + tol {
            return Ok(false);
        }
    }
    Ok((sx - sy).abs() <= tol)
}

/// `λ v + (1 − λ) Q_{jk} v` with `Q_{jk}` the transposition of entries `j`, `k`.
pub fn t_transform(v: &[f64], pair: (usize, usize), lambda: f64) -> Result<Vec<f64>> {
    let (j, k) = pair;
    if !(0.0..=1.0).contains(&lambda) {
        bail_arg!("T-transform parameter must lie in [0, 1], got {lambda}");
    }
    if j == k || j >= v.len() || k >= v.len() {
        bail_arg!("invalid index pair ({j}, {k}) for length {}", v.len());
    }
    let mut out = v.to_vec();
    out[j] = lambda * v[j] + (1.0 - lambda) * v[k];
    out[k] = lambda * v[k] + (1.0 - lambda) * v[j];
    Ok(out)
}

/// Time after which swapping the pair `(ρ_ii, ρ_jj)` and damping for the rest
/// of `tau` undoes the amplitude-damping transfer between them:
/// `(1/γ*) ln((ρ_ii e^{γ* τ} + ρ_jj) / (ρ_ii + ρ_jj))`.
pub fn switch_time_amp(rho_ii: f64, rho_jj: f64, gamma_star: f64, tau: f64) -> Result<f64> {
    if rho_ii < 0.0 || rho_jj < 0.0 || rho_ii + rho_jj <= 0.0 {
        bail_arg!("populations must be non-negative and not both zero");
    }
    if !(gamma_star > 0.0) || !(tau >= 0.0) {
        bail_arg!("need gamma_star > 0 and tau >= 0");
    }
    Ok(((rho_ii * (gamma_star * tau).exp() + rho_jj) / (rho_ii + rho_jj)).ln() / gamma_star)
}

/// Switch time for the generalised generator `V_θ`, `θ ∈ [0, ½)`.
pub fn switch_time_theta(rho_ii: f64, rho_jj: f64, theta: f64, gamma_star: f64, tau: f64) -> Result<f64> {
    if !(0.0..0.5).contains(&theta) {
        bail_arg!("switch time needs theta in [0, 1/2), got {theta}");
    }
    if rho_ii < 0.0 || rho_jj < 0.0 || rho_ii + rho_jj <= 0.0 {
        bail_arg!("populations must be non-negative and not both zero");
    }
    let p = ThetaChannelParams::new(theta, gamma_star, tau)?;
    let (t2, tb2) = (theta * theta, p.theta_bar().powi(2));
    let ct = p.c_theta();
    let grow = (gamma_star * tau / ct).exp();
    let num = grow * (tb2 * rho_ii - t2 * rho_jj) + (tb2 * rho_jj - t2 * rho_ii);
    let den = (tb2 - t2) * (rho_ii + rho_jj);
    Ok(ct / gamma_star * (num / den).ln())
}

/// Pairing condition `θ²/θ̄² ≤ ρ_ii/ρ_jj ≤ θ̄²/θ²` under which the θ-channel
/// transfer on the pair can be neutralised by a switch.
pub fn theta_pair_admissible(rho_ii: f64, rho_jj: f64, theta: f64) -> bool {
    let (t2, tb2) = (theta * theta, (1.0 - theta).powi(2));
    // Cross-multiplied so zero populations need no special casing.
    t2 * rho_jj <= tb2 * rho_ii * (1.0 + 1e-12) && t2 * rho_ii <= tb2 * rho_jj * (1.0 + 1e-12)
}

/// Stationary state of the single-qubit θ-channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaFixedPoint {
    pub state: DensityOperator,
    /// False at `θ = ½`, where every state with equal populations is fixed.
    pub unique: bool,
}

/// `ρ_∞(θ) = c_θ diag(θ̄², θ²)`.
pub fn fixed_point_theta(theta: f64) -> Result<ThetaFixedPoint> {
    if !(0.0..=1.0).contains(&theta) {
        bail_arg!("theta must lie in [0, 1], got {theta}");
    }
    let (t2, tb2) = (theta * theta, (1.0 - theta).powi(2));
    let ct = 1.0 / (t2 + tb2);
    Ok(ThetaFixedPoint { state: DensityOperator::from_diagonal(&[ct * tb2, ct * t2])?, unique: theta != 0.5 })
}

/// Bias `δ(θ) = (θ̄² − θ²)/(θ̄² + θ²)`.
pub fn theta_bias(theta: f64) -> f64 {
    let (t2, tb2) = (theta * theta, (1.0 - theta).powi(2));
    (tb2 - t2) / (tb2 + t2)
}

/// Inverse temperature `β(θ) = (2/Δ) artanh δ(θ)` of the bath sharing the
/// θ-channel's fixed point; infinite at `θ = 0`, zero at `θ = ½`.
pub fn beta_of_theta(theta: f64, delta_energy: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&theta) {
        bail_arg!("theta must lie in [0, 1], got {theta}");
    }
    if !(delta_energy > 0.0) {
        bail_arg!("energy splitting must be positive, got {delta_energy}");
    }
    let d = theta_bias(theta);
    if d >= 1.0 {
        return Ok(f64::INFINITY);
    }
    if d <= -1.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(2.0 / delta_energy * d.atanh())
}

/// One T-transform of the HLP construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HlpStep {
    /// Permutation sorting the running vector: `sorted[i] = current[pre_permutation[i]]`.
    pub pre_permutation: Vec<usize>,
    /// Zero-based indices `(j, k)`, `j < k`, into the sorted vector.
    pub pair: (usize, usize),
    /// Nominal mixing parameter of `λ 1 + (1 − λ) Q_{jk}`.
    pub lambda: f64,
    /// Noise-on duration realising the step (truncated if `λ ≈ ½`).
    pub tau: f64,
    /// Whether the pair is exchanged before the noise acts (`λ < ½`).
    pub swap_first: bool,
    /// Whether `tau` was truncated from an infinite or longer exact value.
    pub truncated: bool,
    /// Mixing parameter actually realised by `tau`.
    pub lambda_effective: f64,
}

/// Unitaries relating the input states to their sorted diagonal forms:
/// `ρ = U diag(spectrum) U†`.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagonalizers {
    pub initial: CMatrix,
    pub target: CMatrix,
}

/// An HLP transfer plan from spectrum `initial` to spectrum `target`.
#[derive(Debug, Clone, PartialEq)]
pub struct HlpPlan {
    pub initial: Vec<f64>,
    pub target: Vec<f64>,
    pub gamma_star: f64,
    pub steps: Vec<HlpStep>,
    /// Spectrum produced by the timed steps, in the plan's final layout.
    pub predicted: Vec<f64>,
    /// `‖predicted − target‖₂`.
    pub residual: f64,
    pub total_dissipative_time: f64,
    pub diagonalizers: Option<Diagonalizers>,
}

/// JSON form of an [`HlpPlan`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HlpPlanRecord {
    pub initial: Vec<f64>,
    pub target: Vec<f64>,
    pub gamma_star: f64,
    pub pairs: Vec<(usize, usize)>,
    pub lambdas: Vec<f64>,
    pub lambdas_effective: Vec<f64>,
    pub taus: Vec<f64>,
    pub swap_first: Vec<bool>,
    pub truncated: Vec<bool>,
    pub permutations: Vec<Vec<usize>>,
    pub predicted: Vec<f64>,
    pub residual: f64,
    pub total_dissipative_time: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_diagonalizer: Option<MatrixRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_diagonalizer: Option<MatrixRecord>,
}

impl HlpPlan {
    pub fn to_record(&self) -> HlpPlanRecord {
        HlpPlanRecord {
            initial: self.initial.clone(),
            target: self.target.clone(),
            gamma_star: self.gamma_star,
            pairs: self.steps.iter().map(|s| s.pair).collect(),
            lambdas: self.steps.iter().map(|s| s.lambda).collect(),
            lambdas_effective: self.steps.iter().map(|s| s.lambda_effective).collect(),
            taus: self.steps.iter().map(|s| s.tau).collect(),
            swap_first: self.steps.iter().map(|s| s.swap_first).collect(),
            truncated: self.steps.iter().map(|s| s.truncated).collect(),
            permutations: self.steps.iter().map(|s| s.pre_permutation.clone()).collect(),
            predicted: self.predicted.clone(),
            residual: self.residual,
            total_dissipative_time: self.total_dissipative_time,
            initial_diagonalizer: self.diagonalizers.as_ref().map(|d| MatrixRecord::from(&d.initial)),
            target_diagonalizer: self.diagonalizers.as_ref().map(|d| MatrixRecord::from(&d.target)),
        }
    }

    pub fn from_record(r: &HlpPlanRecord) -> Result<Self> {
        let n = r.pairs.len();
        let lens = [r.lambdas.len(), r.lambdas_effective.len(), r.taus.len(), r.swap_first.len(), r.truncated.len(), r.permutations.len()];
        if lens.iter().any(|&l| l != n) {
            bail_arg!("plan record arrays have inconsistent lengths");
        }
        let steps = (0..n)
            .map(|i| HlpStep {
                pre_permutation: r.permutations[i].clone(),
                pair: r.pairs[i],
                lambda: r.lambdas[i],
                tau: r.taus[i],
                swap_first: r.swap_first[i],
                truncated: r.truncated[i],
                lambda_effective: r.lambdas_effective[i],
            })
            .collect();
        let diagonalizers = match (&r.initial_diagonalizer, &r.target_diagonalizer) {
            (Some(a), Some(b)) => Some(Diagonalizers { initial: a.to_matrix()?, target: b.to_matrix()? }),
            (None, None) => None,
            _ => bail_arg!("plan record needs both diagonalizers or neither"),
        };
        Ok(Self {
            initial: r.initial.clone(),
            target: r.target.clone(),
            gamma_star: r.gamma_star,
            steps,
            predicted: r.predicted.clone(),
            residual: r.residual,
            total_dissipative_time: r.total_dissipative_time,
            diagonalizers,
        })
    }

    /// Spectra after each nominal (untruncated) step, starting with `initial`.
    pub fn nominal_spectra(&self) -> Vec<Vec<f64>> {
        let mut out = vec![self.initial.clone()];
        let mut y = self.initial.clone();
        for s in &self.steps {
            let sorted: Vec<f64> = s.pre_permutation.iter().map(|&i| y[i]).collect();
            y = t_transform(&sorted, s.pair, s.lambda).expect("plan steps are valid");
            out.push(y.clone());
        }
        out
    }
}

fn sorting_permutation(v: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[b].total_cmp(&v[a]).then(a.cmp(&b)));
    idx
}

const HLP_EXACT_TOL: f64 = 1e-14;

/// Noise duration realising a T-transform with `|1 − 2λ| = factor`.
fn bitflip_duration(factor: f64, gamma_star: f64) -> f64 {
    -2.0 / gamma_star * factor.ln()
}

/// Run the steps with their effective mixing parameters and return the final
/// vector (in plan layout).
fn execute_effective(initial: &[f64], steps: &[HlpStep]) -> Vec<f64> {
    let mut y = initial.to_vec();
    for s in steps {
        let sorted: Vec<f64> = s.pre_permutation.iter().map(|&i| y[i]).collect();
        y = t_transform(&sorted, s.pair, s.lambda_effective).expect("valid step");
    }
    y
}

/// Build the HLP plan taking spectrum `y` (of `ρ₀`) to spectrum `x` (of
/// `ρ_target`) using T-transforms realised by bit-flip noise at rate `γ*`.
///
/// Steps whose exact duration is infinite (`λ = ½`) or longer than needed are
/// truncated to one common duration chosen so that the final spectrum lies
/// within `residual_target` of `x`.
pub fn hlp_plan(y: &[f64], x: &[f64], gamma_star: f64, residual_target: f64) -> Result<HlpPlan> {
    if y.len() != x.len() || y.is_empty() {
        bail_arg!("spectra must have equal non-zero length, got {} and {}", y.len(), x.len());
    }
    if !(gamma_star > 0.0) {
        bail_arg!("gamma_star must be positive, got {gamma_star}");
    }
    if !(residual_target > 0.0) {
        bail_arg!("residual target must be positive, got {residual_target}");
    }
    let y = descending(y);
    let x = descending(x);
    if !is_majorised_by(&x, &y)? {
        return Err(Error::Reachability("target spectrum is not majorised by the initial spectrum".into()));
    }
    let n = y.len();

    // Nominal HLP arithmetic.
    let mut nominal: Vec<(Vec<usize>, (usize, usize), f64, f64)> = Vec::new();
    let mut cur = y.clone();
    for _ in 0..n.saturating_sub(1) {
        let perm = sorting_permutation(&cur);
        let sorted: Vec<f64> = perm.iter().map(|&i| cur[i]).collect();
        let Some(j) = (0..n).rev().find(|&i| x[i] < sorted[i] - HLP_EXACT_TOL) else { break };
        let Some(k) = (j + 1..n).find(|&i| x[i] > sorted[i] + HLP_EXACT_TOL) else { break };
        let delta = (sorted[j] - x[j]).min(x[k] - sorted[k]);
        let gap = sorted[j] - sorted[k];
        let lambda = (1.0 - delta / gap).clamp(0.0, 1.0);
        cur = t_transform(&sorted, (j, k), lambda)?;
        nominal.push((perm, (j, k), lambda, gap));
    }

    // Duration assignment with a shared truncation factor.
    let build = |eps_common: f64| -> Vec<HlpStep> {
        nominal
            .iter()
            .map(|(perm, pair, lambda, _)| {
                let factor = (1.0 - 2.0 * lambda).abs();
                let swap_first = *lambda < 0.5 && factor > eps_common;
                if factor > eps_common {
                    HlpStep {
                        pre_permutation: perm.clone(),
                        pair: *pair,
                        lambda: *lambda,
                        tau: bitflip_duration(factor, gamma_star),
                        swap_first,
                        truncated: false,
                        lambda_effective: *lambda,
                    }
                } else {
                    HlpStep {
                        pre_permutation: perm.clone(),
                        pair: *pair,
                        lambda: *lambda,
                        tau: bitflip_duration(eps_common, gamma_star),
                        swap_first: false,
                        truncated: true,
                        lambda_effective: 0.5 * (1.0 + eps_common),
                    }
                }
            })
            .collect()
    };
    let residual_of = |steps: &[HlpStep]| -> f64 {
        let out = execute_effective(&y, steps);
        out.iter().zip(&x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
    };

    let near_half: Vec<f64> = nominal
        .iter()
        .filter(|(_, _, l, _)| (1.0 - 2.0 * l).abs() < 1e-6)
        .map(|(_, _, _, gap)| *gap)
        .collect();
    let mut eps = if near_half.is_empty() {
        0.0
    } else {
        let norm = near_half.iter().map(|g| g * g).sum::<f64>().sqrt();
        (residual_target * std::f64::consts::SQRT_2 / norm).min(1.0)
    };
    let mut steps = build(eps);
    let mut residual = residual_of(&steps);
    for _ in 0..60 {
        if residual <= residual_target || eps == 0.0 {
            break;
        }
        eps *= 0.98 * residual_target / residual;
        steps = build(eps);
        residual = residual_of(&steps);
    }
    let predicted = execute_effective(&y, &steps);
    let total = steps.iter().map(|s| s.tau).sum();
    Ok(HlpPlan {
        initial: y,
        target: x,
        gamma_star,
        steps,
        predicted,
        residual,
        total_dissipative_time: total,
        diagonalizers: None,
    })
}

/// HLP plan between two density operators, keeping the diagonalising
/// unitaries needed to execute it.
pub fn hlp_plan_states(
    rho0: &DensityOperator,
    target: &DensityOperator,
    gamma_star: f64,
    residual_target: f64,
) -> Result<HlpPlan> {
    if rho0.dim() != target.dim() {
        bail_arg!("state dimensions differ: {} vs {}", rho0.dim(), target.dim());
    }
    let (y, uy) = eigh_descending(rho0.matrix())?;
    let (x, ux) = eigh_descending(target.matrix())?;
    let mut plan = hlp_plan(&y, &x, gamma_star, residual_target)?;
    plan.diagonalizers = Some(Diagonalizers { initial: uy, target: ux });
    Ok(plan)
}

/// `U₁₂ = 1₂ ⊕ R^{⊕(N/2 − 1)}` with `R = [[1, −1], [1, 1]]/√2`: leaves the first
/// pair of levels alone and turns every other diagonal 2×2 block into one the
/// bit-flip generator cannot change.
pub fn protection_unitary(n: usize) -> CMatrix {
    let dim = 1usize << n;
    let s = c(std::f64::consts::FRAC_1_SQRT_2);
    let mut u = CMatrix::identity(dim, dim);
    for b in 1..dim / 2 {
        let i = 2 * b;
        u[(i, i)] = s;
        u[(i, i + 1)] = -s;
        u[(i + 1, i)] = s;
        u[(i + 1, i + 1)] = s;
    }
    u
}

/// Ideal π pulse about x on qubit `n`, `exp(−iπ σ_x^(n)/2) = −i σ_x^(n)`.
pub fn pi_pulse_x(n: usize) -> Result<CMatrix> {
    Ok(embed_local(&pauli::x(), n, n)? * c(-1.0) * crate::qops::I)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HlpExecuteOptions {
    /// Symmetric π-pulse decoupling cycles per noise interval.
    pub trotter_cycles: usize,
}

impl Default for HlpExecuteOptions {
    fn default() -> Self {
        Self { trotter_cycles: 64 }
    }
}

fn is_diagonal(m: &CMatrix) -> bool {
    (0..m.nrows()).all(|i| (0..m.ncols()).all(|j| i == j || m[(i, j)].norm() == 0.0))
}

/// Index of the bit-flip channel `σ_x/2` on the last qubit.
fn bitflip_channel(system: &ControlSystem) -> Result<usize> {
    let n = system.qubits();
    let expected = embed_local(&pauli::x().scale(0.5), n, n)?;
    system
        .noises()
        .iter()
        .position(|ch| (ch.op.matrix() - &expected).iter().all(|z| z.norm() < 1e-14))
        .ok_or_else(|| Error::Configuration("system has no switchable bit-flip noise on its last qubit".into()))
}

/// Translate a plan into a schedule of ideal unitaries and decoupled noise
/// intervals: diagonalise `ρ₀`; per step permute the pair into the first
/// block, protect the remaining blocks with `U₁₂`, switch on bit-flip noise
/// for `τ` with symmetric π-pulse decoupling, undo `U₁₂` and the permutation;
/// finally rotate onto the target eigenbasis.
pub fn hlp_execute(plan: &HlpPlan, system: &ControlSystem, opts: &HlpExecuteOptions) -> Result<Schedule> {
    let n = system.qubits();
    let dim = system.dim();
    if plan.initial.len() != dim {
        bail_arg!("plan has {} levels, system has {dim}", plan.initial.len());
    }
    if opts.trotter_cycles == 0 {
        bail_arg!("need at least one decoupling cycle");
    }
    let noise_idx = bitflip_channel(system)?;
    if !is_diagonal(system.drift().matrix()) {
        return Err(Error::Configuration("HLP execution needs a diagonal drift Hamiltonian".into()));
    }
    if !system.background().is_empty() {
        return Err(Error::Configuration("HLP execution assumes no background noise".into()));
    }
    let gamma_max = system.noises()[noise_idx].gamma_max;
    if (gamma_max - plan.gamma_star).abs() > 1e-12 * gamma_max {
        bail_arg!("plan built for gamma_star {} but system allows {gamma_max}", plan.gamma_star);
    }
    let identity = CMatrix::identity(dim, dim);
    let (u_init, u_target) = match &plan.diagonalizers {
        Some(d) => (d.initial.clone(), d.target.clone()),
        None => (identity.clone(), identity.clone()),
    };
    let protect = protection_unitary(n);
    let pulse = pi_pulse_x(n)?;
    let mut gamma = vec![0.0; system.noises().len()];
    gamma[noise_idx] = plan.gamma_star;

    let mut segments = vec![Segment::Unitary { label: "diagonalize".into(), matrix: u_init.adjoint(), duration: 0.0 }];
    for (idx, step) in plan.steps.iter().enumerate() {
        let (j, k) = step.pair;
        let (first, second) = if step.swap_first { (k, j) } else { (j, k) };
        // sorted index -> block layout
        let mut moved = vec![usize::MAX; dim];
        moved[first] = 0;
        moved[second] = 1;
        let mut next = 2;
        for slot in moved.iter_mut() {
            if *slot == usize::MAX {
                *slot = next;
                next += 1;
            }
        }
        // physical (current layout) -> block layout
        let mut forward = vec![0; dim];
        for (sorted_idx, &phys) in step.pre_permutation.iter().enumerate() {
            forward[phys] = moved[sorted_idx];
        }
        // block layout -> sorted layout, which is the next step's current layout
        let mut back = vec![0; dim];
        for (sorted_idx, &block) in moved.iter().enumerate() {
            back[block] = sorted_idx;
        }
        segments.push(Segment::Unitary {
            label: format!("step{idx}:permute+protect"),
            matrix: &protect * permutation_matrix(&forward),
            duration: 0.0,
        });
        segments.push(Segment::Decoupled {
            duration: step.tau,
            gamma: gamma.clone(),
            cycles: opts.trotter_cycles,
            pulse: pulse.clone(),
        });
        segments.push(Segment::Unitary {
            label: format!("step{idx}:unprotect+restore"),
            matrix: permutation_matrix(&back) * protect.adjoint(),
            duration: 0.0,
        });
    }
    // Final layout -> descending order -> target eigenbasis.
    let final_sort = sorting_permutation(&plan.predicted);
    let mut to_sorted = vec![0; dim];
    for (sorted_idx, &phys) in final_sort.iter().enumerate() {
        to_sorted[phys] = sorted_idx;
    }
    segments.push(Segment::Unitary {
        label: "to-target".into(),
        matrix: &u_target * permutation_matrix(&to_sorted),
        duration: 0.0,
    });
    Ok(Schedule::new(segments))
}

/// Dimension of the real Lie algebra generated by `{iH}`: nested commutators
/// with the generators are orthonormalised (Hilbert–Schmidt, threshold
/// `1e-10`) against the running basis until nothing new appears. Generators
/// are first projected onto their traceless parts.
pub fn lie_closure_dimension(generators: &[HermitianOperator]) -> usize {
    lie_closure_basis(generators).len()
}

/// Real coordinates of a Hermitian matrix: `(Re, Im)` of every entry, so the
/// Euclidean inner product equals `Re tr(A† B)`.
fn hermitian_coords(m: &CMatrix) -> Vec<f64> {
    m.iter().flat_map(|z| [z.re, z.im]).collect()
}

fn from_coords(v: &[f64], dim: usize) -> CMatrix {
    CMatrix::from_iterator(dim, dim, v.chunks(2).map(|p| crate::qops::C64::new(p[0], p[1])))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Orthogonalise `v` against `basis` (two Gram–Schmidt passes) and return it
/// normalised if it survives the threshold.
fn orthonormal_residual(mut v: Vec<f64>, basis: &[Vec<f64>]) -> Option<Vec<f64>> {
    let norm0 = dot(&v, &v).sqrt();
    if norm0 < 1e-300 {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= norm0);
    for _ in 0..2 {
        for b in basis {
            let p = dot(&v, b);
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
        }
    }
    let norm = dot(&v, &v).sqrt();
    if norm < 1e-10 {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= norm);
    Some(v)
}

fn lie_closure_basis(generators: &[HermitianOperator]) -> Vec<Vec<f64>> {
    let Some(first) = generators.first() else { return Vec::new() };
    let dim = first.dim();
    let gens: Vec<CMatrix> = generators.iter().map(|g| g.traceless().into_matrix()).collect();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for g in &gens {
        if let Some(v) = orthonormal_residual(hermitian_coords(g), &basis) {
            basis.push(v);
        }
    }
    let gen_basis: Vec<CMatrix> = basis.iter().map(|v| from_coords(v, dim)).collect();
    // Brackets of generators with every basis element found so far span the
    // generated algebra (left-normed brackets suffice).
    let mut frontier = 0;
    while frontier < basis.len() {
        let b = from_coords(&basis[frontier], dim);
        frontier += 1;
        for g in &gen_basis {
            // i[G, B] is Hermitian when G and B are.
            let bracket = (g * &b - &b * g) * crate::qops::I;
            if let Some(v) = orthonormal_residual(hermitian_coords(&bracket), &basis) {
                basis.push(v);
                if basis.len() == dim * dim - 1 {
                    return basis;
                }
            }
        }
    }
    basis
}
