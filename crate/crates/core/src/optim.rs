//! Extended GRAPE: piecewise-constant propagation, the Frobenius error
//! functional, finite-difference gradients over coherent and noise amplitudes,
//! and a box-constrained quasi-Newton optimizer with random restarts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{bail_arg, Error, Result};
use crate::lindblad::expm;
use crate::models::ControlSystem;
use crate::par;
use crate::qops::{c, vec, CMatrix, CVector, DensityOperator, VectorizedState};

/// Tolerance of the physical-state checks applied along trajectories.
pub const HEALTH_TOL: f64 = 1e-6;

/// Piecewise-constant amplitudes on `M` uniform slices of length `dt`.
/// Row `k` of `u` (length `m`) and of `gamma` (length `ℓ`) hold slice `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlSequence {
    pub dt: f64,
    pub u: Vec<Vec<f64>>,
    pub gamma: Vec<Vec<f64>>,
}

impl ControlSequence {
    pub fn zeros(slices: usize, dt: f64, controls: usize, noises: usize) -> Self {
        Self { dt, u: vec![vec![0.0; controls]; slices], gamma: vec![vec![0.0; noises]; slices] }
    }

    pub fn slices(&self) -> usize {
        self.u.len()
    }

    pub fn duration(&self) -> f64 {
        self.dt * self.slices() as f64
    }

    /// Check shapes and noise bounds against `system`.
    pub fn validate(&self, system: &ControlSystem) -> Result<()> {
        let (m, l) = (system.controls().len(), system.noises().len());
        if self.u.is_empty() || self.u.len() != self.gamma.len() {
            bail_arg!("sequence needs M >= 1 slices with matching u and gamma rows");
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            bail_arg!("slice length must be positive, got {}", self.dt);
        }
        let gmax = system.gamma_max();
        for (k, (u, g)) in self.u.iter().zip(&self.gamma).enumerate() {
            if u.len() != m || g.len() != l {
                bail_arg!("slice {k} has {} controls and {} noises, system has {m} and {l}", u.len(), g.len());
            }
            if u.iter().any(|x| !x.is_finite()) {
                bail_arg!("slice {k} has non-finite control amplitudes");
            }
            for (i, (&x, &hi)) in g.iter().zip(&gmax).enumerate() {
                if !(0.0..=hi).contains(&x) {
                    bail_arg!("slice {k}: noise amplitude {i} = {x} outside [0, {hi}]");
                }
            }
        }
        Ok(())
    }

    /// Split every slice into two identical halves.
    pub fn refine(&self) -> Self {
        let dup = |rows: &Vec<Vec<f64>>| rows.iter().flat_map(|r| [r.clone(), r.clone()]).collect();
        Self { dt: self.dt / 2.0, u: dup(&self.u), gamma: dup(&self.gamma) }
    }

    fn params_per_slice(&self) -> usize {
        self.u.first().map_or(0, Vec::len) + self.gamma.first().map_or(0, Vec::len)
    }

    /// Slice-major parameter vector `[u_1, γ_1, u_2, γ_2, ...]`.
    pub fn flatten(&self) -> Vec<f64> {
        self.u.iter().zip(&self.gamma).flat_map(|(u, g)| u.iter().chain(g).copied()).collect()
    }

    fn assign(&mut self, x: &[f64]) {
        let m = self.u.first().map_or(0, Vec::len);
        let p = self.params_per_slice();
        for (k, chunk) in x.chunks(p).enumerate() {
            self.u[k].copy_from_slice(&chunk[..m]);
            self.gamma[k].copy_from_slice(&chunk[m..]);
        }
    }
}

/// Steer `rho0` towards `target` in time `total_time` using `slices` slices.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferProblem {
    pub system: ControlSystem,
    pub rho0: DensityOperator,
    pub target: DensityOperator,
    pub total_time: f64,
    pub slices: usize,
}

impl TransferProblem {
    pub fn new(system: ControlSystem, rho0: DensityOperator, target: DensityOperator, total_time: f64, slices: usize) -> Result<Self> {
        if rho0.dim() != system.dim() || target.dim() != system.dim() {
            bail_arg!("state dimensions {} / {} do not match system {}", rho0.dim(), target.dim(), system.dim());
        }
        if !(total_time > 0.0) || slices == 0 {
            bail_arg!("need T > 0 and M >= 1, got T = {total_time}, M = {slices}");
        }
        Ok(Self { system, rho0, target, total_time, slices })
    }

    pub fn dt(&self) -> f64 {
        self.total_time / self.slices as f64
    }

    fn check(&self, seq: &ControlSequence) -> Result<()> {
        seq.validate(&self.system)?;
        if seq.slices() != self.slices || (seq.duration() - self.total_time).abs() > 1e-9 * self.total_time {
            bail_arg!("sequence ({} slices, T = {}) does not match problem ({} slices, T = {})", seq.slices(), seq.duration(), self.slices, self.total_time);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<VectorizedState>,
    /// Descending spectrum of every state.
    pub sorted_eigenvalues: Vec<Vec<f64>>,
}

/// `X_k = exp(−dt L_k)` for one slice.
fn slice_propagator(system: &ControlSystem, u: &[f64], gamma: &[f64], dt: f64) -> Result<CMatrix> {
    let l = system.superops().liouvillian(u, gamma);
    expm(&(l * c(-dt)))
}

fn slice_propagators(system: &ControlSystem, seq: &ControlSequence, parallel: bool) -> Result<Vec<CMatrix>> {
    par::map_range(seq.slices(), parallel, |k| slice_propagator(system, &seq.u[k], &seq.gamma[k], seq.dt))
        .into_iter()
        .collect()
}

fn health_checked(v: &CVector, step: usize) -> Result<DensityOperator> {
    if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical(format!("non-finite state after slice {step}")));
    }
    let m = VectorizedState::from_vector(v.clone())?.unvec();
    DensityOperator::with_tolerance(m, HEALTH_TOL)
        .map_err(|e| Error::Numerical(format!("state after slice {step} is unphysical: {e}")))
}

/// Apply the slices in order, recording every state and its spectrum.
pub fn propagate(problem: &TransferProblem, seq: &ControlSequence) -> Result<Trajectory> {
    problem.check(seq)?;
    let xs = slice_propagators(&problem.system, seq, true)?;
    let mut x = problem.rho0.vectorize().into_vector();
    let mut out = Trajectory {
        times: vec![0.0],
        states: vec![problem.rho0.vectorize()],
        sorted_eigenvalues: vec![crate::qops::sorted_spectrum(&problem.rho0)],
    };
    for (k, xk) in xs.iter().enumerate() {
        x = xk * x;
        let rho = health_checked(&x, k + 1)?;
        out.times.push(seq.dt * (k + 1) as f64);
        out.sorted_eigenvalues.push(crate::qops::sorted_spectrum(&rho));
        out.states.push(VectorizedState::from_vector(x.clone())?);
    }
    Ok(out)
}

fn final_vector(problem: &TransferProblem, xs: &[CMatrix]) -> CVector {
    xs.iter().fold(problem.rho0.vectorize().into_vector(), |x, xk| xk * x)
}

/// `δ_F = ‖X_{M:0} − vec(ρ_target)‖₂`.
pub fn error(problem: &TransferProblem, seq: &ControlSequence) -> Result<f64> {
    problem.check(seq)?;
    error_unchecked(problem, seq, true)
}

fn error_unchecked(problem: &TransferProblem, seq: &ControlSequence, parallel: bool) -> Result<f64> {
    let xs = slice_propagators(&problem.system, seq, parallel)?;
    let r = final_vector(problem, &xs) - vec(problem.target.matrix()).into_vector();
    let e = r.norm();
    if !e.is_finite() {
        return Err(Error::Numerical("error functional is not finite".into()));
    }
    Ok(e)
}

/// Difference quotient used for the slice derivatives `∂X_k/∂a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FdScheme {
    /// `(X(a + s) − X(a))/s`, default step `√ε (1 + |a|)`.
    #[default]
    Forward,
    /// `(X(a + s) − X(a − s))/2s`, default step `ε^{1/3} (1 + |a|)`; one more
    /// exponential per element, error `O(s²)` instead of `O(s)`.
    Central,
}

impl FdScheme {
    /// Default relative step (multiplied by `1 + |a|`).
    pub fn default_step(self) -> f64 {
        match self {
            FdScheme::Forward => f64::EPSILON.sqrt(),
            FdScheme::Central => f64::EPSILON.cbrt(),
        }
    }
}

/// Default forward-difference step for amplitude `a`.
pub fn default_fd_step(a: f64) -> f64 {
    FdScheme::Forward.default_step() * (1.0 + a.abs())
}

/// Gradient of `δ_F²` with respect to every amplitude, row `k` holding
/// `[∂/∂u_1(t_k), ..., ∂/∂u_m(t_k), ∂/∂γ_1(t_k), ..., ∂/∂γ_ℓ(t_k)]`.
///
/// Each slice derivative is the one-sided difference
/// `(exp(−dt L(a + s)) − X_k)/s`, chained through cached forward states and
/// backward costates: `∂δ² = 2 Re(λ_k† ∂X_k X_{k−1:0})`. `step` overrides the
/// default relative step `√ε` (the actual step is `step · (1 + |a|)`).
pub fn gradient(problem: &TransferProblem, seq: &ControlSequence, step: Option<f64>) -> Result<Vec<Vec<f64>>> {
    gradient_with(problem, seq, FdScheme::Forward, step)
}

/// [`gradient`] with a choice of difference scheme.
pub fn gradient_with(problem: &TransferProblem, seq: &ControlSequence, scheme: FdScheme, step: Option<f64>) -> Result<Vec<Vec<f64>>> {
    problem.check(seq)?;
    if let Some(s) = step {
        if !(s > 0.0) {
            bail_arg!("finite-difference step must be positive, got {s}");
        }
    }
    let (_, g) = value_and_gradient(problem, seq, scheme, step, true)?;
    let p = seq.params_per_slice();
    Ok(g.chunks(p.max(1)).map(<[f64]>::to_vec).take(seq.slices()).collect())
}

/// `(δ_F², flattened gradient of δ_F²)`.
fn value_and_gradient(
    problem: &TransferProblem,
    seq: &ControlSequence,
    scheme: FdScheme,
    step: Option<f64>,
    parallel: bool,
) -> Result<(f64, Vec<f64>)> {
    let system = &problem.system;
    let xs = slice_propagators(system, seq, parallel)?;
    let mut forward = Vec::with_capacity(xs.len() + 1);
    forward.push(problem.rho0.vectorize().into_vector());
    for xk in &xs {
        let next = xk * forward.last().unwrap();
        forward.push(next);
    }
    let r = forward.last().unwrap() - vec(problem.target.matrix()).into_vector();
    let value = r.norm_squared();
    if !value.is_finite() {
        return Err(Error::Numerical("error functional is not finite".into()));
    }
    // costates[k] = (X_M ⋯ X_{k+2})† r, the adjoint seen by slice k (0-based)
    let mm = xs.len();
    let mut costates = vec![r.clone(); mm];
    for k in (0..mm.saturating_sub(1)).rev() {
        costates[k] = xs[k + 1].adjoint() * &costates[k + 1];
    }
    let m = system.controls().len();
    let p = seq.params_per_slice();
    let grads = par::map_range(mm * p, parallel, |idx| -> Result<f64> {
        let (k, j) = (idx / p, idx % p);
        let shifted = |delta: f64| {
            let (mut u, mut g) = (seq.u[k].clone(), seq.gamma[k].clone());
            if j < m {
                u[j] += delta;
            } else {
                g[j - m] += delta;
            }
            slice_propagator(system, &u, &g, seq.dt)
        };
        let a = if j < m { seq.u[k][j] } else { seq.gamma[k][j - m] };
        let s = step.unwrap_or_else(|| scheme.default_step()) * (1.0 + a.abs());
        let dx = match scheme {
            FdScheme::Forward => (shifted(s)? - &xs[k]) * c(1.0 / s),
            FdScheme::Central => (shifted(s)? - shifted(-s)?) * c(0.5 / s),
        };
        let v = dx * &forward[k];
        Ok(2.0 * costates[k].dotc(&v).re)
    });
    let grad: Vec<f64> = grads.into_iter().collect::<Result<_>>()?;
    Ok((value, grad))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// `δ_F` fell below `tol`.
    Converged,
    /// Projected gradient vanished.
    Stationary,
    MaxIterations,
    /// No step satisfying the sufficient-decrease condition was found.
    LineSearchStalled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizeOptions {
    pub max_iters: usize,
    /// Target `δ_F`.
    pub tol: f64,
    pub fd_scheme: FdScheme,
    /// Relative finite-difference step; `None` uses the scheme's default.
    pub fd_step: Option<f64>,
    pub seed: u64,
    /// Number of correction pairs kept by the quasi-Newton update.
    pub memory: usize,
    /// Evaluate propagators and gradient elements on the thread pool.
    pub parallel: bool,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self { max_iters: 500, tol: 1e-8, fd_scheme: FdScheme::Forward, fd_step: None, seed: 0, memory: 10, parallel: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeResult {
    pub sequence: ControlSequence,
    /// Best-so-far `δ_F` after every iteration, starting with the initial value.
    pub error_history: Vec<f64>,
    pub final_error: f64,
    pub iterations: usize,
    pub termination: Termination,
}

struct Bounds {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Bounds {
    fn of(problem: &TransferProblem) -> Self {
        let m = problem.system.controls().len();
        let gmax = problem.system.gamma_max();
        let mut lo = Vec::new();
        let mut hi = Vec::new();
        for _ in 0..problem.slices {
            lo.extend(std::iter::repeat_n(f64::NEG_INFINITY, m));
            hi.extend(std::iter::repeat_n(f64::INFINITY, m));
            lo.extend(std::iter::repeat_n(0.0, gmax.len()));
            hi.extend(gmax.iter().copied());
        }
        Self { lo, hi }
    }

    fn project(&self, x: &mut [f64]) {
        for ((v, &l), &h) in x.iter_mut().zip(&self.lo).zip(&self.hi) {
            *v = v.clamp(l, h);
        }
    }

    /// Zero the components of `d` that would leave the box from `x`.
    fn fix_active(&self, x: &[f64], d: &mut [f64]) {
        for i in 0..x.len() {
            if (x[i] <= self.lo[i] && d[i] < 0.0) || (x[i] >= self.hi[i] && d[i] > 0.0) {
                d[i] = 0.0;
            }
        }
    }

    fn projected_gradient_norm(&self, x: &[f64], g: &[f64]) -> f64 {
        let mut d: Vec<f64> = g.iter().map(|v| -v).collect();
        self.fix_active(x, &mut d);
        d.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Two-loop recursion: `−H g` for the stored correction pairs.
fn lbfgs_direction(g: &[f64], pairs: &std::collections::VecDeque<(Vec<f64>, Vec<f64>)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(pairs.len());
    for (s, y) in pairs.iter().rev() {
        let rho = 1.0 / dot(y, s);
        let a = rho * dot(s, &q);
        q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
        alphas.push((a, rho));
    }
    if let Some((s, y)) = pairs.back() {
        let scale = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= scale);
    }
    for ((s, y), (a, rho)) in pairs.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, &q);
        q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

/// Minimise `δ_F²` from `init` by projected limited-memory BFGS with Armijo
/// backtracking; noise amplitudes stay in `[0, γ_max]`.
pub fn optimize(problem: &TransferProblem, init: &ControlSequence, opts: &OptimizeOptions) -> Result<OptimizeResult> {
    problem.check(init)?;
    if opts.max_iters == 0 {
        let e = error_unchecked(problem, init, opts.parallel)?;
        return Ok(OptimizeResult { sequence: init.clone(), error_history: vec![e], final_error: e, iterations: 0, termination: Termination::MaxIterations });
    }
    let bounds = Bounds::of(problem);
    let mut seq = init.clone();
    let mut x = seq.flatten();
    let eval = |x: &[f64], seq: &mut ControlSequence| -> Result<(f64, Vec<f64>)> {
        seq.assign(x);
        value_and_gradient(problem, seq, opts.fd_scheme, opts.fd_step, opts.parallel)
    };
    let (mut f, mut g) = eval(&x, &mut seq)?;
    let mut history = vec![f.sqrt()];
    let mut pairs = std::collections::VecDeque::new();
    let mut termination = Termination::MaxIterations;
    let mut iterations = 0;
    let tol2 = opts.tol * opts.tol;
    while iterations < opts.max_iters {
        if f <= tol2 {
            termination = Termination::Converged;
            break;
        }
        if bounds.projected_gradient_norm(&x, &g) <= 1e-14 {
            termination = Termination::Stationary;
            break;
        }
        let mut accepted = None;
        for attempt in 0..2 {
            let mut d = if attempt == 0 && !pairs.is_empty() { lbfgs_direction(&g, &pairs) } else { g.iter().map(|v| -v).collect() };
            bounds.fix_active(&x, &mut d);
            if dot(&d, &g) >= 0.0 {
                pairs.clear();
                continue;
            }
            if pairs.is_empty() || attempt == 1 {
                // Unit steepest-descent steps are badly scaled; cap the first move.
                let dn = d.iter().map(|v| v * v).sum::<f64>().sqrt();
                let cap = 1.0 / dn.max(1.0);
                d.iter_mut().for_each(|v| *v *= cap);
            }
            let mut alpha = 1.0;
            for _ in 0..40 {
                let mut xn: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + alpha * b).collect();
                bounds.project(&mut xn);
                let decrease = dot(&g, &xn.iter().zip(&x).map(|(a, b)| a - b).collect::<Vec<_>>());
                let (fn_, gn) = eval(&xn, &mut seq)?;
                if fn_.is_finite() && fn_ <= f + 1e-4 * decrease && fn_ < f {
                    accepted = Some((xn, fn_, gn));
                    break;
                }
                alpha *= 0.5;
            }
            if accepted.is_some() {
                break;
            }
            pairs.clear();
        }
        iterations += 1;
        let Some((xn, fn_, gn)) = accepted else {
            termination = Termination::LineSearchStalled;
            seq.assign(&x);
            break;
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            pairs.push_back((s, y));
            if pairs.len() > opts.memory.max(1) {
                pairs.pop_front();
            }
        }
        x = xn;
        f = fn_;
        g = gn;
        history.push(f.sqrt());
    }
    seq.assign(&x);
    if f <= tol2 {
        termination = Termination::Converged;
    }
    Ok(OptimizeResult { sequence: seq, final_error: f.sqrt(), error_history: history, iterations, termination })
}

/// How random initial sequences are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitStyle {
    /// Controls uniform in `[−π, π]`, noise uniform in `[0, γ_max]`.
    UniformRandom,
    /// Random controls; noise at `γ_max` in `count` equal on-blocks
    /// alternating with off-blocks of the same length.
    NoiseBlocks(usize),
}

/// Half-width of the uniform distribution of initial control amplitudes.
pub const INIT_CONTROL_SCALE: f64 = std::f64::consts::PI;

pub fn random_sequence(problem: &TransferProblem, seed: u64, style: InitStyle) -> ControlSequence {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (m, mm) = (problem.system.controls().len(), problem.slices);
    let gmax = problem.system.gamma_max();
    let mut seq = ControlSequence::zeros(mm, problem.dt(), m, gmax.len());
    for row in &mut seq.u {
        row.iter_mut().for_each(|v| *v = rng.random_range(-INIT_CONTROL_SCALE..=INIT_CONTROL_SCALE));
    }
    match style {
        InitStyle::UniformRandom => {
            for row in &mut seq.gamma {
                row.iter_mut().zip(&gmax).for_each(|(v, &hi)| *v = rng.random::<f64>() * hi);
            }
        }
        InitStyle::NoiseBlocks(count) => {
            let blocks = 2 * count.max(1);
            for (k, row) in seq.gamma.iter_mut().enumerate() {
                let block = k * blocks / mm;
                if count > 0 && block % 2 == 0 {
                    row.copy_from_slice(&gmax);
                }
            }
        }
    }
    seq
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartReport {
    pub best: OptimizeResult,
    pub best_index: usize,
    /// Final `δ_F` of every restart, in seed order.
    pub final_errors: Vec<f64>,
}

/// Best of `restarts` runs from random initial sequences drawn with seeds
/// `opts.seed, opts.seed + 1, ...`. Runs execute concurrently when
/// `opts.parallel` is set; the outcome does not depend on scheduling.
pub fn optimize_restarts(problem: &TransferProblem, restarts: usize, style: InitStyle, opts: &OptimizeOptions) -> Result<RestartReport> {
    if restarts == 0 {
        bail_arg!("need at least one restart");
    }
    let runs = par::map_range(restarts, opts.parallel, |r| {
        let seed = opts.seed.wrapping_add(r as u64);
        let init = random_sequence(problem, seed, style);
        optimize(problem, &init, &OptimizeOptions { seed, ..*opts })
    });
    let runs: Vec<OptimizeResult> = runs.into_iter().collect::<Result<_>>()?;
    let final_errors: Vec<f64> = runs.iter().map(|r| r.final_error).collect();
    let best_index = (0..runs.len()).min_by(|&a, &b| final_errors[a].total_cmp(&final_errors[b])).unwrap();
    Ok(RestartReport { best: runs[best_index].clone(), best_index, final_errors })
}
