//! Dense operator algebra on n-qubit Hilbert spaces.
//!
//! Qubit 1 is the leftmost tensor factor and qubit n the rightmost, so the
//! computational basis index of `|q_1 q_2 … q_n⟩` is the binary number
//! `q_1 q_2 … q_n` with `q_n` as the least significant bit.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{bail_arg, Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Absolute tolerance for Hermiticity, positivity and trace on construction.
pub const STRICT_TOL: f64 = 1e-12;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Single-qubit operators in the `{|0⟩, |1⟩}` basis.
pub mod pauli {
    use super::*;

    pub fn identity() -> CMatrix {
        CMatrix::identity(2, 2)
    }

    pub fn x() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
    }

    pub fn y() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
    }

    pub fn z() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
    }

    /// `σ⁻ = |0⟩⟨1|`, the amplitude-damping jump operator.
    pub fn lowering() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO])
    }

    /// `σ⁺ = |1⟩⟨0|`.
    pub fn raising() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ZERO, ZERO, ONE, ZERO])
    }
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn dagger(a: &CMatrix) -> CMatrix {
    a.adjoint()
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Frobenius norm `sqrt(Σ |a_ij|²)`.
pub fn frobenius_norm(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn max_abs(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn qubit_count(dim: usize) -> Option<usize> {
    (dim.is_power_of_two() && dim >= 2).then(|| dim.trailing_zeros() as usize)
}

/// Place the 2×2 operator `op` on qubit `site` (1-based) of an `n`-qubit
/// register: `1 ⊗ … ⊗ op ⊗ … ⊗ 1`.
pub fn embed_local(op: &CMatrix, site: usize, n: usize) -> Result<CMatrix> {
    if op.nrows() != 2 || op.ncols() != 2 {
        bail_arg!("local operator must be 2x2, got {}x{}", op.nrows(), op.ncols());
    }
    if n == 0 || site == 0 || site > n {
        bail_arg!("site {site} out of range for {n} qubits");
    }
    let left = CMatrix::identity(1 << (site - 1), 1 << (site - 1));
    let right = CMatrix::identity(1 << (n - site), 1 << (n - site));
    Ok(kron(&kron(&left, op), &right))
}

fn require_square(m: &CMatrix, what: &str) -> Result<()> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        bail_arg!("{what} must be a non-empty square matrix, got {}x{}", m.nrows(), m.ncols());
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical(format!("{what} has non-finite entries")));
    }
    Ok(())
}

fn symmetrized(m: &CMatrix, tol: f64, what: &str) -> Result<CMatrix> {
    require_square(m, what)?;
    let skew = max_abs(&(m - m.adjoint()));
    if skew > tol {
        bail_arg!("{what} is not Hermitian (max |A - A†| = {skew:.3e})");
    }
    Ok((m + m.adjoint()).scale(0.5))
}

/// Eigenvalues and eigenvectors of a Hermitian matrix, eigenvalues in
/// descending order. Column `i` of the returned matrix belongs to value `i`.
pub fn eigh_descending(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let h = symmetrized(m, 1e-8 * (1.0 + max_abs(m)), "matrix")?;
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(m.nrows(), m.ncols());
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok((values, vectors))
}

/// Real spectrum of a Hermitian matrix in descending order.
pub fn hermitian_spectrum(m: &CMatrix) -> Result<Vec<f64>> {
    let h = symmetrized(m, 1e-8 * (1.0 + max_abs(m)), "matrix")?;
    let mut values: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(values)
}

/// A Hermitian operator such as a drift or control Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    matrix: CMatrix,
}

impl HermitianOperator {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        Ok(Self { matrix: symmetrized(&matrix, STRICT_TOL, "Hamiltonian")? })
    }

    pub fn zeros(dim: usize) -> Self {
        Self { matrix: CMatrix::zeros(dim, dim) }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    /// Traceless part `H − tr(H)/N · 1`.
    pub fn traceless(&self) -> Self {
        let n = self.dim();
        let shift = self.matrix.trace() / c(n as f64);
        Self { matrix: &self.matrix - CMatrix::identity(n, n) * shift }
    }
}

/// A Lindblad jump operator `V`; need not be Hermitian.
#[derive(Debug, Clone, PartialEq)]
pub struct LindbladOperator {
    matrix: CMatrix,
    label: String,
}

impl LindbladOperator {
    pub fn new(label: impl Into<String>, matrix: CMatrix) -> Result<Self> {
        require_square(&matrix, "Lindblad operator")?;
        Ok(Self { matrix, label: label.into() })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

/// A density operator: Hermitian, positive semidefinite, unit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    matrix: CMatrix,
}

impl DensityOperator {
    /// Validate at the strict construction tolerance of `1e-12`.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        Self::with_tolerance(matrix, STRICT_TOL)
    }

    /// Validate with a caller-chosen absolute tolerance; used for states that
    /// come out of long propagations.
    pub fn with_tolerance(matrix: CMatrix, tol: f64) -> Result<Self> {
        let matrix = symmetrized(&matrix, tol, "density operator")?;
        let trace = matrix.trace();
        if (trace.re - 1.0).abs() > tol || trace.im.abs() > tol {
            bail_arg!("density operator trace is {:.15} (expected 1)", trace.re);
        }
        let min = matrix.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
        if min < -tol {
            bail_arg!("density operator has negative eigenvalue {min:.3e}");
        }
        Ok(Self { matrix })
    }

    /// `diag(p)` for a probability vector `p`.
    pub fn from_diagonal(p: &[f64]) -> Result<Self> {
        let v: Vec<C64> = p.iter().map(|&x| c(x)).collect();
        Self::new(CMatrix::from_diagonal(&CVector::from_vec(v)))
    }

    /// `|ψ⟩⟨ψ|` for a normalised ket.
    pub fn pure(ket: &CVector) -> Result<Self> {
        let norm = ket.norm();
        if (norm - 1.0).abs() > 1e-10 {
            bail_arg!("ket norm is {norm}, expected 1");
        }
        Self::new(ket * ket.adjoint())
    }

    /// `1/2ⁿ`, the infinite-temperature thermal state.
    pub fn maximally_mixed(n: usize) -> Self {
        let dim = 1usize << n;
        Self { matrix: CMatrix::identity(dim, dim).scale(1.0 / dim as f64) }
    }

    /// `|0…0⟩⟨0…0|`.
    pub fn zero_state(n: usize) -> Self {
        let dim = 1usize << n;
        let mut m = CMatrix::zeros(dim, dim);
        m[(0, 0)] = ONE;
        Self { matrix: m }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn qubits(&self) -> Option<usize> {
        qubit_count(self.dim())
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn vectorize(&self) -> VectorizedState {
        vec(&self.matrix)
    }

    /// `U ρ U†`.
    pub fn conjugate(&self, u: &CMatrix) -> Result<Self> {
        Self::with_tolerance(u * &self.matrix * u.adjoint(), 1e-10)
    }
}

/// Column-stacked `vec(A)`: entry `(i, j)` sits at index `j·N + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorizedState {
    vector: CVector,
}

impl VectorizedState {
    pub fn from_vector(vector: CVector) -> Result<Self> {
        let n = (vector.len() as f64).sqrt().round() as usize;
        if n == 0 || n * n != vector.len() {
            bail_arg!("vectorised state length {} is not a perfect square", vector.len());
        }
        Ok(Self { vector })
    }

    pub fn vector(&self) -> &CVector {
        &self.vector
    }

    pub fn into_vector(self) -> CVector {
        self.vector
    }

    /// The state dimension `N`, where the vector has length `N²`.
    pub fn state_dim(&self) -> usize {
        (self.vector.len() as f64).sqrt().round() as usize
    }

    pub fn unvec(&self) -> CMatrix {
        unvec(&self.vector)
    }
}

pub fn vec(a: &CMatrix) -> VectorizedState {
    // nalgebra storage is column-major, which is exactly column stacking.
    VectorizedState { vector: CVector::from_column_slice(a.as_slice()) }
}

/// Inverse of [`vec`] on a raw vector of length `N²`.
pub fn unvec(v: &CVector) -> CMatrix {
    let n = (v.len() as f64).sqrt().round() as usize;
    assert_eq!(n * n, v.len(), "unvec needs a vector of square length");
    CMatrix::from_column_slice(n, n, v.as_slice())
}

/// `δ_F = ‖a − b‖₂`, the Frobenius distance of the underlying matrices.
pub fn frobenius_error(a: &VectorizedState, b: &VectorizedState) -> Result<f64> {
    if a.vector.len() != b.vector.len() {
        bail_arg!("dimension mismatch: {} vs {}", a.vector.len(), b.vector.len());
    }
    Ok((&a.vector - &b.vector).norm())
}

/// Eigenvalues of `ρ`, descending.
pub fn sorted_spectrum(rho: &DensityOperator) -> Vec<f64> {
    let mut values: Vec<f64> = rho.matrix.symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(|a, b| b.total_cmp(a));
    values
}

fn ginibre(dim: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    CMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re, im)
    })
}

/// Random full-rank `n`-qubit state `G G† / tr(G G†)` with `G` a complex
/// Ginibre matrix. Deterministic in `seed`.
pub fn random_density(n: usize, seed: u64) -> DensityOperator {
    assert!(n >= 1, "random_density needs at least one qubit");
    let dim = 1usize << n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = ginibre(dim, &mut rng);
    let mut m = &g * g.adjoint();
    let tr = m.trace().re;
    m.scale_mut(1.0 / tr);
    let m = (&m + m.adjoint()).scale(0.5);
    DensityOperator { matrix: m }
}

/// Haar-random unitary from the QR decomposition of a Ginibre matrix, with
/// the phases of `R`'s diagonal absorbed.
pub fn random_unitary(dim: usize, seed: u64) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let qr = ginibre(dim, &mut rng).qr();
    let (mut q, r) = qr.unpack();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        let mut col = q.column_mut(j);
        col *= phase;
    }
    q
}

/// Random Hermitian matrix with i.i.d. Gaussian entries (GUE-like), scaled by
/// `scale`.
pub fn random_hermitian(dim: usize, scale: f64, seed: u64) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = ginibre(dim, &mut rng);
    (&g + g.adjoint()).scale(0.5 * scale)
}

/// Permutation matrix `P` with `P e_{src} = e_{dst}` for `dst = map[src]`.
pub fn permutation_matrix(map: &[usize]) -> CMatrix {
    let n = map.len();
    let mut p = CMatrix::zeros(n, n);
    for (src, &dst) in map.iter().enumerate() {
        p[(dst, src)] = ONE;
    }
    p
}

/// Serializable complex matrix as separate real/imaginary row-major arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixRecord {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl From<&CMatrix> for MatrixRecord {
    fn from(m: &CMatrix) -> Self {
        let rows = |f: fn(&C64) -> f64| {
            (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect()).collect()
        };
        Self { re: rows(|z| z.re), im: rows(|z| z.im) }
    }
}

impl MatrixRecord {
    pub fn to_matrix(&self) -> Result<CMatrix> {
        let n = self.re.len();
        if self.im.len() != n || self.re.iter().chain(&self.im).any(|r| r.len() != n) {
            bail_arg!("matrix record must be square with matching re/im parts");
        }
        Ok(CMatrix::from_fn(n, n, |i, j| C64::new(self.re[i][j], self.im[i][j])))
    }
}
