//! Dense complex linear algebra for finite-dimensional quantum systems.
//!
//! States are normalized amplitude vectors, observables are Hermitian
//! matrices. Everything here is small and dense (system dimensions stay
//! well below 64), so no sparsity tricks are used.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Relative Hermiticity tolerance for observables.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Relative eigenvalue spacing below which eigenvalues share a cluster.
pub const DEGENERACY_TOL: f64 = 1e-10;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Largest entry modulus.
pub fn max_norm(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Normalized state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    amplitudes: CVector,
}

impl QuantumState {
    /// Builds a state from raw amplitudes, normalizing them.
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        Self::from_vector(CVector::from_vec(amplitudes))
    }

    pub fn from_vector(v: CVector) -> Result<Self> {
        if v.is_empty() {
            return Err(Error::InvalidParameter("state dimension must be at least 1".into()));
        }
        let norm = v.norm();
        if !norm.is_finite() {
            return Err(Error::InvalidParameter("state amplitudes are not finite".into()));
        }
        if norm == 0.0 {
            return Err(Error::ZeroState);
        }
        Ok(Self { amplitudes: v.unscale(norm) })
    }

    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::new(amplitudes.iter().map(|&x| c(x, 0.0)).collect())
    }

    /// Computational basis vector `|index⟩`.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::InvalidParameter(format!(
                "basis index {index} out of range for dimension {dim}"
            )));
        }
        let mut v = CVector::zeros(dim);
        v[index] = ONE;
        Ok(Self { amplitudes: v })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &QuantumState) -> Result<C64> {
        check_dim(self.dim(), other.dim())?;
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// `⟨self|A|other⟩`.
    pub fn sandwich(&self, a: &CMatrix, other: &QuantumState) -> Result<C64> {
        check_dim(self.dim(), a.nrows())?;
        check_dim(self.dim(), other.dim())?;
        Ok(self.amplitudes.dotc(&(a * &other.amplitudes)))
    }
}

/// Hermitian operator on the system space.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    matrix: CMatrix,
}

impl Observable {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        check_hermitian(&matrix, None)?;
        Ok(Self { matrix })
    }

    /// Like [`Observable::new`], but a Hermiticity failure carries `label`.
    pub fn labelled(matrix: CMatrix, label: &str) -> Result<Self> {
        check_hermitian(&matrix, Some(label))?;
        Ok(Self { matrix })
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        let mut m = CMatrix::zeros(n, n);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: row.len() });
            }
            for (col, &x) in row.iter().enumerate() {
                m[(r, col)] = c(x, 0.0);
            }
        }
        Self::new(m)
    }

    pub fn identity(dim: usize) -> Self {
        Self { matrix: CMatrix::identity(dim, dim) }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { matrix: CMatrix::zeros(dim, dim) }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = CMatrix::zeros(n, n);
        for (k, &v) in values.iter().enumerate() {
            m[(k, k)] = c(v, 0.0);
        }
        Self { matrix: m }
    }

    pub fn pauli_x() -> Self {
        Self { matrix: CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]) }
    }

    pub fn pauli_y() -> Self {
        Self { matrix: CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]) }
    }

    pub fn pauli_z() -> Self {
        Self::diagonal(&[1.0, -1.0])
    }

    /// `|s⟩⟨s|`.
    pub fn projector(s: &QuantumState) -> Self {
        let v = s.amplitudes();
        Self { matrix: v * v.adjoint() }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Real linear combination `alpha·self + beta·other`.
    pub fn combine(&self, alpha: f64, other: &Observable, beta: f64) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        Ok(Self { matrix: self.matrix.scale(alpha) + other.matrix.scale(beta) })
    }

    /// Largest eigenvalue magnitude.
    pub fn spectral_radius(&self) -> f64 {
        hermitian_eig(self)
            .eigenvalues
            .iter()
            .fold(0.0, |acc, e| acc.max(e.abs()))
    }

    /// Product `self·other`; Hermitian only if the two commute.
    pub fn product_matrix(&self, other: &Observable) -> Result<CMatrix> {
        check_dim(self.dim(), other.dim())?;
        Ok(&self.matrix * &other.matrix)
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

fn check_hermitian(m: &CMatrix, label: Option<&str>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
    }
    if m.nrows() == 0 {
        return Err(Error::InvalidParameter("observable dimension must be at least 1".into()));
    }
    let scale = max_norm(m);
    let mut worst = (0usize, 0usize, 0.0f64);
    for r in 0..m.nrows() {
        for col in r..m.ncols() {
            let dev = (m[(r, col)] - m[(col, r)].conj()).norm();
            if !(dev <= worst.2) {
                worst = (r, col, dev);
            }
        }
    }
    if !(worst.2 <= HERMITIAN_TOL * scale) {
        return Err(Error::NotHermitian {
            label: label.map(str::to_string),
            row: worst.0,
            col: worst.1,
            deviation: worst.2,
        });
    }
    Ok(())
}

/// Kronecker product on the composite space.
pub trait Tensor {
    fn tensor(&self, other: &Self) -> Self;
}

impl Tensor for QuantumState {
    fn tensor(&self, other: &Self) -> Self {
        Self { amplitudes: self.amplitudes.kronecker(&other.amplitudes) }
    }
}

impl Tensor for Observable {
    fn tensor(&self, other: &Self) -> Self {
        Self { matrix: self.matrix.kronecker(&other.matrix) }
    }
}

/// Eigenvalues ascending, eigenvectors as orthonormal columns.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl EigenSystem {
    /// `V Λ V†`.
    pub fn reconstruct(&self) -> CMatrix {
        let mut scaled = self.eigenvectors.clone();
        for (k, &e) in self.eigenvalues.iter().enumerate() {
            scaled.column_mut(k).scale_mut(e);
        }
        scaled * self.eigenvectors.adjoint()
    }

    pub fn eigenvector(&self, k: usize) -> CVector {
        self.eigenvectors.column(k).into_owned()
    }
}

pub fn hermitian_eig(a: &Observable) -> EigenSystem {
    eig_unchecked(a.matrix())
}

/// Eigendecomposition of an arbitrary matrix that must be Hermitian.
pub fn eigh(m: &CMatrix) -> Result<EigenSystem> {
    check_hermitian(m, None)?;
    Ok(eig_unchecked(m))
}

pub(crate) fn eig_unchecked(m: &CMatrix) -> EigenSystem {
    let n = m.nrows();
    let sym = (m + m.adjoint()).unscale(2.0);
    let decomposition = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| decomposition.eigenvalues[x].total_cmp(&decomposition.eigenvalues[y]));

    let eigenvalues = order.iter().map(|&k| decomposition.eigenvalues[k]).collect();
    let mut eigenvectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = decomposition.eigenvectors.column(src).into_owned();
        fix_phase(&mut col);
        eigenvectors.set_column(dst, &col);
    }
    EigenSystem { eigenvalues, eigenvectors }
}

/// Rotates the largest-magnitude component onto the positive real axis.
/// Near-ties resolve to the lowest index so output stays reproducible.
fn fix_phase(v: &mut CVector) {
    let largest = v.iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
    if largest == 0.0 {
        return;
    }
    let pivot = v
        .iter()
        .position(|z| z.norm() >= largest * (1.0 - 1e-9))
        .unwrap_or(0);
    let phase = v[pivot].conj() / v[pivot].norm();
    for z in v.iter_mut() {
        *z *= phase;
    }
    v[pivot] = c(v[pivot].re, 0.0);
}

/// Common eigenbasis of two commuting observables.
#[derive(Debug, Clone)]
pub struct JointEigenSystem {
    /// `(a_k, b_k)` for each column of `eigenvectors`.
    pub pairs: Vec<(f64, f64)>,
    pub eigenvectors: CMatrix,
}

impl JointEigenSystem {
    pub fn eigenvector(&self, k: usize) -> CVector {
        self.eigenvectors.column(k).into_owned()
    }
}

/// `‖AB − BA‖` in the max-norm.
pub fn commutator_norm(a: &Observable, b: &Observable) -> Result<f64> {
    check_dim(a.dim(), b.dim())?;
    let (ma, mb) = (a.matrix(), b.matrix());
    Ok(max_norm(&(ma * mb - mb * ma)))
}

/// Diagonalizes `a` and `b` together. Degenerate eigenspaces of `a` are
/// split by diagonalizing `b` restricted to each of them.
pub fn simultaneous_eig(a: &Observable, b: &Observable, tol: f64) -> Result<JointEigenSystem> {
    let norm = commutator_norm(a, b)?;
    let bound = tol * max_norm(a.matrix()) * max_norm(b.matrix());
    if !(norm <= bound) {
        return Err(Error::NotCommuting { norm, bound });
    }

    let n = a.dim();
    let ea = hermitian_eig(a);
    let radius = ea.eigenvalues.iter().fold(0.0f64, |acc, e| acc.max(e.abs()));
    let cluster_tol = DEGENERACY_TOL * radius;

    let mut pairs = Vec::with_capacity(n);
    let mut vectors = CMatrix::zeros(n, n);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && ea.eigenvalues[end] - ea.eigenvalues[start] <= cluster_tol {
            end += 1;
        }
        let block = ea.eigenvectors.columns(start, end - start).into_owned();
        let projected = block.adjoint() * b.matrix() * &block;
        let inner = eig_unchecked(&projected);
        let rotated = &block * &inner.eigenvectors;
        for k in 0..(end - start) {
            let mut col = rotated.column(k).into_owned();
            fix_phase(&mut col);
            let a_val = col.dotc(&(a.matrix() * &col)).re;
            pairs.push((a_val, inner.eigenvalues[k]));
            vectors.set_column(start + k, &col);
        }
        start = end;
    }
    Ok(JointEigenSystem { pairs, eigenvectors: vectors })
}
