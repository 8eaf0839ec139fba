//! Dense symmetric linear algebra shared by the learners.
//!
//! Everything here works on small-to-medium dense matrices (a few hundred rows
//! at most in practice) and is deterministic for a fixed input. Gram matrices
//! that come out numerically rank-deficient get a single diagonal jitter of
//! `1e-10 * trace / dim` before factorization; eigenvalues used to form
//! inverse square roots are clamped at `1e-12 * λ_max`.

use log::debug;
use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Relative scale of the one-shot diagonal jitter.
pub const JITTER_SCALE: f64 = 1e-10;
/// Eigenvalues below `EIGEN_FLOOR * λ_max` are clamped before inversion.
pub const EIGEN_FLOOR: f64 = 1e-12;

/// A dense real matrix whose stored entries are exactly symmetric.
///
/// A zero-dimensional matrix is allowed; it stands for the Gram matrix of an
/// empty dictionary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct SymMatrix(Matrix);

impl SymMatrix {
    /// Wraps `m`, rejecting non-square or asymmetric input.
    pub fn new(m: Matrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::input(format!(
                "expected a square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        for i in 0..m.nrows() {
            for j in (i + 1)..m.ncols() {
                if m[(i, j)] != m[(j, i)] {
                    return Err(Error::input(format!("matrix is not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(SymMatrix(m))
    }

    /// Averages `m` with its transpose, then mirrors the upper triangle so the
    /// result is exactly symmetric.
    pub fn symmetrize(m: Matrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        let n = m.nrows();
        Ok(Self::from_fn(n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)])))
    }

    /// Builds a symmetric matrix evaluating `f` only on the upper triangle.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        SymMatrix(m)
    }

    pub fn identity(n: usize) -> Self {
        SymMatrix(Matrix::identity(n, n))
    }

    pub fn scaled_identity(n: usize, c: f64) -> Self {
        SymMatrix(Matrix::identity(n, n) * c)
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        SymMatrix(Matrix::from_diagonal(&Vector::from_column_slice(diag)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_inner(self) -> Matrix {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn mul_vec(&self, v: &Vector) -> Vector {
        &self.0 * v
    }

    /// `self + c * u uᵀ`, kept exactly symmetric.
    pub fn add_rank_one(&self, c: f64, u: &Vector) -> Result<Self> {
        check_len(self.dim(), u.len())?;
        let m = &self.0;
        Ok(Self::from_fn(self.dim(), |i, j| m[(i, j)] + c * u[i] * u[j]))
    }

    /// `Q · self · Qᵀ` for a `k x n` matrix `Q`.
    pub fn congruence(&self, q: &Matrix) -> Result<Self> {
        check_len(self.dim(), q.ncols())?;
        Self::symmetrize(q * &self.0 * q.transpose())
    }

    /// Grows the matrix by one row/column: `[[self, col], [colᵀ, corner]]`.
    pub fn bordered(&self, col: &Vector, corner: f64) -> Result<Self> {
        let n = self.dim();
        check_len(n, col.len())?;
        let m = &self.0;
        Ok(Self::from_fn(n + 1, |i, j| match (i < n, j < n) {
            (true, true) => m[(i, j)],
            (true, false) => col[i],
            (false, true) => col[j],
            (false, false) => corner,
        }))
    }

    /// Leading principal `k x k` block.
    pub fn leading(&self, k: usize) -> Self {
        SymMatrix(self.0.view((0, 0), (k, k)).into_owned())
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.0.row_iter().map(|r| r.iter().copied().collect()).collect()
    }
}

impl TryFrom<Vec<Vec<f64>>> for SymMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let mut m = Matrix::zeros(n, n);
        for (i, row) in rows.iter().enumerate() {
            check_len(n, row.len())?;
            for (j, v) in row.iter().enumerate() {
                m[(i, j)] = *v;
            }
        }
        SymMatrix::new(m)
    }
}

impl From<SymMatrix> for Vec<Vec<f64>> {
    fn from(m: SymMatrix) -> Self {
        m.to_rows()
    }
}

impl AsRef<Matrix> for SymMatrix {
    fn as_ref(&self) -> &Matrix {
        &self.0
    }
}

/// Eigendecomposition of a symmetric matrix, eigenvalues sorted descending.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenDecomp {
    pub eigenvalues: Vector,
    /// Orthonormal eigenvectors stored as columns, aligned with `eigenvalues`.
    pub eigenvectors: Matrix,
}

impl EigenDecomp {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `V · diag(λ) · Vᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        let v = &self.eigenvectors;
        v * Matrix::from_diagonal(&self.eigenvalues) * v.transpose()
    }

    /// Eigenvalues clamped below at `EIGEN_FLOOR * λ_max`.
    pub fn clamped_eigenvalues(&self) -> Vector {
        let floor = EIGEN_FLOOR * self.max_eigenvalue().max(0.0);
        let clamped = self.eigenvalues.map(|l| l.max(floor));
        if clamped != self.eigenvalues {
            debug!("eigenvalue floor {floor:e} triggered");
        }
        clamped
    }

    /// `Σ^{-1/2} Uᵀ` with the eigenvalue floor applied.
    pub fn inv_sqrt_transform(&self) -> Result<Matrix> {
        if self.dim() > 0 && self.max_eigenvalue() <= 0.0 {
            return Err(Error::numeric(
                "cannot form inverse square root of a non-positive spectrum",
            ));
        }
        let scale = self.clamped_eigenvalues().map(|l| 1.0 / l.sqrt());
        Ok(Matrix::from_diagonal(&scale) * self.eigenvectors.transpose())
    }
}

/// Symmetric eigendecomposition with descending eigenvalues.
pub fn eigh(m: &SymMatrix) -> Result<EigenDecomp> {
    if !m.is_finite() {
        return Err(Error::input("matrix has non-finite entries"));
    }
    let n = m.dim();
    if n == 0 {
        return Ok(EigenDecomp {
            eigenvalues: Vector::zeros(0),
            eigenvectors: Matrix::zeros(0, 0),
        });
    }
    let eig = SymmetricEigen::new(m.as_matrix().clone());
    let mut order: Vec<usize> = (0..n).collect();
    // Ties broken by index so the ordering is deterministic.
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let eigenvalues = Vector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut eigenvectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(EigenDecomp {
        eigenvalues,
        eigenvectors,
    })
}

/// Largest absolute eigenvalue, i.e. the spectral norm of a symmetric matrix.
pub fn spectral_norm(m: &SymMatrix) -> Result<f64> {
    let eig = eigh(m)?;
    Ok(eig.eigenvalues.iter().fold(0.0_f64, |acc, l| acc.max(l.abs())))
}

fn jitter(m: &SymMatrix) -> f64 {
    let n = m.dim().max(1) as f64;
    JITTER_SCALE * m.trace().abs() / n
}

/// Cholesky factor, retrying once with the diagonal jitter.
fn cholesky_with_jitter(m: &SymMatrix) -> Result<Cholesky<f64, nalgebra::Dyn>> {
    if !m.is_finite() {
        return Err(Error::input("matrix has non-finite entries"));
    }
    if let Some(c) = Cholesky::new(m.as_matrix().clone()) {
        return Ok(c);
    }
    let eps = jitter(m);
    debug!("cholesky failed, retrying with jitter {eps:e}");
    let mut jittered = m.as_matrix().clone();
    for i in 0..m.dim() {
        jittered[(i, i)] += eps;
    }
    Cholesky::new(jittered).ok_or(Error::Singular)
}

/// Solves `m x = rhs` for SPD `m` (Cholesky plus one refinement step).
pub fn solve_spd(m: &SymMatrix, rhs: &Vector) -> Result<Vector> {
    check_len(m.dim(), rhs.len())?;
    if m.dim() == 0 {
        return Ok(Vector::zeros(0));
    }
    let chol = cholesky_with_jitter(m)?;
    let mut x = chol.solve(rhs);
    let residual = rhs - m.as_matrix() * &x;
    x += chol.solve(&residual);
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular);
    }
    Ok(x)
}

/// Fresh inverse of an SPD matrix under the jitter policy.
pub fn inverse_spd(m: &SymMatrix) -> Result<SymMatrix> {
    if m.dim() == 0 {
        return Ok(SymMatrix::identity(0));
    }
    let inv = cholesky_with_jitter(m)?.inverse();
    if inv.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular);
    }
    SymMatrix::symmetrize(inv)
}

/// Given `inv = B⁻¹` for SPD `B`, returns `(B + c·u uᵀ)⁻¹` by Sherman–Morrison.
pub fn rank_one_inverse_update(inv: &SymMatrix, u: &Vector, c: f64) -> Result<SymMatrix> {
    check_len(inv.dim(), u.len())?;
    if c == 0.0 {
        return Ok(inv.clone());
    }
    let z = inv.mul_vec(u);
    let denom = 1.0 + c * u.dot(&z);
    if !(denom > 0.0) || !denom.is_finite() {
        return Err(Error::numeric(format!(
            "rank-one update lost positive definiteness (denominator {denom:e})"
        )));
    }
    let s = c / denom;
    let m = inv.as_matrix();
    Ok(SymMatrix::from_fn(inv.dim(), |i, j| m[(i, j)] - s * z[i] * z[j]))
}

/// `ln det m` for SPD `m`, from the Cholesky diagonal. No jitter is applied.
pub fn log_det_spd(m: &SymMatrix) -> Result<f64> {
    if !m.is_finite() {
        return Err(Error::input("matrix has non-finite entries"));
    }
    if m.dim() == 0 {
        return Ok(0.0);
    }
    let chol = Cholesky::new(m.as_matrix().clone()).ok_or(Error::NotSpd)?;
    let l = chol.l_dirty();
    let mut acc = 0.0;
    for i in 0..m.dim() {
        let d = l[(i, i)];
        if !(d > 0.0) {
            return Err(Error::NotSpd);
        }
        acc += 2.0 * d.ln();
    }
    Ok(acc)
}

/// `‖a − b‖_F / ‖b‖_F` (absolute distance when `b` is zero).
pub fn relative_frobenius(a: &Matrix, b: &Matrix) -> f64 {
    let diff = (a - b).norm();
    let scale = b.norm();
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

/// `‖QᵀQ − I‖_F`, the column-orthonormality defect of `Q`.
pub fn orthonormality_defect(q: &Matrix) -> f64 {
    let k = q.ncols();
    (q.transpose() * q - Matrix::identity(k, k)).norm()
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}
