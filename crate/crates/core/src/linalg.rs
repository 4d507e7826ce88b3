//! Hermitian linear-algebra helpers shared by every solver.
//!
//! Conventions used throughout the crate:
//!
//! * eigenvalues are returned in **descending** order and eigenvectors are the
//!   *columns* of the returned matrix, so `A = U diag(λ) Uᴴ`;
//! * an eigenvalue counts as zero when `λ ≤ dim · ε · λ_max`;
//! * pseudo-inverse powers act on the nonzero eigenspace only;
//! * every matrix is symmetrized as `(A + Aᴴ)/2` before it is decomposed.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Dense complex matrix used everywhere in the crate.
pub type CMatrix = DMatrix<Complex64>;
/// Dense complex column vector.
pub type CVector = DVector<Complex64>;

const MAX_EIGEN_SWEEPS: usize = 10_000;

/// Eigen-decomposition of a Hermitian matrix with descending eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianEigen {
    /// Eigenvalues, largest first.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, matching `values`.
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Threshold below which an eigenvalue is treated as exactly zero.
    pub fn rank_tolerance(&self) -> f64 {
        rank_tolerance(self.values.first().copied().unwrap_or(0.0), self.dim())
    }

    /// Number of eigenvalues above the rank tolerance.
    pub fn rank(&self) -> usize {
        let tol = self.rank_tolerance();
        self.values.iter().filter(|&&v| v > tol).count()
    }

    /// Eigenvalues with everything at or below the rank tolerance clamped to 0.
    pub fn clamped_values(&self) -> Vec<f64> {
        let tol = self.rank_tolerance();
        self.values
            .iter()
            .map(|&v| if v > tol { v } else { 0.0 })
            .collect()
    }

    /// Columns spanning the nonzero eigenspace (range of the matrix).
    pub fn range_basis(&self) -> CMatrix {
        self.vectors.columns(0, self.rank()).into_owned()
    }

    /// Reassembles `U f(Λ) Uᴴ` on the nonzero eigenspace.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.dim();
        let tol = self.rank_tolerance();
        let mut out = CMatrix::zeros(n, n);
        for (k, &lambda) in self.values.iter().enumerate() {
            if lambda <= tol {
                continue;
            }
            let u = self.vectors.column(k);
            let scale = Complex64::new(f(lambda), 0.0);
            out += (u * u.adjoint()) * scale;
        }
        symmetrize(&out)
    }

    /// `A^e` for one of the supported exponents, pseudo-inverse convention.
    pub fn power(&self, exponent: PsdExponent) -> CMatrix {
        match exponent {
            PsdExponent::Inverse => self.apply(|l| 1.0 / l),
            PsdExponent::Sqrt => self.apply(f64::sqrt),
            PsdExponent::InvSqrt => self.apply(|l| 1.0 / l.sqrt()),
        }
    }

    /// Orthogonal projector onto the range.
    pub fn projector(&self) -> CMatrix {
        self.apply(|_| 1.0)
    }
}

/// Exponents supported by [`psd_power`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsdExponent {
    /// Moore-Penrose pseudo-inverse, `A^{-1}`.
    Inverse,
    /// `A^{1/2}`.
    Sqrt,
    /// Pseudo-inverse square root, `A^{-1/2}`.
    InvSqrt,
}

/// Numerical-rank threshold for a spectrum whose largest magnitude is `lambda_max`.
pub fn rank_tolerance(lambda_max: f64, dim: usize) -> f64 {
    dim as f64 * f64::EPSILON * lambda_max.abs()
}

/// `(A + Aᴴ) / 2`.
pub fn symmetrize(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Hermitian eigen-decomposition with eigenvalues sorted descending.
pub fn hermitian_evd(a: &CMatrix) -> Result<HermitianEigen> {
    if !a.is_square() {
        return Err(Error::NumericalFailure(format!(
            "eigendecomposition of a non-square {}x{} matrix",
            a.nrows(),
            a.ncols()
        )));
    }
    let n = a.nrows();
    if n == 0 {
        return Ok(HermitianEigen {
            values: Vec::new(),
            vectors: CMatrix::zeros(0, 0),
        });
    }
    let sym = symmetrize(a);
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, MAX_EIGEN_SWEEPS).ok_or_else(|| {
        Error::NumericalFailure(format!("Hermitian eigensolver did not converge ({n}x{n})"))
    })?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));

    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(HermitianEigen { values, vectors })
}

/// Power of a Hermitian PSD matrix computed on its nonzero eigenspace.
pub fn psd_power(a: &CMatrix, exponent: PsdExponent) -> Result<CMatrix> {
    Ok(hermitian_evd(a)?.power(exponent))
}

/// `‖VᴴV − I‖_F`; zero exactly when `V` lies on the Stiefel manifold.
pub fn stiefel_residual(v: &CMatrix) -> f64 {
    let gram = v.adjoint() * v;
    (gram - CMatrix::identity(v.ncols(), v.ncols())).norm()
}

/// Orthonormalizes the columns of `a` with a QR factorization whose `R` factor
/// has a positive real diagonal, so the map is continuous around points that
/// are already orthonormal.
pub fn orthonormalize(a: &CMatrix) -> CMatrix {
    let qr = a.clone().qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..q.ncols().min(r.nrows()) {
        let diag = r[(k, k)];
        let mag = diag.norm();
        if mag > 0.0 {
            let phase = diag / mag;
            let mut col = q.column_mut(k);
            col *= phase;
        }
    }
    q
}

/// Singular values (descending) and right singular vectors as rows, so that
/// `A = U diag(s) Vh` with `Vh` of size `min(rows, cols) × cols`.
pub fn svd_right(a: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let svd = SVD::try_new(a.clone(), false, true, f64::EPSILON, MAX_EIGEN_SWEEPS)
        .ok_or_else(|| Error::NumericalFailure("SVD did not converge".into()))?;
    let vt = svd
        .v_t
        .ok_or_else(|| Error::NumericalFailure("SVD returned no right factor".into()))?;
    let k = svd.singular_values.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let values = order.iter().map(|&i| svd.singular_values[i]).collect();
    let mut rows = CMatrix::zeros(k, a.ncols());
    for (dst, &src) in order.iter().enumerate() {
        rows.set_row(dst, &vt.row(src));
    }
    Ok((values, rows))
}

/// Numerical rank of a matrix from its singular values.
pub fn matrix_rank(a: &CMatrix) -> Result<usize> {
    let (s, _) = svd_right(a)?;
    let tol = rank_tolerance(s.first().copied().unwrap_or(0.0), a.nrows().max(a.ncols()));
    Ok(s.iter().filter(|&&v| v > tol).count())
}

/// Real part of the trace.
pub fn trace_re(a: &CMatrix) -> f64 {
    (0..a.nrows().min(a.ncols())).map(|i| a[(i, i)].re).sum()
}

/// `Σ_i w_i · v_iᴴ A v_i` over the columns `v_i` of `v`, i.e. `tr(diag(w) Vᴴ A V)`.
pub fn weighted_quadratic_trace(v: &CMatrix, a: &CMatrix, weights: &[f64]) -> f64 {
    debug_assert_eq!(v.ncols(), weights.len());
    let av = a * v;
    weights
        .iter()
        .enumerate()
        .map(|(i, &w)| w * v.column(i).dotc(&av.column(i)).re)
        .sum()
}

/// Matrix with i.i.d. `CN(0, 1)` entries, drawn row-major with the real part
/// before the imaginary part of each entry.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = CMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            out[(i, j)] = Complex64::new(re * scale, im * scale);
        }
    }
    out
}

/// Random point on `St(rows, cols)` obtained by orthonormalizing a Gaussian matrix.
pub fn random_stiefel<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    orthonormalize(&complex_gaussian(rng, rows, cols))
}

/// Real diagonal matrix as a complex matrix.
pub fn real_diag(values: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&DVector::from_iterator(
        values.len(),
        values.iter().map(|&v| Complex64::new(v, 0.0)),
    ))
}
