//! Positive-definite matrices, certified at construction, plus the spectral
//! functions and the Fisher information metric built on them.

use crate::error::{Error, Result};
use crate::scalar::{t, Scalar};

use super::eigen::{sym_eigen, SymEigen};
use super::matrix::Matrix;
use super::sym::SymMatrix;

/// Relative Cholesky pivot tolerance used for PD certification.
const PD_TOL: f64 = 1e-12;

/// Symmetric positive definite matrix.
///
/// Construction runs a Cholesky factorization with pivot tolerance
/// `1e-12 * trace`; failure is a typed error, never a silent clamp. The
/// factor is cached for determinants and solves.
#[derive(Debug, Clone)]
pub struct SpdMatrix<T> {
    sym: SymMatrix<T>,
    chol_lower: Matrix<T>,
}

impl<T: Scalar> SpdMatrix<T> {
    pub fn new(sym: SymMatrix<T>) -> Result<Self> {
        let chol_lower = cholesky_lower(&sym)?;
        Ok(SpdMatrix { sym, chol_lower })
    }

    pub fn identity(dim: usize) -> Self {
        SpdMatrix {
            sym: SymMatrix::identity(dim),
            chol_lower: Matrix::identity(dim),
        }
    }

    /// Diagonal SPD matrix. Positivity of the entries certifies the matrix
    /// exactly, so no relative pivot tolerance applies and entries spanning
    /// hundreds of orders of magnitude are accepted.
    pub fn diagonal(entries: &[T]) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidArgument("empty diagonal".into()));
        }
        if let Some(bad) = entries.iter().find(|&&x| x <= T::zero() || !x.is_finite()) {
            return Err(Error::NotPositiveDefinite(format!(
                "diagonal entry {bad} is not positive"
            )));
        }
        let n = entries.len();
        let mut chol = Matrix::zeros(n, n);
        for (i, &x) in entries.iter().enumerate() {
            chol[(i, i)] = x.sqrt();
        }
        Ok(SpdMatrix {
            sym: SymMatrix::diagonal(entries),
            chol_lower: chol,
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.sym.dim()
    }

    #[inline]
    pub fn sym(&self) -> &SymMatrix<T> {
        &self.sym
    }

    pub fn into_sym(self) -> SymMatrix<T> {
        self.sym
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.sym.get(i, j)
    }

    pub fn chol_lower(&self) -> &Matrix<T> {
        &self.chol_lower
    }

    pub fn trace(&self) -> T {
        self.sym.trace()
    }

    pub fn log_det(&self) -> T {
        let n = self.dim();
        let two = t::<T>(2.0);
        (0..n)
            .map(|i| self.chol_lower[(i, i)].ln() * two)
            .sum()
    }

    pub fn det(&self) -> T {
        self.log_det().exp()
    }

    /// Solves `A x = b` via the cached Cholesky factor.
    pub fn solve_vec(&self, b: &[T]) -> Vec<T> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let l = &self.chol_lower;
        let mut y = b.to_vec();
        for i in 0..n {
            for j in 0..i {
                let sub = l[(i, j)] * y[j];
                y[i] -= sub;
            }
            y[i] /= l[(i, i)];
        }
        for i in (0..n).rev() {
            for j in (i + 1)..n {
                let sub = l[(j, i)] * y[j];
                y[i] -= sub;
            }
            y[i] /= l[(i, i)];
        }
        y
    }

    /// Inverse, returned as SPD.
    pub fn inverse(&self) -> SpdMatrix<T> {
        let n = self.dim();
        let mut full = Matrix::zeros(n, n);
        let mut e = vec![T::zero(); n];
        for j in 0..n {
            e[j] = T::one();
            let col = self.solve_vec(&e);
            e[j] = T::zero();
            for i in 0..n {
                full[(i, j)] = col[i];
            }
        }
        // symmetrize against round-off before re-certifying
        let inv = SymMatrix::symmetrize(&full).expect("square");
        SpdMatrix::new(inv).expect("inverse of SPD is SPD")
    }

    pub fn eigen(&self) -> Result<SymEigen<T>> {
        sym_eigen(&self.sym)
    }
}

fn cholesky_lower<T: Scalar>(a: &SymMatrix<T>) -> Result<Matrix<T>> {
    let n = a.dim();
    let tol = t::<T>(PD_TOL) * a.trace().abs().max(T::min_positive_value());
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            if i == j {
                if s <= tol {
                    return Err(Error::NotPositiveDefinite(format!(
                        "Cholesky pivot {s} at index {i} below tolerance {tol}"
                    )));
                }
                l[(i, i)] = s.sqrt();
            } else {
                l[(i, j)] = s / l[(j, j)];
            }
        }
    }
    Ok(l)
}

/// Matrix power `A^t = V diag(lambda^t) V^T` of an SPD matrix.
pub fn spd_power<T: Scalar>(a: &SpdMatrix<T>, power: T) -> Result<SpdMatrix<T>> {
    let eig = a.eigen()?;
    if eig.min_eigenvalue() <= T::zero() {
        return Err(Error::NotPositiveDefinite(
            "eigenvalue at or below zero in spd_power".into(),
        ));
    }
    let sym = eig.apply_spectral(|x| x.powf(power));
    SpdMatrix::new(sym)
}

/// Principal matrix logarithm of an SPD matrix.
pub fn matrix_log<T: Scalar>(a: &SpdMatrix<T>) -> Result<SymMatrix<T>> {
    let eig = a.eigen()?;
    if eig.min_eigenvalue() <= T::zero() {
        return Err(Error::NotPositiveDefinite(
            "eigenvalue at or below zero in matrix_log".into(),
        ));
    }
    Ok(eig.apply_spectral(|x| x.ln()))
}

/// Affine-invariant distance `|| log(A^{-1/2} B A^{-1/2}) ||_F`.
pub fn affine_invariant_distance<T: Scalar>(a: &SpdMatrix<T>, b: &SpdMatrix<T>) -> Result<T> {
    if a.dim() != b.dim() {
        return Err(Error::DimMismatch(format!(
            "distance between {}x{} and {}x{}",
            a.dim(),
            a.dim(),
            b.dim(),
            b.dim()
        )));
    }
    let a_isqrt = spd_power(a, t(-0.5))?;
    let conj = b.sym().congruence(&a_isqrt.sym().to_matrix());
    let eig = sym_eigen(&conj)?;
    if eig.min_eigenvalue() <= T::zero() {
        return Err(Error::NotPositiveDefinite(
            "conjugated matrix lost positive definiteness".into(),
        ));
    }
    Ok(eig
        .values
        .iter()
        .map(|&x| {
            let l = x.ln();
            l * l
        })
        .sum::<T>()
        .sqrt())
}

/// Fisher information metric at a base point `sigma`:
/// `<H1, H2>_sigma = tr(sigma^{-1} H1 sigma^{-1} H2) / 2`.
///
/// The inverse is computed once so Gram matrices over many tangent vectors
/// stay cheap.
#[derive(Debug, Clone)]
pub struct FimMetric<T> {
    sigma_inv: SymMatrix<T>,
}

impl<T: Scalar> FimMetric<T> {
    pub fn new(sigma: &SpdMatrix<T>) -> Self {
        FimMetric {
            sigma_inv: sigma.inverse().into_sym(),
        }
    }

    pub fn dim(&self) -> usize {
        self.sigma_inv.dim()
    }

    pub fn inner(&self, h1: &SymMatrix<T>, h2: &SymMatrix<T>) -> T {
        assert_eq!(h1.dim(), self.dim(), "fim_inner dim mismatch");
        assert_eq!(h2.dim(), self.dim(), "fim_inner dim mismatch");
        let m1 = self.sigma_inv.to_matrix().matmul(&h1.to_matrix());
        let m2 = self.sigma_inv.to_matrix().matmul(&h2.to_matrix());
        let n = self.dim();
        let mut acc = T::zero();
        for i in 0..n {
            for j in 0..n {
                acc += m1[(i, j)] * m2[(j, i)];
            }
        }
        acc * t(0.5)
    }

    pub fn norm_sq(&self, h: &SymMatrix<T>) -> T {
        self.inner(h, h)
    }
}

/// `<H1, H2>_sigma` as a one-shot call.
pub fn fim_inner<T: Scalar>(
    sigma: &SpdMatrix<T>,
    h1: &SymMatrix<T>,
    h2: &SymMatrix<T>,
) -> Result<T> {
    if h1.dim() != sigma.dim() || h2.dim() != sigma.dim() {
        return Err(Error::DimMismatch(format!(
            "fim_inner: sigma dim {} vs tangents {} and {}",
            sigma.dim(),
            h1.dim(),
            h2.dim()
        )));
    }
    Ok(FimMetric::new(sigma).inner(h1, h2))
}
