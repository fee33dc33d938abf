//! Mode bookkeeping and Kronecker-structured covariances.
//!
//! Index linearization is mode-1-slowest (row-major over modes) everywhere,
//! so `A (x) B` has the usual block structure with blocks `a_ij * B`.

use crate::error::{Error, Result};
use crate::scalar::{t_usize, Scalar};

use super::matrix::Matrix;
use super::spd::SpdMatrix;
use super::sym::SymMatrix;

/// Default cap on the dimension of any materialized Kronecker product.
pub const DEFAULT_MATERIALIZE_CAP: usize = 4096;

/// Ordered mode dimensions `(p_1, ..., p_k)` of a tensor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModeDims {
    dims: Vec<usize>,
}

impl ModeDims {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidArgument("ModeDims needs k >= 1".into()));
        }
        if dims.contains(&0) {
            return Err(Error::InvalidArgument("mode dimensions must be >= 1".into()));
        }
        Ok(ModeDims { dims })
    }

    pub fn single(p: usize) -> Self {
        ModeDims { dims: vec![p] }
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.dims.len()
    }

    #[inline]
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    #[inline]
    pub fn dim(&self, mode: usize) -> usize {
        self.dims[mode]
    }

    /// Total dimension `p = prod p_i`.
    pub fn product(&self) -> usize {
        self.dims.iter().product()
    }

    /// Row-major strides: mode 1 slowest, mode k fastest.
    pub fn strides(&self) -> Vec<usize> {
        let k = self.order();
        let mut s = vec![1usize; k];
        for i in (0..k.saturating_sub(1)).rev() {
            s[i] = s[i + 1] * self.dims[i + 1];
        }
        s
    }

    pub fn label(&self) -> String {
        self.dims
            .iter()
            .map(|d| d.to_string())
            .collect::<Vec<_>>()
            .join("x")
    }
}

/// Kronecker product of two symmetric matrices, mode-1-slowest layout.
pub fn kron_sym<T: Scalar>(a: &SymMatrix<T>, b: &SymMatrix<T>) -> SymMatrix<T> {
    let (pa, pb) = (a.dim(), b.dim());
    let p = pa * pb;
    SymMatrix::from_fn_upper(p, |r, c| {
        let (i1, i2) = (r / pb, r % pb);
        let (j1, j2) = (c / pb, c % pb);
        a.get(i1, j1) * b.get(i2, j2)
    })
}

/// Kronecker product of two general matrices.
pub fn kron_matrix<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> Matrix<T> {
    let rows = a.rows() * b.rows();
    let cols = a.cols() * b.cols();
    Matrix::from_fn(rows, cols, |r, c| {
        let (i1, i2) = (r / b.rows(), r % b.rows());
        let (j1, j2) = (c / b.cols(), c % b.cols());
        a[(i1, j1)] * b[(i2, j2)]
    })
}

/// Covariance factorizing as `Sigma_1 (x) ... (x) Sigma_k` with SPD factors,
/// held in factored form.
#[derive(Debug, Clone)]
pub struct KroneckerCov<T> {
    factors: Vec<SpdMatrix<T>>,
    dims: ModeDims,
}

impl<T: Scalar> KroneckerCov<T> {
    pub fn new(factors: Vec<SpdMatrix<T>>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidArgument(
                "KroneckerCov needs at least one factor".into(),
            ));
        }
        let dims = ModeDims::new(factors.iter().map(|f| f.dim()).collect())?;
        Ok(KroneckerCov { factors, dims })
    }

    pub fn identity(dims: &ModeDims) -> Self {
        KroneckerCov {
            factors: dims.dims().iter().map(|&p| SpdMatrix::identity(p)).collect(),
            dims: dims.clone(),
        }
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.factors.len()
    }

    #[inline]
    pub fn dims(&self) -> &ModeDims {
        &self.dims
    }

    #[inline]
    pub fn factors(&self) -> &[SpdMatrix<T>] {
        &self.factors
    }

    #[inline]
    pub fn factor(&self, mode: usize) -> &SpdMatrix<T> {
        &self.factors[mode]
    }

    /// `tr(prod) = prod tr(Sigma_i)`.
    pub fn trace(&self) -> T {
        self.factors.iter().map(|f| f.trace()).product::<T>()
    }

    /// `||prod||_F^2 = prod ||Sigma_i||_F^2`, computed without materializing.
    pub fn frobenius_norm_sq(&self) -> T {
        self.factors
            .iter()
            .map(|f| f.sym().frobenius_norm_sq())
            .product::<T>()
    }

    /// `log |prod| = sum (p / p_i) log |Sigma_i|`.
    pub fn log_det(&self) -> T {
        let p = self.dims.product();
        self.factors
            .iter()
            .map(|f| f.log_det() * t_usize::<T>(p / f.dim()))
            .sum()
    }

    /// Materializes the full product, subject to a dimension cap.
    pub fn materialize(&self, cap: usize) -> Result<SpdMatrix<T>> {
        let p = self.dims.product();
        if p > cap {
            return Err(Error::SizeLimit { dim: p, cap });
        }
        let mut acc = self.factors[0].sym().clone();
        for f in &self.factors[1..] {
            acc = kron_sym(&acc, f.sym());
        }
        SpdMatrix::new(acc)
    }

    /// Same product with factors 2..k normalized to unit trace and the whole
    /// scale folded into factor 1. Factor comparisons across estimators use
    /// this form.
    pub fn canonicalize_trace(&self) -> Result<KroneckerCov<T>> {
        let mut scale = T::one();
        let mut factors = Vec::with_capacity(self.factors.len());
        factors.push(self.factors[0].sym().clone());
        for f in &self.factors[1..] {
            let tr = f.trace();
            scale *= tr;
            factors.push(f.sym().scale(T::one() / tr));
        }
        factors[0] = factors[0].scale(scale);
        KroneckerCov::new(
            factors
                .into_iter()
                .map(SpdMatrix::new)
                .collect::<Result<Vec<_>>>()?,
        )
    }

    /// Splits into `(scale, unit-trace factors)` with
    /// `prod = scale * (x)_i factors_i`.
    pub fn trace_split(&self) -> (T, Vec<SymMatrix<T>>) {
        let mut scale = T::one();
        let mut factors = Vec::with_capacity(self.factors.len());
        for f in &self.factors {
            let tr = f.trace();
            scale *= tr;
            factors.push(f.sym().scale(T::one() / tr));
        }
        (scale, factors)
    }

    /// Trace inner product `tr(self * other)` of two factored covariances,
    /// computed from factor inner products.
    pub fn inner(&self, other: &KroneckerCov<T>) -> Result<T> {
        if self.dims != other.dims {
            return Err(Error::DimMismatch(format!(
                "kron inner: dims {} vs {}",
                self.dims.label(),
                other.dims.label()
            )));
        }
        Ok(self
            .factors
            .iter()
            .zip(&other.factors)
            .map(|(a, b)| a.sym().inner(b.sym()))
            .product::<T>())
    }
}
