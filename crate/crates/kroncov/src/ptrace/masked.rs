//! Approximate partial-trace factor estimates for order-3 tensors with
//! missing entries. A term enters the mode-j sum only when both tensor
//! entries it touches are observed; the default mask drops the
//! `(i, i, t)` diagonal pattern of pairwise-flow data.

use crate::error::{Error, Result};
use crate::linalg::eigen::sym_eigen;
use crate::linalg::kron::ModeDims;
use crate::linalg::sym::SymMatrix;
use crate::scalar::{t, Scalar};

/// Order-3 tensor with an observation mask (`true` = observed).
#[derive(Debug, Clone)]
pub struct MaskedTensor<T> {
    dims: ModeDims,
    values: Vec<T>,
    mask: Vec<bool>,
}

impl<T: Scalar> MaskedTensor<T> {
    pub fn new(dims: ModeDims, values: Vec<T>, mask: Vec<bool>) -> Result<Self> {
        if dims.order() != 3 {
            return Err(Error::InvalidArgument(format!(
                "MaskedTensor is defined for order 3, got order {}",
                dims.order()
            )));
        }
        let p = dims.product();
        if values.len() != p || mask.len() != p {
            return Err(Error::DimMismatch(format!(
                "values ({}) and mask ({}) must both have {} entries",
                values.len(),
                mask.len(),
                p
            )));
        }
        Ok(MaskedTensor { dims, values, mask })
    }

    /// Fully observed tensor.
    pub fn fully_observed(dims: ModeDims, values: Vec<T>) -> Result<Self> {
        let p = dims.product();
        let mask = vec![true; p];
        MaskedTensor::new(dims, values, mask)
    }

    /// Masks the `(i, i, t)` diagonal of a `p1 x p1 x p3` tensor.
    pub fn with_diagonal_masked(dims: ModeDims, values: Vec<T>) -> Result<Self> {
        if dims.order() != 3 || dims.dim(0) != dims.dim(1) {
            return Err(Error::InvalidArgument(
                "diagonal mask preset needs a square first pair of modes".into(),
            ));
        }
        let p = dims.product();
        let strides = dims.strides();
        let mut mask = vec![true; p];
        for (r, m) in mask.iter_mut().enumerate() {
            let i = r / strides[0] % dims.dim(0);
            let j = r / strides[1] % dims.dim(1);
            if i == j {
                *m = false;
            }
        }
        MaskedTensor::new(dims, values, mask)
    }

    pub fn dims(&self) -> &ModeDims {
        &self.dims
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }
}

/// Factor estimates from a masked tensor: symmetric, unit-trace; modes whose
/// estimate is indefinite beyond tolerance are flagged, not failed.
#[derive(Debug, Clone)]
pub struct MaskedPtResult<T> {
    pub factors: Vec<SymMatrix<T>>,
    /// Modes whose factor estimate has an eigenvalue below `-1e-8 * trace`.
    pub indefinite_modes: Vec<usize>,
}

/// Masked approximate partial-trace estimates for all three modes.
///
/// For mode j the `(a, b)` entry sums `L[.. a ..] * L[.. b ..]` over all
/// other-mode index combinations where both entries are observed. Factors
/// are normalized to unit trace; the overall scale is not identified.
pub fn masked_pt_estimator<T: Scalar>(tensor: &MaskedTensor<T>) -> Result<MaskedPtResult<T>> {
    let dims = tensor.dims();
    let p = dims.product();
    let strides = dims.strides();
    let mut factors = Vec::with_capacity(3);
    let mut indefinite = Vec::new();

    for mode in 0..3 {
        let pj = dims.dim(mode);
        let stride = strides[mode];
        let mut f = SymMatrix::zeros(pj);
        for r in 0..p {
            if !tensor.mask[r] {
                continue;
            }
            let a = (r / stride) % pj;
            let base = r - a * stride;
            for b in a..pj {
                let c = base + b * stride;
                if !tensor.mask[c] {
                    continue;
                }
                let v = f.get(a, b) + tensor.values[r] * tensor.values[c];
                f.set_sym(a, b, v);
            }
        }
        let tr = f.trace();
        if tr <= T::zero() {
            return Err(Error::Degenerate(format!(
                "mode {mode} factor estimate has nonpositive trace"
            )));
        }
        let f = f.scale(T::one() / tr);
        let min_eig = sym_eigen(&f)?.min_eigenvalue();
        if min_eig < -t::<T>(1e-8) {
            indefinite.push(mode);
        }
        factors.push(f);
    }

    Ok(MaskedPtResult {
        factors,
        indefinite_modes: indefinite,
    })
}
