//! Flat-tensor helpers: mode products and mode Gram matrices.
//!
//! Tensors are stored flat in the crate-wide linearization (mode 1 slowest).
//! These kernels let the samplers and estimators work at dimensions where the
//! full `p x p` covariance is never materialized.

use crate::scalar::Scalar;

use super::kron::ModeDims;
use super::matrix::Matrix;
use super::sym::SymMatrix;

/// Applies `I (x) ... (x) A (x) ... (x) I` to a flat tensor, with `A` acting
/// on `mode`. `A` must be `p_mode x p_mode`.
pub fn mode_multiply<T: Scalar>(x: &[T], dims: &ModeDims, mode: usize, a: &Matrix<T>) -> Vec<T> {
    let p = dims.product();
    debug_assert_eq!(x.len(), p);
    let pj = dims.dim(mode);
    debug_assert_eq!(a.rows(), pj);
    debug_assert_eq!(a.cols(), pj);
    let stride = dims.strides()[mode];
    let block = pj * stride;
    let mut out = vec![T::zero(); p];
    let mut base = 0;
    while base < p {
        for inner in 0..stride {
            let start = base + inner;
            for r in 0..pj {
                let mut acc = T::zero();
                for c in 0..pj {
                    acc += a[(r, c)] * x[start + c * stride];
                }
                out[start + r * stride] = acc;
            }
        }
        base += block;
    }
    out
}

/// Gram matrix of the mode-`j` unfolding: `Y_j Y_j^T` where `Y_j` is
/// `p_j x (p / p_j)`. Equals `p_j`-dimensional partial trace of the rank-one
/// covariance `x x^T` over mode `j`.
pub fn mode_gram<T: Scalar>(x: &[T], dims: &ModeDims, mode: usize) -> SymMatrix<T> {
    let p = dims.product();
    debug_assert_eq!(x.len(), p);
    let pj = dims.dim(mode);
    let stride = dims.strides()[mode];
    let block = pj * stride;
    let mut g = SymMatrix::zeros(pj);
    let mut base = 0;
    while base < p {
        for inner in 0..stride {
            let start = base + inner;
            for r in 0..pj {
                let xr = x[start + r * stride];
                if xr == T::zero() {
                    continue;
                }
                for c in r..pj {
                    let v = g.get(r, c) + xr * x[start + c * stride];
                    g.set_sym(r, c, v);
                }
            }
        }
        base += block;
    }
    g
}

/// Accumulates `g += x`'s mode Gram without reallocating.
pub fn accumulate_mode_gram<T: Scalar>(
    g: &mut SymMatrix<T>,
    x: &[T],
    dims: &ModeDims,
    mode: usize,
) {
    let pj = dims.dim(mode);
    debug_assert_eq!(g.dim(), pj);
    let stride = dims.strides()[mode];
    let block = pj * stride;
    let p = dims.product();
    let mut base = 0;
    while base < p {
        for inner in 0..stride {
            let start = base + inner;
            for r in 0..pj {
                let xr = x[start + r * stride];
                if xr == T::zero() {
                    continue;
                }
                for c in r..pj {
                    let v = g.get(r, c) + xr * x[start + c * stride];
                    g.set_sym(r, c, v);
                }
            }
        }
        base += block;
    }
}
