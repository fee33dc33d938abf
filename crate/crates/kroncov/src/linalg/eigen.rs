//! Symmetric eigensolver: Householder tridiagonalization followed by the
//! implicit-shift QL iteration (the classic EISPACK `tred2`/`tql2` pair).
//!
//! Every spectral function in the crate (matrix powers, logs, the
//! affine-invariant distance, principal angles) routes through this solver so
//! results are reproducible down to the iteration order.

use crate::error::{Error, Result};
use crate::scalar::{t, Scalar};

use super::matrix::Matrix;
use super::sym::SymMatrix;

/// Eigendecomposition `A = V diag(values) V^T` of a symmetric matrix.
///
/// Eigenvalues are sorted in descending order; `vectors` holds the matching
/// orthonormal eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct SymEigen<T> {
    pub values: Vec<T>,
    pub vectors: Matrix<T>,
}

/// `sqrt(a^2 + b^2)` without intermediate overflow.
fn hypot<T: Scalar>(a: T, b: T) -> T {
    let (a, b) = (a.abs(), b.abs());
    if a > b {
        let r = b / a;
        a * (T::one() + r * r).sqrt()
    } else if b > T::zero() {
        let r = a / b;
        b * (T::one() + r * r).sqrt()
    } else {
        T::zero()
    }
}

/// Householder reduction to tridiagonal form (EISPACK `tred2`).
///
/// On return `d` holds the diagonal, `e` the subdiagonal (with `e[0] = 0`),
/// and `v` the accumulated orthogonal transformation.
fn tred2<T: Scalar>(v: &mut Matrix<T>, d: &mut [T], e: &mut [T]) {
    let n = v.rows();
    for j in 0..n {
        d[j] = v[(n - 1, j)];
    }

    for i in (1..n).rev() {
        let mut scale = T::zero();
        let mut h = T::zero();
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == T::zero() {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1, j)];
                v[(i, j)] = T::zero();
                v[(j, i)] = T::zero();
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > T::zero() {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for j in 0..i {
                e[j] = T::zero();
            }

            for j in 0..i {
                f = d[j];
                v[(j, i)] = f;
                g = e[j] + v[(j, j)] * f;
                for k in (j + 1)..i {
                    g += v[(k, j)] * d[k];
                    e[k] += v[(k, j)] * f;
                }
                e[j] = g;
            }
            f = T::zero();
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    let sub = f * e[k] + g * d[k];
                    v[(k, j)] -= sub;
                }
                d[j] = v[(i - 1, j)];
                v[(i, j)] = T::zero();
            }
        }
        d[i] = h;
    }

    // accumulate transformations
    for i in 0..(n - 1) {
        v[(n - 1, i)] = v[(i, i)];
        v[(i, i)] = T::one();
        let h = d[i + 1];
        if h != T::zero() {
            for k in 0..=i {
                d[k] = v[(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = T::zero();
                for k in 0..=i {
                    g += v[(k, i + 1)] * v[(k, j)];
                }
                for k in 0..=i {
                    let sub = g * d[k];
                    v[(k, j)] -= sub;
                }
            }
        }
        for k in 0..=i {
            v[(k, i + 1)] = T::zero();
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1, j)];
        v[(n - 1, j)] = T::zero();
    }
    v[(n - 1, n - 1)] = T::one();
    e[0] = T::zero();
}

/// Implicit-shift QL iteration on the tridiagonal form (EISPACK `tql2`).
///
/// The total sweep budget is `30 * n`; exceeding it is reported as a
/// convergence failure rather than silently returning garbage.
fn tql2<T: Scalar>(v: &mut Matrix<T>, d: &mut [T], e: &mut [T]) -> Result<()> {
    let n = v.rows();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = T::zero();

    let mut f = T::zero();
    let mut tst1 = T::zero();
    let eps = t::<T>(2.0).powi(-52);
    let mut budget = 30usize.saturating_mul(n);

    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m >= n {
            m = n - 1;
        }

        if m > l {
            loop {
                if budget == 0 {
                    return Err(Error::EigenNoConvergence);
                }
                budget -= 1;

                let g = d[l];
                let mut p = (d[l + 1] - g) / (t::<T>(2.0) * e[l]);
                let mut r = hypot(p, T::one());
                if p < T::zero() {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for i in (l + 2)..n {
                    d[i] -= h;
                }
                f += h;

                p = d[m];
                let mut c = T::one();
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = T::zero();
                let mut s2 = T::zero();
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = hypot(p, e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);

                    for k in 0..n {
                        h = v[(k, i + 1)];
                        v[(k, i + 1)] = s * v[(k, i)] + c * h;
                        v[(k, i)] = c * v[(k, i)] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;

                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = T::zero();
    }
    Ok(())
}

/// Eigendecomposition of a symmetric matrix with eigenvalues sorted in
/// descending order.
pub fn sym_eigen<T: Scalar>(a: &SymMatrix<T>) -> Result<SymEigen<T>> {
    let n = a.dim();
    if n == 0 {
        return Err(Error::InvalidArgument("empty matrix".into()));
    }
    let mut v = a.to_matrix();
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    if n == 1 {
        return Ok(SymEigen {
            values: vec![a.get(0, 0)],
            vectors: Matrix::identity(1),
        });
    }
    tred2(&mut v, &mut d, &mut e);
    tql2(&mut v, &mut d, &mut e)?;

    // sort descending, permuting eigenvector columns along
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[j].partial_cmp(&d[i]).unwrap_or(std::cmp::Ordering::Equal));
    let values: Vec<T> = order.iter().map(|&i| d[i]).collect();
    let vectors = Matrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(SymEigen { values, vectors })
}

impl<T: Scalar> SymEigen<T> {
    /// Reassembles `V f(diag) V^T`.
    pub fn apply_spectral(&self, f: impl Fn(T) -> T) -> SymMatrix<T> {
        let n = self.values.len();
        SymMatrix::from_fn_upper(n, |i, j| {
            let mut acc = T::zero();
            for k in 0..n {
                acc += self.vectors[(i, k)] * f(self.values[k]) * self.vectors[(j, k)];
            }
            acc
        })
    }

    pub fn min_eigenvalue(&self) -> T {
        *self
            .values
            .last()
            .expect("non-empty spectrum")
    }
}

/// Exponential of a symmetric matrix via its eigendecomposition.
pub fn matrix_exp<T: Scalar>(a: &SymMatrix<T>) -> Result<SymMatrix<T>> {
    Ok(sym_eigen(a)?.apply_spectral(|x| x.exp()))
}
