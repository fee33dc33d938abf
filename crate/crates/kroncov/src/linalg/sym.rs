//! Dense symmetric matrices with symmetry enforced on construction.

use crate::error::{Error, Result};
use crate::scalar::{t, Scalar};

use super::matrix::Matrix;

/// Symmetric `dim x dim` matrix, full storage, `a[i][j] == a[j][i]` by
/// construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix<T> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Scalar> SymMatrix<T> {
    pub fn zeros(dim: usize) -> Self {
        SymMatrix {
            dim,
            data: vec![T::zero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = SymMatrix::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = T::one();
        }
        m
    }

    pub fn diagonal(entries: &[T]) -> Self {
        let dim = entries.len();
        let mut m = SymMatrix::zeros(dim);
        for (i, &x) in entries.iter().enumerate() {
            m.data[i * dim + i] = x;
        }
        m
    }

    /// Builds from a generator over the upper triangle (`i <= j`), mirroring
    /// the lower triangle.
    pub fn from_fn_upper(dim: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = SymMatrix::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                let v = f(i, j);
                m.data[i * dim + j] = v;
                m.data[j * dim + i] = v;
            }
        }
        m
    }

    /// Symmetrizes an arbitrary square matrix: `(A + A^T)/2`.
    pub fn symmetrize(a: &Matrix<T>) -> Result<Self> {
        if a.rows() != a.cols() {
            return Err(Error::DimMismatch(format!(
                "cannot symmetrize a {}x{} matrix",
                a.rows(),
                a.cols()
            )));
        }
        let dim = a.rows();
        Ok(SymMatrix::from_fn_upper(dim, |i, j| {
            (a[(i, j)] + a[(j, i)]) * t(0.5)
        }))
    }

    /// Wraps a row-major buffer that is already symmetric to within
    /// `tol * max|entry|`; exact symmetry is then enforced.
    pub fn from_dense(dim: usize, data: Vec<T>, tol: T) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimMismatch(format!(
                "expected {} entries, got {}",
                dim * dim,
                data.len()
            )));
        }
        let scale = data
            .iter()
            .fold(T::zero(), |acc, &x| if x.abs() > acc { x.abs() } else { acc });
        for i in 0..dim {
            for j in (i + 1)..dim {
                let gap = (data[i * dim + j] - data[j * dim + i]).abs();
                if gap > tol * scale.max(T::one()) {
                    return Err(Error::InvalidArgument(format!(
                        "matrix not symmetric at ({i},{j}): gap {gap}"
                    )));
                }
            }
        }
        let m = Matrix::from_rows(dim, dim, data)?;
        SymMatrix::symmetrize(&m)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.dim + j]
    }

    /// Sets `(i, j)` and `(j, i)` together.
    #[inline]
    pub fn set_sym(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.dim + j] = v;
        self.data[j * self.dim + i] = v;
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn to_matrix(&self) -> Matrix<T> {
        Matrix::from_rows(self.dim, self.dim, self.data.clone()).expect("square buffer")
    }

    pub fn trace(&self) -> T {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn diagonal_entries(&self) -> Vec<T> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    /// The diagonal part as a symmetric matrix.
    pub fn diagonal_part(&self) -> SymMatrix<T> {
        SymMatrix::diagonal(&self.diagonal_entries())
    }

    pub fn frobenius_norm(&self) -> T {
        self.frobenius_norm_sq().sqrt()
    }

    pub fn frobenius_norm_sq(&self) -> T {
        self.data.iter().map(|&x| x * x).sum()
    }

    /// Standard trace inner product `tr(AB)`.
    pub fn inner(&self, other: &SymMatrix<T>) -> T {
        assert_eq!(self.dim, other.dim, "inner product dim mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| a * b)
            .sum()
    }

    pub fn scale(&self, c: T) -> SymMatrix<T> {
        SymMatrix {
            dim: self.dim,
            data: self.data.iter().map(|&x| x * c).collect(),
        }
    }

    pub fn add(&self, other: &SymMatrix<T>) -> SymMatrix<T> {
        assert_eq!(self.dim, other.dim);
        SymMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &SymMatrix<T>) -> SymMatrix<T> {
        assert_eq!(self.dim, other.dim);
        SymMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a - b)
                .collect(),
        }
    }

    /// In-place `self += c * other`.
    pub fn axpy(&mut self, c: T, other: &SymMatrix<T>) {
        assert_eq!(self.dim, other.dim);
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += c * b;
        }
    }

    /// Congruence transform `C * self * C^T`.
    pub fn congruence(&self, c: &Matrix<T>) -> SymMatrix<T> {
        assert_eq!(c.cols(), self.dim, "congruence dim mismatch");
        let cs = c.matmul(&self.to_matrix());
        let prod = cs.matmul(&c.transpose());
        SymMatrix::symmetrize(&prod).expect("square product")
    }

    /// Quadratic form `x^T A x`.
    pub fn quad_form(&self, x: &[T]) -> T {
        assert_eq!(x.len(), self.dim);
        let mut acc = T::zero();
        for i in 0..self.dim {
            let row = &self.data[i * self.dim..(i + 1) * self.dim];
            let mut s = T::zero();
            for j in 0..self.dim {
                s += row[j] * x[j];
            }
            acc += x[i] * s;
        }
        acc
    }

    /// `tr(self * other)` for a general square matrix argument.
    pub fn inner_matrix(&self, other: &Matrix<T>) -> T {
        assert_eq!(other.rows(), self.dim);
        assert_eq!(other.cols(), self.dim);
        let mut acc = T::zero();
        for i in 0..self.dim {
            for j in 0..self.dim {
                acc += self.get(i, j) * other[(j, i)];
            }
        }
        acc
    }

    pub fn max_abs_entry(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, &x| if x.abs() > acc { x.abs() } else { acc })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetrize_enforces_symmetry() {
        let a = Matrix::from_fn(3, 3, |i, j| (i * 3 + j) as f64);
        let s = SymMatrix::symmetrize(&a).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(s.get(i, j), s.get(j, i));
            }
        }
    }

    #[test]
    fn congruence_of_identity() {
        let c = Matrix::from_fn(2, 2, |i, j| if i == j { 2.0 } else { 1.0 });
        let s = SymMatrix::<f64>::identity(2).congruence(&c);
        // C I C^T = C C^T
        assert!((s.get(0, 0) - 5.0).abs() < 1e-12);
        assert!((s.get(0, 1) - 4.0).abs() < 1e-12);
        assert!((s.get(1, 1) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn from_dense_rejects_asymmetric() {
        let data = vec![1.0, 2.0, 3.0, 4.0];
        assert!(SymMatrix::from_dense(2, data, 1e-12).is_err());
    }
}
