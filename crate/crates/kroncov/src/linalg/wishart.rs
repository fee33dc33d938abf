//! Wishart sampling and the sample-covariance container.
//!
//! `n S ~ Wishart_p(Sigma, n)` is realized literally as the mean of `n` outer
//! products of `N(0, Sigma)` draws, with `Sigma^{1/2}` computed once per call.

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::scalar::{t, t_usize, Scalar};

use super::eigen::sym_eigen;
use super::kron::{KroneckerCov, ModeDims};
use super::spd::{spd_power, FimMetric, SpdMatrix};
use super::sym::SymMatrix;
use super::tensor::mode_multiply;

/// Sample covariance `S` of `n` centered Gaussian tensors, with the mode
/// bookkeeping needed to index it as a `(p_1..p_k, p_1..p_k)` array.
#[derive(Debug, Clone)]
pub struct SampleCov<T> {
    matrix: SymMatrix<T>,
    dims: ModeDims,
    n: u64,
}

impl<T: Scalar> SampleCov<T> {
    /// Wraps an externally supplied matrix, verifying the PSD invariant
    /// `min eigenvalue >= -1e-10 * trace`.
    pub fn new_checked(matrix: SymMatrix<T>, dims: ModeDims, n: u64) -> Result<Self> {
        if matrix.dim() != dims.product() {
            return Err(Error::DimMismatch(format!(
                "matrix dim {} vs. mode product {}",
                matrix.dim(),
                dims.product()
            )));
        }
        let min_eig = sym_eigen(&matrix)?.min_eigenvalue();
        let tol = t::<T>(1e-10) * matrix.trace().abs();
        if min_eig < -tol {
            return Err(Error::NotPsd {
                min_eig: min_eig.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(SampleCov { matrix, dims, n })
    }

    /// Wraps a matrix that is PSD by construction (mean of outer products).
    pub fn from_outer_products(matrix: SymMatrix<T>, dims: ModeDims, n: u64) -> Self {
        SampleCov { matrix, dims, n }
    }

    #[inline]
    pub fn matrix(&self) -> &SymMatrix<T> {
        &self.matrix
    }

    #[inline]
    pub fn dims(&self) -> &ModeDims {
        &self.dims
    }

    #[inline]
    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }
}

/// Draws `S = (1/n) sum_l y_l y_l^T` with `y_l ~ N(0, sigma)` i.i.d.
pub fn sample_wishart<T: Scalar>(sigma: &SpdMatrix<T>, n: u64, rng: &mut Rng) -> Result<SampleCov<T>> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample size must be >= 1".into()));
    }
    let p = sigma.dim();
    let half = spd_power(sigma, t(0.5))?.into_sym().to_matrix();
    let mut acc = SymMatrix::zeros(p);
    let mut z = vec![T::zero(); p];
    for _ in 0..n {
        for zi in z.iter_mut() {
            *zi = rng.standard_normal();
        }
        let y = half.matvec(&z);
        for i in 0..p {
            if y[i] == T::zero() {
                continue;
            }
            for j in i..p {
                let v = acc.get(i, j) + y[i] * y[j];
                acc.set_sym(i, j, v);
            }
        }
    }
    let scale = T::one() / t_usize::<T>(n as usize);
    Ok(SampleCov::from_outer_products(
        acc.scale(scale),
        ModeDims::single(p),
        n,
    ))
}

/// Kronecker-truth sampler: draws tensors with covariance `(x)_i Sigma_i`
/// without materializing the product. Each draw is `z` pushed through the
/// per-factor square roots mode by mode.
pub fn sample_wishart_kron<T: Scalar>(
    kc: &KroneckerCov<T>,
    n: u64,
    rng: &mut Rng,
    cap: usize,
) -> Result<SampleCov<T>> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample size must be >= 1".into()));
    }
    let dims = kc.dims().clone();
    let p = dims.product();
    if p > cap {
        return Err(Error::SizeLimit { dim: p, cap });
    }
    let halves: Vec<_> = kc
        .factors()
        .iter()
        .map(|f| spd_power(f, t(0.5)).map(|h| h.into_sym().to_matrix()))
        .collect::<Result<Vec<_>>>()?;
    let mut acc = SymMatrix::zeros(p);
    let mut z = vec![T::zero(); p];
    for _ in 0..n {
        for zi in z.iter_mut() {
            *zi = rng.standard_normal();
        }
        let mut y = z.clone();
        for (mode, h) in halves.iter().enumerate() {
            y = mode_multiply(&y, &dims, mode, h);
        }
        for i in 0..p {
            if y[i] == T::zero() {
                continue;
            }
            for j in i..p {
                let v = acc.get(i, j) + y[i] * y[j];
                acc.set_sym(i, j, v);
            }
        }
    }
    let scale = T::one() / t_usize::<T>(n as usize);
    Ok(SampleCov::from_outer_products(acc.scale(scale), dims, n))
}

/// Monte Carlo check of the covariance-metric identity
/// `Cov(<A,S>_Sigma, <B,S>_Sigma) = 4 <A,B>_Sigma` for `S ~ Wishart(Sigma, 1)`.
#[derive(Debug, Clone)]
pub struct CovMetricCheck<T> {
    pub empirical: T,
    pub theoretical: T,
    /// Block-bootstrap standard error of the empirical covariance.
    pub std_error: T,
}

pub fn cov_metric_check<T: Scalar>(
    sigma: &SpdMatrix<T>,
    a: &SymMatrix<T>,
    b: &SymMatrix<T>,
    reps: usize,
    rng: &mut Rng,
) -> Result<CovMetricCheck<T>> {
    if reps < 2 {
        return Err(Error::InvalidArgument("cov_metric_check needs reps >= 2".into()));
    }
    let metric = FimMetric::new(sigma);
    let theoretical = metric.inner(a, b) * t(4.0);

    // projections use the unhalved bilinear form tr(S^{-1} A S^{-1} S'),
    // twice the metric inner product; their covariance is 4 <A,B>_Sigma
    let mut us = Vec::with_capacity(reps);
    let mut vs = Vec::with_capacity(reps);
    for _ in 0..reps {
        let s = sample_wishart(sigma, 1, rng)?;
        us.push(metric.inner(a, s.matrix()) * t(2.0));
        vs.push(metric.inner(b, s.matrix()) * t(2.0));
    }
    let nf = t_usize::<T>(reps);
    let um = us.iter().copied().sum::<T>() / nf;
    let vm = vs.iter().copied().sum::<T>() / nf;
    let cov = us
        .iter()
        .zip(&vs)
        .map(|(&u, &v)| (u - um) * (v - vm))
        .sum::<T>()
        / (nf - T::one());

    // block estimates give a standard error for the covariance itself
    let blocks = 20.min(reps / 2).max(2);
    let block_len = reps / blocks;
    let mut block_covs = Vec::with_capacity(blocks);
    for bidx in 0..blocks {
        let lo = bidx * block_len;
        let hi = if bidx + 1 == blocks { reps } else { lo + block_len };
        let m = t_usize::<T>(hi - lo);
        let bu = us[lo..hi].iter().copied().sum::<T>() / m;
        let bv = vs[lo..hi].iter().copied().sum::<T>() / m;
        let bc = us[lo..hi]
            .iter()
            .zip(&vs[lo..hi])
            .map(|(&u, &v)| (u - bu) * (v - bv))
            .sum::<T>()
            / (m - T::one());
        block_covs.push(bc);
    }
    let bm = block_covs.iter().copied().sum::<T>() / t_usize::<T>(blocks);
    let bvar = block_covs
        .iter()
        .map(|&c| (c - bm) * (c - bm))
        .sum::<T>()
        / t_usize::<T>(blocks - 1);
    let std_error = (bvar / t_usize::<T>(blocks)).sqrt();

    Ok(CovMetricCheck {
        empirical: cov,
        theoretical,
        std_error,
    })
}
