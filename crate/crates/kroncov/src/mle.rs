//! Flip-flop maximum likelihood estimation of an order-2 Kronecker
//! covariance, plus the likelihood utilities shared with the inference
//! module.
//!
//! The iteration alternates the two stationarity updates
//! `Sigma_1 <- tr_1((I (x) Sigma_2)^{-1} S) / p_2` and
//! `Sigma_2 <- tr_2((Sigma_1 (x) I)^{-1} S) / p_1`, stopping when the
//! likelihood-equation residual drops below tolerance. The residual, not the
//! parameter change, is the convergence certificate: the MLE is exactly the
//! point where the decorrelated partial traces average to the identity.

use crate::error::{Error, Result};
use crate::linalg::kron::KroneckerCov;
use crate::linalg::spd::SpdMatrix;
use crate::linalg::sym::SymMatrix;
use crate::linalg::wishart::SampleCov;
use crate::ptrace::{tr1_weighted, tr2_weighted};
use crate::scalar::{t, t_usize, Scalar};

/// Configuration for the flip-flop iteration.
#[derive(Debug, Clone)]
pub struct MleConfig<T> {
    /// Convergence tolerance on the likelihood-equation residual.
    pub tol: T,
    /// Maximum number of sweeps (one update of each factor per sweep).
    pub max_iter: usize,
    /// Starting point; identity factors when `None`.
    pub init: Option<KroneckerCov<T>>,
}

impl<T: Scalar> Default for MleConfig<T> {
    fn default() -> Self {
        MleConfig {
            tol: t(1e-9),
            max_iter: 500,
            init: None,
        }
    }
}

/// Flip-flop output.
#[derive(Debug, Clone)]
pub struct MleResult<T> {
    /// Factors canonicalized to unit-trace `Sigma_2` with the scale folded
    /// into `Sigma_1`.
    pub estimate: KroneckerCov<T>,
    pub iterations: usize,
    pub converged: bool,
    pub final_residual: T,
    /// Set when the sufficient existence condition
    /// `p1/p2 + p2/p1 < n` does not hold; the condition is sufficient only,
    /// so this is a warning rather than an error.
    pub existence_warning: Option<String>,
}

/// Stationarity residual of the likelihood equations at `est`:
/// `max_i || tr_i(decorrelated S) / p_j - I ||_F`.
pub fn likelihood_residual<T: Scalar>(s: &SampleCov<T>, est: &KroneckerCov<T>) -> Result<T> {
    if est.order() != 2 || s.dims().order() != 2 {
        return Err(Error::InvalidArgument(
            "likelihood_residual is defined for order-2 covariances".into(),
        ));
    }
    let (p1, p2) = (s.dims().dim(0), s.dims().dim(1));
    let inv1 = est.factor(0).inverse();
    let inv2 = est.factor(1).inverse();

    // tr_1((S1 (x) S2)^{-1/2} S (...)^{-1/2}) = S1^{-1/2} tr_1((I (x) S2^{-1}) S) S1^{-1/2}
    let m1 = tr1_weighted(s.matrix(), s.dims(), inv2.sym())?.scale(T::one() / t_usize(p2));
    let isqrt1 = crate::linalg::spd::spd_power(est.factor(0), t(-0.5))?;
    let r1 = m1
        .congruence(&isqrt1.sym().to_matrix())
        .sub(&SymMatrix::identity(p1))
        .frobenius_norm();

    let m2 = tr2_weighted(s.matrix(), s.dims(), inv1.sym())?.scale(T::one() / t_usize(p1));
    let isqrt2 = crate::linalg::spd::spd_power(est.factor(1), t(-0.5))?;
    let r2 = m2
        .congruence(&isqrt2.sym().to_matrix())
        .sub(&SymMatrix::identity(p2))
        .frobenius_norm();

    Ok(r1.max(r2))
}

/// Kronecker MLE via block-coordinate descent for order-2 samples.
pub fn mle_flip_flop<T: Scalar>(s: &SampleCov<T>, cfg: &MleConfig<T>) -> Result<MleResult<T>> {
    if s.dims().order() != 2 {
        return Err(Error::InvalidArgument(
            "mle_flip_flop requires order-2 dims; the PT estimator covers higher orders".into(),
        ));
    }
    let (p1, p2) = (s.dims().dim(0), s.dims().dim(1));
    let ratio = t_usize::<T>(p1) / t_usize::<T>(p2) + t_usize::<T>(p2) / t_usize::<T>(p1);
    let existence_warning = if ratio >= t_usize::<T>(s.n() as usize) {
        Some(format!(
            "sufficient existence condition p1/p2 + p2/p1 < n not met ({ratio} >= {})",
            s.n()
        ))
    } else {
        None
    };

    let (mut f1, mut f2) = match &cfg.init {
        Some(kc) => {
            if kc.order() != 2 || kc.dims() != s.dims() {
                return Err(Error::DimMismatch(
                    "init factors do not match sample dims".into(),
                ));
            }
            (kc.factor(0).clone(), kc.factor(1).clone())
        }
        None => (SpdMatrix::identity(p1), SpdMatrix::identity(p2)),
    };

    let mut converged = false;
    let mut residual = T::infinity();
    let mut iterations = 0;
    for sweep in 1..=cfg.max_iter {
        iterations = sweep;
        let inv2 = f2.inverse();
        let next1 = tr1_weighted(s.matrix(), s.dims(), inv2.sym())?
            .scale(T::one() / t_usize(p2));
        f1 = SpdMatrix::new(next1).map_err(|_| Error::DegenerateSample)?;

        let inv1 = f1.inverse();
        let next2 = tr2_weighted(s.matrix(), s.dims(), inv1.sym())?
            .scale(T::one() / t_usize(p1));
        f2 = SpdMatrix::new(next2).map_err(|_| Error::DegenerateSample)?;

        let est = KroneckerCov::new(vec![f1.clone(), f2.clone()])?;
        residual = likelihood_residual(s, &est)?;
        if residual <= cfg.tol {
            converged = true;
            break;
        }
    }

    let estimate = KroneckerCov::new(vec![f1, f2])?.canonicalize_trace()?;
    Ok(MleResult {
        estimate,
        iterations,
        converged,
        final_residual: residual,
        existence_warning,
    })
}

/// Gaussian negative log-likelihood `(n/2)(log|Sigma| + tr(Sigma^{-1} S))`,
/// additive constants dropped.
pub fn gaussian_nll<T: Scalar>(s: &SampleCov<T>, sigma: &SpdMatrix<T>, n: u64) -> Result<T> {
    if sigma.dim() != s.dim() {
        return Err(Error::DimMismatch(format!(
            "nll: sigma dim {} vs sample dim {}",
            sigma.dim(),
            s.dim()
        )));
    }
    let p = s.dim();
    let mut tr = T::zero();
    let mut e = vec![T::zero(); p];
    for j in 0..p {
        e[j] = T::one();
        let col = sigma.solve_vec(&e);
        e[j] = T::zero();
        for i in 0..p {
            tr += col[i] * s.matrix().get(i, j);
        }
    }
    Ok((sigma.log_det() + tr) * t_usize::<T>(n as usize) * t(0.5))
}

/// Same likelihood evaluated against a factored covariance without
/// materializing it (order-2 only).
pub fn gaussian_nll_kron<T: Scalar>(
    s: &SampleCov<T>,
    kc: &KroneckerCov<T>,
    n: u64,
) -> Result<T> {
    if kc.order() != 2 || s.dims().order() != 2 {
        return Err(Error::InvalidArgument(
            "gaussian_nll_kron is defined for order-2 covariances".into(),
        ));
    }
    let inv1 = kc.factor(0).inverse();
    let inv2 = kc.factor(1).inverse();
    // tr((S1 (x) S2)^{-1} S) = tr(S1^{-1} tr_1((I (x) S2^{-1}) S))
    let w = tr1_weighted(s.matrix(), s.dims(), inv2.sym())?;
    let tr = inv1.sym().inner(&w);
    Ok((kc.log_det() + tr) * t_usize::<T>(n as usize) * t(0.5))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::kron::{kron_sym, ModeDims};
    use crate::linalg::matrix::Matrix;
    use crate::linalg::wishart::{sample_wishart_kron, SampleCov};
    use crate::rng::Rng;

    fn random_spd(dim: usize, rng: &mut Rng) -> SpdMatrix<f64> {
        let g = Matrix::from_fn(dim, dim, |_, _| rng.standard_normal::<f64>());
        let mut s = SymMatrix::symmetrize(&g.matmul(&g.transpose())).unwrap();
        for i in 0..dim {
            s.set_sym(i, i, s.get(i, i) + 0.5 * dim as f64);
        }
        SpdMatrix::new(s).unwrap()
    }

    #[test]
    fn identity_sample_is_immediate_fixed_point() {
        let dims = ModeDims::new(vec![2, 3]).unwrap();
        let s = SampleCov::from_outer_products(SymMatrix::<f64>::identity(6), dims, 10);
        let r = mle_flip_flop(&s, &MleConfig::default()).unwrap();
        assert!(r.converged);
        assert!(r.final_residual < 1e-12);
        let m = r.estimate.materialize(4096).unwrap();
        assert!(m.sym().sub(&SymMatrix::identity(6)).frobenius_norm() < 1e-10);
    }

    #[test]
    fn exact_kron_input_converges_fast() {
        let mut rng = Rng::seed_from_u64(100);
        let a = random_spd(2, &mut rng);
        let b = random_spd(3, &mut rng);
        let dims = ModeDims::new(vec![2, 3]).unwrap();
        let s = SampleCov::from_outer_products(kron_sym(a.sym(), b.sym()), dims, 10);
        let r = mle_flip_flop(&s, &MleConfig::default()).unwrap();
        assert!(r.converged, "did not converge on exact Kronecker input");
        assert!(r.iterations <= 3, "took {} iterations", r.iterations);
        let m = r.estimate.materialize(4096).unwrap();
        assert!(
            m.sym().sub(s.matrix()).frobenius_norm() <= 1e-8 * s.matrix().frobenius_norm()
        );
    }

    #[test]
    fn residual_zero_iff_stationary() {
        let mut rng = Rng::seed_from_u64(7);
        let a = random_spd(2, &mut rng);
        let b = random_spd(3, &mut rng);
        let dims = ModeDims::new(vec![2, 3]).unwrap();
        let s = SampleCov::from_outer_products(kron_sym(a.sym(), b.sym()), dims, 1);
        let truth = KroneckerCov::new(vec![a, b]).unwrap();
        assert!(likelihood_residual(&s, &truth).unwrap() < 1e-10);

        // identity is not a stationary point of a structured sample
        let noisy = sample_wishart_kron(&truth, 40, &mut rng, 4096).unwrap();
        let id = KroneckerCov::identity(noisy.dims());
        assert!(likelihood_residual(&noisy, &id).unwrap() > 1e-2);
    }

    #[test]
    fn converged_residual_below_tolerance() {
        let mut rng = Rng::seed_from_u64(11);
        let truth = KroneckerCov::new(vec![random_spd(3, &mut rng), random_spd(3, &mut rng)])
            .unwrap();
        let s = sample_wishart_kron(&truth, 50, &mut rng, 4096).unwrap();
        let cfg = MleConfig::default();
        let r = mle_flip_flop(&s, &cfg).unwrap();
        assert!(r.converged);
        assert!(likelihood_residual(&s, &r.estimate).unwrap() <= cfg.tol * 10.0);
        // canonical split: second factor unit trace
        assert!((r.estimate.factor(1).trace() - 1.0).abs() < 1e-12);
        assert!(r.existence_warning.is_none());
    }

    #[test]
    fn existence_warning_fires_for_tiny_n() {
        let mut rng = Rng::seed_from_u64(12);
        let truth = KroneckerCov::new(vec![random_spd(2, &mut rng), random_spd(2, &mut rng)])
            .unwrap();
        let s = sample_wishart_kron(&truth, 2, &mut rng, 4096).unwrap();
        let r = mle_flip_flop(&s, &MleConfig::default());
        if let Ok(r) = r {
            assert!(r.existence_warning.is_some());
        }
    }

    #[test]
    fn nll_basics_and_scale_identity() {
        let dims = ModeDims::new(vec![3]).unwrap();
        let s = SampleCov::from_outer_products(SymMatrix::<f64>::identity(3), dims.clone(), 4);
        let sigma = SpdMatrix::identity(3);
        // (n/2) * p
        assert!((gaussian_nll(&s, &sigma, 4).unwrap() - 6.0).abs() < 1e-12);

        let mut rng = Rng::seed_from_u64(13);
        let a = random_spd(3, &mut rng);
        let sm = SampleCov::from_outer_products(a.sym().clone(), dims.clone(), 4);
        // nll(cS, cSigma) = nll(S, Sigma) + (n p / 2) log c
        let c = 2.5f64;
        let s_scaled = SampleCov::from_outer_products(a.sym().scale(c), dims, 4);
        let sig = random_spd(3, &mut rng);
        let sig_scaled = SpdMatrix::new(sig.sym().scale(c)).unwrap();
        let lhs = gaussian_nll(&s_scaled, &sig_scaled, 4).unwrap();
        let rhs = gaussian_nll(&sm, &sig, 4).unwrap() + (4.0 * 3.0 / 2.0) * c.ln();
        assert!((lhs - rhs).abs() < 1e-9);
    }

    #[test]
    fn nll_minimized_at_sample_covariance() {
        let mut rng = Rng::seed_from_u64(14);
        let a = random_spd(3, &mut rng);
        let s = SampleCov::from_outer_products(a.sym().clone(), ModeDims::new(vec![3]).unwrap(), 6);
        let base = gaussian_nll(&s, &SpdMatrix::new(a.sym().clone()).unwrap(), 6).unwrap();
        for _ in 0..10 {
            let h = SymMatrix::from_fn_upper(3, |_, _| 0.05 * rng.standard_normal::<f64>());
            let perturbed = SpdMatrix::new(a.sym().add(&h)).unwrap();
            assert!(gaussian_nll(&s, &perturbed, 6).unwrap() >= base - 1e-9);
        }
    }

    #[test]
    fn nll_kron_matches_materialized() {
        let mut rng = Rng::seed_from_u64(15);
        let truth = KroneckerCov::new(vec![random_spd(2, &mut rng), random_spd(3, &mut rng)])
            .unwrap();
        let s = sample_wishart_kron(&truth, 20, &mut rng, 4096).unwrap();
        let kc = KroneckerCov::new(vec![random_spd(2, &mut rng), random_spd(3, &mut rng)])
            .unwrap();
        let lhs = gaussian_nll_kron(&s, &kc, 20).unwrap();
        let rhs = gaussian_nll(&s, &kc.materialize(4096).unwrap(), 20).unwrap();
        assert!((lhs - rhs).abs() < 1e-8 * rhs.abs());
    }

    #[test]
    fn likelihood_monotone_and_mle_beats_pt() {
        let mut rng = Rng::seed_from_u64(16);
        let truth = KroneckerCov::new(vec![random_spd(3, &mut rng), random_spd(3, &mut rng)])
            .unwrap();
        for trial in 0..5 {
            let s = sample_wishart_kron(&truth, 30 + 10 * trial, &mut rng, 4096).unwrap();
            // manual sweeps, checking nll is non-increasing
            let (p1, p2) = (3usize, 3usize);
            #[allow(unused_assignments)]
            let mut f1 = SpdMatrix::<f64>::identity(p1);
            let mut f2 = SpdMatrix::identity(p2);
            let mut last = f64::INFINITY;
            for _ in 0..12 {
                let inv2 = f2.inverse();
                f1 = SpdMatrix::new(
                    tr1_weighted(s.matrix(), s.dims(), inv2.sym())
                        .unwrap()
                        .scale(1.0 / p2 as f64),
                )
                .unwrap();
                let inv1 = f1.inverse();
                f2 = SpdMatrix::new(
                    tr2_weighted(s.matrix(), s.dims(), inv1.sym())
                        .unwrap()
                        .scale(1.0 / p1 as f64),
                )
                .unwrap();
                let kc = KroneckerCov::new(vec![f1.clone(), f2.clone()]).unwrap();
                let nll = gaussian_nll_kron(&s, &kc, s.n()).unwrap();
                assert!(nll <= last + 1e-7 * nll.abs().max(1.0), "nll increased");
                last = nll;
            }
            // MLE likelihood no worse than PT's
            let mle = mle_flip_flop(&s, &MleConfig::default()).unwrap();
            let pt = crate::ptrace::pt_estimator(&s).unwrap();
            let nll_mle = gaussian_nll_kron(&s, &mle.estimate, s.n()).unwrap();
            let nll_pt = gaussian_nll_kron(&s, &pt, s.n()).unwrap();
            assert!(
                nll_mle <= nll_pt + 1e-6 * nll_pt.abs(),
                "MLE nll {nll_mle} worse than PT {nll_pt}"
            );
        }
    }

    #[test]
    fn gl_equivariance_of_mle() {
        let mut rng = Rng::seed_from_u64(18);
        let truth = KroneckerCov::new(vec![random_spd(2, &mut rng), random_spd(3, &mut rng)])
            .unwrap();
        let s = sample_wishart_kron(&truth, 40, &mut rng, 4096).unwrap();
        let a = Matrix::from_fn(2, 2, |i, j| {
            0.25 * rng.standard_normal::<f64>() + if i == j { 1.2 } else { 0.0 }
        });
        let b = Matrix::from_fn(3, 3, |i, j| {
            0.25 * rng.standard_normal::<f64>() + if i == j { 1.2 } else { 0.0 }
        });
        let ab = crate::linalg::kron::kron_matrix(&a, &b);
        let s_c = SampleCov::from_outer_products(
            s.matrix().congruence(&ab),
            s.dims().clone(),
            s.n(),
        );
        let cfg = MleConfig {
            tol: 1e-11,
            ..MleConfig::default()
        };
        let lhs = mle_flip_flop(&s_c, &cfg)
            .unwrap()
            .estimate
            .materialize(4096)
            .unwrap()
            .into_sym();
        let rhs = mle_flip_flop(&s, &cfg)
            .unwrap()
            .estimate
            .materialize(4096)
            .unwrap()
            .into_sym()
            .congruence(&ab);
        assert!(
            lhs.sub(&rhs).frobenius_norm() <= 1e-6 * rhs.frobenius_norm(),
            "GL equivariance gap {}",
            lhs.sub(&rhs).frobenius_norm() / rhs.frobenius_norm()
        );
    }
}
