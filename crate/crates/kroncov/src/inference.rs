//! Hypothesis tests on Kronecker factors and the intersection-test protocol.
//!
//! Factor-level tests inherit Wishart asymptotics with inflated degrees of
//! freedom: an efficient estimate of `Sigma_1` from `n` order-2 tensors
//! fluctuates like a Wishart with `n * p_2` observations. Testing each factor
//! marginally at level `1 - alpha` then rejects the intersection null with
//! asymptotic level `alpha (2 - alpha)`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::kron::{KroneckerCov, ModeDims};
use crate::linalg::spd::{affine_invariant_distance, SpdMatrix};
use crate::linalg::sym::SymMatrix;
use crate::linalg::wishart::{sample_wishart, sample_wishart_kron, SampleCov};
use crate::mle::{mle_flip_flop, MleConfig};
use crate::ptrace::rpt_estimator;
use crate::rng::Rng;
use crate::scalar::{t, t_usize, Scalar};

/// Default Monte Carlo budget for simulated critical values.
pub const DEFAULT_QUANTILE_REPS: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestMethod {
    Sphericity,
    CompoundSymmetry,
    Intersection,
}

/// One-sided test outcome; large statistics are evidence against the null.
#[derive(Debug, Clone, Serialize)]
pub struct TestReport {
    pub method: TestMethod,
    pub statistic: f64,
    pub critical_value: f64,
    pub reject: bool,
    pub level: f64,
}

impl TestReport {
    fn new(method: TestMethod, statistic: f64, critical_value: f64, level: f64) -> Self {
        TestReport {
            method,
            statistic,
            critical_value,
            reject: statistic >= critical_value,
            level,
        }
    }
}

/// Statistic for the diagonal-factor hypothesis: the affine-invariant
/// distance from the estimate to its own diagonal part. Zero iff diagonal,
/// invariant under diagonal congruence and rescaling.
pub fn sphericity_stat<T: Scalar>(sigma_hat: &SpdMatrix<T>) -> Result<T> {
    let diag = SpdMatrix::new(sigma_hat.sym().diagonal_part())?;
    affine_invariant_distance(&diag, sigma_hat)
}

/// Empirical level-quantile of the sphericity statistic under
/// `dof * S ~ Wishart_p(I, dof)` draws; the statistic is pivotal over
/// diagonal truths so the identity suffices.
pub fn sphericity_quantile<T: Scalar>(
    p: usize,
    dof: u64,
    level: f64,
    reps: usize,
    rng: &mut Rng,
) -> Result<T> {
    if reps < 100 {
        return Err(Error::InvalidArgument(
            "sphericity_quantile needs reps >= 100".into(),
        ));
    }
    if !(0.0..=1.0).contains(&level) {
        return Err(Error::InvalidArgument("level must be in [0, 1]".into()));
    }
    let identity = SpdMatrix::<T>::identity(p);
    let mut stats: Vec<T> = Vec::with_capacity(reps);
    for _ in 0..reps {
        let s = sample_wishart(&identity, dof, rng)?;
        let spd = SpdMatrix::new(s.matrix().clone())
            .map_err(|_| Error::DegenerateSample)?;
        stats.push(sphericity_stat(&spd)?);
    }
    stats.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    Ok(stats[quantile_index(level, reps)])
}

/// Upper empirical quantile: `ceil(level * reps) - 1`, clamped. `level = 0`
/// picks the minimum, `level = 1` the maximum.
pub(crate) fn quantile_index(level: f64, reps: usize) -> usize {
    let idx = (level * reps as f64).ceil() as isize - 1;
    idx.clamp(0, reps as isize - 1) as usize
}

/// Likelihood ratio test of compound symmetry `Sigma = a I + b 11^T`.
///
/// The CS family is spectrally closed: eigenvalue `a + p b` on the all-ones
/// direction and `a` on its complement, so the constrained MLE has the closed
/// form `a+pb = u^T S u`, `a = (tr S - u^T S u)/(p-1)` with `u = 1/sqrt(p)`.
/// Returns `(statistic, chi-square degrees of freedom)` with
/// `df = p(p+1)/2 - 2`.
pub fn compound_symmetry_lrt<T: Scalar>(s: &SampleCov<T>, dof: u64) -> Result<(T, usize)> {
    let p = s.dim();
    if p < 2 {
        return Err(Error::InvalidArgument(
            "compound symmetry needs dimension >= 2".into(),
        ));
    }
    let pf = t_usize::<T>(p);
    let u = vec![T::one() / pf.sqrt(); p];
    let s_ones = s.matrix().quad_form(&u);
    let s_rest = s.matrix().trace() - s_ones;
    if s_ones <= T::zero() || s_rest <= T::zero() {
        return Err(Error::BoundaryFit);
    }
    let a_hat = s_rest / (pf - T::one());
    // log|CS fit| with eigenvalues (a+pb) once and a with multiplicity p-1
    let log_det_cs = s_ones.ln() + (pf - T::one()) * a_hat.ln();
    let full = SpdMatrix::new(s.matrix().clone()).map_err(|_| Error::DegenerateSample)?;
    // 2 [nll(S, CS) - nll(S, S)] = dof (log|CS| + tr(CS^{-1}S) - log|S| - p)
    // and tr(CS^{-1} S) = p at the fitted parameters.
    let stat = t_usize::<T>(dof as usize) * (log_det_cs - full.log_det());
    let df = p * (p + 1) / 2 - 2;
    Ok((stat, df))
}

/// Chi-squared upper quantile via `statrs`.
pub fn chi_squared_quantile(df: usize, level: f64) -> f64 {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    let dist = ChiSquared::new(df as f64).expect("positive dof");
    dist.inverse_cdf(level)
}

/// Which estimator supplies the factor estimates for the intersection test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FactorEstimator {
    Mle,
    Rpt,
}

fn fit_factors<T: Scalar>(
    s: &SampleCov<T>,
    estimator: FactorEstimator,
    cfg: &MleConfig<T>,
) -> Result<KroneckerCov<T>> {
    match estimator {
        FactorEstimator::Mle => Ok(mle_flip_flop(s, cfg)?.estimate),
        FactorEstimator::Rpt => rpt_estimator(s),
    }
}

/// Intersection test of "factor 1 diagonal" and "factor 2 compound
/// symmetric" on one order-2 sample, with factors fitted by the MLE.
/// Returns the two marginal reports and the joint asymptotic level
/// `alpha (2 - alpha)`.
pub fn intersection_test<T: Scalar>(
    s: &SampleCov<T>,
    level: f64,
    cfg: &MleConfig<T>,
    rng: &mut Rng,
) -> Result<(TestReport, TestReport, f64)> {
    intersection_test_with(s, FactorEstimator::Mle, level, cfg, rng)
}

/// Same test with a caller-chosen factor estimator.
pub fn intersection_test_with<T: Scalar>(
    s: &SampleCov<T>,
    estimator: FactorEstimator,
    level: f64,
    cfg: &MleConfig<T>,
    rng: &mut Rng,
) -> Result<(TestReport, TestReport, f64)> {
    let crit = intersection_critical_values::<T>(s.dims(), s.n(), level, DEFAULT_QUANTILE_REPS, rng)?;
    let (r1, r2) = intersection_apply(s, estimator, cfg, &crit)?;
    let alpha = 1.0 - level;
    Ok((r1, r2, alpha * (2.0 - alpha)))
}

/// Simulated/analytic critical values shared across replicates of an
/// intersection experiment.
#[derive(Debug, Clone)]
pub struct IntersectionCriticalValues {
    pub sphericity: f64,
    pub compound_symmetry: f64,
    pub level: f64,
}

pub fn intersection_critical_values<T: Scalar>(
    dims: &ModeDims,
    n: u64,
    level: f64,
    quantile_reps: usize,
    rng: &mut Rng,
) -> Result<IntersectionCriticalValues> {
    if dims.order() != 2 {
        return Err(Error::InvalidArgument(
            "intersection test is defined for order-2 samples".into(),
        ));
    }
    let (p1, p2) = (dims.dim(0), dims.dim(1));
    let q1: T = sphericity_quantile(p1, n * p2 as u64, level, quantile_reps, rng)?;
    let df = p2 * (p2 + 1) / 2 - 2;
    Ok(IntersectionCriticalValues {
        sphericity: q1.to_f64().unwrap_or(f64::NAN),
        compound_symmetry: chi_squared_quantile(df, level),
        level,
    })
}

fn intersection_apply<T: Scalar>(
    s: &SampleCov<T>,
    estimator: FactorEstimator,
    cfg: &MleConfig<T>,
    crit: &IntersectionCriticalValues,
) -> Result<(TestReport, TestReport)> {
    let (p1, _p2) = (s.dims().dim(0), s.dims().dim(1));
    let factors = fit_factors(s, estimator, cfg)?;
    let stat1 = sphericity_stat(factors.factor(0))?
        .to_f64()
        .unwrap_or(f64::NAN);
    let f2 = factors.factor(1);
    let dof2 = s.n() * p1 as u64;
    let s2 = SampleCov::from_outer_products(
        f2.sym().clone(),
        ModeDims::single(f2.dim()),
        dof2,
    );
    let (stat2, _df) = compound_symmetry_lrt(&s2, dof2)?;
    let r1 = TestReport::new(TestMethod::Sphericity, stat1, crit.sphericity, crit.level);
    let r2 = TestReport::new(
        TestMethod::CompoundSymmetry,
        stat2.to_f64().unwrap_or(f64::NAN),
        crit.compound_symmetry,
        crit.level,
    );
    Ok((r1, r2))
}

/// Null factors of the independence study: `Sigma_1 = diag(1..5)`,
/// `Sigma_2 = 2 I + 11^T` (3 x 3).
pub fn null_scenario_factors<T: Scalar>() -> Result<(SpdMatrix<T>, SpdMatrix<T>)> {
    let s1 = SpdMatrix::new(SymMatrix::diagonal(&[
        t(1.0),
        t(2.0),
        t(3.0),
        t(4.0),
        t(5.0),
    ]))?;
    let s2 = SpdMatrix::new(SymMatrix::from_fn_upper(3, |i, j| {
        if i == j {
            t(3.0)
        } else {
            t(1.0)
        }
    }))?;
    Ok((s1, s2))
}

/// Alternative factors: `diag(1..5) + 0.1 * 11^T` and the compound-symmetric
/// factor perturbed by `-0.3 e_3 e_3^T`.
pub fn alternative_scenario_factors<T: Scalar>() -> Result<(SpdMatrix<T>, SpdMatrix<T>)> {
    let s1 = SpdMatrix::new(SymMatrix::from_fn_upper(5, |i, j| {
        let base = if i == j { t_usize::<T>(i + 1) } else { T::zero() };
        base + t(0.1)
    }))?;
    let s2 = SpdMatrix::new(SymMatrix::from_fn_upper(3, |i, j| {
        let cs = if i == j { t(3.0) } else { t(1.0) };
        if i == 2 && j == 2 {
            cs - t(0.3)
        } else {
            cs
        }
    }))?;
    Ok((s1, s2))
}

/// Configuration of the joint-rejection contingency experiment.
#[derive(Debug, Clone)]
pub struct IndependenceConfig {
    pub n: u64,
    pub reps: usize,
    pub level: f64,
    pub quantile_reps: usize,
    pub seed: u64,
    pub estimator: FactorEstimator,
    pub alternative: bool,
}

impl Default for IndependenceConfig {
    fn default() -> Self {
        IndependenceConfig {
            n: 200,
            reps: 5000,
            level: 0.95,
            quantile_reps: DEFAULT_QUANTILE_REPS,
            seed: 1,
            estimator: FactorEstimator::Mle,
            alternative: false,
        }
    }
}

/// 2x2 rejection proportions with the independence products in parentheses
/// in the printed table.
#[derive(Debug, Clone, Serialize)]
pub struct ContingencyReport {
    pub n: u64,
    pub reps: usize,
    pub level: f64,
    pub alternative: bool,
    /// `cells[i][j]`: proportion with `i = reject H1`, `j = reject H2`.
    pub cells: [[f64; 2]; 2],
    /// Products of the marginals under independence, same layout.
    pub independence_fit: [[f64; 2]; 2],
    pub marginal_reject_h1: f64,
    pub marginal_reject_h2: f64,
    pub joint_level: f64,
    pub failed_reps: usize,
}

/// Runs the contingency experiment: `reps` independent order-2 Wishart
/// samples, factor fits, both marginal tests, joint tallies. Replicates run
/// in parallel with counter-derived seeds.
pub fn independence_experiment<T: Scalar>(cfg: &IndependenceConfig) -> Result<ContingencyReport> {
    let (s1, s2) = if cfg.alternative {
        alternative_scenario_factors::<T>()?
    } else {
        null_scenario_factors::<T>()?
    };
    let truth = KroneckerCov::new(vec![s1, s2])?;
    let dims = truth.dims().clone();

    let mut qrng = Rng::substream(cfg.seed, u64::MAX);
    let crit =
        intersection_critical_values::<T>(&dims, cfg.n, cfg.level, cfg.quantile_reps, &mut qrng)?;

    let mle_cfg = MleConfig::<T>::default();
    let outcomes: Vec<Option<(bool, bool)>> = (0..cfg.reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = Rng::substream(cfg.seed, rep as u64);
            let s = sample_wishart_kron(&truth, cfg.n, &mut rng, usize::MAX).ok()?;
            let (r1, r2) = intersection_apply(&s, cfg.estimator, &mle_cfg, &crit).ok()?;
            Some((r1.reject, r2.reject))
        })
        .collect();

    let mut cells = [[0usize; 2]; 2];
    let mut failed = 0usize;
    for o in &outcomes {
        match o {
            Some((r1, r2)) => cells[*r1 as usize][*r2 as usize] += 1,
            None => failed += 1,
        }
    }
    let total = (cfg.reps - failed) as f64;
    let prop = |c: usize| c as f64 / total;
    let cells_f = [
        [prop(cells[0][0]), prop(cells[0][1])],
        [prop(cells[1][0]), prop(cells[1][1])],
    ];
    let m1 = cells_f[1][0] + cells_f[1][1];
    let m2 = cells_f[0][1] + cells_f[1][1];
    let fit = [
        [(1.0 - m1) * (1.0 - m2), (1.0 - m1) * m2],
        [m1 * (1.0 - m2), m1 * m2],
    ];
    let alpha = 1.0 - cfg.level;
    Ok(ContingencyReport {
        n: cfg.n,
        reps: cfg.reps,
        level: cfg.level,
        alternative: cfg.alternative,
        cells: cells_f,
        independence_fit: fit,
        marginal_reject_h1: m1,
        marginal_reject_h2: m2,
        joint_level: alpha * (2.0 - alpha),
        failed_reps: failed,
    })
}
