//! Monte Carlo experiment harness for estimator risk tables and
//! convergence-rate checks.
//!
//! Replicates are embarrassingly parallel with counter-derived seeds, and
//! aggregation runs over the ordered replicate list, so a table depends only
//! on the scenario and its seed, never on the thread count. Losses are
//! evaluated from factored-trace identities in log space, which keeps the
//! harness exact at mode dimensions where the `p x p` covariance is never
//! materialized and at eigenvalue profiles spanning hundreds of orders of
//! magnitude.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::eigen::sym_eigen;
use crate::linalg::kron::{KroneckerCov, ModeDims, DEFAULT_MATERIALIZE_CAP};
use crate::linalg::matrix::Matrix;
use crate::linalg::spd::{spd_power, SpdMatrix};
use crate::linalg::sym::SymMatrix;
use crate::linalg::tensor::{accumulate_mode_gram, mode_multiply};
use crate::linalg::wishart::SampleCov;
use crate::mle::{mle_flip_flop, MleConfig};
use crate::ptrace::{rpt_estimator, PtFactors};
use crate::rng::Rng;
use crate::scalar::{t, t_usize, Scalar};

/// Eigenvalue profile of a factor; the exponential family is generated in
/// the normalized form `e^{i - p}` so that squared norms stay inside the
/// double range at any dimension (all losses are scale invariant).
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EigenProfile {
    Constant,
    Linear,
    Exponential,
    Spiked { q: usize, a: f64, b: f64 },
    Explicit(Vec<f64>),
}

impl EigenProfile {
    pub fn generate<T: Scalar>(&self, p: usize) -> Result<Vec<T>> {
        if p == 0 {
            return Err(Error::InvalidArgument("profile needs p >= 1".into()));
        }
        let lam: Vec<f64> = match self {
            EigenProfile::Constant => vec![1.0; p],
            EigenProfile::Linear => (1..=p).map(|i| i as f64).collect(),
            EigenProfile::Exponential => (1..=p).map(|i| ((i as f64) - p as f64).exp()).collect(),
            EigenProfile::Spiked { q, a, b } => {
                if *q == 0 || *q > p {
                    return Err(Error::InvalidArgument(format!(
                        "spiked profile needs 1 <= q <= p, got q={q} p={p}"
                    )));
                }
                let mut v = vec![*b; p];
                for x in v.iter_mut().take(*q) {
                    *x = a + b;
                }
                v
            }
            EigenProfile::Explicit(v) => {
                if v.len() != p {
                    return Err(Error::DimMismatch(format!(
                        "explicit profile has {} entries for p={p}",
                        v.len()
                    )));
                }
                v.clone()
            }
        };
        if lam.iter().any(|&x| x <= 0.0) {
            return Err(Error::InvalidArgument(
                "profile eigenvalues must be positive".into(),
            ));
        }
        Ok(lam.into_iter().map(|x| t(x)).collect())
    }

    pub fn label(&self) -> String {
        match self {
            EigenProfile::Constant => "constant".into(),
            EigenProfile::Linear => "linear".into(),
            EigenProfile::Exponential => "exponential".into(),
            EigenProfile::Spiked { q, a, b } => format!("spiked(q={q},a={a},b={b})"),
            EigenProfile::Explicit(_) => "explicit".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum EstimatorKind {
    Pt,
    Mle,
    Rpt,
}

impl EstimatorKind {
    pub fn label(&self) -> &'static str {
        match self {
            EstimatorKind::Pt => "PT",
            EstimatorKind::Mle => "MLE",
            EstimatorKind::Rpt => "RPT",
        }
    }
}

/// One Monte Carlo experiment: a truth built from per-mode eigenvalue
/// profiles, a set of estimators, and a sample-size grid.
#[derive(Debug, Clone, Serialize)]
pub struct Scenario {
    pub name: String,
    pub dims: Vec<usize>,
    /// One shared profile or one per mode.
    pub profiles: Vec<EigenProfile>,
    pub estimators: Vec<EstimatorKind>,
    pub n_grid: Vec<u64>,
    /// Initial replicate budget; doubled until the SE target is met.
    pub reps: usize,
    /// Hard replicate cap; a count, not wall clock, so tables are
    /// reproducible bit for bit.
    pub max_reps: usize,
    pub seed: u64,
    /// Overrides the loss multiplier `n`; defaults to each cell's sample
    /// size. The shipped table presets pin this per profile.
    pub loss_n: Option<u64>,
    /// Relative Monte Carlo standard error target per cell.
    pub se_target: f64,
    pub materialize_cap: usize,
    /// When set, conjugates each diagonal factor by a random orthogonal
    /// matrix derived from this seed (risk is invariant; used by tests).
    pub orthogonal_conjugation_seed: Option<u64>,
}

impl Scenario {
    pub fn new(name: impl Into<String>, dims: Vec<usize>, profile: EigenProfile) -> Self {
        Scenario {
            name: name.into(),
            dims,
            profiles: vec![profile],
            estimators: vec![EstimatorKind::Pt],
            n_grid: vec![1],
            reps: 256,
            max_reps: 65536,
            seed: 1,
            loss_n: None,
            se_target: 0.05,
            materialize_cap: DEFAULT_MATERIALIZE_CAP,
            orthogonal_conjugation_seed: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.dims.is_empty() {
            return Err(Error::InvalidArgument("scenario needs dims".into()));
        }
        if self.profiles.len() != 1 && self.profiles.len() != self.dims.len() {
            return Err(Error::InvalidArgument(
                "profiles must be shared (1) or per-mode (k)".into(),
            ));
        }
        if self.estimators.is_empty() {
            return Err(Error::InvalidArgument("scenario needs estimators".into()));
        }
        if self.n_grid.is_empty() || self.n_grid.contains(&0) {
            return Err(Error::InvalidArgument("n_grid needs positive entries".into()));
        }
        if self.reps < 2 {
            return Err(Error::InvalidArgument("reps must be >= 2".into()));
        }
        Ok(())
    }

    fn profile_for_mode(&self, mode: usize) -> &EigenProfile {
        if self.profiles.len() == 1 {
            &self.profiles[0]
        } else {
            &self.profiles[mode]
        }
    }

    pub fn profile_label(&self) -> String {
        if self.profiles.len() == 1 {
            self.profiles[0].label()
        } else {
            self.profiles
                .iter()
                .map(|p| p.label())
                .collect::<Vec<_>>()
                .join("|")
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellStatus {
    Ok,
    NotApplicable,
}

/// One (estimator, n) cell of a risk table.
#[derive(Debug, Clone, Serialize)]
pub struct RiskRow {
    pub estimator: EstimatorKind,
    pub n: u64,
    pub k: usize,
    pub dims: String,
    pub profile: String,
    /// Monte Carlo mean of `loss_n * ||delta - Sigma||_F^2 / ||Sigma||_F^2`.
    pub mean_loss: f64,
    pub mc_se: f64,
    pub reps_used: usize,
    /// Mean of the unsquared relative error `||delta - Sigma||_F / ||Sigma||_F`.
    pub mean_rel_err: f64,
    pub rel_err_se: f64,
    pub failures: usize,
    pub status: CellStatus,
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RiskTable {
    pub scenario: String,
    pub rows: Vec<RiskRow>,
}

impl RiskTable {
    pub fn find(&self, estimator: EstimatorKind, n: u64) -> Option<&RiskRow> {
        self.rows
            .iter()
            .find(|r| r.estimator == estimator && r.n == n)
    }
}

/// Squared relative Frobenius loss `n ||delta - Sigma||_F^2 / ||Sigma||_F^2`
/// between factored covariances, evaluated from factor traces in log space.
pub fn relative_frobenius_loss<T: Scalar>(
    delta: &KroneckerCov<T>,
    truth: &KroneckerCov<T>,
    n: u64,
) -> Result<T> {
    if delta.dims() != truth.dims() {
        return Err(Error::DimMismatch(format!(
            "loss between dims {} and {}",
            delta.dims().label(),
            truth.dims().label()
        )));
    }
    let ln_bb: T = truth
        .factors()
        .iter()
        .map(|f| f.sym().frobenius_norm_sq().ln())
        .sum();
    let ln_aa: T = delta
        .factors()
        .iter()
        .map(|f| f.sym().frobenius_norm_sq().ln())
        .sum();
    let ln_ab: T = delta
        .factors()
        .iter()
        .zip(truth.factors())
        .map(|(a, b)| a.sym().inner(b.sym()).ln())
        .sum();
    let rel_sq = (ln_aa - ln_bb).exp() - t::<T>(2.0) * (ln_ab - ln_bb).exp() + T::one();
    Ok(t_usize::<T>(n as usize) * rel_sq.max(T::zero()))
}

/// Truth used by the harness, in factored diagonal (or conjugated) form.
struct Truth<T> {
    dims: ModeDims,
    factors: Vec<SpdMatrix<T>>,
    /// Flat tensor of per-entry standard deviations when all factors are
    /// diagonal; sampling is then an elementwise scale.
    sd_flat: Option<Vec<T>>,
    /// Mode-wise square roots for the general sampling path.
    sqrt_factors: Vec<Matrix<T>>,
    ln_bb: T,
}

impl<T: Scalar> Truth<T> {
    fn build(sc: &Scenario) -> Result<Self> {
        let dims = ModeDims::new(sc.dims.clone())?;
        let k = dims.order();
        let mut lambdas: Vec<Vec<T>> = Vec::with_capacity(k);
        for mode in 0..k {
            lambdas.push(sc.profile_for_mode(mode).generate(dims.dim(mode))?);
        }
        let mut factors: Vec<SpdMatrix<T>> = lambdas
            .iter()
            .map(|l| SpdMatrix::diagonal(l))
            .collect::<Result<Vec<_>>>()?;
        let mut diagonal = true;
        if let Some(rot_seed) = sc.orthogonal_conjugation_seed {
            diagonal = false;
            let mut rng = Rng::seed_from_u64(rot_seed);
            factors = factors
                .iter()
                .map(|f| {
                    let q = f.dim();
                    let g = SymMatrix::from_fn_upper(q, |_, _| rng.standard_normal::<T>());
                    let u = sym_eigen(&g)?.vectors;
                    SpdMatrix::new(f.sym().congruence(&u))
                })
                .collect::<Result<Vec<_>>>()?;
        }
        let sd_flat = if diagonal {
            let p = dims.product();
            let strides = dims.strides();
            let mut sd = vec![T::one(); p];
            for (r, s) in sd.iter_mut().enumerate() {
                for mode in 0..k {
                    let idx = (r / strides[mode]) % dims.dim(mode);
                    *s *= lambdas[mode][idx].sqrt();
                }
            }
            Some(sd)
        } else {
            None
        };
        let sqrt_factors = if sd_flat.is_none() {
            factors
                .iter()
                .map(|f| spd_power(f, t(0.5)).map(|h| h.into_sym().to_matrix()))
                .collect::<Result<Vec<_>>>()?
        } else {
            Vec::new()
        };
        let ln_bb = factors
            .iter()
            .map(|f| f.sym().frobenius_norm_sq().ln())
            .sum();
        Ok(Truth {
            dims,
            factors,
            sd_flat,
            sqrt_factors,
            ln_bb,
        })
    }

    /// Draws one tensor sample into `y` (reusing the buffer).
    fn draw_sample(&self, rng: &mut Rng, y: &mut Vec<T>) {
        let p = self.dims.product();
        y.clear();
        y.extend((0..p).map(|_| rng.standard_normal::<T>()));
        match &self.sd_flat {
            Some(sd) => {
                for (v, &s) in y.iter_mut().zip(sd) {
                    *v *= s;
                }
            }
            None => {
                let mut cur = std::mem::take(y);
                for (mode, h) in self.sqrt_factors.iter().enumerate() {
                    cur = mode_multiply(&cur, &self.dims, mode, h);
                }
                *y = cur;
            }
        }
    }

    /// Squared relative error of raw PT factors against this truth,
    /// via log-space trace products.
    fn pt_rel_err_sq(&self, pt: &PtFactors<T>) -> T {
        let k = self.dims.order() as f64;
        let km1 = t::<T>(k - 1.0);
        let ln_tr_s = pt.trace.ln();
        let mut ln_aa = -(km1 + km1) * ln_tr_s;
        let mut ln_ab = -km1 * ln_tr_s;
        for (g, b) in pt.factors.iter().zip(&self.factors) {
            ln_aa += g.frobenius_norm_sq().ln();
            ln_ab += g.inner(b.sym()).ln();
        }
        let rel = (ln_aa - self.ln_bb).exp() - t::<T>(2.0) * (ln_ab - self.ln_bb).exp() + T::one();
        rel.max(T::zero())
    }

    /// Squared relative error of a factored estimate against this truth.
    fn kron_rel_err_sq(&self, est: &KroneckerCov<T>) -> T {
        let mut ln_aa = T::zero();
        let mut ln_ab = T::zero();
        for (a, b) in est.factors().iter().zip(&self.factors) {
            ln_aa += a.sym().frobenius_norm_sq().ln();
            ln_ab += a.sym().inner(b.sym()).ln();
        }
        let rel = (ln_aa - self.ln_bb).exp() - t::<T>(2.0) * (ln_ab - self.ln_bb).exp() + T::one();
        rel.max(T::zero())
    }
}

fn fold_stats(values: &[f64]) -> (f64, f64) {
    let count = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / count;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1.0);
    (mean, (var / count).sqrt())
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = values.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Per-replicate outcome: squared relative error per estimator
/// (`None` marks an estimator failure on that draw).
type RepOutcome = Vec<Option<f64>>;

fn run_replicate<T: Scalar>(
    truth: &Truth<T>,
    estimators: &[EstimatorKind],
    active: &[bool],
    n: u64,
    need_matrix: bool,
    seed: u64,
    stream: u64,
) -> RepOutcome {
    let mut rng = Rng::substream(seed, stream);
    let dims = &truth.dims;
    let p = dims.product();
    let k = dims.order();

    let mut grams: Vec<SymMatrix<T>> = (0..k).map(|m| SymMatrix::zeros(dims.dim(m))).collect();
    let mut sum_sq = T::zero();
    let mut s_acc = if need_matrix {
        Some(SymMatrix::zeros(p))
    } else {
        None
    };
    let mut y: Vec<T> = Vec::with_capacity(p);
    for _ in 0..n {
        truth.draw_sample(&mut rng, &mut y);
        for (mode, g) in grams.iter_mut().enumerate() {
            accumulate_mode_gram(g, &y, dims, mode);
        }
        sum_sq += y.iter().map(|&v| v * v).sum::<T>();
        if let Some(s) = s_acc.as_mut() {
            for i in 0..p {
                let yi = y[i];
                if yi == T::zero() {
                    continue;
                }
                for j in i..p {
                    let v = s.get(i, j) + yi * y[j];
                    s.set_sym(i, j, v);
                }
            }
        }
    }

    let pt = PtFactors::from_mode_grams(grams, sum_sq, n, dims.clone());
    let sample = s_acc.map(|s| {
        let scale = T::one() / t_usize::<T>(n as usize);
        SampleCov::from_outer_products(s.scale(scale), dims.clone(), n)
    });

    estimators
        .iter()
        .zip(active)
        .map(|(est, &on)| {
            if !on {
                return None;
            }
            match est {
                EstimatorKind::Pt => {
                    let v = truth.pt_rel_err_sq(&pt).to_f64()?;
                    v.is_finite().then_some(v)
                }
                EstimatorKind::Mle => {
                    let s = sample.as_ref()?;
                    let fit = mle_flip_flop(s, &MleConfig::default()).ok()?;
                    if !fit.converged {
                        return None;
                    }
                    let v = truth.kron_rel_err_sq(&fit.estimate).to_f64()?;
                    v.is_finite().then_some(v)
                }
                EstimatorKind::Rpt => {
                    let s = sample.as_ref()?;
                    let fit = rpt_estimator(s).ok()?;
                    let v = truth.kron_rel_err_sq(&fit).to_f64()?;
                    v.is_finite().then_some(v)
                }
            }
        })
        .collect()
}

/// Runs the Monte Carlo risk experiment for one scenario. Cells escalate
/// their shared replicate budget (doubling, up to `max_reps`) until every
/// applicable cell's Monte Carlo SE is below `se_target * |mean|`.
pub fn risk_experiment<T: Scalar>(sc: &Scenario) -> Result<RiskTable> {
    sc.validate()?;
    let truth = Truth::<T>::build(sc)?;
    let dims_label = truth.dims.label();
    let k = truth.dims.order();
    let p = truth.dims.product();
    let profile_label = sc.profile_label();

    let mut rows: Vec<RiskRow> = Vec::new();
    for (n_idx, &n) in sc.n_grid.iter().enumerate() {
        // applicability per estimator at this cell
        let mut active = Vec::with_capacity(sc.estimators.len());
        let mut notes: Vec<Option<String>> = Vec::with_capacity(sc.estimators.len());
        for est in &sc.estimators {
            let (ok, note) = match est {
                EstimatorKind::Pt => (true, None),
                EstimatorKind::Mle => {
                    if k != 2 {
                        (false, Some("MLE requires order-2 dims".to_string()))
                    } else if p > sc.materialize_cap {
                        (false, Some(format!("dimension {p} exceeds cap {}", sc.materialize_cap)))
                    } else {
                        (true, None)
                    }
                }
                EstimatorKind::Rpt => {
                    if k != 2 {
                        (false, Some("RPT requires order-2 dims".to_string()))
                    } else if p > sc.materialize_cap {
                        (false, Some(format!("dimension {p} exceeds cap {}", sc.materialize_cap)))
                    } else if n < p as u64 {
                        (false, Some(format!("RPT needs n >= p = {p} for |S| > 0")))
                    } else {
                        (true, None)
                    }
                }
            };
            active.push(ok);
            notes.push(note);
        }
        let need_matrix = sc
            .estimators
            .iter()
            .zip(&active)
            .any(|(e, &on)| on && !matches!(e, EstimatorKind::Pt));

        let loss_mult = sc.loss_n.unwrap_or(n) as f64;

        let mut outcomes: Vec<RepOutcome> = Vec::new();
        let mut budget = sc.reps.min(sc.max_reps).max(2);
        loop {
            let start = outcomes.len();
            let fresh: Vec<RepOutcome> = (start..budget)
                .into_par_iter()
                .map(|rep| {
                    let stream = (n_idx as u64) << 32 | rep as u64;
                    run_replicate(
                        &truth,
                        &sc.estimators,
                        &active,
                        n,
                        need_matrix,
                        sc.seed,
                        stream,
                    )
                })
                .collect();
            outcomes.extend(fresh);

            // SE criterion across applicable cells
            let mut all_met = true;
            for (ei, &on) in active.iter().enumerate() {
                if !on {
                    continue;
                }
                let vals: Vec<f64> = outcomes
                    .iter()
                    .filter_map(|o| o[ei])
                    .map(|r| loss_mult * r)
                    .collect();
                if vals.len() < 2 {
                    all_met = false;
                    continue;
                }
                let (mean, se) = fold_stats(&vals);
                // NaN standard errors count as unmet
                let met = se.is_finite() && se <= sc.se_target * mean.abs();
                if !met {
                    all_met = false;
                }
            }
            if all_met || budget >= sc.max_reps {
                break;
            }
            budget = (budget * 2).min(sc.max_reps);
        }

        for (ei, est) in sc.estimators.iter().enumerate() {
            if !active[ei] {
                rows.push(RiskRow {
                    estimator: *est,
                    n,
                    k,
                    dims: dims_label.clone(),
                    profile: profile_label.clone(),
                    mean_loss: f64::NAN,
                    mc_se: f64::NAN,
                    reps_used: 0,
                    mean_rel_err: f64::NAN,
                    rel_err_se: f64::NAN,
                    failures: 0,
                    status: CellStatus::NotApplicable,
                    note: notes[ei].clone(),
                });
                continue;
            }
            let rel_sq: Vec<f64> = outcomes.iter().filter_map(|o| o[ei]).collect();
            let failures = outcomes.len() - rel_sq.len();
            let losses: Vec<f64> = rel_sq.iter().map(|r| loss_mult * r).collect();
            let rel: Vec<f64> = rel_sq.iter().map(|r| r.sqrt()).collect();
            let (mean_loss, mc_se) = fold_stats(&losses);
            let (mean_rel, rel_se) = fold_stats(&rel);
            rows.push(RiskRow {
                estimator: *est,
                n,
                k,
                dims: dims_label.clone(),
                profile: profile_label.clone(),
                mean_loss,
                mc_se,
                reps_used: rel_sq.len(),
                mean_rel_err: mean_rel,
                rel_err_se: rel_se,
                failures,
                status: CellStatus::Ok,
                note: notes[ei].clone(),
            });
        }
    }
    Ok(RiskTable {
        scenario: sc.name.clone(),
        rows,
    })
}

/// Configuration of a growing-dimension convergence check for the PT
/// estimator.
#[derive(Debug, Clone, Serialize)]
pub struct RateConfig {
    pub order: usize,
    pub m_grid: Vec<usize>,
    pub n: u64,
    pub profile: EigenProfile,
    pub reps: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RatePoint {
    pub m: usize,
    pub dims: String,
    pub median_rel_err: f64,
    pub predicted_rate: f64,
}

/// Median PT relative error along a growing-dimension grid, next to the
/// predicted rate `sup_j p_j cos^2(angle(lambda_j, 1)) /
/// (sqrt(n) sqrt(p) cos(angle(lambda, 1)))`.
pub fn convergence_rate_check<T: Scalar>(cfg: &RateConfig) -> Result<Vec<RatePoint>> {
    if cfg.order < 2 {
        return Err(Error::InvalidArgument("rate check needs order >= 2".into()));
    }
    let mut points = Vec::with_capacity(cfg.m_grid.len());
    for (mi, &m) in cfg.m_grid.iter().enumerate() {
        let sc = Scenario {
            name: format!("rate-m{m}"),
            dims: vec![m; cfg.order],
            profiles: vec![cfg.profile.clone()],
            estimators: vec![EstimatorKind::Pt],
            n_grid: vec![cfg.n],
            reps: cfg.reps,
            max_reps: cfg.reps,
            seed: Rng::derive_seed(cfg.seed, mi as u64),
            loss_n: Some(1),
            se_target: f64::INFINITY,
            materialize_cap: 0,
            orthogonal_conjugation_seed: None,
        };
        let truth = Truth::<T>::build(&sc)?;
        let estimators = [EstimatorKind::Pt];
        let active = [true];
        let mut rel: Vec<f64> = (0..cfg.reps)
            .into_par_iter()
            .filter_map(|rep| {
                run_replicate(&truth, &estimators, &active, cfg.n, false, sc.seed, rep as u64)[0]
                    .map(|r| r.sqrt())
            })
            .collect();
        let med = median(&mut rel);

        // predicted rate from the per-mode eigenvalue angles
        let lam: Vec<T> = cfg.profile.generate(m)?;
        let cos_sq = crate::geometry::cos_sq_angle(&lam)?.to_f64().unwrap();
        let cos_total = cos_sq.sqrt().powi(cfg.order as i32);
        let p_total = (m as f64).powi(cfg.order as i32);
        let numerator = m as f64 * cos_sq;
        let predicted = numerator / ((cfg.n as f64).sqrt() * p_total.sqrt() * cos_total);
        points.push(RatePoint {
            m,
            dims: vec![m.to_string(); cfg.order].join("x"),
            median_rel_err: med,
            predicted_rate: predicted,
        });
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_generation() {
        let c: Vec<f64> = EigenProfile::Constant.generate(3).unwrap();
        assert_eq!(c, vec![1.0, 1.0, 1.0]);
        let l: Vec<f64> = EigenProfile::Linear.generate(3).unwrap();
        assert_eq!(l, vec![1.0, 2.0, 3.0]);
        let e: Vec<f64> = EigenProfile::Exponential.generate(3).unwrap();
        assert!((e[2] - 1.0).abs() < 1e-15);
        assert!((e[1] - (-1.0f64).exp()).abs() < 1e-15);
        let s: Vec<f64> = EigenProfile::Spiked { q: 2, a: 3.0, b: 1.0 }.generate(4).unwrap();
        assert_eq!(s, vec![4.0, 4.0, 1.0, 1.0]);
        assert!(EigenProfile::Explicit(vec![1.0, -1.0]).generate::<f64>(2).is_err());
    }

    #[test]
    fn loss_basics() {
        let truth = KroneckerCov::new(vec![
            SpdMatrix::<f64>::diagonal(&[1.0, 2.0]).unwrap(),
            SpdMatrix::diagonal(&[3.0, 1.0]).unwrap(),
        ])
        .unwrap();
        assert!(relative_frobenius_loss(&truth, &truth, 7).unwrap() < 1e-12);

        let double = KroneckerCov::new(vec![
            SpdMatrix::<f64>::diagonal(&[2.0, 4.0]).unwrap(),
            SpdMatrix::diagonal(&[3.0, 1.0]).unwrap(),
        ])
        .unwrap();
        let l = relative_frobenius_loss(&double, &truth, 1).unwrap();
        assert!((l - 1.0).abs() < 1e-12, "2x scale loss {l}");
    }

    #[test]
    fn loss_matches_entrywise_oracle() {
        let mut rng = Rng::seed_from_u64(90);
        for _ in 0..10 {
            let mk = |d: usize, rng: &mut Rng| {
                let g = Matrix::from_fn(d, d, |_, _| rng.standard_normal::<f64>());
                let mut s = SymMatrix::symmetrize(&g.matmul(&g.transpose())).unwrap();
                for i in 0..d {
                    s.set_sym(i, i, s.get(i, i) + d as f64);
                }
                SpdMatrix::new(s).unwrap()
            };
            let a = KroneckerCov::new(vec![mk(2, &mut rng), mk(3, &mut rng)]).unwrap();
            let b = KroneckerCov::new(vec![mk(2, &mut rng), mk(3, &mut rng)]).unwrap();
            let got = relative_frobenius_loss(&a, &b, 5).unwrap();
            let am = a.materialize(4096).unwrap();
            let bm = b.materialize(4096).unwrap();
            let want =
                5.0 * am.sym().sub(bm.sym()).frobenius_norm_sq() / bm.sym().frobenius_norm_sq();
            assert!(
                (got - want).abs() <= 1e-9 * want.max(1.0),
                "factored {got} vs entrywise {want}"
            );
        }
    }

    #[test]
    fn determinism_bit_for_bit() {
        let mut sc = Scenario::new("det", vec![2, 2], EigenProfile::Linear);
        sc.estimators = vec![EstimatorKind::Pt, EstimatorKind::Mle];
        sc.n_grid = vec![8];
        sc.reps = 32;
        sc.max_reps = 32;
        sc.seed = 99;
        let a = risk_experiment::<f64>(&sc).unwrap();
        let b = risk_experiment::<f64>(&sc).unwrap();
        for (x, y) in a.rows.iter().zip(&b.rows) {
            assert_eq!(x.mean_loss.to_bits(), y.mean_loss.to_bits());
            assert_eq!(x.mc_se.to_bits(), y.mc_se.to_bits());
        }
    }

    #[test]
    fn losses_finite_and_positive() {
        let mut sc = Scenario::new("sanity", vec![2, 3], EigenProfile::Constant);
        sc.estimators = vec![EstimatorKind::Pt, EstimatorKind::Mle, EstimatorKind::Rpt];
        sc.n_grid = vec![10];
        sc.reps = 16;
        sc.max_reps = 16;
        let table = risk_experiment::<f64>(&sc).unwrap();
        for row in &table.rows {
            assert_eq!(row.status, CellStatus::Ok);
            assert!(row.mean_loss.is_finite() && row.mean_loss > 0.0);
            assert_eq!(row.failures, 0);
        }
    }

    #[test]
    fn rpt_not_applicable_below_p() {
        let mut sc = Scenario::new("rpt-na", vec![2, 3], EigenProfile::Constant);
        sc.estimators = vec![EstimatorKind::Rpt];
        sc.n_grid = vec![4];
        sc.reps = 4;
        sc.max_reps = 4;
        let table = risk_experiment::<f64>(&sc).unwrap();
        assert_eq!(table.rows[0].status, CellStatus::NotApplicable);
        assert!(table.rows[0].note.as_deref().unwrap_or("").contains("n >= p"));
    }

    #[test]
    fn mle_not_applicable_order3() {
        let mut sc = Scenario::new("mle-na", vec![2, 2, 2], EigenProfile::Constant);
        sc.estimators = vec![EstimatorKind::Pt, EstimatorKind::Mle];
        sc.n_grid = vec![5];
        sc.reps = 8;
        sc.max_reps = 8;
        let table = risk_experiment::<f64>(&sc).unwrap();
        let mle = table.find(EstimatorKind::Mle, 5).unwrap();
        assert_eq!(mle.status, CellStatus::NotApplicable);
        let pt = table.find(EstimatorKind::Pt, 5).unwrap();
        assert_eq!(pt.status, CellStatus::Ok);
    }

    #[test]
    fn orthogonal_invariance_of_risk() {
        let mut base = Scenario::new("plain", vec![2, 3], EigenProfile::Linear);
        base.estimators = vec![EstimatorKind::Pt];
        base.n_grid = vec![20];
        base.reps = 3000;
        base.max_reps = 3000;
        base.seed = 5;
        let t1 = risk_experiment::<f64>(&base).unwrap();

        let mut rotated = base.clone();
        rotated.name = "rotated".into();
        rotated.orthogonal_conjugation_seed = Some(123);
        let t2 = risk_experiment::<f64>(&rotated).unwrap();

        let (a, b) = (&t1.rows[0], &t2.rows[0]);
        let gap = (a.mean_loss - b.mean_loss).abs();
        let tol = 3.0 * (a.mc_se.powi(2) + b.mc_se.powi(2)).sqrt();
        assert!(gap <= tol, "risk changed under rotation: {gap} > {tol}");
    }

    #[test]
    fn factorized_and_materialized_pt_agree() {
        // same seed, PT-only (factorized) vs PT+MLE (materialized draws):
        // the PT loss per replicate must be identical either way
        let mut a = Scenario::new("a", vec![2, 2], EigenProfile::Linear);
        a.estimators = vec![EstimatorKind::Pt];
        a.n_grid = vec![6];
        a.reps = 64;
        a.max_reps = 64;
        a.seed = 31;
        let mut b = a.clone();
        b.estimators = vec![EstimatorKind::Pt, EstimatorKind::Mle];
        let ta = risk_experiment::<f64>(&a).unwrap();
        let tb = risk_experiment::<f64>(&b).unwrap();
        let pa = ta.find(EstimatorKind::Pt, 6).unwrap();
        let pb = tb.find(EstimatorKind::Pt, 6).unwrap();
        assert!((pa.mean_loss - pb.mean_loss).abs() < 1e-12);
    }

    #[test]
    fn rate_check_k3_decreases_and_k2_flat() {
        let cfg = RateConfig {
            order: 3,
            m_grid: vec![2, 4, 8],
            n: 1,
            profile: EigenProfile::Constant,
            reps: 160,
            seed: 7,
        };
        let pts = convergence_rate_check::<f64>(&cfg).unwrap();
        assert!(pts[0].median_rel_err > pts[1].median_rel_err);
        assert!(pts[1].median_rel_err > pts[2].median_rel_err);
        // log-log slope of empirical vs predicted within 1 +- 0.2
        let xs: Vec<f64> = pts.iter().map(|p| p.predicted_rate.ln()).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.median_rel_err.ln()).collect();
        let xm = xs.iter().sum::<f64>() / xs.len() as f64;
        let ym = ys.iter().sum::<f64>() / ys.len() as f64;
        let sxx: f64 = xs.iter().map(|x| (x - xm).powi(2)).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
        let slope = sxy / sxx;
        assert!(
            (slope - 1.0).abs() <= 0.2,
            "log-log slope {slope} outside 1 +- 0.2"
        );

        let cfg2 = RateConfig {
            order: 2,
            m_grid: vec![4, 8, 16],
            n: 1,
            profile: EigenProfile::Constant,
            reps: 160,
            seed: 8,
        };
        let pts2 = convergence_rate_check::<f64>(&cfg2).unwrap();
        let ratio = pts2[0].median_rel_err / pts2[2].median_rel_err;
        assert!(
            (0.7..1.4).contains(&ratio),
            "k=2 constant-profile error not flat: ratio {ratio}"
        );
        // predicted rate is exactly flat in m for k=2 constant
        assert!((pts2[0].predicted_rate - pts2[2].predicted_rate).abs() < 1e-12);
    }

    #[test]
    fn rate_check_exponential_no_decay() {
        let cfg = RateConfig {
            order: 2,
            m_grid: vec![5, 10, 20],
            n: 1,
            profile: EigenProfile::Exponential,
            reps: 200,
            seed: 9,
        };
        let pts = convergence_rate_check::<f64>(&cfg).unwrap();
        let ratio = pts[0].median_rel_err / pts[2].median_rel_err;
        assert!(
            (0.6..1.7).contains(&ratio),
            "exponential profile should not decay: ratio {ratio}"
        );
    }
}
