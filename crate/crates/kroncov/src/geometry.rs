//! Fisher-geometry diagnostics for Kronecker covariances: tangent and
//! auxiliary-space bases, principal angles under the information metric,
//! asymptotic variance ratios and their eigenvalue lower bounds, and the
//! orthogonal (log-scale, unit-determinant) parameterization.

use crate::error::{Error, Result};
use crate::linalg::eigen::sym_eigen;
use crate::linalg::kron::{kron_matrix, kron_sym, KroneckerCov, ModeDims};
use crate::linalg::matrix::Matrix;
use crate::linalg::spd::{spd_power, FimMetric, SpdMatrix};
use crate::linalg::sym::SymMatrix;
use crate::scalar::{t, t_usize, Scalar};

/// Which subspace a tangent basis spans.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisLabel {
    /// Tangent space of the Kronecker submanifold at `Sigma_1 (x) Sigma_2`.
    KronTangent,
    /// Tangent space of the PT auxiliary space: `tr_i(S) = 0` for both modes.
    PtAux,
    /// Tangent space of the MLE auxiliary space (decorrelated condition).
    MleAux,
}

/// A list of linearly independent symmetric matrices spanning a subspace of
/// `Sym(p)`.
#[derive(Debug, Clone)]
pub struct TangentBasis<T> {
    pub label: BasisLabel,
    pub dims: ModeDims,
    pub vectors: Vec<SymMatrix<T>>,
}

impl<T: Scalar> TangentBasis<T> {
    pub fn ambient_dim(&self) -> usize {
        let p = self.dims.product();
        p * (p + 1) / 2
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// Symmetric basis of `Sym(q)`: `E_ii` and `E_ij + E_ji` for `i < j`.
fn sym_basis<T: Scalar>(q: usize) -> Vec<SymMatrix<T>> {
    let mut out = Vec::with_capacity(q * (q + 1) / 2);
    for i in 0..q {
        for j in i..q {
            let mut h = SymMatrix::zeros(q);
            h.set_sym(i, j, T::one());
            out.push(h);
        }
    }
    out
}

/// Traceless symmetric basis: `E_ij + E_ji` (i < j) and `E_ii - E_{i+1,i+1}`.
fn traceless_sym_basis<T: Scalar>(q: usize) -> Vec<SymMatrix<T>> {
    let mut out = Vec::new();
    for i in 0..q {
        for j in (i + 1)..q {
            let mut h = SymMatrix::zeros(q);
            h.set_sym(i, j, T::one());
            out.push(h);
        }
    }
    for i in 0..q.saturating_sub(1) {
        let mut h = SymMatrix::zeros(q);
        h.set_sym(i, i, T::one());
        h.set_sym(i + 1, i + 1, -T::one());
        out.push(h);
    }
    out
}

/// Antisymmetric basis `E_ij - E_ji` (i < j), as general matrices.
fn antisym_basis<T: Scalar>(q: usize) -> Vec<Matrix<T>> {
    let mut out = Vec::new();
    for i in 0..q {
        for j in (i + 1)..q {
            let mut m = Matrix::zeros(q, q);
            m[(i, j)] = T::one();
            m[(j, i)] = -T::one();
            out.push(m);
        }
    }
    out
}

/// Basis of the Kronecker tangent space
/// `span { H1 (x) Sigma_2, Sigma_1 (x) H2 }` at `Sigma_1 (x) Sigma_2`,
/// with the one-dimensional overlap (`Sigma_1 (x) Sigma_2` itself) removed so
/// the count is exactly `C(p1+1,2) + C(p2+1,2) - 1`.
pub fn kron_tangent_basis<T: Scalar>(
    sigma1: &SpdMatrix<T>,
    sigma2: &SpdMatrix<T>,
) -> TangentBasis<T> {
    let (p1, p2) = (sigma1.dim(), sigma2.dim());
    let mut vectors = Vec::new();
    for h1 in sym_basis::<T>(p1) {
        vectors.push(kron_sym(&h1, sigma2.sym()));
    }
    // Gram-Schmidt (trace inner product) the mode-2 sym basis against
    // Sigma_2, so the Sigma_1 (x) Sigma_2 direction enters only once.
    let mut ortho: Vec<SymMatrix<T>> = vec![sigma2.sym().scale(T::one() / sigma2.sym().frobenius_norm())];
    for e in sym_basis::<T>(p2) {
        let mut v = e.clone();
        for b in &ortho {
            let c = v.inner(b);
            v.axpy(-c, b);
        }
        let norm = v.frobenius_norm();
        if norm > t(1e-10) {
            let v = v.scale(T::one() / norm);
            ortho.push(v.clone());
            vectors.push(kron_sym(sigma1.sym(), &v));
        }
    }
    TangentBasis {
        label: BasisLabel::KronTangent,
        dims: ModeDims::new(vec![p1, p2]).expect("order 2"),
        vectors,
    }
}

/// Basis of the PT auxiliary tangent space `{S : tr_1(S) = tr_2(S) = 0}`.
///
/// The null space decomposes as
/// `traceless Sym(p1) (x) traceless Sym(p2)  (+)  Asym(p1) (x) Asym(p2)`,
/// both of which consist of symmetric matrices with vanishing partial traces.
pub fn pt_aux_basis<T: Scalar>(dims: &ModeDims) -> Result<TangentBasis<T>> {
    if dims.order() != 2 {
        return Err(Error::InvalidArgument(
            "pt_aux_basis is defined for order-2 dims".into(),
        ));
    }
    let (p1, p2) = (dims.dim(0), dims.dim(1));
    let mut vectors = Vec::new();
    for a in traceless_sym_basis::<T>(p1) {
        for b in traceless_sym_basis::<T>(p2) {
            vectors.push(kron_sym(&a, &b));
        }
    }
    for ka in antisym_basis::<T>(p1) {
        for kb in antisym_basis::<T>(p2) {
            let prod = kron_matrix(&ka, &kb);
            vectors.push(SymMatrix::symmetrize(&prod)?);
        }
    }
    Ok(TangentBasis {
        label: BasisLabel::PtAux,
        dims: dims.clone(),
        vectors,
    })
}

/// Basis of the MLE auxiliary tangent space
/// `{S : tr_i(Sigma^{-1} S) = 0}`, obtained by pushing the PT auxiliary
/// basis through the congruence with `Sigma^{1/2}`.
pub fn mle_aux_basis<T: Scalar>(
    sigma1: &SpdMatrix<T>,
    sigma2: &SpdMatrix<T>,
) -> Result<TangentBasis<T>> {
    let dims = ModeDims::new(vec![sigma1.dim(), sigma2.dim()])?;
    let base = pt_aux_basis::<T>(&dims)?;
    let half = kron_matrix(
        &spd_power(sigma1, t(0.5))?.sym().to_matrix(),
        &spd_power(sigma2, t(0.5))?.sym().to_matrix(),
    );
    let vectors = base
        .vectors
        .iter()
        .map(|v| v.congruence(&half))
        .collect();
    Ok(TangentBasis {
        label: BasisLabel::MleAux,
        dims,
        vectors,
    })
}

/// Solves `L X = B` for lower-triangular `L`.
fn forward_solve<T: Scalar>(l: &Matrix<T>, b: &Matrix<T>) -> Matrix<T> {
    let n = l.rows();
    let m = b.cols();
    let mut x = b.clone();
    for col in 0..m {
        for i in 0..n {
            let mut v = x[(i, col)];
            for k in 0..i {
                v -= l[(i, k)] * x[(k, col)];
            }
            x[(i, col)] = v / l[(i, i)];
        }
    }
    x
}

/// Principal angles between the spans of `u` and `v` with respect to the
/// Fisher information metric at `sigma`, ascending, in `[0, pi/2]`.
///
/// Both bases are whitened with the Cholesky factor of their FIM Gram
/// matrices; the angles are the arccosines of the singular values of the
/// whitened cross-Gram, clamped to `[0, 1]` against rounding.
pub fn principal_angles<T: Scalar>(
    u: &TangentBasis<T>,
    v: &TangentBasis<T>,
    sigma: &SpdMatrix<T>,
) -> Result<Vec<T>> {
    if u.dims != v.dims {
        return Err(Error::DimMismatch(format!(
            "bases over different dims: {} vs {}",
            u.dims.label(),
            v.dims.label()
        )));
    }
    if sigma.dim() != u.dims.product() {
        return Err(Error::DimMismatch(
            "metric base point does not match basis ambient dimension".into(),
        ));
    }
    let metric = FimMetric::new(sigma);
    let gram = |basis: &TangentBasis<T>| -> Result<SpdMatrix<T>> {
        let n = basis.len();
        let g = SymMatrix::from_fn_upper(n, |a, b| metric.inner(&basis.vectors[a], &basis.vectors[b]));
        SpdMatrix::new(g).map_err(|_| {
            Error::NotPositiveDefinite("basis is rank deficient under the FIM".into())
        })
    };
    let gu = gram(u)?;
    let gv = gram(v)?;
    let cross = Matrix::from_fn(u.len(), v.len(), |a, b| {
        metric.inner(&u.vectors[a], &v.vectors[b])
    });
    // C = L_u^{-1} cross L_v^{-T}
    let x = forward_solve(gu.chol_lower(), &cross);
    let c = forward_solve(gv.chol_lower(), &x.transpose()).transpose();

    // singular values from the smaller-side Gram
    let small = if u.len() <= v.len() {
        c.matmul(&c.transpose())
    } else {
        c.transpose().matmul(&c)
    };
    let eig = sym_eigen(&SymMatrix::symmetrize(&small)?)?;
    let angles: Vec<T> = eig
        .values
        .iter()
        .map(|&l| {
            let s = l.max(T::zero()).sqrt().min(T::one());
            s.acos()
        })
        .collect();
    Ok(angles)
}

/// Exact worst-case asymptotic variance ratio of the PT estimator relative to
/// the MLE at `Sigma_1 (x) Sigma_2`: `sin(theta)^{-2}` for the smallest
/// FIM principal angle between the PT auxiliary space and the Kronecker
/// tangent space.
pub fn avar_ratio_exact<T: Scalar>(sigma1: &SpdMatrix<T>, sigma2: &SpdMatrix<T>) -> Result<T> {
    avar_ratio_exact_capped(sigma1, sigma2, crate::linalg::kron::DEFAULT_MATERIALIZE_CAP)
}

pub fn avar_ratio_exact_capped<T: Scalar>(
    sigma1: &SpdMatrix<T>,
    sigma2: &SpdMatrix<T>,
    cap: usize,
) -> Result<T> {
    let kc = KroneckerCov::new(vec![sigma1.clone(), sigma2.clone()])?;
    let sigma = kc.materialize(cap)?;
    let u = kron_tangent_basis(sigma1, sigma2);
    let v = pt_aux_basis::<T>(kc.dims())?;
    let angles = principal_angles(&u, &v, &sigma)?;
    let theta_min = angles
        .first()
        .copied()
        .ok_or_else(|| Error::Degenerate("no principal angles".into()))?;
    let s = theta_min.sin();
    Ok(T::one() / (s * s))
}

/// Cosine-squared of the angle between an eigenvalue vector and the all-ones
/// vector: `(sum lambda)^2 / (p * sum lambda^2)`. Equals 1 iff constant.
pub fn cos_sq_angle<T: Scalar>(lambda: &[T]) -> Result<T> {
    if lambda.is_empty() {
        return Err(Error::InvalidArgument("empty eigenvalue vector".into()));
    }
    if lambda.iter().any(|&x| x <= T::zero()) {
        return Err(Error::InvalidArgument(
            "eigenvalues must be strictly positive".into(),
        ));
    }
    let sum = lambda.iter().copied().sum::<T>();
    let sum_sq = lambda.iter().map(|&x| x * x).sum::<T>();
    Ok(sum * sum / (t_usize::<T>(lambda.len()) * sum_sq))
}

/// Eigenvalue lower bound on the worst-case asymptotic variance ratio:
/// `max(cos^{-2}(angle(lambda, 1)), cos^{-2}(angle(gamma, 1)))`.
pub fn avar_ratio_lower_bound<T: Scalar>(lambda: &[T], gamma: &[T]) -> Result<T> {
    let c1 = cos_sq_angle(lambda)?;
    let c2 = cos_sq_angle(gamma)?;
    Ok((T::one() / c1).max(T::one() / c2))
}

/// Orthogonal coordinates of a Kronecker covariance: overall log-scale `c`
/// and unit-determinant factors, with
/// `product = e^c (x)_i tilde_factors_i`.
#[derive(Debug, Clone)]
pub struct OrthogParam<T> {
    pub c: T,
    pub tilde_factors: Vec<SpdMatrix<T>>,
}

/// Splits into the orthogonal parameterization.
pub fn orthog_param<T: Scalar>(kc: &KroneckerCov<T>) -> Result<OrthogParam<T>> {
    let p = kc.dims().product();
    let c = kc.log_det() / t_usize::<T>(p);
    let tilde_factors = kc
        .factors()
        .iter()
        .map(|f| {
            let s = (-f.log_det() / t_usize::<T>(f.dim())).exp();
            SpdMatrix::new(f.sym().scale(s))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OrthogParam { c, tilde_factors })
}

/// Rebuilds the covariance from orthogonal coordinates, folding `e^c` into
/// the first factor.
pub fn orthog_unparam<T: Scalar>(op: &OrthogParam<T>) -> Result<KroneckerCov<T>> {
    let mut factors = op.tilde_factors.clone();
    if factors.is_empty() {
        return Err(Error::InvalidArgument("no factors".into()));
    }
    let f0 = SpdMatrix::new(factors[0].sym().scale(op.c.exp()))?;
    factors[0] = f0;
    KroneckerCov::new(factors)
}

/// Numeric verification that the orthogonal parameterization splits the FIM
/// into blocks (order-2 case).
#[derive(Debug, Clone)]
pub struct FimOrthogonalityReport<T> {
    /// Largest cross-block FIM inner product; zero for a product metric.
    pub max_cross: T,
    /// Squared length of the unit scale direction; equals `p1 * p2`
    /// (reported without the metric's 1/2 so the constant is exact).
    pub scale_norm_sq: T,
    /// Largest relative gap in the block scalings
    /// `<H_i (x) tilde_j, ...>_Sigma = p_j <H_i, H_i>_{tilde_i}`.
    pub max_block_relation_err: T,
}

pub fn fim_orthogonality_check<T: Scalar>(kc: &KroneckerCov<T>) -> Result<FimOrthogonalityReport<T>> {
    if kc.order() != 2 {
        return Err(Error::InvalidArgument(
            "fim_orthogonality_check is defined for order-2 covariances".into(),
        ));
    }
    let sigma = kc.materialize(crate::linalg::kron::DEFAULT_MATERIALIZE_CAP)?;
    let metric = FimMetric::new(&sigma);
    let op = orthog_param(kc)?;
    let (t1, t2) = (&op.tilde_factors[0], &op.tilde_factors[1]);
    let (p1, p2) = (t1.dim(), t2.dim());
    let ec = op.c.exp();

    // tangent directions of the det-1 factor manifolds: tr(tilde^{-1} H) = 0
    let det_tangent = |tilde: &SpdMatrix<T>| -> Vec<SymMatrix<T>> {
        let inv = tilde.inverse();
        let q = tilde.dim();
        let qf = t_usize::<T>(q);
        sym_basis::<T>(q)
            .into_iter()
            .filter_map(|h| {
                let coef = inv.sym().inner(&h) / qf;
                let mut v = h;
                v.axpy(-coef, tilde.sym());
                if v.frobenius_norm() > t(1e-10) {
                    Some(v)
                } else {
                    None
                }
            })
            .collect()
    };
    let h1s = det_tangent(t1);
    let h2s = det_tangent(t2);

    let scale_dir = sigma.sym().clone();
    let block1: Vec<SymMatrix<T>> = h1s
        .iter()
        .map(|h| kron_sym(h, t2.sym()).scale(ec))
        .collect();
    let block2: Vec<SymMatrix<T>> = h2s
        .iter()
        .map(|h| kron_sym(t1.sym(), h).scale(ec))
        .collect();

    let mut max_cross = T::zero();
    for b in block1.iter().chain(block2.iter()) {
        max_cross = max_cross.max(metric.inner(&scale_dir, b).abs());
    }
    for b1 in &block1 {
        for b2 in &block2 {
            max_cross = max_cross.max(metric.inner(b1, b2).abs());
        }
    }

    let scale_norm_sq = metric.norm_sq(&scale_dir) * t(2.0);

    // block scalings: <B1_a, B1_b>_Sigma = p2 <H1_a, H1_b>_{tilde_1}
    let m1 = FimMetric::new(t1);
    let m2 = FimMetric::new(t2);
    let mut max_rel = T::zero();
    for (a, ha) in h1s.iter().enumerate() {
        for (b, hb) in h1s.iter().enumerate().skip(a) {
            let lhs = metric.inner(&block1[a], &block1[b]);
            let rhs = m1.inner(ha, hb) * t_usize::<T>(p2);
            let denom = rhs.abs().max(T::one());
            max_rel = max_rel.max((lhs - rhs).abs() / denom);
        }
    }
    for (a, ha) in h2s.iter().enumerate() {
        for (b, hb) in h2s.iter().enumerate().skip(a) {
            let lhs = metric.inner(&block2[a], &block2[b]);
            let rhs = m2.inner(ha, hb) * t_usize::<T>(p1);
            let denom = rhs.abs().max(T::one());
            max_rel = max_rel.max((lhs - rhs).abs() / denom);
        }
    }

    Ok(FimOrthogonalityReport {
        max_cross,
        scale_norm_sq,
        max_block_relation_err: max_rel,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ptrace::partial_trace_sym;
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
    fn tangent_dims_count() {
        let i1 = SpdMatrix::<f64>::identity(1);
        let b = kron_tangent_basis(&i1, &i1);
        assert_eq!(b.len(), 1);

        let i2 = SpdMatrix::<f64>::identity(2);
        let b = kron_tangent_basis(&i2, &i2);
        assert_eq!(b.len(), 3 + 3 - 1);

        let mut rng = Rng::seed_from_u64(70);
        let s1 = random_spd(2, &mut rng);
        let s2 = random_spd(3, &mut rng);
        let b = kron_tangent_basis(&s1, &s2);
        assert_eq!(b.len(), 3 + 6 - 1);
    }

    #[test]
    fn pt_aux_dims_and_vanishing_traces() {
        let dims = ModeDims::new(vec![2, 2]).unwrap();
        let b = pt_aux_basis::<f64>(&dims).unwrap();
        assert_eq!(b.len(), 10 - 5);
        let mut rng = Rng::seed_from_u64(71);
        // random element of the span
        let mut v = SymMatrix::zeros(4);
        for vec in &b.vectors {
            v.axpy(rng.standard_normal::<f64>(), vec);
        }
        for mode in 0..2 {
            let tr = partial_trace_sym(&v, &dims, mode).unwrap();
            assert!(tr.frobenius_norm() < 1e-12, "partial trace nonzero");
        }
        assert!(v.trace().abs() < 1e-12);

        let dims = ModeDims::new(vec![2, 3]).unwrap();
        let b = pt_aux_basis::<f64>(&dims).unwrap();
        assert_eq!(b.len(), 21 - 8);
    }

    #[test]
    fn mle_aux_decorrelated_traces_vanish() {
        let mut rng = Rng::seed_from_u64(72);
        let s1 = random_spd(2, &mut rng);
        let s2 = random_spd(3, &mut rng);
        let b = mle_aux_basis(&s1, &s2).unwrap();
        let kc = KroneckerCov::new(vec![s1, s2]).unwrap();
        let inv = kc.materialize(4096).unwrap().inverse();
        let dims = ModeDims::new(vec![2, 3]).unwrap();
        for v in &b.vectors {
            let prod = inv.sym().to_matrix().matmul(&v.to_matrix());
            // tr_i of a product of symmetric matrices need not be symmetric
            // entrywise, but its partial traces are; brute-force them
            for (mode, pj) in [(0usize, 2usize), (1, 3)] {
                let stride = dims.strides()[mode];
                for a in 0..pj {
                    for bidx in 0..pj {
                        let mut acc = 0.0;
                        for r in 0..6 {
                            let idx = (r / stride) % pj;
                            if idx != a {
                                continue;
                            }
                            let c = r - a * stride + bidx * stride;
                            acc += prod[(r, c)];
                        }
                        assert!(acc.abs() < 1e-9, "decorrelated trace {acc}");
                    }
                }
            }
        }
    }

    #[test]
    fn angles_self_and_orthogonal() {
        let mut rng = Rng::seed_from_u64(73);
        let s1 = random_spd(2, &mut rng);
        let s2 = random_spd(2, &mut rng);
        let kc = KroneckerCov::new(vec![s1.clone(), s2.clone()]).unwrap();
        let sigma = kc.materialize(4096).unwrap();
        let u = kron_tangent_basis(&s1, &s2);
        let angles = principal_angles(&u, &u, &sigma).unwrap();
        for &a in &angles {
            assert!(a.abs() < 1e-6, "self angle {a}");
        }
        // MLE aux is exactly FIM-orthogonal to the tangent space
        let v = mle_aux_basis(&s1, &s2).unwrap();
        let angles = principal_angles(&u, &v, &sigma).unwrap();
        for &a in &angles {
            assert!((a - std::f64::consts::FRAC_PI_2).abs() < 1e-6, "angle {a}");
        }
    }

    #[test]
    fn pt_efficient_at_identity() {
        let i2 = SpdMatrix::<f64>::identity(2);
        let kc = KroneckerCov::new(vec![i2.clone(), i2.clone()]).unwrap();
        let sigma = kc.materialize(4096).unwrap();
        let u = kron_tangent_basis(&i2, &i2);
        let v = pt_aux_basis::<f64>(kc.dims()).unwrap();
        let angles = principal_angles(&u, &v, &sigma).unwrap();
        assert!((angles[0] - std::f64::consts::FRAC_PI_2).abs() < 1e-8);
        let ratio = avar_ratio_exact(&i2, &i2).unwrap();
        assert!((ratio - 1.0).abs() < 1e-8);
    }

    #[test]
    fn exact_ratio_single_structured_factor_matches_bound() {
        // with Sigma_2 = I the exact ratio equals the eigenvalue bound
        let lam = [1.0, 2.0, 3.0];
        let s1 = SpdMatrix::diagonal(&lam).unwrap();
        let i3 = SpdMatrix::<f64>::identity(3);
        let exact = avar_ratio_exact(&s1, &i3).unwrap();
        let bound = avar_ratio_lower_bound(&lam, &[1.0, 1.0, 1.0]).unwrap();
        assert!((bound - 14.0 / 12.0).abs() < 1e-12);
        assert!((exact - bound).abs() < 1e-8, "exact {exact} vs bound {bound}");
    }

    #[test]
    fn exact_ratio_depends_only_on_eigenvalues() {
        let mut rng = Rng::seed_from_u64(74);
        let lam = [1.0, 0.4];
        let gam = [2.0, 0.7, 0.3];
        let d1 = SpdMatrix::diagonal(&lam).unwrap();
        let d2 = SpdMatrix::diagonal(&gam).unwrap();
        let base = avar_ratio_exact(&d1, &d2).unwrap();
        // conjugate by random orthogonal factors
        let u = sym_eigen(&SymMatrix::from_fn_upper(2, |_, _| rng.standard_normal::<f64>()))
            .unwrap()
            .vectors;
        let v = sym_eigen(&SymMatrix::from_fn_upper(3, |_, _| rng.standard_normal::<f64>()))
            .unwrap()
            .vectors;
        let c1 = SpdMatrix::new(d1.sym().congruence(&u)).unwrap();
        let c2 = SpdMatrix::new(d2.sym().congruence(&v)).unwrap();
        let rotated = avar_ratio_exact(&c1, &c2).unwrap();
        assert!(
            (base - rotated).abs() < 1e-6 * base,
            "ratio changed under rotation: {base} vs {rotated}"
        );
        // and always at or above the bound
        let bound = avar_ratio_lower_bound(&lam, &gam).unwrap();
        assert!(base >= bound - 1e-8);
    }

    #[test]
    fn lower_bound_spike_limit() {
        // lambda = (1, eps, ..., eps) of length p drives the bound to p
        for p in [3usize, 5] {
            let mut last = 0.0;
            for eps in [1e-2, 1e-3, 1e-4] {
                let mut lam = vec![eps; p];
                lam[0] = 1.0;
                let b = avar_ratio_lower_bound(&lam, &vec![1.0; p]).unwrap();
                assert!(b > last, "bound not increasing");
                last = b;
            }
            assert!(
                (last - p as f64).abs() < 0.01 * p as f64,
                "bound {last} far from limit {p}"
            );
        }
    }

    #[test]
    fn rank_deficient_basis_is_an_error() {
        let i2 = SpdMatrix::<f64>::identity(2);
        let kc = KroneckerCov::new(vec![i2.clone(), i2.clone()]).unwrap();
        let sigma = kc.materialize(4096).unwrap();
        let mut u = kron_tangent_basis(&i2, &i2);
        let dup = u.vectors[0].clone();
        u.vectors.push(dup);
        let v = pt_aux_basis::<f64>(kc.dims()).unwrap();
        assert!(matches!(
            principal_angles(&u, &v, &sigma),
            Err(crate::error::Error::NotPositiveDefinite(_))
        ));
    }

    #[test]
    fn cos_sq_angle_values() {
        assert!((cos_sq_angle::<f64>(&[2.0, 2.0, 2.0]).unwrap() - 1.0).abs() < 1e-14);
        // (1+2+3)^2 / (3 * 14) = 36/42
        assert!((cos_sq_angle::<f64>(&[1.0, 2.0, 3.0]).unwrap() - 36.0 / 42.0).abs() < 1e-14);
        assert!(cos_sq_angle(&[1.0, -1.0]).is_err());
        assert!(cos_sq_angle::<f64>(&[]).is_err());
    }

    #[test]
    fn cos_sq_spiked_closed_form() {
        // q entries a+b, m-q entries b:
        // cos^{-2} = (r a^2 + 2 r a b + b^2) / (r^2 a^2 + 2 r a b + b^2)
        for (m, q, a, b) in [(10usize, 3usize, 2.0, 1.0), (25, 5, 7.5, 0.5), (8, 8, 1.0, 2.0)] {
            let mut lam = vec![b; m];
            for l in lam.iter_mut().take(q) {
                *l = a + b;
            }
            let r = q as f64 / m as f64;
            let want_inv = (r * a * a + 2.0 * r * a * b + b * b)
                / (r * r * a * a + 2.0 * r * a * b + b * b);
            let got_inv = 1.0 / cos_sq_angle::<f64>(&lam).unwrap();
            assert!(
                (got_inv - want_inv).abs() < 1e-12,
                "spiked closed form: {got_inv} vs {want_inv}"
            );
        }
    }

    #[test]
    fn product_of_mode_cosines() {
        // cos(angle(lambda (x) gamma, 1)) = cos(angle(lambda,1)) cos(angle(gamma,1))
        let lam = [1.0, 2.0, 5.0];
        let gam = [0.5, 3.0];
        let mut prod = Vec::new();
        for &a in &lam {
            for &b in &gam {
                prod.push(a * b);
            }
        }
        let lhs = cos_sq_angle::<f64>(&prod).unwrap();
        let rhs = cos_sq_angle::<f64>(&lam).unwrap() * cos_sq_angle::<f64>(&gam).unwrap();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn orthog_param_round_trip_and_scale_invariance() {
        let i2 = SpdMatrix::<f64>::identity(2);
        let i3 = SpdMatrix::<f64>::identity(3);
        let kc = KroneckerCov::new(vec![
            SpdMatrix::new(i2.sym().scale(2.0)).unwrap(),
            i3.clone(),
        ])
        .unwrap();
        let op = orthog_param(&kc).unwrap();
        assert!((op.c - 2.0f64.ln()).abs() < 1e-12);
        assert!(op.tilde_factors[0].sym().sub(i2.sym()).frobenius_norm() < 1e-12);
        assert!(op.tilde_factors[1].sym().sub(i3.sym()).frobenius_norm() < 1e-12);

        let mut rng = Rng::seed_from_u64(75);
        let a = random_spd(2, &mut rng);
        let b = random_spd(3, &mut rng);
        let kc = KroneckerCov::new(vec![a.clone(), b.clone()]).unwrap();
        let op = orthog_param(&kc).unwrap();
        let back = orthog_unparam(&op).unwrap();
        let m1 = kc.materialize(4096).unwrap();
        let m2 = back.materialize(4096).unwrap();
        assert!(
            m1.sym().sub(m2.sym()).frobenius_norm() < 1e-10 * m1.sym().frobenius_norm()
        );
        for f in &op.tilde_factors {
            assert!(f.log_det().abs() < 1e-10);
        }
        // scale ambiguity: (c A, c^{-1} B) maps to the same coordinates
        let c = 3.0;
        let kc2 = KroneckerCov::new(vec![
            SpdMatrix::new(a.sym().scale(c)).unwrap(),
            SpdMatrix::new(b.sym().scale(1.0 / c)).unwrap(),
        ])
        .unwrap();
        let op2 = orthog_param(&kc2).unwrap();
        assert!((op.c - op2.c).abs() < 1e-10);
        for (f, g) in op.tilde_factors.iter().zip(&op2.tilde_factors) {
            assert!(f.sym().sub(g.sym()).frobenius_norm() < 1e-10);
        }
    }

    #[test]
    fn fim_orthogonality_identity_constants() {
        let kc = KroneckerCov::new(vec![
            SpdMatrix::<f64>::identity(2),
            SpdMatrix::identity(3),
        ])
        .unwrap();
        let rep = fim_orthogonality_check(&kc).unwrap();
        assert!(rep.max_cross <= 1e-10, "cross terms {}", rep.max_cross);
        assert!((rep.scale_norm_sq - 6.0).abs() < 1e-10);
        assert!(rep.max_block_relation_err < 1e-10);
    }

    #[test]
    fn fim_orthogonality_random_factors() {
        let mut rng = Rng::seed_from_u64(76);
        let kc = KroneckerCov::new(vec![random_spd(2, &mut rng), random_spd(3, &mut rng)])
            .unwrap();
        let rep = fim_orthogonality_check(&kc).unwrap();
        assert!(rep.max_cross <= 1e-8, "cross terms {}", rep.max_cross);
        assert!(
            rep.max_block_relation_err <= 1e-8,
            "block scaling gap {}",
            rep.max_block_relation_err
        );
        assert!((rep.scale_norm_sq - 6.0).abs() < 1e-8);
    }

}
