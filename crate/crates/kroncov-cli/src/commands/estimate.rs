use std::path::Path;

use clap::ValueEnum;
use serde::Serialize;

use crate::io::{read_tensor_file, write_matrix_csv, TensorFile};
use crate::Failure;

use kroncov::geometry::orthog_param;
use kroncov::linalg::kron::{KroneckerCov, ModeDims};
use kroncov::linalg::sym::SymMatrix;
use kroncov::linalg::wishart::SampleCov;
use kroncov::mle::{mle_flip_flop, MleConfig};
use kroncov::ptrace::masked::{masked_pt_estimator, MaskedTensor};
use kroncov::ptrace::{pt_estimator, rpt_estimator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimatorArg {
    Pt,
    Mle,
    Rpt,
    MaskedPt,
}

#[derive(Serialize)]
struct EstimateSummary {
    estimator: String,
    dims: Vec<usize>,
    n: u64,
    /// Orthogonal-parameterization log-scale, when factors are SPD.
    c: Option<f64>,
    factors: Vec<Vec<Vec<f64>>>,
    warnings: Vec<String>,
}

fn sym_to_rows(m: &SymMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.dim())
        .map(|i| (0..m.dim()).map(|j| m.get(i, j)).collect())
        .collect()
}

fn correlation(m: &SymMatrix<f64>) -> SymMatrix<f64> {
    let d: Vec<f64> = m.diagonal_entries();
    SymMatrix::from_fn_upper(m.dim(), |i, j| m.get(i, j) / (d[i] * d[j]).sqrt())
}

/// Builds the sample covariance from one tensor or a directory of
/// per-replicate tensors.
fn load_sample(data: &Path) -> Result<(TensorFile, Option<SampleCov<f64>>, u64), Failure> {
    if data.is_dir() {
        let mut paths: Vec<_> = std::fs::read_dir(data)
            .map_err(|e| Failure::Data(anyhow::anyhow!("reading {}: {e}", data.display())))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file())
            .collect();
        paths.sort();
        if paths.is_empty() {
            return Err(Failure::Data(anyhow::anyhow!(
                "directory {} has no tensor files",
                data.display()
            )));
        }
        let first = read_tensor_file(&paths[0]).map_err(Failure::Data)?;
        if first.mask.is_some() {
            return Err(Failure::Data(anyhow::anyhow!(
                "mask columns are not supported for replicate directories"
            )));
        }
        let p = first.dims.product();
        let mut acc = SymMatrix::<f64>::zeros(p);
        let mut add_outer = |vals: &[f64]| {
            for i in 0..p {
                for j in i..p {
                    let v = acc.get(i, j) + vals[i] * vals[j];
                    acc.set_sym(i, j, v);
                }
            }
        };
        add_outer(&first.values);
        for path in &paths[1..] {
            let t = read_tensor_file(path).map_err(Failure::Data)?;
            if t.dims != first.dims {
                return Err(Failure::Data(anyhow::anyhow!(
                    "{} has dims {} but {} has {}",
                    path.display(),
                    t.dims.label(),
                    paths[0].display(),
                    first.dims.label()
                )));
            }
            add_outer(&t.values);
        }
        let n = paths.len() as u64;
        let s = SampleCov::from_outer_products(acc.scale(1.0 / n as f64), first.dims.clone(), n);
        Ok((first, Some(s), n))
    } else {
        let t = read_tensor_file(data).map_err(Failure::Data)?;
        let p = t.dims.product();
        let fully_observed = t.mask.as_ref().is_none_or(|m| m.iter().all(|&b| b));
        let sample = if fully_observed {
            let mut acc = SymMatrix::<f64>::zeros(p);
            for i in 0..p {
                for j in i..p {
                    acc.set_sym(i, j, t.values[i] * t.values[j]);
                }
            }
            Some(SampleCov::from_outer_products(acc, t.dims.clone(), 1))
        } else {
            None
        };
        Ok((t, sample, 1))
    }
}

pub fn run(
    data: &Path,
    estimator: EstimatorArg,
    materialize_cap: usize,
    out: &Path,
) -> Result<(), Failure> {
    let (tensor, sample, n) = load_sample(data)?;
    let dims = tensor.dims.clone();
    let mut warnings: Vec<String> = Vec::new();

    // factor estimates: PT-style estimators yield SPD factors; the masked
    // path yields unit-trace symmetric factors
    let (label, factors, kron): (&str, Vec<SymMatrix<f64>>, Option<KroneckerCov<f64>>) =
        match estimator {
            EstimatorArg::Pt => {
                let s = sample.as_ref().ok_or_else(|| {
                    Failure::Data(anyhow::anyhow!(
                        "tensor has masked entries; use --estimator masked-pt"
                    ))
                })?;
                let est = pt_estimator(s).map_err(super::lib_failure)?;
                let f = est.factors().iter().map(|f| f.sym().clone()).collect();
                ("pt", f, Some(est))
            }
            EstimatorArg::Mle => {
                let s = require_order2(&dims, sample.as_ref(), "mle")?;
                let fit = mle_flip_flop(s, &MleConfig::default()).map_err(super::lib_failure)?;
                if let Some(w) = &fit.existence_warning {
                    warnings.push(w.clone());
                }
                if !fit.converged {
                    warnings.push(format!(
                        "flip-flop stopped at residual {} after {} sweeps",
                        fit.final_residual, fit.iterations
                    ));
                }
                let f = fit
                    .estimate
                    .factors()
                    .iter()
                    .map(|f| f.sym().clone())
                    .collect();
                ("mle", f, Some(fit.estimate))
            }
            EstimatorArg::Rpt => {
                let s = require_order2(&dims, sample.as_ref(), "rpt")?;
                let est = rpt_estimator(s).map_err(super::lib_failure)?;
                let f = est.factors().iter().map(|f| f.sym().clone()).collect();
                ("rpt", f, Some(est))
            }
            EstimatorArg::MaskedPt => {
                let masked = match &tensor.mask {
                    Some(mask) => MaskedTensor::new(dims.clone(), tensor.values.clone(), mask.clone()),
                    None => MaskedTensor::with_diagonal_masked(dims.clone(), tensor.values.clone()),
                }
                .map_err(super::lib_failure)?;
                let r = masked_pt_estimator(&masked).map_err(super::lib_failure)?;
                for mode in &r.indefinite_modes {
                    warnings.push(format!("mode {mode} factor estimate is indefinite"));
                }
                ("masked-pt", r.factors, None)
            }
        };

    let _ = materialize_cap;

    // orthogonal coordinates when the factors are SPD
    let c = match &kron {
        Some(kc) => {
            let op = orthog_param(kc).map_err(super::lib_failure)?;
            for (i, f) in op.tilde_factors.iter().enumerate() {
                let path = out.join(format!("factor_{}_unitdet.csv", i + 1));
                write_matrix_csv(&path, f.dim(), |r, col| f.get(r, col), f.dim())
                    .map_err(Failure::Data)?;
            }
            let scale_path = out.join("scale.csv");
            std::fs::write(&scale_path, format!("c,{}\n", op.c))
                .map_err(|e| Failure::Data(anyhow::anyhow!("writing scale.csv: {e}")))?;
            Some(op.c)
        }
        None => None,
    };

    for (i, f) in factors.iter().enumerate() {
        let path = out.join(format!("factor_{}.csv", i + 1));
        write_matrix_csv(&path, f.dim(), |r, c| f.get(r, c), f.dim()).map_err(Failure::Data)?;
        let corr = correlation(f);
        let path = out.join(format!("factor_{}_corr.csv", i + 1));
        write_matrix_csv(&path, corr.dim(), |r, c| corr.get(r, c), corr.dim())
            .map_err(Failure::Data)?;
    }

    let summary = EstimateSummary {
        estimator: label.to_string(),
        dims: dims.dims().to_vec(),
        n,
        c,
        factors: factors.iter().map(sym_to_rows).collect(),
        warnings: warnings.clone(),
    };
    let json = serde_json::to_string_pretty(&summary)
        .map_err(|e| Failure::Data(anyhow::anyhow!("serializing summary: {e}")))?;
    std::fs::write(out.join("estimate.json"), json)
        .map_err(|e| Failure::Data(anyhow::anyhow!("writing estimate.json: {e}")))?;

    println!(
        "estimated {} factors for dims {} from n = {n} sample(s)",
        label,
        dims.label()
    );
    for w in &warnings {
        println!("warning: {w}");
    }
    println!("wrote factor files to {}", out.display());
    Ok(())
}

fn require_order2<'a>(
    dims: &ModeDims,
    sample: Option<&'a SampleCov<f64>>,
    est: &str,
) -> Result<&'a SampleCov<f64>, Failure> {
    if dims.order() != 2 {
        return Err(Failure::Data(anyhow::anyhow!(
            "estimator '{est}' requires an order-2 tensor, got order {}",
            dims.order()
        )));
    }
    sample.ok_or_else(|| {
        Failure::Data(anyhow::anyhow!(
            "tensor has masked entries; estimator '{est}' needs full observation"
        ))
    })
}
