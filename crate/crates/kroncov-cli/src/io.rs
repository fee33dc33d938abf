//! Flat-file formats: the tensor input format and the CSV/JSON table
//! emitters and readers. One text format for tensors (header plus flattened
//! values in the fixed mode-1-slowest linearization) keeps fixtures diffable.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context};

use kroncov::linalg::kron::ModeDims;
use kroncov::simulation::{CellStatus, RiskRow, RiskTable};

/// Parsed tensor file: dims, flattened values, optional mask.
#[derive(Debug, Clone)]
pub struct TensorFile {
    pub dims: ModeDims,
    pub values: Vec<f64>,
    pub mask: Option<Vec<bool>>,
}

/// Reads the tensor format: first line `dims=p1xp2x...`, then one value per
/// line (optionally `value,mask` with mask in {0, 1, true, false}).
pub fn read_tensor_file(path: &Path) -> anyhow::Result<TensorFile> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading tensor file {}", path.display()))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().unwrap_or("");
    let dims_part = header
        .trim()
        .strip_prefix("dims=")
        .with_context(|| format!("malformed header '{header}': expected dims=p1xp2x..."))?;
    let dims: Vec<usize> = dims_part
        .split('x')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .with_context(|| format!("malformed header '{header}': bad dimension '{s}'"))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let dims = ModeDims::new(dims).map_err(|e| anyhow::anyhow!("{e}"))?;
    let p = dims.product();

    let mut values = Vec::with_capacity(p);
    let mut mask: Vec<bool> = Vec::new();
    let mut has_mask = false;
    for (lineno, line) in lines.enumerate() {
        let mut parts = line.trim().split(',');
        let v = parts
            .next()
            .unwrap_or("")
            .trim()
            .parse::<f64>()
            .with_context(|| format!("line {}: bad value '{line}'", lineno + 2))?;
        values.push(v);
        match parts.next() {
            Some(m) => {
                has_mask = true;
                let m = m.trim();
                let b = matches!(m, "1" | "true" | "TRUE" | "True");
                if !b && !matches!(m, "0" | "false" | "FALSE" | "False") {
                    bail!("line {}: bad mask entry '{m}'", lineno + 2);
                }
                mask.push(b);
            }
            None => mask.push(true),
        }
        if parts.next().is_some() {
            bail!("line {}: too many columns", lineno + 2);
        }
    }
    if values.len() != p {
        bail!(
            "tensor file has {} values but dims {} require {}",
            values.len(),
            dims.label(),
            p
        );
    }
    Ok(TensorFile {
        dims,
        values,
        mask: has_mask.then_some(mask),
    })
}

/// Writes a matrix as plain CSV rows.
pub fn write_matrix_csv(path: &Path, rows: usize, get: impl Fn(usize, usize) -> f64, cols: usize) -> anyhow::Result<()> {
    let mut out = String::new();
    for i in 0..rows {
        for j in 0..cols {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", get(i, j));
        }
        out.push('\n');
    }
    std::fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

fn fmt_opt(x: f64) -> String {
    if x.is_nan() {
        "NA".into()
    } else {
        format!("{x}")
    }
}

/// Risk table CSV with the fixed header
/// `estimator,n,k,dims,profile,mean_loss,mc_se,reps`.
pub fn risk_table_csv(tables: &[RiskTable]) -> String {
    let mut out = String::from("estimator,n,k,dims,profile,mean_loss,mc_se,reps\n");
    for table in tables {
        for r in &table.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.estimator.label(),
                r.n,
                r.k,
                r.dims,
                r.profile,
                fmt_opt(r.mean_loss),
                fmt_opt(r.mc_se),
                r.reps_used
            );
        }
    }
    out
}

/// Parses the risk CSV back into rows (round-trip counterpart of
/// [`risk_table_csv`]).
#[cfg_attr(not(test), allow(dead_code))]
pub fn parse_risk_csv(text: &str) -> anyhow::Result<Vec<RiskRow>> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if header != "estimator,n,k,dims,profile,mean_loss,mc_se,reps" {
        bail!("unexpected risk CSV header '{header}'");
    }
    let mut rows = Vec::new();
    for line in lines.filter(|l| !l.trim().is_empty()) {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 8 {
            bail!("bad risk CSV row '{line}'");
        }
        let num = |s: &str| -> anyhow::Result<f64> {
            if s == "NA" {
                Ok(f64::NAN)
            } else {
                s.parse::<f64>().with_context(|| format!("bad number '{s}'"))
            }
        };
        let estimator = match f[0] {
            "PT" => kroncov::simulation::EstimatorKind::Pt,
            "MLE" => kroncov::simulation::EstimatorKind::Mle,
            "RPT" => kroncov::simulation::EstimatorKind::Rpt,
            other => bail!("unknown estimator '{other}'"),
        };
        let mean_loss = num(f[5])?;
        rows.push(RiskRow {
            estimator,
            n: f[1].parse()?,
            k: f[2].parse()?,
            dims: f[3].to_string(),
            profile: f[4].to_string(),
            mean_loss,
            mc_se: num(f[6])?,
            reps_used: f[7].parse()?,
            mean_rel_err: f64::NAN,
            rel_err_se: f64::NAN,
            failures: 0,
            status: if mean_loss.is_nan() {
                CellStatus::NotApplicable
            } else {
                CellStatus::Ok
            },
            note: None,
        });
    }
    Ok(rows)
}

/// Aligned human-readable table for stdout.
pub fn risk_table_human(tables: &[RiskTable]) -> String {
    let mut out = String::new();
    for table in tables {
        let _ = writeln!(out, "scenario {}", table.scenario);
        let _ = writeln!(
            out,
            "  {:<4} {:>6} {:>3} {:<12} {:<14} {:>12} {:>10} {:>7}",
            "est", "n", "k", "dims", "profile", "mean_loss", "mc_se", "reps"
        );
        for r in &table.rows {
            let _ = writeln!(
                out,
                "  {:<4} {:>6} {:>3} {:<12} {:<14} {:>12} {:>10} {:>7}{}",
                r.estimator.label(),
                r.n,
                r.k,
                r.dims,
                r.profile,
                if r.mean_loss.is_nan() {
                    "NA".to_string()
                } else {
                    format!("{:.4}", r.mean_loss)
                },
                if r.mc_se.is_nan() {
                    "NA".to_string()
                } else {
                    format!("{:.4}", r.mc_se)
                },
                r.reps_used,
                r.note
                    .as_ref()
                    .map(|n| format!("  ({n})"))
                    .unwrap_or_default()
            );
        }
    }
    out
}
