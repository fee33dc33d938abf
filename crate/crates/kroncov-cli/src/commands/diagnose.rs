use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::config::{load_config_text, DiagnoseConfig};
use crate::Failure;

use kroncov::geometry::{avar_ratio_exact_capped, avar_ratio_lower_bound, cos_sq_angle};
use kroncov::linalg::spd::SpdMatrix;

#[derive(Serialize)]
struct DiagnoseRow {
    name: String,
    /// Worst-case asymptotic variance ratio from the principal angle;
    /// omitted when the product dimension exceeds the materialization cap.
    exact_ratio: Option<f64>,
    lower_bound: f64,
    cos_sq_1: f64,
    cos_sq_2: f64,
}

pub fn run(
    config: &str,
    out: &Path,
    write_csv: bool,
    write_json: bool,
) -> Result<(), Failure> {
    let text = load_config_text(config).map_err(Failure::Config)?;
    let cfg = DiagnoseConfig::parse(&text).map_err(Failure::Config)?;

    let mut rows = Vec::with_capacity(cfg.spectra.len());
    for spec in &cfg.spectra {
        let (lam, gam) = spec.spectra().map_err(Failure::Config)?;
        if lam.iter().chain(gam.iter()).any(|&x| x <= 0.0) {
            return Err(Failure::Data(anyhow::anyhow!(
                "spectrum '{}' has nonpositive eigenvalues",
                spec.name
            )));
        }
        let cos_sq_1 = cos_sq_angle(&lam).map_err(super::lib_failure)?;
        let cos_sq_2 = cos_sq_angle(&gam).map_err(super::lib_failure)?;
        let lower_bound = avar_ratio_lower_bound(&lam, &gam).map_err(super::lib_failure)?;
        let exact_ratio = if lam.len() * gam.len() <= cfg.materialize_cap {
            let s1 = SpdMatrix::diagonal(&lam).map_err(super::lib_failure)?;
            let s2 = SpdMatrix::diagonal(&gam).map_err(super::lib_failure)?;
            Some(
                avar_ratio_exact_capped(&s1, &s2, cfg.materialize_cap)
                    .map_err(super::lib_failure)?,
            )
        } else {
            None
        };
        rows.push(DiagnoseRow {
            name: spec.name.clone(),
            exact_ratio,
            lower_bound,
            cos_sq_1,
            cos_sq_2,
        });
    }

    let mut human = String::new();
    let _ = writeln!(
        human,
        "{:<28} {:>12} {:>12} {:>10} {:>10}",
        "spectrum", "exact_ratio", "lower_bound", "cos_sq_1", "cos_sq_2"
    );
    for r in &rows {
        let _ = writeln!(
            human,
            "{:<28} {:>12} {:>12.6} {:>10.6} {:>10.6}",
            r.name,
            r.exact_ratio
                .map(|v| format!("{v:.6}"))
                .unwrap_or_else(|| "NA".into()),
            r.lower_bound,
            r.cos_sq_1,
            r.cos_sq_2
        );
    }
    print!("{human}");

    if write_csv {
        let mut csv = String::from("name,exact_ratio,lower_bound,cos_sq_1,cos_sq_2\n");
        for r in &rows {
            let _ = writeln!(
                csv,
                "{},{},{},{},{}",
                r.name,
                r.exact_ratio.map(|v| v.to_string()).unwrap_or_else(|| "NA".into()),
                r.lower_bound,
                r.cos_sq_1,
                r.cos_sq_2
            );
        }
        let path = out.join("diagnose.csv");
        std::fs::write(&path, csv)
            .map_err(|e| Failure::Data(anyhow::anyhow!("writing {}: {e}", path.display())))?;
        println!("wrote {}", path.display());
    }
    if write_json {
        let path = out.join("diagnose.json");
        let json = serde_json::to_string_pretty(&rows)
            .map_err(|e| Failure::Data(anyhow::anyhow!("serializing: {e}")))?;
        std::fs::write(&path, json)
            .map_err(|e| Failure::Data(anyhow::anyhow!("writing {}: {e}", path.display())))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
