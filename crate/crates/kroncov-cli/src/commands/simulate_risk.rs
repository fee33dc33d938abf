use std::path::Path;

use crate::config::{load_config_text, RiskConfig};
use crate::io::{risk_table_csv, risk_table_human};
use crate::Failure;

use kroncov::simulation::{risk_experiment, RiskTable};

pub fn run(
    config: &str,
    seed_override: Option<u64>,
    out: &Path,
    write_csv: bool,
    write_json: bool,
) -> Result<(), Failure> {
    let text = load_config_text(config).map_err(Failure::Config)?;
    let cfg = RiskConfig::parse(&text).map_err(Failure::Config)?;
    let scenarios = cfg.scenarios(seed_override).map_err(Failure::Config)?;

    let mut tables: Vec<RiskTable> = Vec::with_capacity(scenarios.len());
    for sc in &scenarios {
        let table = risk_experiment::<f64>(sc).map_err(super::lib_failure)?;
        tables.push(table);
    }

    print!("{}", risk_table_human(&tables));

    if write_csv {
        let path = out.join("risk.csv");
        std::fs::write(&path, risk_table_csv(&tables))
            .map_err(|e| Failure::Data(anyhow::anyhow!("writing {}: {e}", path.display())))?;
        println!("wrote {}", path.display());
    }
    if write_json {
        let path = out.join("risk.json");
        let json = serde_json::to_string_pretty(&tables)
            .map_err(|e| Failure::Data(anyhow::anyhow!("serializing risk table: {e}")))?;
        std::fs::write(&path, json)
            .map_err(|e| Failure::Data(anyhow::anyhow!("writing {}: {e}", path.display())))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
