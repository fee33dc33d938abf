//! TOML configuration schemas. Unknown keys are rejected with the offending
//! key named (serde `deny_unknown_fields`), and every default is spelled out
//! here rather than scattered through the commands.

use std::path::Path;

use anyhow::{bail, Context};
use serde::Deserialize;

use kroncov::simulation::{EigenProfile, EstimatorKind, Scenario};

/// Shipped reproduction recipes, addressable by name through `--config`.
pub const PRESETS: &[(&str, &str)] = &[
    ("table-large-n", include_str!("../presets/table-large-n.toml")),
    (
        "table-moderate-n",
        include_str!("../presets/table-moderate-n.toml"),
    ),
    (
        "table-large-pk",
        include_str!("../presets/table-large-pk.toml"),
    ),
    (
        "table-independence",
        include_str!("../presets/table-independence.toml"),
    ),
];

/// Loads a config document from a preset name or a file path.
pub fn load_config_text(spec: &str) -> anyhow::Result<String> {
    if let Some((_, text)) = PRESETS.iter().find(|(name, _)| *name == spec) {
        return Ok((*text).to_string());
    }
    let path = Path::new(spec);
    if path.exists() {
        return std::fs::read_to_string(path)
            .with_context(|| format!("reading config file {spec}"));
    }
    bail!(
        "config '{spec}' is neither a file nor a preset (presets: {})",
        PRESETS
            .iter()
            .map(|(n, _)| *n)
            .collect::<Vec<_>>()
            .join(", ")
    )
}

fn default_reps() -> usize {
    256
}
fn default_max_reps() -> usize {
    8192
}
fn default_seed() -> u64 {
    1
}
fn default_se_target() -> f64 {
    0.05
}
fn default_cap() -> usize {
    kroncov::DEFAULT_MATERIALIZE_CAP
}
fn default_level() -> f64 {
    0.95
}
fn default_quantile_reps() -> usize {
    5000
}
fn default_n() -> u64 {
    200
}
fn default_exp_reps() -> usize {
    5000
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct RiskConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_se_target")]
    pub se_target: f64,
    #[serde(default = "default_cap")]
    pub materialize_cap: usize,
    #[serde(rename = "scenario")]
    pub scenarios: Vec<ScenarioConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ScenarioConfig {
    pub name: String,
    pub dims: Vec<usize>,
    /// Shared profile name; mutually exclusive with `profiles`.
    #[serde(default)]
    pub profile: Option<ProfileConfig>,
    /// Per-mode profiles.
    #[serde(default)]
    pub profiles: Option<Vec<ProfileConfig>>,
    pub estimators: Vec<EstimatorName>,
    pub n_grid: Vec<u64>,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default = "default_max_reps")]
    pub max_reps: usize,
    /// Loss multiplier override; defaults to each cell's sample size.
    #[serde(default)]
    pub loss_n: Option<u64>,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case", untagged)]
pub enum ProfileConfig {
    Named(String),
    Spiked {
        q: usize,
        a: f64,
        b: f64,
    },
    Explicit(Vec<f64>),
}

impl ProfileConfig {
    pub fn to_profile(&self) -> anyhow::Result<EigenProfile> {
        Ok(match self {
            ProfileConfig::Named(name) => match name.as_str() {
                "constant" => EigenProfile::Constant,
                "linear" => EigenProfile::Linear,
                "exponential" => EigenProfile::Exponential,
                other => bail!("unknown profile '{other}' (constant|linear|exponential)"),
            },
            ProfileConfig::Spiked { q, a, b } => EigenProfile::Spiked { q: *q, a: *a, b: *b },
            ProfileConfig::Explicit(v) => EigenProfile::Explicit(v.clone()),
        })
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorName {
    Pt,
    Mle,
    Rpt,
}

impl From<EstimatorName> for EstimatorKind {
    fn from(e: EstimatorName) -> Self {
        match e {
            EstimatorName::Pt => EstimatorKind::Pt,
            EstimatorName::Mle => EstimatorKind::Mle,
            EstimatorName::Rpt => EstimatorKind::Rpt,
        }
    }
}

impl RiskConfig {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let cfg: RiskConfig = toml::from_str(text).context("parsing risk config")?;
        if cfg.scenarios.is_empty() {
            bail!("no scenarios in config");
        }
        Ok(cfg)
    }

    pub fn scenarios(&self, seed_override: Option<u64>) -> anyhow::Result<Vec<Scenario>> {
        let mut out = Vec::with_capacity(self.scenarios.len());
        for (i, sc) in self.scenarios.iter().enumerate() {
            let profiles = match (&sc.profile, &sc.profiles) {
                (Some(p), None) => vec![p.to_profile()?],
                (None, Some(ps)) => ps
                    .iter()
                    .map(|p| p.to_profile())
                    .collect::<anyhow::Result<Vec<_>>>()?,
                (None, None) => bail!("scenario '{}' needs profile or profiles", sc.name),
                (Some(_), Some(_)) => {
                    bail!("scenario '{}': profile and profiles are mutually exclusive", sc.name)
                }
            };
            let base_seed = seed_override.or(sc.seed).unwrap_or(self.seed);
            out.push(Scenario {
                name: sc.name.clone(),
                dims: sc.dims.clone(),
                profiles,
                estimators: sc.estimators.iter().map(|&e| e.into()).collect(),
                n_grid: sc.n_grid.clone(),
                reps: sc.reps,
                max_reps: sc.max_reps,
                seed: base_seed.wrapping_add(i as u64),
                loss_n: sc.loss_n,
                se_target: self.se_target,
                materialize_cap: self.materialize_cap,
                orthogonal_conjugation_seed: None,
            });
        }
        Ok(out)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct DiagnoseConfig {
    #[serde(default = "default_cap")]
    pub materialize_cap: usize,
    #[serde(rename = "spectrum")]
    pub spectra: Vec<SpectrumConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct SpectrumConfig {
    pub name: String,
    /// Explicit factor spectra...
    #[serde(default)]
    pub lambda: Option<Vec<f64>>,
    #[serde(default)]
    pub gamma: Option<Vec<f64>>,
    /// ...or a named profile with factor dimensions.
    #[serde(default)]
    pub profile: Option<ProfileConfig>,
    #[serde(default)]
    pub p1: Option<usize>,
    #[serde(default)]
    pub p2: Option<usize>,
}

impl SpectrumConfig {
    pub fn spectra(&self) -> anyhow::Result<(Vec<f64>, Vec<f64>)> {
        match (&self.lambda, &self.gamma, &self.profile) {
            (Some(l), Some(g), None) => Ok((l.clone(), g.clone())),
            (None, None, Some(p)) => {
                let (p1, p2) = match (self.p1, self.p2) {
                    (Some(a), Some(b)) => (a, b),
                    _ => bail!("spectrum '{}' with a profile needs p1 and p2", self.name),
                };
                let prof = p.to_profile()?;
                Ok((prof.generate::<f64>(p1)?, prof.generate::<f64>(p2)?))
            }
            _ => bail!(
                "spectrum '{}' needs either lambda+gamma or profile+p1+p2",
                self.name
            ),
        }
    }
}

impl DiagnoseConfig {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let cfg: DiagnoseConfig = toml::from_str(text).context("parsing diagnose config")?;
        if cfg.spectra.is_empty() {
            bail!("no spectra in config");
        }
        Ok(cfg)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct TestConfig {
    /// `experiment` tallies rejection proportions over replicates;
    /// `single` draws one sample and reports the two tests.
    #[serde(default)]
    pub mode: TestMode,
    /// `null` or `alternative` factor preset; explicit factors win if given.
    #[serde(default)]
    pub scenario: ScenarioName,
    #[serde(default)]
    pub sigma1: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub sigma2: Option<Vec<Vec<f64>>>,
    #[serde(default = "default_n")]
    pub n: u64,
    #[serde(default = "default_exp_reps")]
    pub reps: usize,
    #[serde(default = "default_level")]
    pub level: f64,
    #[serde(default = "default_quantile_reps")]
    pub quantile_reps: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub estimator: TestEstimator,
}

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum TestMode {
    #[default]
    Experiment,
    Single,
}

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioName {
    #[default]
    Null,
    Alternative,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestEstimator {
    #[default]
    Mle,
    Rpt,
}

impl TestConfig {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        toml::from_str(text).context("parsing test config")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_named() {
        let err = RiskConfig::parse("bogus_key = 1\n[[scenario]]\nname='x'\ndims=[2,2]\nestimators=['pt']\nn-grid=[5]\n")
            .unwrap_err();
        let msg = format!("{err:#}");
        assert!(msg.contains("bogus_key"), "error does not name the key: {msg}");
    }

    #[test]
    fn presets_all_parse() {
        for (name, text) in PRESETS {
            if *name == "table-independence" {
                TestConfig::parse(text).unwrap_or_else(|e| panic!("{name}: {e:#}"));
            } else {
                RiskConfig::parse(text).unwrap_or_else(|e| panic!("{name}: {e:#}"));
            }
        }
    }
}
