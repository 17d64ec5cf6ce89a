use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::model::{AssumptionConstants, CoherenceProfile, ModelParams};
use crate::sampling::DesignDistribution;
use crate::selectors::{AdmmParams, SelectorKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectorConfig {
    pub kind: SelectorKind,
    /// Diagonal thresholding size; defaults to the model's `s`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_target: Option<usize>,
    /// Fixed FPS penalty; when absent `rho = rho_scale * sqrt(log p / n) * max diag`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default = "default_rho_scale")]
    pub rho_scale: f64,
    #[serde(default)]
    pub admm: AdmmParams,
}

fn default_rho_scale() -> f64 {
    2.0
}

impl Default for SelectorConfig {
    fn default() -> Self {
        Self { kind: SelectorKind::Oracle, s_target: None, rho: None, rho_scale: default_rho_scale(), admm: AdmmParams::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AssumptionConfig {
    pub c: f64,
    pub eps: f64,
    pub c_inc: f64,
}

impl Default for AssumptionConfig {
    fn default() -> Self {
        let d = AssumptionConstants::default();
        Self { c: d.c, eps: d.eps, c_inc: d.c_inc }
    }
}

impl From<AssumptionConfig> for AssumptionConstants {
    fn from(a: AssumptionConfig) -> Self {
        Self { c: a.c, eps: a.eps, c_inc: a.c_inc }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub records: String,
    pub summary: String,
    pub rates: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("results"),
            records: "records.csv".into(),
            summary: "summary.json".into(),
            rates: "rates.csv".into(),
        }
    }
}

impl OutputConfig {
    pub fn records_path(&self) -> PathBuf {
        self.dir.join(&self.records)
    }

    pub fn summary_path(&self) -> PathBuf {
        self.dir.join(&self.summary)
    }

    pub fn rates_path(&self) -> PathBuf {
        self.dir.join(&self.rates)
    }
}

/// One Monte Carlo experiment: a model family, a design, a selector and a grid of cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub p: usize,
    pub s: usize,
    pub k: usize,
    pub spikes: Vec<f64>,
    pub bulk: f64,
    #[serde(default = "default_profile")]
    pub coherence_profile: CoherenceProfile,
    #[serde(default = "default_distribution")]
    pub distribution: DesignDistribution,
    #[serde(default)]
    pub selector: SelectorConfig,
    pub n_grid: Vec<usize>,
    /// Extra support sizes to sweep; defaults to `[s]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_grid: Option<Vec<usize>>,
    pub trials_per_cell: usize,
    pub master_seed: u64,
    /// Seed for the ground-truth model; derived from `master_seed` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_seed: Option<u64>,
    /// Relabel coordinates with a seeded permutation so the support is not `0..s`.
    #[serde(default)]
    pub permute: bool,
    /// Debug mode: use `Sigma_hat = Sigma` instead of sampling.
    #[serde(default)]
    pub noiseless: bool,
    #[serde(default)]
    pub assumptions: AssumptionConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_profile() -> CoherenceProfile {
    CoherenceProfile::Flat
}

fn default_distribution() -> DesignDistribution {
    DesignDistribution::Gaussian
}

impl ExperimentConfig {
    /// The large-sample entrywise-rate configuration: p=200, s=20, k=2, spikes (10, 8),
    /// bulk 1, Gaussian design, oracle support, n from 1000 to 16000, 50 trials per cell.
    pub fn reference() -> Self {
        Self {
            p: 200,
            s: 20,
            k: 2,
            spikes: vec![10.0, 8.0],
            bulk: 1.0,
            coherence_profile: CoherenceProfile::Flat,
            distribution: DesignDistribution::Gaussian,
            selector: SelectorConfig::default(),
            n_grid: vec![1000, 2000, 4000, 8000, 16000],
            s_grid: None,
            trials_per_cell: 50,
            master_seed: 20_240_601,
            model_seed: None,
            permute: false,
            noiseless: false,
            assumptions: AssumptionConfig::default(),
            output: OutputConfig::default(),
        }
    }

    /// The reference configuration with `overrides` applied.
    pub fn reference_with(overrides: &[String]) -> Result<Self> {
        let table = Table::try_from(Self::reference()).expect("reference config serializes");
        Self::from_table(table, overrides)
    }

    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self> {
        let table: Table = toml::from_str(text).map_err(|e| Error::Config {
            key: "<file>".into(),
            message: e.to_string(),
        })?;
        Self::from_table(table, overrides)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Self::from_toml_str(&text, overrides)
    }

    /// Applies `KEY=VALUE` overrides to a parsed table, then deserializes and validates.
    ///
    /// Dotted keys address nested tables (`selector.admm.max_iter=100`). `n=V` is an
    /// alias for `n_grid=[V]` and `seed=V` for `master_seed=V`.
    pub fn from_table(mut table: Table, overrides: &[String]) -> Result<Self> {
        for raw in overrides {
            apply_override(&mut table, raw)?;
        }
        let config: Self = Value::Table(table).try_into().map_err(|e: toml::de::Error| {
            let message = e.message().to_string();
            Error::Config { key: offending_key(&message), message }
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, message: String| Err(Error::Config { key: key.into(), message });
        if self.n_grid.is_empty() {
            return bad("n_grid", "must contain at least one sample size".into());
        }
        if self.n_grid[0] < 2 {
            return bad("n_grid", "sample sizes must be at least 2".into());
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return bad("n_grid", "must be strictly increasing".into());
        }
        if self.trials_per_cell == 0 {
            return bad("trials_per_cell", "must be at least 1".into());
        }
        if self.spikes.len() != self.k {
            return bad("spikes", format!("expected {} values for k={}", self.k, self.k));
        }
        if let Some(grid) = &self.s_grid {
            if grid.is_empty() || grid.windows(2).any(|w| w[0] >= w[1]) {
                return bad("s_grid", "must be non-empty and strictly increasing".into());
            }
        }
        for &s in &self.support_sizes() {
            if !(self.k < s && s <= self.p) {
                return bad("s", format!("need k < s <= p, got k={}, s={s}, p={}", self.k, self.p));
            }
        }
        if let Some(t) = self.selector.s_target {
            if t == 0 || t > self.p {
                return bad("selector.s_target", format!("must lie in 1..={}", self.p));
            }
        }
        if let Some(rho) = self.selector.rho {
            if !(rho >= 0.0) {
                return bad("selector.rho", "must be >= 0".into());
            }
        }
        if !(self.selector.admm.step_size > 0.0) {
            return bad("selector.admm.step_size", "must be positive".into());
        }
        let a = &self.assumptions;
        if !(a.c > 0.0) || !(a.eps > 0.0 && a.eps < 1.0) || !(a.c_inc > 0.0) {
            return bad("assumptions", "need c > 0, 0 < eps < 1, c_inc > 0".into());
        }
        Ok(())
    }

    pub fn support_sizes(&self) -> Vec<usize> {
        self.s_grid.clone().unwrap_or_else(|| vec![self.s])
    }

    pub fn model_params(&self, s: usize) -> ModelParams<f64> {
        ModelParams {
            p: self.p,
            s,
            k: self.k,
            spikes: self.spikes.clone(),
            bulk_level: self.bulk,
            profile: self.coherence_profile,
        }
    }
}

fn apply_override(table: &mut Table, raw: &str) -> Result<()> {
    let (key, value) = raw.split_once('=').ok_or_else(|| Error::Config {
        key: raw.into(),
        message: "override must have the form KEY=VALUE".into(),
    })?;
    let key = key.trim();
    let mut value = parse_value(value.trim());
    let key = match key {
        "n" => {
            value = Value::Array(vec![value]);
            "n_grid"
        }
        "seed" => "master_seed",
        other => other,
    };
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config { key: key.into(), message: "empty key segment".into() });
    }
    let mut node = table;
    for part in &parts[..parts.len() - 1] {
        let entry = node.entry(part.to_string()).or_insert_with(|| Value::Table(Table::new()));
        node = entry.as_table_mut().ok_or_else(|| Error::Config {
            key: key.into(),
            message: format!("`{part}` is not a table"),
        })?;
    }
    node.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

fn parse_value(text: &str) -> Value {
    toml::from_str::<Table>(&format!("v = {text}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(text.to_string()))
}

// serde reports unknown keys as "unknown field `name`, expected ...".
fn offending_key(message: &str) -> String {
    for marker in ["unknown field `", "missing field `", "unknown variant `"] {
        if let Some(rest) = message.split(marker).nth(1) {
            if let Some(name) = rest.split('`').next() {
                return name.to_string();
            }
        }
    }
    "<config>".into()
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
p = 20
s = 4
k = 1
spikes = [5.0]
bulk = 1.0
n_grid = [100, 200]
trials_per_cell = 3
master_seed = 7
"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = ExperimentConfig::from_toml_str(MINIMAL, &[]).unwrap();
        assert_eq!(c.selector.kind, SelectorKind::Oracle);
        assert_eq!(c.distribution, DesignDistribution::Gaussian);
        assert_eq!(c.selector.admm, AdmmParams::default());
        assert_eq!(c.assumptions.eps, 1.0 / 32.0);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = ExperimentConfig::from_toml_str(&format!("{MINIMAL}\nbogus_key = 3\n"), &[]).unwrap_err();
        match err {
            Error::Config { key, message } => {
                assert_eq!(key, "bogus_key");
                assert!(message.contains("bogus_key"));
            }
            other => panic!("unexpected {other:?}"),
        }
        let err = ExperimentConfig::from_toml_str(MINIMAL, &["selector.admm.warp=1".into()]).unwrap_err();
        assert!(err.to_string().contains("warp"));
    }

    #[test]
    fn overrides_apply_after_parse() {
        let c = ExperimentConfig::from_toml_str(
            MINIMAL,
            &["n=4000".into(), "seed=99".into(), "selector.kind=\"fps\"".into(), "selector.admm.max_iter=10".into()],
        )
        .unwrap();
        assert_eq!(c.n_grid, vec![4000]);
        assert_eq!(c.master_seed, 99);
        assert_eq!(c.selector.kind, SelectorKind::Fps);
        assert_eq!(c.selector.admm.max_iter, 10);
        let c = ExperimentConfig::from_toml_str(MINIMAL, &["distribution=uniform".into()]).unwrap();
        assert_eq!(c.distribution, DesignDistribution::Uniform);
    }

    #[test]
    fn validation_errors() {
        assert!(ExperimentConfig::from_toml_str(MINIMAL, &["n_grid=[200, 100]".into()]).is_err());
        assert!(ExperimentConfig::from_toml_str(MINIMAL, &["trials_per_cell=0".into()]).is_err());
        assert!(ExperimentConfig::from_toml_str(MINIMAL, &["s=1".into()]).is_err());
        assert!(ExperimentConfig::from_toml_str(MINIMAL, &["nonsense".into()]).is_err());
    }

    #[test]
    fn reference_round_trips_through_toml() {
        let c = ExperimentConfig::reference();
        let back = ExperimentConfig::from_toml_str(&c.to_toml_string(), &[]).unwrap();
        assert_eq!(back, c);
    }
}
