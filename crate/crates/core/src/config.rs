//! Run configuration: one TOML file, with tables or dotted keys
//! (`model.hidden_size = 32`). Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sharecast_autodiff::DType;

use crate::error::{read_text, Error, Result};
use crate::eval::{LrConfig, TrainConfig};
use crate::events::TimeGrid;
use crate::model::ModelConfig;
use crate::sampler::FeatureConfig;
use crate::synth::SynthConfig;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Paths {
    /// Directory holding the event files; defaults to `<out>/logs`.
    pub logs: Option<PathBuf>,
    /// Catalog file; defaults to `catalog.txt` inside the logs directory.
    pub catalog: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

/// Unset fields fall back to the grid of the synthetic generator.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub start: Option<i64>,
    pub step_length: Option<i64>,
    pub steps: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalyticsConfig {
    /// Conversion horizon in seconds; defaults to one grid step.
    pub horizon: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AblationConfig {
    pub variants: Vec<String>,
}

impl Default for AblationConfig {
    fn default() -> Self {
        let names = ["encoder-none", "encoder-mean", "encoder-gru", "encoder-self-attn", "-user", "-item", "-taocode", "-attention", "-structural"];
        AblationConfig { variants: names.map(String::from).to_vec() }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    #[default]
    F64,
}

impl Precision {
    pub fn dtype(self) -> DType {
        match self {
            Precision::F32 => DType::F32,
            Precision::F64 => DType::F64,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub precision: Precision,
    pub paths: Paths,
    pub grid: GridConfig,
    pub features: FeatureConfig,
    pub synth: SynthConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub baseline: LrConfig,
    pub analytics: AnalyticsConfig,
    pub ablation: AblationConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&read_text(path)?).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| Error::MissingKey("seed".into()))
    }

    pub fn out_dir(&self) -> Result<&Path> {
        self.paths.out.as_deref().ok_or_else(|| Error::MissingKey("paths.out".into()))
    }

    pub fn logs_dir(&self) -> Result<PathBuf> {
        match &self.paths.logs {
            Some(p) => Ok(p.clone()),
            None => Ok(self.out_dir()?.join("logs")),
        }
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        let fallback = self.synth.grid()?;
        TimeGrid::new(
            self.grid.start.unwrap_or(fallback.start()),
            self.grid.step_length.unwrap_or(fallback.step_length()),
            self.grid.steps.unwrap_or(fallback.n()),
        )
    }

    pub fn horizon(&self) -> Result<i64> {
        Ok(self.analytics.horizon.unwrap_or(self.grid()?.step_length()))
    }

    pub fn validate(&self) -> Result<()> {
        self.synth.validate()?;
        self.model.validate()?;
        self.train.validate()?;
        self.grid()?;
        if self.features.bins == 0 {
            return Err(Error::Config("features.bins must be at least 1".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dotted_keys_and_tables_agree() {
        let a = RunConfig::from_toml("seed = 3\nmodel.hidden_size = 16\npaths.out = \"x\"\n").unwrap();
        let b = RunConfig::from_toml("seed = 3\n[model]\nhidden_size = 16\n[paths]\nout = \"x\"\n").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.model.hidden_size, 16);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = RunConfig::from_toml("model.hiden_size = 16\n").unwrap_err().to_string();
        assert!(err.contains("hiden_size"), "{err}");
    }

    #[test]
    fn missing_keys_are_named() {
        let c = RunConfig::from_toml("").unwrap();
        assert_eq!(c.out_dir().unwrap_err().to_string(), "missing config key `paths.out`");
        assert_eq!(c.seed().unwrap_err().to_string(), "missing config key `seed`");
    }

    #[test]
    fn round_trips_through_toml() {
        let mut c = RunConfig { seed: Some(9), ..RunConfig::default() };
        c.paths.out = Some("out".into());
        assert_eq!(RunConfig::from_toml(&c.to_toml()).unwrap(), c);
        assert_eq!(c.grid().unwrap(), c.synth.grid().unwrap());
    }
}
