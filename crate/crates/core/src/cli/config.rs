//! Run configuration read from a sectioned TOML file.
//!
//! ```toml
//! [scenario]
//! seed = 7
//! years = 5
//!
//! [paths]
//! load = "data/load.csv"
//! weather = "data/weather.csv"
//! holidays = "data/holidays.txt"
//! truth = "data/truth.json"
//! store = "out/model.store"
//! output = "out"
//!
//! [model]
//! preset = "trend1"
//! variant = "H2"
//! cadence = "weekly"
//!
//! [dimension]
//! method = "ic_majority"
//!
//! [evaluation]
//! start = "2005-01-10"
//! end = "2005-12-20"
//! horizon = 1
//! ```
//!
//! Relative paths are resolved against the directory holding the config file. Unknown
//! keys in any section are rejected.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::Deserialize;
use thiserror::Error;

use crate::datagen::ScenarioConfig;
use crate::pipeline::{Cadence, ForecastKind, PipelineConfig, RegressorSpec, Variant};
use crate::svdreg::DimSelectConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("config has no [{0}] section")]
    MissingSection(&'static str),
    #[error("config key `{0}` is required for this command")]
    MissingKey(&'static str),
    #[error("invalid value for `{key}`: {message}")]
    Invalid { key: &'static str, message: String },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: Option<ScenarioConfig>,
    #[serde(default)]
    pub paths: Paths,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub dimension: DimSelectConfig,
    #[serde(default)]
    pub evaluation: EvaluationSection,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Paths {
    pub load: PathBuf,
    pub weather: PathBuf,
    pub holidays: PathBuf,
    /// Ground-truth sidecar written by `simulate`.
    pub truth: PathBuf,
    pub store: PathBuf,
    /// Forecast, audit and evaluation outputs.
    pub output: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            load: "load.csv".into(),
            weather: "weather.csv".into(),
            holidays: "holidays.txt".into(),
            truth: "truth.json".into(),
            store: "model.store".into(),
            output: "out".into(),
        }
    }
}

impl Paths {
    fn resolve(&mut self, base: &Path) {
        for p in [
            &mut self.load,
            &mut self.weather,
            &mut self.holidays,
            &mut self.truth,
            &mut self.store,
            &mut self.output,
        ] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    pub fn forecast_csv(&self) -> PathBuf {
        self.output.join("forecast.csv")
    }

    pub fn audit_csv(&self) -> PathBuf {
        self.output.join("audit.csv")
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub preset: String,
    pub variant: Variant,
    pub intraday_update: bool,
    /// Regressor scores per scalar regression, at most.
    pub k_max: usize,
    pub n_min: usize,
    pub cadence: Cadence,
    pub train_start: Option<NaiveDate>,
    pub workers: usize,
}

impl Default for ModelSection {
    fn default() -> Self {
        let p = PipelineConfig::default();
        Self {
            preset: p.preset,
            variant: p.regressor.variant,
            intraday_update: p.regressor.intraday_update,
            k_max: p.k_max,
            n_min: p.n_min,
            cadence: Cadence::Weekly,
            train_start: None,
            workers: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluationSection {
    /// First issue date. `fit` trains on everything before it.
    pub start: Option<NaiveDate>,
    /// Last issue date.
    pub end: Option<NaiveDate>,
    pub horizon: usize,
    pub kinds: Vec<ForecastKind>,
}

impl Default for EvaluationSection {
    fn default() -> Self {
        Self {
            start: None,
            end: None,
            horizon: 1,
            kinds: vec![ForecastKind::Hybrid, ForecastKind::Oracle, ForecastKind::Baseline],
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub variant: Option<Variant>,
    pub preset: Option<String>,
    pub cadence: Option<Cadence>,
}

impl RunConfig {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::parse(&text).map_err(|message| ConfigError::Parse {
            path: path.to_path_buf(),
            message,
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        cfg.paths.resolve(base);
        cfg.apply(overrides);
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parse without resolving paths. Errors carry the line and column.
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let (Some(seed), Some(s)) = (o.seed, self.scenario.as_mut()) {
            s.seed = seed;
        }
        if let Some(w) = o.workers {
            self.model.workers = w;
        }
        if let Some(v) = o.variant {
            self.model.variant = v;
        }
        if let Some(p) = &o.preset {
            self.model.preset = p.clone();
        }
        if let Some(c) = o.cadence {
            self.model.cadence = c;
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if crate::gam::preset(&self.model.preset).is_none() {
            return Err(ConfigError::Invalid {
                key: "model.preset",
                message: format!("`{}` is not trend1 or trend2", self.model.preset),
            });
        }
        self.dimension.validate().map_err(|e| ConfigError::Invalid {
            key: "dimension",
            message: e.to_string(),
        })?;
        if self.model.k_max == 0 {
            return Err(ConfigError::Invalid {
                key: "model.k_max",
                message: "must be at least 1".into(),
            });
        }
        if self.evaluation.horizon == 0 {
            return Err(ConfigError::Invalid {
                key: "evaluation.horizon",
                message: "must be at least 1".into(),
            });
        }
        if let (Some(s), Some(e)) = (self.evaluation.start, self.evaluation.end) {
            if e < s {
                return Err(ConfigError::Invalid {
                    key: "evaluation.end",
                    message: format!("{e} is before evaluation.start {s}"),
                });
            }
        }
        if let Some(s) = &self.scenario {
            s.validate().map_err(|message| ConfigError::Invalid {
                key: "scenario",
                message,
            })?;
        }
        Ok(())
    }

    pub fn scenario(&self) -> Result<&ScenarioConfig, ConfigError> {
        self.scenario.as_ref().ok_or(ConfigError::MissingSection("scenario"))
    }

    pub fn eval_start(&self) -> Result<NaiveDate, ConfigError> {
        self.evaluation.start.ok_or(ConfigError::MissingKey("evaluation.start"))
    }

    pub fn eval_end(&self) -> Result<NaiveDate, ConfigError> {
        self.evaluation.end.ok_or(ConfigError::MissingKey("evaluation.end"))
    }

    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            preset: self.model.preset.clone(),
            regressor: RegressorSpec {
                variant: self.model.variant,
                intraday_update: self.model.intraday_update,
            },
            dim: self.dimension.clone(),
            k_max: self.model.k_max,
            n_min: self.model.n_min,
            cadence: self.model.cadence,
            train_start: self.model.train_start,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_all_defaults() {
        let c = RunConfig::parse("").unwrap();
        assert_eq!(c.model, ModelSection::default());
        assert!(c.scenario.is_none());
        assert_eq!(c.evaluation.horizon, 1);
    }

    #[test]
    fn unknown_key_rejected() {
        let e = RunConfig::parse("[model]\npreset = \"trend2\"\nvarient = \"H1\"\n").unwrap_err();
        assert!(e.contains("varient"), "{e}");
        assert!(e.contains("line 3"), "{e}");
    }

    #[test]
    fn missing_seed_named() {
        let e = RunConfig::parse("[scenario]\nyears = 2\n").unwrap_err();
        assert!(e.contains("seed"), "{e}");
    }

    #[test]
    fn sections_parse() {
        let c = RunConfig::parse(
            r#"
[scenario]
seed = 3
years = 2
[model]
variant = "H4"
cadence = "once"
[dimension]
method = { fixed = 2 }
[evaluation]
start = "2001-03-05"
end = "2001-03-20"
kinds = ["hybrid"]
"#,
        )
        .unwrap();
        assert_eq!(c.scenario.unwrap().years, 2);
        assert_eq!(c.model.variant, Variant::H4);
        assert_eq!(c.model.cadence, Cadence::Once);
        assert_eq!(c.dimension.method, crate::svdreg::DimMethod::Fixed(2));
        assert_eq!(c.evaluation.kinds, vec![ForecastKind::Hybrid]);
    }

    #[test]
    fn overrides_win() {
        let mut c = RunConfig::parse("[scenario]\nseed = 1\n").unwrap();
        c.apply(&Overrides {
            seed: Some(9),
            cadence: Some(Cadence::Daily),
            preset: Some("trend2".into()),
            ..Default::default()
        });
        assert_eq!(c.scenario.as_ref().unwrap().seed, 9);
        assert_eq!(c.pipeline().cadence, Cadence::Daily);
        assert_eq!(c.pipeline().preset, "trend2");
    }
}
