use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::rgcn::{FreezePlan, DEFAULT_EPOCHS};
use crate::summary::SummaryMethod;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("config line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("config line {line}: key `{key}` given twice")]
    Duplicate { line: usize, key: String },
    #[error("invalid value `{value}` for `{key}`: {reason}")]
    InvalidValue {
        key: String,
        value: String,
        reason: String,
    },
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

const KEYS: &[&str] = &[
    "dataset",
    "summary_method",
    "k",
    "drop_literals",
    "epochs",
    "summary_epochs",
    "folds",
    "seed",
    "freeze",
    "out",
    "per_fold_summary",
    "record_time",
];

/// One experiment, read from flat `key = value` text. Lines starting with
/// `#` are comments.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: PathBuf,
    /// Summary method; `k` only matters for bisimulation.
    pub summary_method: SummaryMethod,
    pub drop_literals: bool,
    /// Training epochs of the transfer and baseline models.
    pub epochs: usize,
    pub summary_epochs: usize,
    pub folds: usize,
    pub seed: u64,
    /// Applied to the transfer model only.
    pub freeze: FreezePlan,
    pub out: PathBuf,
    /// Recompute summary targets from each fold's training labels.
    pub per_fold_summary: bool,
    /// Fill the `ms` column with wall-clock times; off keeps CSVs
    /// byte-reproducible.
    pub record_time: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: PathBuf::new(),
            summary_method: SummaryMethod::Attributes,
            drop_literals: false,
            epochs: DEFAULT_EPOCHS,
            summary_epochs: DEFAULT_EPOCHS,
            folds: 5,
            seed: 0,
            freeze: FreezePlan::default(),
            out: PathBuf::from("out"),
            per_fold_summary: true,
            record_time: false,
        }
    }
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Parses config text. Cross-field checks are left to [`validate`],
    /// which runs after command-line overrides are applied.
    ///
    /// [`validate`]: ExperimentConfig::validate
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = ExperimentConfig::default();
        let mut seen = HashSet::new();
        let mut method: Option<String> = None;
        let mut k: Option<usize> = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or(ConfigError::Syntax { line: line_no })?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(ConfigError::UnknownKey {
                    line: line_no,
                    key: key.to_string(),
                });
            }
            if !seen.insert(key.to_string()) {
                return Err(ConfigError::Duplicate {
                    line: line_no,
                    key: key.to_string(),
                });
            }
            match key {
                "dataset" => cfg.dataset = PathBuf::from(value),
                "summary_method" => method = Some(value.to_string()),
                "k" => k = Some(number(key, value)?),
                "drop_literals" => cfg.drop_literals = boolean(key, value)?,
                "epochs" => cfg.epochs = number(key, value)?,
                "summary_epochs" => cfg.summary_epochs = number(key, value)?,
                "folds" => cfg.folds = number(key, value)?,
                "seed" => cfg.seed = number(key, value)?,
                "freeze" => {
                    cfg.freeze =
                        FreezePlan::parse(value).map_err(|reason| invalid(key, value, reason))?
                }
                "out" => cfg.out = PathBuf::from(value),
                "per_fold_summary" => cfg.per_fold_summary = boolean(key, value)?,
                "record_time" => cfg.record_time = boolean(key, value)?,
                _ => unreachable!("key list checked above"),
            }
        }
        cfg.summary_method = resolve_method(method.as_deref().unwrap_or("attributes"), k)?;
        Ok(cfg)
    }

    /// Checks the settings that cannot be checked per key.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.dataset.as_os_str().is_empty() {
            return Err(ConfigError::Missing("dataset"));
        }
        if self.out.as_os_str().is_empty() {
            return Err(ConfigError::Missing("out"));
        }
        if self.folds < 2 {
            return Err(invalid(
                "folds",
                &self.folds.to_string(),
                "at least two folds are required".into(),
            ));
        }
        Ok(())
    }
}

/// Combines a method name with an optional bisimulation depth.
pub fn resolve_method(name: &str, k: Option<usize>) -> Result<SummaryMethod, ConfigError> {
    let method = SummaryMethod::from_str(name).map_err(|e| invalid("summary_method", name, e))?;
    Ok(match (method, k) {
        (SummaryMethod::Bisimulation { .. }, Some(k)) => SummaryMethod::Bisimulation { k },
        (SummaryMethod::Bisimulation { .. }, None) => SummaryMethod::Bisimulation {
            k: SummaryMethod::DEFAULT_BISIM_K,
        },
        (m, _) => m,
    })
}

fn invalid(key: &str, value: &str, reason: String) -> ConfigError {
    ConfigError::InvalidValue {
        key: key.to_string(),
        value: value.to_string(),
        reason,
    }
}

fn number<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value
        .parse()
        .map_err(|_| invalid(key, value, "expected a non-negative integer".into()))
}

fn boolean(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(invalid(key, value, "expected true or false".into())),
    }
}
