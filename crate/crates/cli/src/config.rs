//! JSON config files merged under command-line flags.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde_json::{Map, Value};

use crate::CliError;

/// Flat key/value settings loaded from `--config`.
///
/// A run manifest is accepted too: its `config` object is used.
#[derive(Debug, Default)]
pub struct ConfigFile {
    values: Map<String, Value>,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(ConfigFile::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let value: Value =
            serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
        let mut values = match value {
            Value::Object(m) => m,
            _ => {
                return Err(CliError::Usage(format!(
                    "config {} must be a JSON object",
                    path.display()
                )))
            }
        };
        if let Some(Value::Object(inner)) = values.remove("config") {
            values = inner;
        }
        Ok(ConfigFile { values })
    }

    fn lookup(&self, key: &str) -> Option<&Value> {
        self.values
            .get(key)
            .or_else(|| self.values.get(&key.replace('_', "-")))
            .or_else(|| self.values.get(&key.replace('-', "_")))
    }

    /// Flag value if given, else the config entry, else `None`.
    pub fn pick<T: DeserializeOwned>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.lookup(key) {
            None | Some(Value::Null) => Ok(None),
            Some(v) => serde_json::from_value(v.clone())
                .map(Some)
                .map_err(|e| CliError::Usage(format!("config key '{key}': {e}"))),
        }
    }

    pub fn get<T: DeserializeOwned>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, CliError> {
        Ok(self.pick(flag, key)?.unwrap_or(default))
    }

    pub fn require<T: DeserializeOwned>(&self, flag: Option<T>, key: &str) -> Result<T, CliError> {
        self.pick(flag, key)?
            .ok_or_else(|| CliError::Usage(format!("missing required --{}", key.replace('_', "-"))))
    }

    pub fn path(&self, flag: Option<PathBuf>, key: &str) -> Result<Option<PathBuf>, CliError> {
        self.pick(flag, key)
    }

    /// A list given as repeated/comma-separated flags, or a number or array in the config.
    pub fn list(&self, flag: Vec<f64>, key: &str) -> Result<Vec<f64>, CliError> {
        if !flag.is_empty() {
            return Ok(flag);
        }
        match self.lookup(key) {
            None | Some(Value::Null) => Ok(Vec::new()),
            Some(Value::Number(n)) => Ok(vec![n.as_f64().unwrap_or(f64::NAN)]),
            Some(v) => {
                serde_json::from_value(v.clone()).map_err(|e| CliError::Usage(format!("config key '{key}': {e}")))
            }
        }
    }
}
