use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::CliError;

/// Record of one run, written as `<out>.manifest.json` beside the primary output.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: &'static str,
    pub version: &'static str,
    pub inputs: Vec<PathBuf>,
    /// Fully resolved parameters; usable as a `--config` file.
    pub config: Map<String, Value>,
    pub outputs: Vec<PathBuf>,
    pub wall_time_s: f64,
    pub summary: Value,
    #[serde(skip)]
    started: Option<Instant>,
    #[serde(skip)]
    primary: Option<PathBuf>,
}

impl RunManifest {
    pub fn start(subcommand: &'static str) -> Self {
        RunManifest {
            subcommand,
            version: env!("CARGO_PKG_VERSION"),
            inputs: Vec::new(),
            config: Map::new(),
            outputs: Vec::new(),
            wall_time_s: 0.0,
            summary: Value::Null,
            started: Some(Instant::now()),
            primary: None,
        }
    }

    pub fn set(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.config.insert(key.to_string(), v);
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.to_path_buf());
    }

    /// Names the manifest after `path` instead of the first output written.
    pub fn primary(&mut self, path: &Path) {
        self.primary = Some(path.to_path_buf());
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.to_path_buf());
    }

    /// Writes the manifest next to the primary (or first) output; runs
    /// without file output write none.
    pub fn finish(mut self, summary: Value) -> Result<(), CliError> {
        self.summary = summary;
        if let Some(t) = self.started {
            self.wall_time_s = t.elapsed().as_secs_f64();
        }
        if self.outputs.is_empty() {
            return Ok(());
        }
        let path = manifest_path(self.primary.as_ref().unwrap_or(&self.outputs[0]));
        let text = serde_json::to_string_pretty(&self).map_err(|e| CliError::Usage(e.to_string()))?;
        std::fs::write(&path, text + "\n").map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
    }
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}
