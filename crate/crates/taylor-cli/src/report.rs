//! Plain `key = value` reports.

use crate::{io_err, CliError, RunConfig};
use std::path::Path;

/// Formats a float with 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, Default)]
pub struct Report {
    entries: Vec<(String, String)>,
    timings: Vec<(String, f64)>,
}

impl Report {
    pub fn new(config: &RunConfig) -> Self {
        let mut r = Self::default();
        r.put("version", env!("CARGO_PKG_VERSION"));
        for (k, v) in &config.values {
            r.put(&format!("config.{k}"), v);
        }
        r
    }

    pub fn put(&mut self, key: &str, value: impl ToString) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    pub fn put_num(&mut self, key: &str, x: f64) {
        self.put(key, num(x));
    }

    pub fn time(&mut self, key: &str, seconds: f64) {
        self.timings.push((key.to_string(), seconds));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.entries {
            s.push_str(&format!("{k} = {v}\n"));
        }
        for (k, t) in &self.timings {
            s.push_str(&format!("timing.{k} = {t:.3}\n"));
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        std::fs::write(path, self.render()).map_err(|e| io_err(path, e))
    }
}

/// Recovers the run configuration echoed in a report or solution file.
pub fn config_from_report(text: &str) -> Result<RunConfig, CliError> {
    let all = RunConfig::parse(text)?;
    let mut cfg = RunConfig::default();
    for (k, v) in &all.values {
        if let Some(key) = k.strip_prefix("config.") {
            cfg.set(key, v);
        }
    }
    Ok(cfg)
}
