//! Flat `key = value` run configuration.

use crate::CliError;
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Solve1,
    Solve2,
    Verify1,
    Verify2,
    Eigscan,
    Slice,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Solve1 => "solve1",
            Mode::Solve2 => "solve2",
            Mode::Verify1 => "verify1",
            Mode::Verify2 => "verify2",
            Mode::Eigscan => "eigscan",
            Mode::Slice => "slice",
        }
    }
}

/// Parsed key/value pairs; keys are kept sorted so echoes are stable.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub values: BTreeMap<String, String>,
}

fn bad(key: &str, why: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("field `{key}`: {why}"))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`", ln + 1)))?;
            let k = k.trim().to_string();
            if k.is_empty() {
                return Err(CliError::Config(format!("line {}: empty key", ln + 1)));
            }
            if values.insert(k.clone(), v.trim().to_string()).is_some() {
                return Err(bad(&k, "given more than once"));
            }
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.values.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn require(&self, key: &str) -> Result<&str, CliError> {
        self.get(key).ok_or_else(|| bad(key, "missing"))
    }

    pub fn mode(&self) -> Result<Mode, CliError> {
        Ok(match self.require("mode")? {
            "solve1" => Mode::Solve1,
            "solve2" => Mode::Solve2,
            "verify1" => Mode::Verify1,
            "verify2" => Mode::Verify2,
            "eigscan" => Mode::Eigscan,
            "slice" => Mode::Slice,
            other => return Err(bad("mode", format!("unknown mode `{other}`"))),
        })
    }

    pub fn f64(&self, key: &str) -> Result<f64, CliError> {
        let v = self.require(key)?;
        let x: f64 = v.parse().map_err(|_| bad(key, format!("`{v}` is not a number")))?;
        if !x.is_finite() {
            return Err(bad(key, "must be finite"));
        }
        Ok(x)
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, CliError> {
        if self.get(key).is_some() {
            self.f64(key)
        } else {
            Ok(default)
        }
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize, CliError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| bad(key, format!("`{v}` is not a non-negative integer"))),
        }
    }

    pub fn i32_or(&self, key: &str, default: i32) -> Result<i32, CliError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| bad(key, format!("`{v}` is not an integer"))),
        }
    }

    pub fn list_f64(&self, key: &str) -> Result<Vec<f64>, CliError> {
        self.require(key)?
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|_| bad(key, format!("`{s}` is not a number"))))
            .collect()
    }

    pub fn list_usize(&self, key: &str) -> Result<Vec<usize>, CliError> {
        self.require(key)?
            .split(',')
            .map(|s| s.trim().parse::<usize>().map_err(|_| bad(key, format!("`{s}` is not an integer"))))
            .collect()
    }

    /// Node count: `n`, at least 16.
    pub fn n(&self) -> Result<usize, CliError> {
        let n = self.usize_or("n", 100)?;
        check_n(n)?;
        Ok(n)
    }

    /// Positive lambda from `lambda`.
    pub fn lambda(&self) -> Result<f64, CliError> {
        let l = self.f64("lambda")?;
        if !(l > 0.0) {
            return Err(bad("lambda", "must be positive"));
        }
        Ok(l)
    }

    pub fn to_text(&self) -> String {
        self.values.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

pub fn check_n(n: usize) -> Result<(), CliError> {
    if n < 16 {
        return Err(bad("n", format!("{n} is below the minimum of 16")));
    }
    Ok(())
}
