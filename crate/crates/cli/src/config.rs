//! Flat `key = value` run configuration.
//!
//! Values come from an optional config file (key-value text or the `config`
//! object of a previous JSON summary) overlaid with inline flags. Every value
//! read through a getter, defaults included, is recorded so the resolved
//! configuration can be echoed and fed back verbatim.

use std::collections::BTreeMap;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Keys that never influence results and are left out of the digest.
const NON_SEMANTIC: &[&str] = &["out_dir"];

#[derive(Debug, Clone, Default)]
pub struct Config {
    values: BTreeMap<String, String>,
}

fn normalize(key: &str) -> String {
    key.trim().replace('-', "_")
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        if text.trim_start().starts_with('{') {
            Self::from_json(&text)
        } else {
            Self::from_key_values(&text)
        }
    }

    pub fn from_key_values(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Usage(format!(
                    "config line {}: expected `key = value`, got `{raw}`",
                    n + 1
                )));
            };
            values.insert(normalize(key), value.trim().to_string());
        }
        Ok(Config { values })
    }

    /// Reads the `config` object of a run summary, or a flat JSON object.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let root: serde_json::Value =
            serde_json::from_str(text).map_err(|e| CliError::Usage(format!("config is not valid JSON: {e}")))?;
        let obj = root
            .get("config")
            .unwrap_or(&root)
            .as_object()
            .ok_or_else(|| CliError::Usage("JSON config must be an object".into()))?;
        let mut values = BTreeMap::new();
        for (k, v) in obj {
            let s = match v {
                serde_json::Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            values.insert(normalize(k), s);
        }
        Ok(Config { values })
    }

    /// Inline values win over file values.
    pub fn overlay(&mut self, overrides: Vec<(&str, String)>) {
        for (k, v) in overrides {
            self.values.insert(normalize(k), v);
        }
    }

    pub fn contains(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    pub fn check_keys(&self, allowed: &[&str]) -> Result<(), CliError> {
        for key in self.values.keys() {
            if !allowed.contains(&key.as_str()) {
                return Err(CliError::Usage(format!(
                    "unknown key `{key}` for this subcommand (allowed: {})",
                    allowed.join(", ")
                )));
            }
        }
        Ok(())
    }

    pub fn values(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    /// SHA-256 over the semantic keys in sorted order.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        for (k, v) in &self.values {
            if NON_SEMANTIC.contains(&k.as_str()) {
                continue;
            }
            hasher.update(k.as_bytes());
            hasher.update(b"=");
            hasher.update(v.as_bytes());
            hasher.update(b"\n");
        }
        hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    fn raw_or_default(&mut self, key: &str, default: &str) -> String {
        self.values.entry(key.to_string()).or_insert_with(|| default.to_string()).clone()
    }

    pub fn string(&mut self, key: &str, default: &str) -> String {
        self.raw_or_default(key, default)
    }

    pub fn opt_string(&self, key: &str) -> Option<String> {
        self.values.get(key).cloned()
    }

    pub fn f64(&mut self, key: &str, default: f64) -> Result<f64, CliError> {
        let raw = self.raw_or_default(key, &default.to_string());
        parse_f64(key, &raw)
    }

    pub fn opt_f64(&self, key: &str) -> Result<Option<f64>, CliError> {
        self.values.get(key).map(|raw| parse_f64(key, raw)).transpose()
    }

    pub fn usize(&mut self, key: &str, default: usize) -> Result<usize, CliError> {
        let raw = self.raw_or_default(key, &default.to_string());
        raw.trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("`{key}` must be a non-negative integer, got `{raw}`")))
    }

    pub fn opt_u64(&self, key: &str) -> Result<Option<u64>, CliError> {
        self.values
            .get(key)
            .map(|raw| {
                raw.trim()
                    .parse()
                    .map_err(|_| CliError::Usage(format!("`{key}` must be a non-negative integer, got `{raw}`")))
            })
            .transpose()
    }

    pub fn f64_list(&mut self, key: &str, default: &str) -> Result<Vec<f64>, CliError> {
        let raw = self.raw_or_default(key, default);
        raw.split(',').map(|s| parse_f64(key, s)).collect()
    }

    /// `;`-separated list (entries may themselves contain commas).
    pub fn str_list(&mut self, key: &str, default: &str) -> Vec<String> {
        self.raw_or_default(key, default)
            .split(';')
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect()
    }
}

fn parse_f64(key: &str, raw: &str) -> Result<f64, CliError> {
    let t = raw.trim();
    let v = match t {
        "inf" | "+inf" | "infinity" => f64::INFINITY,
        _ => t
            .parse::<f64>()
            .map_err(|_| CliError::Usage(format!("`{key}` must be a number, got `{raw}`")))?,
    };
    if v.is_nan() {
        return Err(CliError::Usage(format!("`{key}` must not be NaN")));
    }
    Ok(v)
}
