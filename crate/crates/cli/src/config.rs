//! Sectioned `key = value` run configuration.
//!
//! Resolution order: built-in defaults, then the command's section of the
//! config file, then command-line flags and `--set` overrides. Keys that are
//! not part of a section's schema are rejected wherever they appear.

use std::collections::BTreeMap;
use std::path::Path;

use toml::{Table, Value};

use crate::error::CliError;

pub const SECTIONS: [&str; 5] = ["synth", "build", "train", "eval", "explain"];

fn int(v: i64) -> Value {
    Value::Integer(v)
}

fn float(v: f64) -> Value {
    Value::Float(v)
}

fn text(v: &str) -> Value {
    Value::String(v.to_string())
}

/// Every accepted key of `section` with its default.
pub fn defaults(section: &str) -> Option<BTreeMap<&'static str, Value>> {
    let pairs: Vec<(&'static str, Value)> = match section {
        "synth" => vec![
            ("loans", int(2000)),
            ("months", int(18)),
            ("areas", int(60)),
            ("companies", int(40)),
            ("base_rate", float(0.05)),
            ("contagion", float(2.0)),
            ("seed", int(0)),
            ("start", text("2012-01")),
            ("horizon", int(12)),
            ("output", text("panel.csv")),
        ],
        "build" => vec![
            ("panel", text("panel.csv")),
            ("output", text("windows")),
            ("layers", text("both")),
            ("isolate_fraction", float(0.5)),
            ("window_len", int(6)),
            ("stride", int(1)),
            ("horizon", int(12)),
            ("seed", int(0)),
            // Empty means the first / last month of the panel.
            ("scaling_start", text("")),
            ("scaling_end", text("")),
            // Empty means labels are taken as given.
            ("outcome_end", text("")),
        ],
        "train" => vec![
            ("data", text("windows")),
            ("model", text("gat-lstm-att")),
            ("train_windows", text("0-10")),
            ("validation_window", int(11)),
            ("embedding", int(16)),
            ("gnn_depth", int(1)),
            ("gat_heads", int(2)),
            ("gat_slope", float(0.2)),
            ("dropout", float(0.5)),
            ("seed", int(0)),
            ("epochs", int(200)),
            ("patience", int(50)),
            ("learning_rate", float(1e-3)),
            ("l2", float(0.0)),
            ("output", text("model.ckpt")),
        ],
        "eval" => vec![
            ("data", text("windows")),
            ("checkpoints", text("model.ckpt")),
            ("window", int(12)),
            ("threshold", float(0.5)),
            ("resamples", int(1000)),
            ("seed", int(0)),
            ("output", text("eval.csv")),
        ],
        "explain" => vec![
            ("data", text("windows")),
            ("checkpoint", text("model.ckpt")),
            ("window", int(12)),
            // Empty means the explained window alone.
            ("attention_windows", text("")),
            ("samples", int(64)),
            ("seed", int(0)),
            ("top_k", int(4)),
            ("output", text("explain")),
        ],
        _ => return None,
    };
    Some(pairs.into_iter().collect())
}

/// Resolved settings for one command.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub section: String,
    values: BTreeMap<String, Value>,
}

/// Parses an override value: TOML scalars when they parse, bare text otherwise.
fn parse_value(raw: &str) -> Value {
    format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

impl RunConfig {
    pub fn new(section: &str) -> Result<Self, CliError> {
        let defaults = defaults(section)
            .ok_or_else(|| CliError::Config(format!("unknown section [{section}]")))?;
        Ok(Self {
            section: section.to_string(),
            values: defaults
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
        })
    }

    /// Validates the whole file (every section) and applies this command's section.
    pub fn apply_file_text(&mut self, text: &str) -> Result<(), CliError> {
        let table: Table = text
            .parse()
            .map_err(|e: toml::de::Error| CliError::Config(e.message().to_string()))?;
        for (name, body) in &table {
            let schema = defaults(name)
                .ok_or_else(|| CliError::Config(format!("unknown section [{name}]")))?;
            let Value::Table(body) = body else {
                return Err(CliError::Config(format!("'{name}' must be a [section]")));
            };
            for (key, value) in body {
                let default = schema
                    .get(key.as_str())
                    .ok_or_else(|| CliError::Config(format!("unknown key '{key}' in [{name}]")))?;
                check_type(name, key, default, value)?;
                if *name == self.section {
                    self.values.insert(key.clone(), value.clone());
                }
            }
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        self.apply_file_text(&text)
    }

    /// Applies `key=value` or `section.key=value`; other sections' keys are
    /// validated and ignored.
    pub fn apply_override(&mut self, spec: &str) -> Result<(), CliError> {
        let (key, raw) = spec
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("override '{spec}' is not KEY=VALUE")))?;
        let key = key.trim();
        let (section, key) = key.split_once('.').unwrap_or((self.section.as_str(), key));
        let schema = defaults(section)
            .ok_or_else(|| CliError::Config(format!("unknown section [{section}]")))?;
        let default = schema
            .get(key)
            .ok_or_else(|| CliError::Config(format!("unknown key '{key}' in [{section}]")))?;
        let mut value = parse_value(raw.trim());
        if matches!(default, Value::String(_)) && !matches!(value, Value::String(_)) {
            value = Value::String(raw.trim().to_string());
        }
        check_type(section, key, default, &value)?;
        if section == self.section {
            self.values.insert(key.to_string(), value);
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: impl std::fmt::Display) -> Result<(), CliError> {
        self.apply_override(&format!("{key}={value}"))
    }

    fn get(&self, key: &str) -> &Value {
        self.values
            .get(key)
            .unwrap_or_else(|| panic!("'{key}' is not in the [{}] schema", self.section))
    }

    pub fn str(&self, key: &str) -> String {
        match self.get(key) {
            Value::String(s) => s.clone(),
            other => other.to_string(),
        }
    }

    /// `None` for an empty string.
    pub fn opt_str(&self, key: &str) -> Option<String> {
        Some(self.str(key)).filter(|s| !s.is_empty())
    }

    pub fn float(&self, key: &str) -> f64 {
        match self.get(key) {
            Value::Float(f) => *f,
            Value::Integer(i) => *i as f64,
            other => panic!("'{key}' holds {other}, validated as numeric"),
        }
    }

    pub fn uint(&self, key: &str) -> Result<usize, CliError> {
        match self.get(key) {
            Value::Integer(i) if *i >= 0 => Ok(*i as usize),
            other => Err(CliError::Config(format!(
                "'{key}' must be a non-negative integer, got {other}"
            ))),
        }
    }

    pub fn u64(&self, key: &str) -> Result<u64, CliError> {
        Ok(self.uint(key)? as u64)
    }

    /// The fully resolved section, as written next to a run's outputs.
    pub fn render(&self) -> String {
        let mut inner = Table::new();
        for (k, v) in &self.values {
            inner.insert(k.clone(), v.clone());
        }
        let mut outer = Table::new();
        outer.insert(self.section.clone(), Value::Table(inner));
        toml::to_string(&outer).expect("plain tables serialize")
    }

    pub fn table(&self) -> Table {
        self.values
            .iter()
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect()
    }
}

fn check_type(section: &str, key: &str, default: &Value, value: &Value) -> Result<(), CliError> {
    let ok = match default {
        Value::Float(_) => {
            matches!(value, Value::Float(f) if f.is_finite()) || matches!(value, Value::Integer(_))
        }
        Value::Integer(_) => matches!(value, Value::Integer(_)),
        Value::String(_) => matches!(value, Value::String(_)),
        Value::Boolean(_) => matches!(value, Value::Boolean(_)),
        _ => false,
    };
    if ok {
        Ok(())
    } else {
        Err(CliError::Config(format!(
            "[{section}] {key}: expected {}, got {value}",
            default.type_str()
        )))
    }
}

/// Index lists like `0-10`, `3`, or `0,2,5-7`.
pub fn parse_indices(spec: &str) -> Result<Vec<usize>, CliError> {
    let bad = || CliError::Config(format!("bad window list '{spec}'"));
    let mut out = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b): (usize, usize) = (
                    a.trim().parse().map_err(|_| bad())?,
                    b.trim().parse().map_err(|_| bad())?,
                );
                if a > b {
                    return Err(bad());
                }
                out.extend(a..=b);
            }
            None => out.push(part.parse().map_err(|_| bad())?),
        }
    }
    if out.is_empty() {
        return Err(bad());
    }
    Ok(out)
}
