use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::error::CliError;

/// Record of one command invocation, written atomically when it finishes
/// (successfully or not).
#[derive(Debug, Clone)]
pub struct RunManifest {
    pub command: String,
    pub config: Table,
    inputs: Vec<(String, String)>,
    outputs: Vec<String>,
    timings: Vec<(String, f64)>,
    notes: Vec<String>,
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes =
        std::fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(Sha256::digest(&bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect())
}

/// Digest of every file under `dir`, in path order.
pub fn sha256_dir(dir: &Path) -> Result<String, CliError> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d)? {
            let p = entry?.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                files.push(p);
            }
        }
    }
    files.sort();
    let mut hasher = Sha256::new();
    for f in files {
        hasher.update(
            f.strip_prefix(dir)
                .unwrap_or(&f)
                .to_string_lossy()
                .as_bytes(),
        );
        hasher.update(std::fs::read(&f)?);
    }
    Ok(hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect())
}

impl RunManifest {
    pub fn new(command: &str, config: Table) -> Self {
        Self {
            command: command.to_string(),
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
            timings: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn input(&mut self, path: &Path) -> Result<(), CliError> {
        let digest = if path.is_dir() {
            sha256_dir(path)?
        } else {
            sha256_file(path)?
        };
        self.inputs.push((path.display().to_string(), digest));
        Ok(())
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    pub fn timing(&mut self, name: &str, seconds: f64) {
        self.timings.push((name.to_string(), seconds));
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn render(&self, outcome: &Result<(), CliError>) -> String {
        let mut t = Table::new();
        t.insert("command".into(), Value::String(self.command.clone()));
        match outcome {
            Ok(()) => {
                t.insert("status".into(), Value::String("ok".into()));
            }
            Err(e) => {
                t.insert("status".into(), Value::String("failed".into()));
                t.insert("error_kind".into(), Value::String(e.kind().into()));
                t.insert("error".into(), Value::String(e.to_string()));
                t.insert("exit_code".into(), Value::Integer(e.exit_code() as i64));
            }
        }
        let mut versions = Table::new();
        versions.insert(
            "dymgnn".into(),
            Value::String(env!("CARGO_PKG_VERSION").into()),
        );
        versions.insert(
            "checkpoint_format".into(),
            Value::Integer(dymgnn::model::CHECKPOINT_VERSION as i64),
        );
        t.insert("versions".into(), Value::Table(versions));
        t.insert("config".into(), Value::Table(self.config.clone()));
        let inputs: Table = self
            .inputs
            .iter()
            .map(|(p, d)| (p.clone(), Value::String(d.clone())))
            .collect();
        t.insert("inputs".into(), Value::Table(inputs));
        t.insert(
            "outputs".into(),
            Value::Array(self.outputs.iter().cloned().map(Value::String).collect()),
        );
        let timings: Table = self
            .timings
            .iter()
            .map(|(k, v)| (k.clone(), Value::Float(*v)))
            .collect();
        t.insert("timings_seconds".into(), Value::Table(timings));
        t.insert(
            "notes".into(),
            Value::Array(self.notes.iter().cloned().map(Value::String).collect()),
        );
        toml::to_string(&t).expect("plain tables serialize")
    }

    pub fn write(&self, path: &Path, outcome: &Result<(), CliError>) -> std::io::Result<()> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)?;
        }
        dymgnn::fsutil::write_atomic(path, self.render(outcome).as_bytes())
    }
}

/// `base` with `suffix` appended to its file name.
pub fn sibling(base: &Path, suffix: &str) -> PathBuf {
    let mut name = base
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_default();
    name.push(suffix);
    base.with_file_name(name)
}
