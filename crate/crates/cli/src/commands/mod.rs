use std::path::{Path, PathBuf};

use crate::error::CliError;

pub mod build;
pub mod eval;
pub mod explain;
pub mod synth;
pub mod train;

/// Where relative paths are resolved.
#[derive(Debug, Clone)]
pub struct Context {
    pub root: PathBuf,
}

impl Context {
    pub fn path(&self, p: &str) -> PathBuf {
        let p = Path::new(p);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.root.join(p)
        }
    }
}

/// Serializes rows to CSV in memory and writes them atomically.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    dymgnn::fsutil::write_atomic(path, &bytes)?;
    Ok(())
}

pub fn ensure_exists(path: &Path, what: &str) -> Result<(), CliError> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::Data(format!(
            "{what} not found: {}",
            path.display()
        )))
    }
}
