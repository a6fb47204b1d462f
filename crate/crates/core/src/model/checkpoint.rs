//! Versioned checkpoint files.
//!
//! Layout: a UTF-8 header of `\n`-terminated lines, then the parameter payload
//! as little-endian `f64`s in manifest order.
//!
//! ```text
//! dymgnn-checkpoint
//! version 1
//! [config] <k>            k lines of key=value
//! [scaling] <k>           k lines of feature statistics (k = 0 when absent)
//! [params] <k>            k lines of: name rows cols offset
//! payload_bytes <b>
//! sha256 <hex>            over every preceding header byte plus the payload
//! end
//! ```

use std::path::Path;

use sha2::{Digest, Sha256};

use super::{Model, ModelConfig, ModelError, ParameterStore};
use crate::dataprep::FeatureSpec;
use crate::tensor::DenseMatrix;

pub const CHECKPOINT_MAGIC: &str = "dymgnn-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("not a checkpoint file")]
    Magic,
    #[error("checkpoint format version {found} is not supported (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("checkpoint is truncated")]
    Truncated,
    #[error("checkpoint checksum mismatch")]
    Checksum,
    #[error("malformed checkpoint header: {0}")]
    Format(String),
    #[error("checkpoint contents rejected: {0}")]
    Model(#[from] ModelError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A trained model plus the scaling statistics its inputs were prepared with.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: Model,
    pub scaling: Option<FeatureSpec>,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

impl Checkpoint {
    pub fn new(model: Model, scaling: Option<FeatureSpec>) -> Self {
        Self { model, scaling }
    }

    pub fn config(&self) -> &ModelConfig {
        &self.model.config
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut header = format!("{CHECKPOINT_MAGIC}\nversion {CHECKPOINT_VERSION}\n");
        let pairs = self.model.config.to_pairs();
        header.push_str(&format!("[config] {}\n", pairs.len()));
        for (k, v) in &pairs {
            header.push_str(&format!("{k}={v}\n"));
        }
        let scaling = self
            .scaling
            .as_ref()
            .map(FeatureSpec::render)
            .unwrap_or_default();
        header.push_str(&format!("[scaling] {}\n", scaling.lines().count()));
        header.push_str(&scaling);
        header.push_str(&format!("[params] {}\n", self.model.params.len()));
        let mut payload = Vec::new();
        for (name, m) in self.model.params.iter() {
            header.push_str(&format!(
                "{name} {} {} {}\n",
                m.rows(),
                m.cols(),
                payload.len()
            ));
            for v in m.values() {
                payload.extend_from_slice(&v.to_le_bytes());
            }
        }
        header.push_str(&format!("payload_bytes {}\n", payload.len()));
        let mut hasher = Sha256::new();
        hasher.update(header.as_bytes());
        hasher.update(&payload);
        header.push_str(&format!("sha256 {}\nend\n", hex(&hasher.finalize())));
        let mut out = header.into_bytes();
        out.extend_from_slice(&payload);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CheckpointError> {
        let mut cur = Cursor { bytes, pos: 0 };
        if cur.line()? != CHECKPOINT_MAGIC {
            return Err(CheckpointError::Magic);
        }
        let version = cur.keyed("version")?;
        let found: u32 = version.parse().map_err(|_| format_err("bad version"))?;
        if found != CHECKPOINT_VERSION {
            return Err(CheckpointError::Version {
                found,
                expected: CHECKPOINT_VERSION,
            });
        }

        let k = cur.section("[config]")?;
        let mut pairs = Vec::with_capacity(k.min(64));
        for _ in 0..k {
            let line = cur.line()?;
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format_err("config line without '='"))?;
            pairs.push((key.to_string(), value.to_string()));
        }
        let config = ModelConfig::from_pairs(&pairs)?;

        let k = cur.section("[scaling]")?;
        let mut text = String::new();
        for _ in 0..k {
            text.push_str(cur.line()?);
            text.push('\n');
        }
        let scaling = if k == 0 {
            None
        } else {
            Some(FeatureSpec::parse(&text).map_err(|e| format_err(&e.to_string()))?)
        };

        let k = cur.section("[params]")?;
        let mut manifest = Vec::with_capacity(k.min(1024));
        for _ in 0..k {
            let parts: Vec<&str> = cur.line()?.split(' ').collect();
            let [name, rows, cols, offset] = parts.as_slice() else {
                return Err(format_err("parameter line needs name rows cols offset"));
            };
            let num = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| format_err("bad parameter dimension"))
            };
            manifest.push((name.to_string(), num(rows)?, num(cols)?, num(offset)?));
        }
        let payload_bytes: usize = cur
            .keyed("payload_bytes")?
            .parse()
            .map_err(|_| format_err("bad payload size"))?;
        let hashed_end = cur.pos;
        let digest = cur.keyed("sha256")?.to_string();
        if cur.line()? != "end" {
            return Err(format_err("missing end marker"));
        }
        let payload = &bytes[cur.pos..];
        if payload.len() < payload_bytes {
            return Err(CheckpointError::Truncated);
        }
        if payload.len() > payload_bytes {
            return Err(format_err("trailing bytes after payload"));
        }
        let mut hasher = Sha256::new();
        hasher.update(&bytes[..hashed_end]);
        hasher.update(payload);
        if hex(&hasher.finalize()) != digest {
            return Err(CheckpointError::Checksum);
        }

        let mut params = ParameterStore::new();
        let mut expected_offset = 0usize;
        for (name, rows, cols, offset) in manifest {
            let len = rows
                .checked_mul(cols)
                .and_then(|n| n.checked_mul(8))
                .ok_or_else(|| format_err("size overflow"))?;
            if offset != expected_offset || offset + len > payload.len() {
                return Err(format_err("parameter offsets do not tile the payload"));
            }
            let values = payload[offset..offset + len]
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            params
                .insert(
                    name,
                    DenseMatrix::from_vec(rows, cols, values).map_err(ModelError::from)?,
                )
                .map_err(ModelError::from)?;
            expected_offset += len;
        }
        if expected_offset != payload.len() {
            return Err(format_err("payload has unaccounted bytes"));
        }
        Ok(Self {
            model: Model::from_parts(config, params)?,
            scaling,
        })
    }

    /// Atomic save: a crash mid-write never leaves a partial checkpoint at `path`.
    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        crate::fsutil::write_atomic(path, &self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

fn format_err(msg: &str) -> CheckpointError {
    CheckpointError::Format(msg.to_string())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn line(&mut self) -> Result<&'a str, CheckpointError> {
        let rest = &self.bytes[self.pos..];
        let end = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or(CheckpointError::Truncated)?;
        self.pos += end + 1;
        std::str::from_utf8(&rest[..end]).map_err(|_| format_err("header is not UTF-8"))
    }

    fn keyed(&mut self, key: &str) -> Result<&'a str, CheckpointError> {
        let line = self.line()?;
        line.strip_prefix(key)
            .and_then(|r| r.strip_prefix(' '))
            .ok_or_else(|| format_err(&format!("expected '{key}'")))
    }

    fn section(&mut self, name: &str) -> Result<usize, CheckpointError> {
        self.keyed(name)?
            .parse()
            .map_err(|_| format_err(&format!("bad {name} count")))
    }
}
