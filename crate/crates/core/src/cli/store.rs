//! Single-file model store: a header line carrying the format version and a SHA-256 of
//! the body, then the body as pretty-printed JSON.
//!
//! ```text
//! loadcurve-store 1 sha256:<64 hex digits>
//! { ... }
//! ```

use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::gam::GamModel;
use crate::pipeline::{ModelRegistry, PipelineConfig};

pub const MAGIC: &str = "loadcurve-store";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("cannot access model store: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a model store: bad header line")]
    Header,
    #[error("model store format version {found} is not supported (expected {FORMAT_VERSION})")]
    Version { found: String },
    #[error("model store checksum mismatch: header says {expected}, body hashes to {found}")]
    Checksum { expected: String, found: String },
    #[error("model store body is malformed: {0}")]
    Body(#[from] serde_json::Error),
}

/// Training windows recorded for the no-look-ahead audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingWindows {
    pub gam_first_week: NaiveDate,
    /// Last day of the last week used by the trend model.
    pub gam_last_day: NaiveDate,
    /// Curve models use response days strictly before this date.
    pub curve_cutoff: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelStore {
    pub format_version: u32,
    pub pipeline: PipelineConfig,
    /// Week-index origin of the history the models were fitted on.
    pub origin: NaiveDate,
    pub windows: TrainingWindows,
    pub gam: GamModel,
    pub registry: ModelRegistry,
}

fn digest(body: &str) -> String {
    hex::encode(Sha256::digest(body.as_bytes()))
}

impl ModelStore {
    pub fn to_text(&self) -> Result<String, StoreError> {
        let body = serde_json::to_string_pretty(self)?;
        Ok(format!("{MAGIC} {FORMAT_VERSION} sha256:{}\n{body}\n", digest(&body)))
    }

    /// Parse and verify a store. Nothing is deserialized unless the checksum matches.
    pub fn from_text(text: &str) -> Result<Self, StoreError> {
        let (header, body) = text.split_once('\n').ok_or(StoreError::Header)?;
        let body = body.strip_suffix('\n').unwrap_or(body);
        let mut parts = header.split(' ');
        if parts.next() != Some(MAGIC) {
            return Err(StoreError::Header);
        }
        let version = parts.next().ok_or(StoreError::Header)?;
        if version != FORMAT_VERSION.to_string() {
            return Err(StoreError::Version {
                found: version.to_string(),
            });
        }
        let expected = parts
            .next()
            .and_then(|s| s.strip_prefix("sha256:"))
            .ok_or(StoreError::Header)?;
        if parts.next().is_some() {
            return Err(StoreError::Header);
        }
        let found = digest(body);
        if found != expected {
            return Err(StoreError::Checksum {
                expected: expected.to_string(),
                found,
            });
        }
        let store: ModelStore = serde_json::from_str(body)?;
        if store.format_version != FORMAT_VERSION {
            return Err(StoreError::Version {
                found: store.format_version.to_string(),
            });
        }
        Ok(store)
    }

    pub fn save(&self, path: &Path) -> Result<(), StoreError> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, self.to_text()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, StoreError> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}
