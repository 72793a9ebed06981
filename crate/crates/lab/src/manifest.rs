//! Run manifest: what produced the artifacts and their content hashes.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub code_version: String,
    pub experiment: String,
    pub config_sha256: String,
    pub wall_time_seconds: f64,
    /// Artifact path relative to the output directory, with its sha256.
    pub artifacts: BTreeMap<String, String>,
    pub warnings: Vec<String>,
    pub rows: usize,
    pub failed_rows: usize,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

pub fn code_version() -> String {
    format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"))
}

impl Manifest {
    /// Hashes the file at `out/rel` and records it.
    pub fn record(&mut self, out: &Path, rel: &str) -> anyhow::Result<()> {
        let bytes = std::fs::read(out.join(rel))?;
        self.artifacts.insert(rel.to_string(), sha256_hex(&bytes));
        Ok(())
    }

    pub fn warn(&mut self, w: impl Into<String>) {
        self.warnings.push(w.into());
    }
}
