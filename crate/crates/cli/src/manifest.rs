//! Run manifests: configuration, seed and content hashes of every input and
//! output file. No timestamps, so identical runs give identical bytes.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn sha256_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(sha256_bytes(&bytes))
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub seed: Option<u64>,
    pub template_version: &'static str,
    pub config: Value,
    /// Input label to content hash.
    pub inputs: BTreeMap<String, String>,
    /// Output file name (relative to the output directory) to content hash.
    pub outputs: BTreeMap<String, String>,
}

impl Manifest {
    pub fn new(command: &str, seed: Option<u64>, config: &impl Serialize) -> Result<Self> {
        Ok(Self {
            command: command.to_string(),
            seed,
            template_version: shopbench_core::templates::TEMPLATE_VERSION,
            config: serde_json::to_value(config)?,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
        })
    }

    pub fn input_bytes(&mut self, label: &str, bytes: &[u8]) {
        self.inputs.insert(label.to_string(), sha256_bytes(bytes));
    }

    pub fn input_file(&mut self, path: &Path) -> Result<()> {
        self.inputs.insert(path.display().to_string(), sha256_file(path)?);
        Ok(())
    }

    /// Hashes the named outputs and writes the manifest beside them.
    pub fn finish(mut self, out: &Path, files: &[&str]) -> Result<PathBuf> {
        for f in files {
            self.outputs.insert(f.to_string(), sha256_file(&out.join(f))?);
        }
        let path = out.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(&self)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}
