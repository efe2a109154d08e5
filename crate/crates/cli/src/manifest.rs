//! Run manifests: every subcommand records its resolved flags, seed, input
//! digests, and toolkit version next to its outputs, so deterministic runs
//! can be reproduced bit-for-bit from the manifest alone.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub toolkit_version: String,
    pub seed: Option<u64>,
    /// All resolved flags, stringified.
    pub flags: BTreeMap<String, String>,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(subcommand: &str) -> RunManifest {
        RunManifest {
            subcommand: subcommand.to_string(),
            toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: None,
            flags: BTreeMap::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn flag(&mut self, name: &str, value: impl ToString) -> &mut Self {
        self.flags.insert(name.to_string(), value.to_string());
        self
    }

    pub fn flag_opt(&mut self, name: &str, value: &Option<impl ToString>) -> &mut Self {
        if let Some(v) = value {
            self.flags.insert(name.to_string(), v.to_string());
        }
        self
    }

    pub fn seed(&mut self, seed: u64) -> &mut Self {
        self.seed = Some(seed);
        self
    }

    pub fn input(&mut self, path: &Path) -> Result<&mut Self> {
        let bytes = std::fs::read(path)
            .with_context(|| format!("reading input {} for digest", path.display()))?;
        let digest = Sha256::digest(&bytes);
        let mut hex = String::with_capacity(64);
        for b in digest {
            hex.push_str(&format!("{b:02x}"));
        }
        self.inputs.push(InputDigest {
            path: path.display().to_string(),
            sha256: hex,
        });
        Ok(self)
    }

    pub fn output(&mut self, path: &Path) -> &mut Self {
        self.outputs.push(path.display().to_string());
        self
    }

    /// Writes the manifest JSON. The default location is
    /// "<primary output>.manifest.json", or "<subcommand>.manifest.json"
    /// in the working directory for subcommands that only print.
    pub fn write(&self, explicit: &Option<PathBuf>, primary_output: Option<&Path>) -> Result<PathBuf> {
        let path = match (explicit, primary_output) {
            (Some(p), _) => p.clone(),
            (None, Some(out)) => {
                let mut name = out.file_name().unwrap_or_default().to_os_string();
                name.push(".manifest.json");
                out.with_file_name(name)
            }
            (None, None) => PathBuf::from(format!("{}.manifest.json", self.subcommand)),
        };
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, json)
            .with_context(|| format!("writing manifest {}", path.display()))?;
        Ok(path)
    }
}

/// Six-significant-digit formatting for human-readable numeric output.
pub fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0.00000".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if (-4..6).contains(&mag) {
        let decimals = (5 - mag).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.5e}")
    }
}
