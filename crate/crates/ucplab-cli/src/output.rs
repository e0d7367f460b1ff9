//! Output files and the run manifest.

use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::Failure;

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).unwrap_or_else(|e| format!("{{\"error\": \"{e}\"}}"));
    s.push('\n');
    s
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub command: String,
    pub config_path: Option<String>,
    /// SHA-256 of the resolved config as compact JSON.
    pub config_hash: String,
    pub seed: Option<u64>,
    pub out_dir: String,
    pub tool_version: String,
    pub files: Vec<(String, String)>,
}

impl Manifest {
    pub fn new(command: &str, config: Option<&Path>, resolved: &Value, seed: Option<u64>, out: &Path) -> Self {
        let compact = serde_json::to_string(resolved).unwrap_or_default();
        Manifest {
            command: command.into(),
            config_path: config.map(|p| p.display().to_string()),
            config_hash: sha256_hex(compact.as_bytes()),
            seed,
            out_dir: out.display().to_string(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            files: Vec::new(),
        }
    }
}

/// Writes `files` into `out` followed by `manifest.json` listing their hashes.
pub fn write_outputs(out: &Path, manifest: &Manifest, files: &[(&str, String)]) -> Result<(), Failure> {
    std::fs::create_dir_all(out)
        .map_err(|e| Failure::Input(format!("cannot create output directory {}: {e}", out.display())))?;
    let mut m = manifest.clone();
    m.files.clear();
    for (name, body) in files {
        std::fs::write(out.join(name), body)?;
        m.files.push(((*name).to_string(), sha256_hex(body.as_bytes())));
    }
    std::fs::write(out.join("manifest.json"), pretty(&m))?;
    Ok(())
}

/// `step,x1,...,xd` rows of the witness path.
pub fn path_csv(witness: &Value) -> String {
    let mut s = String::new();
    let Some(points) = witness["points"].as_array() else {
        return s;
    };
    let d = witness["d"].as_u64().unwrap_or(0) as usize;
    s.push_str("step");
    for i in 1..=d {
        s.push_str(&format!(",x{i}"));
    }
    s.push('\n');
    for (k, p) in points.iter().enumerate() {
        s.push_str(&k.to_string());
        for x in p.as_array().into_iter().flatten() {
            s.push_str(&format!(",{}", x.as_f64().unwrap_or(f64::NAN)));
        }
        s.push('\n');
    }
    s
}
