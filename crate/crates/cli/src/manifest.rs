//! Run manifests: what was run, on which data, with which settings.
//!
//! The manifest hash covers everything except the timestamp, so two runs
//! with the same inputs share a hash.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use locker_core::jsonfmt;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub tool_version: &'static str,
    pub command: String,
    /// Arguments after the program name.
    pub arguments: Vec<String>,
    pub config: Value,
    pub instance_hash: Option<String>,
    pub timestamp_unix: u64,
}

#[derive(Serialize)]
struct Hashed<'a> {
    tool: &'a str,
    tool_version: &'a str,
    command: &'a str,
    arguments: &'a [String],
    config: &'a Value,
    instance_hash: &'a Option<String>,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    manifest_hash: &'a str,
    manifest: &'a RunManifest,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

impl RunManifest {
    pub fn new(command: &str, config: Value, instance_hash: Option<String>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            tool_version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            arguments: std::env::args().skip(1).collect(),
            config,
            instance_hash,
            timestamp_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
        }
    }

    pub fn hash(&self) -> String {
        let h = Hashed {
            tool: self.tool,
            tool_version: self.tool_version,
            command: &self.command,
            arguments: &self.arguments,
            config: &self.config,
            instance_hash: &self.instance_hash,
        };
        sha256_hex(jsonfmt::to_string(&h).expect("manifest is serializable").as_bytes())
    }

    /// Writes `<out>.manifest.json` next to an output file.
    pub fn write_sidecar(&self, out: &Path) -> std::io::Result<PathBuf> {
        let mut name = out.as_os_str().to_owned();
        name.push(".manifest.json");
        let path = PathBuf::from(name);
        let hash = self.hash();
        let text = jsonfmt::to_string(&Sidecar {
            manifest_hash: &hash,
            manifest: self,
        })
        .expect("manifest is serializable");
        std::fs::write(&path, text)?;
        Ok(path)
    }
}
