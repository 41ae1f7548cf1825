//! Output plumbing: result target (stdout or file), run manifests, and
//! deterministic float formatting.

use std::io::Write;
use std::path::PathBuf;

use serde::Serialize;
use sha2::{Digest, Sha256};

use ampsup_core::error::{Error, Result};

/// Shortest round-trip decimal form; identical across runs and thread
/// counts for identical inputs.
pub fn csv_f64(x: f64) -> String {
    format!("{x}")
}

/// Run manifest written alongside every result.
#[derive(Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config_sha256: String,
    pub threads: usize,
    pub budget_elements: usize,
    pub seed: u64,
    pub flags: std::collections::BTreeMap<String, bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Manifest {
    pub fn new(config_bytes: &[u8], threads: usize, budget_elements: usize, seed: u64) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(config_bytes);
        let digest = hasher.finalize();
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        Manifest {
            tool: "ampsup",
            version: env!("CARGO_PKG_VERSION"),
            command: String::new(),
            config_sha256: hex,
            threads,
            budget_elements,
            seed,
            flags: Default::default(),
            note: None,
        }
    }

    pub fn set_command(&mut self, cmd: &str) {
        self.command = cmd.to_string();
    }

    pub fn set_flag(&mut self, name: &str, value: bool) {
        self.flags.insert(name.to_string(), value);
    }

    pub fn set_note(&mut self, note: &str) {
        self.note = Some(note.to_string());
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}

/// Where results go; the manifest lands next to the file, or on stderr when
/// results stream to stdout.
pub struct OutputTarget {
    path: Option<PathBuf>,
    buffer: String,
}

impl OutputTarget {
    pub fn new(path: Option<PathBuf>) -> Self {
        OutputTarget {
            path,
            buffer: String::new(),
        }
    }

    pub fn write_str(&mut self, s: &str) -> Result<()> {
        self.buffer.push_str(s);
        if !s.ends_with('\n') {
            self.buffer.push('\n');
        }
        Ok(())
    }

    pub fn finish(&mut self, manifest: &Manifest) -> Result<()> {
        match &self.path {
            Some(p) => {
                std::fs::write(p, self.buffer.as_bytes())
                    .map_err(|e| Error::config(format!("cannot write {}: {e}", p.display())))?;
                let mpath = manifest_path(p);
                std::fs::write(&mpath, manifest.to_json())
                    .map_err(|e| Error::config(format!("cannot write {}: {e}", mpath.display())))?;
            }
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout
                    .write_all(self.buffer.as_bytes())
                    .map_err(|e| Error::config(format!("stdout: {e}")))?;
                eprintln!("{}", manifest.to_json());
            }
        }
        Ok(())
    }
}

pub fn manifest_path(result: &std::path::Path) -> PathBuf {
    let mut s = result.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}
