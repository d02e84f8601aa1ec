//! Exit statuses, run manifests and atomic file output.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const EXIT_OK: u8 = 0;
pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_DEGENERATE: u8 = 3;
pub const EXIT_IO: u8 = 4;

/// How a successful command finished.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// Completed, but a reported statistic carries an infinite/undefined flag.
    Degenerate,
}

impl Status {
    pub fn code(self) -> u8 {
        match self {
            Status::Ok => EXIT_OK,
            Status::Degenerate => EXIT_DEGENERATE,
        }
    }
}

#[derive(Debug)]
pub enum Failure {
    Validation(anyhow::Error),
    Io(anyhow::Error),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => EXIT_VALIDATION,
            Failure::Io(_) => EXIT_IO,
        }
    }

    pub fn validation(e: impl Into<anyhow::Error>) -> Self {
        Failure::Validation(e.into())
    }

    pub fn io(e: impl Into<anyhow::Error>) -> Self {
        Failure::Io(e.into())
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Validation(e) => write!(f, "validation error: {e:#}"),
            Failure::Io(e) => write!(f, "I/O error: {e:#}"),
        }
    }
}

impl From<winratio::io::IoError> for Failure {
    fn from(e: winratio::io::IoError) -> Self {
        if e.is_io() {
            Failure::io(e)
        } else {
            Failure::validation(e)
        }
    }
}

pub type CmdResult = Result<Status, Failure>;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn read_input(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).with_context(|| format!("reading {}", path.display())).map_err(Failure::io)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to reproduce a result file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub inputs: Vec<InputDigest>,
    pub seeds: Vec<u64>,
    pub tool_version: String,
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value, inputs: Vec<InputDigest>, seeds: Vec<u64>) -> Self {
        Self {
            command: command.to_string(),
            config,
            inputs,
            seeds,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        }
    }

    /// Digest of everything except the timestamp; equal digests mean equal
    /// numeric outputs.
    pub fn run_digest(&self) -> String {
        let v = serde_json::json!({
            "command": self.command,
            "config": self.config,
            "inputs": self.inputs,
            "seeds": self.seeds,
            "tool_version": self.tool_version,
        });
        sha256_hex(v.to_string().as_bytes())
    }

    pub fn reference(&self, file: &str) -> ManifestRef {
        ManifestRef { file: file.to_string(), run_digest: self.run_digest() }
    }
}

/// Pointer from a result file to its sidecar manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRef {
    pub file: String,
    pub run_digest: String,
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let name = out.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{name}.manifest.json"))
}

pub fn file_name(p: &Path) -> String {
    p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Writes `bytes` to a temporary file next to `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let io = |e: std::io::Error| Failure::io(anyhow::Error::new(e).context(format!("writing {}", path.display())));
    let mut tmp = tempfile::Builder::new().prefix(".winratio-").tempfile_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.flush().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

pub fn to_json<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_vec_pretty(v).expect("serializable");
    s.push(b'\n');
    s
}

/// Writes a result file and its sidecar manifest.
pub fn write_with_manifest(path: &Path, bytes: &[u8], manifest: &RunManifest) -> Result<(), Failure> {
    write_atomic(&manifest_path(path), &to_json(manifest))?;
    write_atomic(path, bytes)
}

/// How a report points at its manifest: a sidecar file for reports written to
/// disk, the manifest itself for reports printed to stdout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ManifestLink {
    Sidecar(ManifestRef),
    Embedded(RunManifest),
}

/// Writes a JSON report to `out` (plus sidecar manifest) or prints it.
pub fn emit<T: Serialize>(out: Option<&Path>, manifest: RunManifest, body: impl FnOnce(ManifestLink) -> T) -> Result<(), Failure> {
    match out {
        Some(path) => {
            let link = ManifestLink::Sidecar(manifest.reference(&file_name(&manifest_path(path))));
            write_with_manifest(path, &to_json(&body(link)), &manifest)
        }
        None => {
            let bytes = to_json(&body(ManifestLink::Embedded(manifest)));
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(&bytes).and_then(|_| stdout.flush()).map_err(Failure::io)
        }
    }
}

pub fn digest(path: &Path, bytes: &[u8]) -> InputDigest {
    InputDigest { path: path.display().to_string(), sha256: sha256_hex(bytes) }
}
