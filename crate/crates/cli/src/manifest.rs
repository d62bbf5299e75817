use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use elastic_core::io::CurveDocument;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Optional override: relative output paths are resolved against this directory.
pub const OUT_DIR_ENV: &str = "ELASTIC_OUT_DIR";

#[derive(Debug, Clone, Serialize)]
pub struct AbortInfo {
    pub time: f64,
    pub reason: String,
}

/// Inputs read, outputs written and results produced during one run.
pub struct Context {
    out_dir: Option<PathBuf>,
    pub inputs: BTreeMap<String, String>,
    pub outputs: Vec<String>,
    pub result: Option<Value>,
    pub abort: Option<AbortInfo>,
}

impl Context {
    pub fn from_env() -> Self {
        let out_dir = std::env::var_os(OUT_DIR_ENV).filter(|s| !s.is_empty()).map(PathBuf::from);
        Context { out_dir, inputs: BTreeMap::new(), outputs: Vec::new(), result: None, abort: None }
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        match &self.out_dir {
            Some(dir) if path.is_relative() => dir.join(path),
            _ => path.to_path_buf(),
        }
    }

    /// Reads an input file and records its SHA-256.
    pub fn read(&mut self, path: &Path) -> Result<Vec<u8>, CliError> {
        let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
        let digest = Sha256::digest(&bytes);
        self.inputs.insert(path.display().to_string(), hex::encode(digest));
        Ok(bytes)
    }

    pub fn load(&mut self, path: &Path) -> Result<CurveDocument, CliError> {
        let bytes = self.read(path)?;
        let text = String::from_utf8(bytes).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        CurveDocument::from_json(&text).map_err(|e| CliError::document(path, e))
    }

    /// Resolved output path (parent directories created) and records it.
    pub fn output(&mut self, path: &Path) -> Result<PathBuf, CliError> {
        let p = self.resolve(path);
        if let Some(parent) = p.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        self.outputs.push(p.display().to_string());
        Ok(p)
    }

    pub fn save(&mut self, path: &Path, doc: &CurveDocument) -> Result<(), CliError> {
        let p = self.output(path)?;
        doc.save(&p).map_err(|e| CliError::document(&p, e))
    }
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub config: Value,
    /// SHA-256 of every input file, keyed by path.
    pub inputs: BTreeMap<String, String>,
    pub outputs: Vec<String>,
    pub tool_version: String,
    pub wall_time_seconds: f64,
    /// `ok`, `io`, `validation` or `numerical`.
    pub status: String,
    pub exit_code: u8,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub abort: Option<AbortInfo>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<Value>,
}

impl RunManifest {
    pub fn new(
        command: &str,
        argv: Vec<String>,
        config: Value,
        ctx: &Context,
        wall: Duration,
        error: Option<&CliError>,
    ) -> Self {
        RunManifest {
            command: command.to_string(),
            argv,
            config,
            inputs: ctx.inputs.clone(),
            outputs: ctx.outputs.clone(),
            tool_version: format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION")),
            wall_time_seconds: wall.as_secs_f64(),
            status: error.map_or("ok", CliError::kind).to_string(),
            exit_code: error.map_or(0, CliError::exit_code),
            error: error.map(|e| e.message().to_string()),
            abort: ctx.abort.clone(),
            result: ctx.result.clone(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        fs::write(path, text).map_err(|e| CliError::io(path, e))
    }
}
