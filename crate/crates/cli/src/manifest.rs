use std::fs;
use std::path::Path;

use rankset::data::SyntheticSpec;
use rankset::{CalibrationConfig, StopReason, SweepParam, TrialProtocol};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::Failure;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub role: String,
    pub path: String,
    pub sha256: String,
}

impl InputDigest {
    pub fn of(role: &str, path: &Path) -> Result<Self, Failure> {
        let bytes = fs::read(path).map_err(|e| Failure::input_io(path, e))?;
        Ok(Self {
            role: role.to_string(),
            path: path.display().to_string(),
            sha256: format!("{:x}", Sha256::digest(&bytes)),
        })
    }
}

/// Everything needed to trace an output back to its inputs and settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: Option<CalibrationConfig>,
    pub protocol: Option<TrialProtocol>,
    pub sweep: Option<SweepParam>,
    pub synthetic: Option<SyntheticSpec>,
    pub inputs: Vec<InputDigest>,
    pub seed: Option<u64>,
    pub queries: usize,
    pub lambda_hat: Option<f64>,
    pub stopped_reason: Option<StopReason>,
    pub outputs: Vec<String>,
    pub warnings: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config: None,
            protocol: None,
            sweep: None,
            synthetic: None,
            inputs: Vec::new(),
            seed: None,
            queries: 0,
            lambda_hat: None,
            stopped_reason: None,
            outputs: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn read(path: &Path) -> Result<Self, Failure> {
        let text = fs::read_to_string(path).map_err(|e| Failure::input_io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| Failure::input(format!("{}: not a run manifest: {e}", path.display())))
    }

    pub fn write(&self, path: &Path) -> Result<(), Failure> {
        write_json(path, self)
    }
}

/// A JSON report carrying the name of the manifest that produced it.
#[derive(Serialize)]
pub struct Referenced<'a, T: Serialize> {
    pub manifest: &'a str,
    #[serde(flatten)]
    pub body: &'a T,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| Failure::other(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Failure::output_io(path, e))
}
