//! Dataset manifests and content hashes.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::camera::CameraPose;
use crate::error::{Error, Result};
use crate::scene::RenderSettings;

/// Lowercase hex SHA-256 of `bytes`.
pub fn content_hash(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn file_hash(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    Ok(content_hash(&std::fs::read(path).map_err(|e| Error::io(path, e))?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputFile {
    pub path: String,
    pub sha256: String,
}

/// One generated item: a scene document plus the camera and lights it uses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestItem {
    pub scene: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub room: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objects: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub camera: Option<CameraPose>,
    /// Indices of the active lights in the scene document.
    #[serde(default)]
    pub lights: Vec<usize>,
    #[serde(default)]
    pub removed_furniture: Vec<usize>,
    #[serde(default)]
    pub outputs: Vec<OutputFile>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub settings: Option<RenderSettings>,
    #[serde(default)]
    pub items: Vec<ManifestItem>,
    #[serde(default)]
    pub outputs: Vec<OutputFile>,
}

impl Manifest {
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Manifest> {
        toml::from_str(text).map_err(|e| Error::Format(e.to_string()))
    }
}
