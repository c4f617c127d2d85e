use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{entity}.{field} references missing {target} #{index}")]
    UnresolvedReference {
        entity: String,
        field: &'static str,
        target: &'static str,
        index: usize,
    },

    #[error("invalid scene: {0}")]
    Invalid(String),

    #[error("mesh {path}: {message}")]
    Mesh { path: String, message: String },

    #[error("empty mesh: {0}")]
    EmptyMesh(String),

    #[error("no active light in scene")]
    NoActiveLight,

    #[error("material #{0} is emissive-only and has no BRDF")]
    EmissiveOnlyMaterial(usize),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("image format: {0}")]
    Format(String),

    #[error("unknown encoding: {0}")]
    UnknownEncoding(String),

    #[error("invalid camera: {0}")]
    InvalidCamera(String),

    #[error("empty asset library")]
    EmptyAssets,

    #[error("object placement failed: {0}")]
    Placement(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
