use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;
use timt_core::dictionary::DictionaryError;
use timt_core::field::FieldError;
use timt_core::grid::GridError;
use timt_core::merge_tree::MergeTreeError;
use timt_core::queries::QueryError;
use timt_core::scalar::ScalarFieldError;
use timt_core::stability::StabilityError;
use timt_core::traits::TraitError;

/// A problem in a JSON document, located by its path inside the document.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DocIssue {
    pub path: String,
    pub message: String,
}

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid document at `{}`: {}", .0.path, .0.message)]
    Document(DocIssue),
    #[error("unsupported version `{found}`, expected `{expected}`")]
    UnknownVersion { expected: &'static str, found: String },
    #[error("channel `{channel}`: payload needs {expected} bytes, found {got}")]
    SizeMismatch {
        channel: String,
        expected: u64,
        got: u64,
    },
    #[error("payload file `{path}` has {got} bytes but its channels declare {declared}")]
    PayloadLength { path: String, declared: u64, got: u64 },
    #[error("channel `{channel}` has a non-finite value at vertex {index}")]
    NonFinite { channel: String, index: usize },
    #[error("{0}")]
    Mismatch(String),
    #[error("invalid fixture parameters: {0}")]
    Fixture(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Scalar(#[from] ScalarFieldError),
    #[error(transparent)]
    Trait(#[from] TraitError),
    #[error(transparent)]
    Tree(#[from] MergeTreeError),
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error(transparent)]
    Dictionary(#[from] DictionaryError),
    #[error(transparent)]
    Stability(#[from] StabilityError),
}

impl IoError {
    pub fn file(path: &Path, source: std::io::Error) -> Self {
        IoError::File {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn doc(path: impl Into<String>, message: impl Into<String>) -> Self {
        IoError::Document(DocIssue {
            path: path.into(),
            message: message.into(),
        })
    }

    /// Short machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            IoError::File { .. } => "file",
            IoError::Document(_) => "invalid_document",
            IoError::UnknownVersion { .. } => "unknown_version",
            IoError::SizeMismatch { .. } | IoError::PayloadLength { .. } => "size_mismatch",
            IoError::NonFinite { .. } => "non_finite",
            IoError::Mismatch(_) => "mismatch",
            IoError::Fixture(_) => "invalid_fixture",
            IoError::Grid(_) => "grid",
            IoError::Field(_) => "field",
            IoError::Scalar(_) => "scalar_field",
            IoError::Trait(_) => "trait",
            IoError::Tree(_) => "merge_tree",
            IoError::Query(_) => "query",
            IoError::Dictionary(_) => "dictionary",
            IoError::Stability(_) => "stability",
        }
    }

    /// `{"error": {"kind", "message", ...}}` as printed by the CLI.
    pub fn to_json(&self) -> serde_json::Value {
        let mut err = serde_json::json!({
            "kind": self.kind(),
            "message": self.to_string(),
        });
        match self {
            IoError::Document(issue) => err["path"] = issue.path.clone().into(),
            IoError::SizeMismatch { channel, .. } | IoError::NonFinite { channel, .. } => {
                err["channel"] = channel.clone().into()
            }
            _ => {}
        }
        if let IoError::NonFinite { index, .. } = self {
            err["index"] = (*index).into();
        }
        serde_json::json!({ "error": err })
    }
}

/// Parses JSON into `T`, reporting the failing path on error.
pub fn parse_json<T: serde::de::DeserializeOwned>(bytes: &[u8]) -> Result<T, IoError> {
    let mut de = serde_json::Deserializer::from_slice(bytes);
    let value = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        IoError::doc(path, e.inner().to_string())
    })?;
    de.end().map_err(|e| IoError::doc(".", e.to_string()))?;
    Ok(value)
}

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>, IoError> {
    std::fs::read(path).map_err(|e| IoError::file(path, e))
}

/// Writes `bytes`, creating missing parent directories.
pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| IoError::file(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| IoError::file(path, e))
}
