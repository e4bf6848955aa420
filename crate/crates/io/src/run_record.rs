//! The `timt-run/1` record written by every CLI subcommand: the command,
//! its resolved parameters, and content hashes of every file read or
//! written. Records carry no timestamps, so identical runs produce
//! identical records.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{sha256_hex, to_json_bytes};
use crate::error::{read_file, write_file, IoError};

pub const RUN_VERSION: &str = "timt-run/1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub role: String,
    pub path: String,
    pub sha256: String,
}

impl FileDigest {
    pub fn of(role: &str, path: &Path) -> Result<Self, IoError> {
        Ok(FileDigest {
            role: role.to_string(),
            path: path.to_string_lossy().into_owned(),
            sha256: sha256_hex(&read_file(path)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub version: String,
    pub command: String,
    pub parameters: serde_json::Value,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub versions: BTreeMap<String, String>,
}

impl RunRecord {
    pub fn new(command: &str, parameters: serde_json::Value) -> Self {
        let versions = [
            ("timt-io", env!("CARGO_PKG_VERSION")),
            ("timt-core", timt_core::VERSION),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
        RunRecord {
            version: RUN_VERSION.to_string(),
            command: command.to_string(),
            parameters,
            inputs: Vec::new(),
            outputs: Vec::new(),
            versions,
        }
    }

    pub fn input(&mut self, role: &str, path: &Path) -> Result<(), IoError> {
        self.inputs.push(FileDigest::of(role, path)?);
        Ok(())
    }

    pub fn output(&mut self, role: &str, path: &Path) -> Result<(), IoError> {
        self.outputs.push(FileDigest::of(role, path)?);
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), IoError> {
        write_file(path, &to_json_bytes(self))
    }
}
