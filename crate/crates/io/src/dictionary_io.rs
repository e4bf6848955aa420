//! The `timt-dictionary/1` format: a JSON header plus the `M x K` atom
//! matrix as row-major little-endian `f64`.
//!
//! The header records the attribute space the atoms live in (channel names
//! and per-channel scaling) so codes can be recomputed against a data set.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use timt_core::dictionary::{Dictionary, TrainingMeta};
use timt_core::field::{assemble_attribute_space, MultiField, Scaling};

use crate::dataset::{payload_name, to_json_bytes};
use crate::error::{parse_json, read_file, write_file, IoError};

pub const DICTIONARY_VERSION: &str = "timt-dictionary/1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixPayload {
    pub path: String,
    pub dtype: String,
    pub order: String,
    pub byte_order: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DictionaryHeader {
    pub version: String,
    pub m: usize,
    pub k: usize,
    pub t0: usize,
    pub seed: u64,
    pub iterations: usize,
    pub final_rmse: f64,
    pub rmse_history: Vec<f64>,
    pub reseeded: Vec<(usize, usize)>,
    pub channels: Vec<String>,
    pub scaling: Vec<Scaling>,
    pub payload: MatrixPayload,
}

impl DictionaryHeader {
    pub fn describe(d: &Dictionary, channels: &[String], scaling: &[Scaling], payload_path: String) -> Self {
        let meta = &d.meta;
        DictionaryHeader {
            version: DICTIONARY_VERSION.to_string(),
            m: d.dimension(),
            k: d.len(),
            t0: meta.t0,
            seed: meta.seed,
            iterations: meta.iterations,
            final_rmse: meta.final_rmse,
            rmse_history: meta.rmse_history.clone(),
            reseeded: meta.reseeded.clone(),
            channels: channels.to_vec(),
            scaling: scaling.to_vec(),
            payload: MatrixPayload {
                path: payload_path,
                dtype: "f64".to_string(),
                order: "row_major".to_string(),
                byte_order: "little".to_string(),
            },
        }
    }

    pub fn meta(&self) -> TrainingMeta {
        TrainingMeta {
            t0: self.t0,
            iterations: self.iterations,
            seed: self.seed,
            final_rmse: self.final_rmse,
            rmse_history: self.rmse_history.clone(),
            reseeded: self.reseeded.clone(),
        }
    }

    /// The attribute space of `mf` this dictionary was trained in.
    pub fn attribute_space(&self, mf: &MultiField) -> Result<MultiField, IoError> {
        Ok(assemble_attribute_space(mf, &self.channels, &self.scaling)?)
    }
}

/// A dictionary together with its attribute-space description.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredDictionary {
    pub header: DictionaryHeader,
    pub dictionary: Dictionary,
}

impl StoredDictionary {
    /// Wraps a freshly learned dictionary that has not been written yet.
    pub fn in_memory(dictionary: Dictionary, channels: &[String], scaling: &[Scaling]) -> Self {
        let header = DictionaryHeader::describe(&dictionary, channels, scaling, String::new());
        StoredDictionary { header, dictionary }
    }
}

/// Writes `<stem>.json` and `<stem>.bin`.
pub fn save_dictionary(
    d: &Dictionary,
    channels: &[String],
    scaling: &[Scaling],
    path: &Path,
) -> Result<DictionaryHeader, IoError> {
    if channels.len() != d.dimension() {
        return Err(IoError::Mismatch(format!(
            "dictionary has dimension {}, {} channel names given",
            d.dimension(),
            channels.len()
        )));
    }
    let bin = payload_name(path, "bin");
    let header = DictionaryHeader::describe(d, channels, scaling, bin.clone());
    let a = d.atoms();
    let mut bytes = Vec::with_capacity(a.len() * 8);
    for r in 0..a.nrows() {
        for c in 0..a.ncols() {
            bytes.extend_from_slice(&a[(r, c)].to_le_bytes());
        }
    }
    let dir = path.parent().unwrap_or_else(|| Path::new(""));
    write_file(&dir.join(bin), &bytes)?;
    write_file(path, &to_json_bytes(&header))?;
    Ok(header)
}

pub fn load_dictionary(path: &Path) -> Result<StoredDictionary, IoError> {
    let header: DictionaryHeader = parse_json(&read_file(path)?)?;
    if header.version != DICTIONARY_VERSION {
        return Err(IoError::UnknownVersion {
            expected: DICTIONARY_VERSION,
            found: header.version,
        });
    }
    if header.payload.dtype != "f64" || header.payload.order != "row_major" || header.payload.byte_order != "little" {
        return Err(IoError::doc("payload", "only little-endian row-major f64 is supported"));
    }
    if header.channels.len() != header.m {
        return Err(IoError::doc("channels", format!("expected {} names", header.m)));
    }
    let dir = path.parent().unwrap_or_else(|| Path::new(""));
    let bytes = read_file(&dir.join(&header.payload.path))?;
    let expected = (header.m * header.k * 8) as u64;
    if bytes.len() as u64 != expected {
        return Err(IoError::PayloadLength {
            path: header.payload.path.clone(),
            declared: expected,
            got: bytes.len() as u64,
        });
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let atoms = DMatrix::from_row_slice(header.m, header.k, &values);
    let dictionary = Dictionary::new(atoms)?.with_meta(header.meta());
    Ok(StoredDictionary { header, dictionary })
}
