//! The `timt-dataset/1` format: a JSON manifest plus raw little-endian
//! payload files with x-fastest vertex order.
//!
//! ```json
//! {
//!   "version": "timt-dataset/1",
//!   "grid": {"dims": [64, 64, 1], "spacing": [1, 1, 1], "connectivity": "edge4"},
//!   "channels": [
//!     {"name": "density", "unit": "kg/m^3", "dtype": "f32", "path": "blob.raw", "offset": 0}
//!   ]
//! }
//! ```
//!
//! Payload paths are relative to the manifest. Several channels may share a
//! file; the channels referencing a file must tile it exactly.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use timt_core::field::{Channel, MultiField, Provenance};
use timt_core::grid::GridSpec;
use timt_core::scalar::{Meaning, ScalarField};

use crate::error::{parse_json, read_file, write_file, IoError};

pub const DATASET_VERSION: &str = "timt-dataset/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    F32,
    F64,
}

impl Dtype {
    pub fn size(self) -> u64 {
        match self {
            Dtype::F32 => 4,
            Dtype::F64 => 8,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "f32" => Some(Dtype::F32),
            "f64" => Some(Dtype::F64),
            _ => None,
        }
    }
}

fn raw() -> Provenance {
    Provenance::Raw
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelDescriptor {
    pub name: String,
    #[serde(default)]
    pub unit: Option<String>,
    pub dtype: Dtype,
    pub path: String,
    #[serde(default)]
    pub offset: u64,
    #[serde(default = "raw")]
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub version: String,
    pub grid: GridSpec,
    pub channels: Vec<ChannelDescriptor>,
    /// Set when the file holds a scalar field rather than raw data.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meaning: Option<Meaning>,
}

impl DatasetManifest {
    pub fn parse(bytes: &[u8]) -> Result<Self, IoError> {
        let m: DatasetManifest = parse_json(bytes)?;
        if m.version != DATASET_VERSION {
            return Err(IoError::UnknownVersion {
                expected: DATASET_VERSION,
                found: m.version,
            });
        }
        m.grid.validate()?;
        Ok(m)
    }
}

/// A loaded data set and the manifest it came from.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub manifest: DatasetManifest,
    pub field: MultiField,
    /// Paths of the manifest and every payload file, manifest first.
    pub files: Vec<PathBuf>,
}

fn decode(bytes: &[u8], dtype: Dtype) -> Vec<f64> {
    match dtype {
        Dtype::F32 => bytes
            .chunks_exact(4)
            .map(|c| f64::from(f32::from_le_bytes(c.try_into().unwrap())))
            .collect(),
        Dtype::F64 => bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect(),
    }
}

fn encode(values: &[f64], dtype: Dtype, out: &mut Vec<u8>) {
    match dtype {
        Dtype::F32 => {
            for v in values {
                out.extend_from_slice(&(*v as f32).to_le_bytes());
            }
        }
        Dtype::F64 => {
            for v in values {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
}

fn base_dir(manifest: &Path) -> &Path {
    manifest.parent().unwrap_or_else(|| Path::new(""))
}

/// Reads a manifest and its payloads. Values are widened to `f64`.
pub fn load_dataset(path: &Path) -> Result<Dataset, IoError> {
    let manifest = DatasetManifest::parse(&read_file(path)?)?;
    let n = manifest.grid.len() as u64;
    let dir = base_dir(path);
    let mut payloads: BTreeMap<&str, Vec<u8>> = BTreeMap::new();
    let mut declared: BTreeMap<&str, u64> = BTreeMap::new();
    let mut files = vec![path.to_path_buf()];
    let mut channels = Vec::with_capacity(manifest.channels.len());
    for desc in &manifest.channels {
        if !payloads.contains_key(desc.path.as_str()) {
            let p = dir.join(&desc.path);
            payloads.insert(&desc.path, read_file(&p)?);
            files.push(p);
        }
        let bytes = &payloads[desc.path.as_str()];
        let need = n * desc.dtype.size();
        let have = (bytes.len() as u64).saturating_sub(desc.offset);
        if have < need {
            return Err(IoError::SizeMismatch {
                channel: desc.name.clone(),
                expected: need,
                got: have,
            });
        }
        *declared.entry(&desc.path).or_default() += need;
        let start = desc.offset as usize;
        let values = decode(&bytes[start..start + need as usize], desc.dtype);
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(IoError::NonFinite {
                channel: desc.name.clone(),
                index,
            });
        }
        channels.push(Channel {
            name: desc.name.clone(),
            unit: desc.unit.clone(),
            values,
            provenance: desc.provenance.clone(),
        });
    }
    for (file, bytes) in &payloads {
        let declared = declared[file];
        if declared != bytes.len() as u64 {
            return Err(IoError::PayloadLength {
                path: file.to_string(),
                declared,
                got: bytes.len() as u64,
            });
        }
    }
    check_no_overlap(&manifest, n)?;
    let field = MultiField::new(manifest.grid, channels)?;
    Ok(Dataset {
        manifest,
        field,
        files,
    })
}

fn check_no_overlap(manifest: &DatasetManifest, n: u64) -> Result<(), IoError> {
    let mut ranges: Vec<(&str, u64, u64, &str)> = manifest
        .channels
        .iter()
        .map(|c| (c.path.as_str(), c.offset, c.offset + n * c.dtype.size(), c.name.as_str()))
        .collect();
    ranges.sort();
    for w in ranges.windows(2) {
        if w[0].0 == w[1].0 && w[1].1 < w[0].2 {
            return Err(IoError::Mismatch(format!(
                "channels `{}` and `{}` overlap in `{}`",
                w[0].3, w[1].3, w[0].0
            )));
        }
    }
    Ok(())
}

/// Writes `mf` as `<stem>.json` plus one payload file `<stem>.raw` holding
/// every channel back to back.
pub fn save_dataset(
    mf: &MultiField,
    path: &Path,
    dtype: Dtype,
    meaning: Option<Meaning>,
) -> Result<DatasetManifest, IoError> {
    let payload_name = payload_name(path, "raw");
    let n = mf.len() as u64;
    let mut bytes = Vec::with_capacity((n * dtype.size()) as usize * mf.dimension());
    let mut channels = Vec::with_capacity(mf.dimension());
    for (k, ch) in mf.channels().iter().enumerate() {
        encode(&ch.values, dtype, &mut bytes);
        channels.push(ChannelDescriptor {
            name: ch.name.clone(),
            unit: ch.unit.clone(),
            dtype,
            path: payload_name.clone(),
            offset: k as u64 * n * dtype.size(),
            provenance: ch.provenance.clone(),
        });
    }
    let manifest = DatasetManifest {
        version: DATASET_VERSION.to_string(),
        grid: *mf.grid(),
        channels,
        meaning,
    };
    write_file(&base_dir(path).join(&payload_name), &bytes)?;
    write_file(path, &to_json_bytes(&manifest))?;
    Ok(manifest)
}

/// `<stem>.<ext>` next to `path`, as a bare file name.
pub(crate) fn payload_name(path: &Path, ext: &str) -> String {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "data".to_string());
    format!("{stem}.{ext}")
}

/// Pretty JSON with a trailing newline; the byte form of every JSON artifact.
pub fn to_json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("artifact serializes");
    out.push(b'\n');
    out
}

/// Writes a scalar field as a one-channel data set tagged with its meaning.
pub fn save_field(field: &ScalarField, name: &str, path: &Path) -> Result<DatasetManifest, IoError> {
    let mf = MultiField::new(*field.grid(), vec![Channel::raw(name, field.values().to_vec())])?;
    save_dataset(&mf, path, Dtype::F64, Some(field.meaning()))
}

/// Reads one channel of a data set as a scalar field.
///
/// `channel` may be omitted when the file holds a single channel. The
/// meaning recorded in the manifest is kept, otherwise the field is generic.
pub fn load_field(path: &Path, channel: Option<&str>) -> Result<(ScalarField, Dataset), IoError> {
    let ds = load_dataset(path)?;
    let ch = match channel {
        Some(name) => ds.field.channel(name)?,
        None if ds.field.dimension() == 1 => &ds.field.channels()[0],
        None => {
            return Err(IoError::Mismatch(format!(
                "data set has {} channels; choose one with --channel",
                ds.field.dimension()
            )))
        }
    };
    let meaning = ds.manifest.meaning.unwrap_or(Meaning::Generic);
    let field = ScalarField::new(*ds.field.grid(), ch.values.clone(), meaning)?;
    Ok((field, ds))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Content hash of a data set: the manifest bytes followed by every
/// payload file in manifest order.
pub fn dataset_hash(ds: &Dataset) -> Result<String, IoError> {
    let mut h = Sha256::new();
    for f in &ds.files {
        h.update(read_file(f)?);
    }
    Ok(hex::encode(h.finalize()))
}
