//! The `timt-segmentation/1` export: an `int32` little-endian label volume
//! in x-fastest order plus a JSON sidecar holding the segment table and the
//! full query specification. Background vertices carry label `-1`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use timt_core::queries::{segmentation_report, QuerySpec, ReportRow, Segment, Segmentation, BACKGROUND};
use timt_core::GridSpec;

use crate::dataset::{payload_name, to_json_bytes};
use crate::error::{parse_json, read_file, write_file, IoError};
use crate::tree_export::Direction;

pub const SEGMENTATION_VERSION: &str = "timt-segmentation/1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelPayload {
    pub path: String,
    pub dtype: String,
    pub byte_order: String,
    pub order: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentationSidecar {
    pub version: String,
    pub grid: GridSpec,
    pub direction: Direction,
    pub spec: QuerySpec,
    pub field_sha256: String,
    pub background: i32,
    pub labels: LabelPayload,
    /// Segments indexed by label; extreme values in the input orientation.
    pub segments: Vec<Segment>,
    /// The same segments sorted by extreme value, then id.
    pub report: Vec<ReportRow>,
    #[serde(default)]
    pub notes: Vec<String>,
}

impl SegmentationSidecar {
    /// Describes `seg`, computed on the field oriented by `direction`.
    pub fn new(seg: &Segmentation, direction: Direction, field_sha256: String, labels_path: String) -> Self {
        let segments: Vec<Segment> = seg
            .segments
            .iter()
            .map(|s| Segment {
                min_value: direction.restore(s.min_value),
                ..s.clone()
            })
            .collect();
        let oriented = Segmentation {
            segments: segments.clone(),
            labels: Vec::new(),
            ..seg.clone()
        };
        let mut report = segmentation_report(&oriented);
        if direction == Direction::Superlevel {
            report.sort_by(|a, b| b.min_value.total_cmp(&a.min_value).then(a.id.cmp(&b.id)));
        }
        SegmentationSidecar {
            version: SEGMENTATION_VERSION.to_string(),
            grid: seg.grid,
            direction,
            spec: seg.spec,
            field_sha256,
            background: BACKGROUND,
            labels: LabelPayload {
                path: labels_path,
                dtype: "i32".to_string(),
                byte_order: "little".to_string(),
                order: "x_fastest".to_string(),
            },
            segments,
            report,
            notes: seg.notes.clone(),
        }
    }
}

pub fn encode_labels(labels: &[i32]) -> Vec<u8> {
    labels.iter().flat_map(|l| l.to_le_bytes()).collect()
}

pub fn decode_labels(bytes: &[u8]) -> Vec<i32> {
    bytes
        .chunks_exact(4)
        .map(|c| i32::from_le_bytes(c.try_into().unwrap()))
        .collect()
}

/// Writes `<stem>.json` and `<stem>.labels`.
pub fn save_segmentation(
    seg: &Segmentation,
    direction: Direction,
    field_sha256: String,
    path: &Path,
) -> Result<SegmentationSidecar, IoError> {
    let labels_name = payload_name(path, "labels");
    let sidecar = SegmentationSidecar::new(seg, direction, field_sha256, labels_name.clone());
    let dir = path.parent().unwrap_or_else(|| Path::new(""));
    write_file(&dir.join(&labels_name), &encode_labels(&seg.labels))?;
    write_file(path, &to_json_bytes(&sidecar))?;
    Ok(sidecar)
}

pub fn load_segmentation(path: &Path) -> Result<(SegmentationSidecar, Vec<i32>), IoError> {
    let sidecar: SegmentationSidecar = parse_json(&read_file(path)?)?;
    if sidecar.version != SEGMENTATION_VERSION {
        return Err(IoError::UnknownVersion {
            expected: SEGMENTATION_VERSION,
            found: sidecar.version,
        });
    }
    let dir = path.parent().unwrap_or_else(|| Path::new(""));
    let bytes = read_file(&dir.join(&sidecar.labels.path))?;
    let expected = sidecar.grid.len() as u64 * 4;
    if bytes.len() as u64 != expected {
        return Err(IoError::PayloadLength {
            path: sidecar.labels.path.clone(),
            declared: expected,
            got: bytes.len() as u64,
        });
    }
    let labels = decode_labels(&bytes);
    let k = sidecar.segments.len() as i32;
    if let Some(i) = labels.iter().position(|&l| l != BACKGROUND && !(0..k).contains(&l)) {
        return Err(IoError::Mismatch(format!(
            "label {} at vertex {i} names no segment",
            labels[i]
        )));
    }
    Ok((sidecar, labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use timt_core::scalar::{Meaning, ScalarField};
    use timt_core::{compute_merge_tree, run_query};

    #[test]
    fn roundtrip_and_orientation() {
        let g = GridSpec::with_dims(5, 1, 1).unwrap();
        let f = ScalarField::new(g, vec![0.0, 2.0, 1.0, 3.0, 0.5], Meaning::Generic).unwrap();
        let dir = tempfile::tempdir().unwrap();
        for direction in [Direction::Sublevel, Direction::Superlevel] {
            let oriented = direction.oriented(&f);
            let t = compute_merge_tree(&oriented).unwrap();
            let seg = run_query(&oriented, &t, &QuerySpec::crown(0.75)).unwrap();
            let p = dir.path().join("seg.json");
            let written = save_segmentation(&seg, direction, "abc".into(), &p).unwrap();
            let (sidecar, labels) = load_segmentation(&p).unwrap();
            assert_eq!(sidecar, written);
            assert_eq!(labels, seg.labels);
            for s in &sidecar.segments {
                assert_eq!(s.min_value, f.values()[s.min_vertex]);
            }
            let extremes: Vec<f64> = sidecar.report.iter().map(|r| r.min_value).collect();
            match direction {
                Direction::Sublevel => assert!(extremes.windows(2).all(|w| w[0] <= w[1])),
                Direction::Superlevel => assert!(extremes.windows(2).all(|w| w[0] >= w[1])),
            }
        }
    }

    #[test]
    fn short_label_file_is_rejected() {
        let g = GridSpec::with_dims(3, 1, 1).unwrap();
        let f = ScalarField::new(g, vec![0.0, 1.0, 2.0], Meaning::Generic).unwrap();
        let t = compute_merge_tree(&f).unwrap();
        let seg = run_query(&f, &t, &QuerySpec::crown(1.0)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.json");
        save_segmentation(&seg, Direction::Sublevel, String::new(), &p).unwrap();
        std::fs::write(dir.path().join("s.labels"), [0u8; 8]).unwrap();
        assert!(matches!(load_segmentation(&p).unwrap_err(), IoError::PayloadLength { .. }));
    }
}
