//! The `timt-tree/1` export: node and arc tables of a merge tree with its
//! persistence pairing and branch decomposition.
//!
//! Nodes appear in sweep order and arcs in lower-node order, so two exports
//! of the same field diff cleanly. Values are written in the orientation of
//! the input field; for a superlevel tree the sweep runs over the negated
//! field and every exported value is negated back.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use timt_core::merge_tree::{
    branch_decomposition, hypervolume_per_pair, persistence_pairs, Metric, NodeKind,
};
use timt_core::queries::Simplification;
use timt_core::scalar::ScalarField;
use timt_core::{compute_merge_tree, GridSpec, MergeTree};

use crate::dataset::to_json_bytes;
use crate::error::{parse_json, read_file, write_file, IoError};

pub const TREE_VERSION: &str = "timt-tree/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    #[default]
    Sublevel,
    Superlevel,
}

impl Direction {
    pub fn from_superlevel(superlevel: bool) -> Self {
        if superlevel {
            Direction::Superlevel
        } else {
            Direction::Sublevel
        }
    }

    fn sign(self) -> f64 {
        match self {
            Direction::Sublevel => 1.0,
            Direction::Superlevel => -1.0,
        }
    }

    /// The field whose sub-level sets this direction sweeps.
    pub fn oriented(self, field: &ScalarField) -> ScalarField {
        match self {
            Direction::Sublevel => field.clone(),
            Direction::Superlevel => field.negated(),
        }
    }

    /// Maps a swept value back to the input orientation.
    pub fn restore(self, v: f64) -> f64 {
        self.sign() * v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRow {
    pub id: usize,
    pub vertex: usize,
    pub value: f64,
    pub kind: NodeKind,
    /// Branch owning the arc above this node; the root reports the main branch.
    pub branch: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArcRow {
    pub id: usize,
    pub lower: usize,
    pub upper: usize,
    pub branch: usize,
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRow {
    pub min: usize,
    pub partner: usize,
    pub persistence: f64,
    pub hypervolume: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchRow {
    pub id: usize,
    pub min: usize,
    pub partner: usize,
    pub persistence: f64,
    pub parent: Option<usize>,
    pub arcs: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeExport {
    pub version: String,
    pub grid: GridSpec,
    pub direction: Direction,
    pub tie_rule: String,
    pub simplification: Simplification,
    pub field_sha256: String,
    pub nodes: Vec<NodeRow>,
    pub arcs: Vec<ArcRow>,
    pub pairs: Vec<PairRow>,
    pub branches: Vec<BranchRow>,
}

impl TreeExport {
    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.kind == NodeKind::LeafMinimum).count()
    }

    pub fn saddle_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.kind == NodeKind::Saddle).count()
    }

    pub fn parse(bytes: &[u8]) -> Result<Self, IoError> {
        let t: TreeExport = parse_json(bytes)?;
        if t.version != TREE_VERSION {
            return Err(IoError::UnknownVersion {
                expected: TREE_VERSION,
                found: t.version,
            });
        }
        Ok(t)
    }
}

/// Hash of a field's grid and values, used to tie artifacts to their input.
pub fn field_hash(field: &ScalarField) -> String {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(field.grid()).expect("grid serializes"));
    for v in field.values() {
        h.update(v.to_le_bytes());
    }
    hex::encode(h.finalize())
}

/// Builds the (optionally simplified) tree of `field` in `direction`.
pub fn build_tree(
    field: &ScalarField,
    direction: Direction,
    simplification: Simplification,
) -> Result<MergeTree, IoError> {
    let tree = compute_merge_tree(&direction.oriented(field))?;
    if simplification.threshold > 0.0 {
        Ok(tree.simplify(simplification.metric, simplification.threshold)?)
    } else {
        Ok(tree)
    }
}

pub fn export_tree(
    tree: &MergeTree,
    field: &ScalarField,
    direction: Direction,
    simplification: Simplification,
) -> TreeExport {
    let pairing = persistence_pairs(tree);
    let hv = hypervolume_per_pair(tree, &pairing);
    let bd = branch_decomposition(tree);
    let arc_branch = bd.arc_branches(tree.arcs().len());
    let nodes = tree
        .nodes()
        .iter()
        .enumerate()
        .map(|(id, n)| NodeRow {
            id,
            vertex: n.vertex,
            value: direction.restore(n.value),
            kind: n.kind,
            branch: n.up.map_or(0, |a| arc_branch[a]),
        })
        .collect();
    let arcs = tree
        .arcs()
        .iter()
        .enumerate()
        .map(|(id, a)| ArcRow {
            id,
            lower: a.lower,
            upper: a.upper,
            branch: arc_branch[id],
            members: a.members.clone(),
        })
        .collect();
    let pairs = pairing
        .pairs
        .iter()
        .zip(hv)
        .map(|(p, hypervolume)| PairRow {
            min: p.min,
            partner: p.partner,
            persistence: p.persistence,
            hypervolume,
        })
        .collect();
    let branches = bd
        .branches
        .iter()
        .enumerate()
        .map(|(id, b)| BranchRow {
            id,
            min: b.min,
            partner: b.partner,
            persistence: b.persistence,
            parent: b.parent,
            arcs: b.arcs.clone(),
        })
        .collect();
    TreeExport {
        version: TREE_VERSION.to_string(),
        grid: *tree.grid(),
        direction,
        tie_rule: "index".to_string(),
        simplification,
        field_sha256: field_hash(field),
        nodes,
        arcs,
        pairs,
        branches,
    }
}

/// Default simplification parameters: none.
pub fn no_simplification() -> Simplification {
    Simplification {
        metric: Metric::Persistence,
        threshold: 0.0,
    }
}

pub fn save_tree(t: &TreeExport, path: &Path) -> Result<(), IoError> {
    write_file(path, &to_json_bytes(t))
}

pub fn load_tree(path: &Path) -> Result<TreeExport, IoError> {
    TreeExport::parse(&read_file(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use timt_core::scalar::Meaning;

    fn line(values: &[f64]) -> ScalarField {
        let g = GridSpec::with_dims(values.len(), 1, 1).unwrap();
        ScalarField::new(g, values.to_vec(), Meaning::Generic).unwrap()
    }

    #[test]
    fn micro_fixture_has_two_leaves_one_saddle() {
        let f = line(&[0.0, 2.0, 1.0, 3.0]);
        let t = build_tree(&f, Direction::Sublevel, no_simplification()).unwrap();
        let e = export_tree(&t, &f, Direction::Sublevel, no_simplification());
        assert_eq!((e.leaf_count(), e.saddle_count()), (2, 1));
        let saddle = e.nodes.iter().find(|n| n.kind == NodeKind::Saddle).unwrap();
        assert_eq!((saddle.vertex, saddle.value), (1, 2.0));
        let mut covered: Vec<usize> = e.arcs.iter().flat_map(|a| a.members.clone()).collect();
        covered.sort_unstable();
        assert_eq!(covered, vec![0, 1, 2, 3]);
        assert_eq!(e.pairs[1].persistence, 1.0);
    }

    #[test]
    fn superlevel_values_keep_input_orientation() {
        let f = line(&[0.0, 2.0, 1.0, 3.0]);
        let t = build_tree(&f, Direction::Superlevel, no_simplification()).unwrap();
        let e = export_tree(&t, &f, Direction::Superlevel, no_simplification());
        assert_eq!(e.nodes[0].value, 3.0);
        assert_eq!(e.leaf_count(), 2);
        let values: Vec<f64> = e.nodes.iter().map(|n| n.value).collect();
        assert!(values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn export_roundtrips() {
        let f = line(&[4.0, 1.0, 3.0, 0.5, 2.0, 5.0]);
        let t = build_tree(&f, Direction::Sublevel, no_simplification()).unwrap();
        let e = export_tree(&t, &f, Direction::Sublevel, no_simplification());
        let bytes = to_json_bytes(&e);
        assert_eq!(TreeExport::parse(&bytes).unwrap(), e);
        assert_eq!(field_hash(&f), e.field_sha256);
        assert_ne!(field_hash(&f.negated()), e.field_sha256);
    }
}
