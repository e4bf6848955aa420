//! Sub-level merge trees of scalar fields on a grid neighborhood graph.
//!
//! Vertices are swept in ascending `(value, index)` order and tracked with a
//! union-find structure. The index is the secondary sort key everywhere, so
//! ties never create ambiguous critical points.
//!
//! The tree is augmented: every vertex is a member of exactly one arc. A leaf
//! arc owns the vertices of its basin up to (excluding) the saddle that closes
//! it; a saddle vertex belongs to the arc that starts at it. The last swept
//! vertex is the root. When the root itself merges components it becomes a
//! member of the elder child's arc.

mod branch;
mod diagram;
mod simplify;

pub use branch::{branch_decomposition, Branch, BranchDecomposition};
pub use diagram::{bottleneck_distance, persistence_diagram, PersistenceDiagram, MAX_BOTTLENECK_POINTS};
pub use simplify::Metric;

use std::cmp::Ordering;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::GridSpec;
use crate::scalar::ScalarField;
use crate::union_find::DisjointSets;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MergeTreeError {
    #[error("non-finite value at vertex {0}")]
    NonFinite(usize),
    #[error("field has {got} values, grid has {expected} vertices")]
    LengthMismatch { expected: usize, got: usize },
    #[error("diagram with {0} points exceeds the exact bottleneck limit")]
    DiagramTooLarge(usize),
    #[error("simplification threshold must be a non-negative number, got {0}")]
    BadThreshold(f64),
}

pub type NodeId = usize;
pub type ArcId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    LeafMinimum,
    Saddle,
    Root,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub vertex: usize,
    pub value: f64,
    pub kind: NodeKind,
    /// The arc leaving this node upwards; `None` at the root unless the tree
    /// has a single vertex.
    pub up: Option<ArcId>,
    /// Arcs arriving from below, ordered by lower node.
    pub down: Vec<ArcId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeArc {
    pub lower: NodeId,
    pub upper: NodeId,
    /// Member vertices in sweep order.
    pub members: Vec<usize>,
}

/// Augmented sub-level merge tree.
///
/// Nodes are stored in sweep order, so node 0 is the global minimum. Arc `a`
/// is the `up` arc of its lower node, and arcs are ordered by lower node.
#[derive(Debug, Clone, PartialEq)]
pub struct MergeTree {
    grid: GridSpec,
    values: Arc<Vec<f64>>,
    nodes: Vec<Node>,
    arcs: Vec<TreeArc>,
    root: NodeId,
}

/// `true` if vertex `a` is swept before vertex `b`.
#[inline]
pub fn sweeps_before(values: &[f64], a: usize, b: usize) -> bool {
    sweep_cmp(values, a, b) == Ordering::Less
}

#[inline]
pub fn sweep_cmp(values: &[f64], a: usize, b: usize) -> Ordering {
    values[a].total_cmp(&values[b]).then(a.cmp(&b))
}

/// Vertex indices in ascending `(value, index)` order.
pub fn sweep_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_unstable_by(|&a, &b| sweep_cmp(values, a, b));
    order
}

/// Merge tree of `field` over the neighborhood graph of its grid.
pub fn compute_merge_tree(field: &ScalarField) -> Result<MergeTree, MergeTreeError> {
    MergeTree::from_values(*field.grid(), field.values().to_vec())
}

impl MergeTree {
    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self, MergeTreeError> {
        if values.len() != grid.len() {
            return Err(MergeTreeError::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(MergeTreeError::NonFinite(i));
        }
        Ok(sweep(grid, Arc::new(values)))
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn shared_values(&self) -> Arc<Vec<f64>> {
        Arc::clone(&self.values)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn arcs(&self) -> &[TreeArc] {
        &self.arcs
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn arc(&self, id: ArcId) -> &TreeArc {
        &self.arcs[id]
    }

    pub fn leaves(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.kind == NodeKind::LeafMinimum)
            .map(|(i, _)| i)
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves().count()
    }

    pub fn saddle_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| n.kind == NodeKind::Saddle)
            .count()
    }

    /// For every vertex, the arc it belongs to.
    pub fn vertex_arcs(&self) -> Vec<ArcId> {
        let mut out = vec![usize::MAX; self.values.len()];
        for (a, arc) in self.arcs.iter().enumerate() {
            for &v in &arc.members {
                out[v] = a;
            }
        }
        out
    }

    /// The oldest minimum (smallest sweep position) in the subtree of every node.
    pub fn elders(&self) -> Vec<NodeId> {
        // children precede parents in sweep order
        let mut elder: Vec<NodeId> = (0..self.nodes.len()).collect();
        for (id, node) in self.nodes.iter().enumerate() {
            if let Some(&first) = node.down.first() {
                elder[id] = node
                    .down
                    .iter()
                    .map(|&a| elder[self.arcs[a].lower])
                    .min()
                    .unwrap_or(elder[self.arcs[first].lower]);
            }
        }
        elder
    }

    /// The arcs on the monotone path from `from` up to `to`.
    pub fn path_arcs(&self, from: NodeId, to: NodeId) -> Vec<ArcId> {
        let mut out = Vec::new();
        let mut cur = from;
        while cur != to {
            match self.nodes[cur].up {
                Some(a) => {
                    out.push(a);
                    cur = self.arcs[a].upper;
                }
                None => break,
            }
        }
        out
    }

    pub(crate) fn from_parts(
        grid: GridSpec,
        values: Arc<Vec<f64>>,
        nodes: Vec<Node>,
        arcs: Vec<TreeArc>,
        root: NodeId,
    ) -> Self {
        MergeTree {
            grid,
            values,
            nodes,
            arcs,
            root,
        }
    }
}

fn sweep(grid: GridSpec, values: Arc<Vec<f64>>) -> MergeTree {
    let n = values.len();
    let order = sweep_order(&values);
    let mut rank = vec![0u32; n];
    for (r, &v) in order.iter().enumerate() {
        rank[v] = r as u32;
    }

    let mut sets = DisjointSets::new(n);
    // per component representative: the open arc and the elder minimum's rank
    let mut open_arc = vec![usize::MAX; n];
    let mut elder_rank = vec![u32::MAX; n];

    let mut nodes: Vec<Node> = Vec::new();
    let mut arcs: Vec<TreeArc> = Vec::new();
    let mut roots: Vec<usize> = Vec::with_capacity(26);
    let last = order.last().copied();

    for &v in &order {
        roots.clear();
        let rv = rank[v];
        grid.for_each_neighbor(v, |u| {
            if rank[u] < rv {
                let r = sets.find(u);
                if !roots.contains(&r) {
                    roots.push(r);
                }
            }
        });
        match roots.len() {
            0 => {
                let node = nodes.len();
                let arc = arcs.len();
                nodes.push(Node {
                    vertex: v,
                    value: values[v],
                    kind: NodeKind::LeafMinimum,
                    up: Some(arc),
                    down: Vec::new(),
                });
                arcs.push(TreeArc {
                    lower: node,
                    upper: usize::MAX,
                    members: vec![v],
                });
                open_arc[v] = arc;
                elder_rank[v] = rv;
            }
            1 => {
                let r = roots[0];
                let arc = open_arc[r];
                let er = elder_rank[r];
                arcs[arc].members.push(v);
                let nr = sets.union(r, v);
                open_arc[nr] = arc;
                elder_rank[nr] = er;
            }
            _ => {
                // the elder component survives the merge
                roots.sort_by_key(|&r| elder_rank[r]);
                let is_root = Some(v) == last;
                let node = nodes.len();
                let mut down: Vec<ArcId> = roots.iter().map(|&r| open_arc[r]).collect();
                for &a in &down {
                    arcs[a].upper = node;
                }
                let er = elder_rank[roots[0]];
                let elder_arc = open_arc[roots[0]];
                down.sort_by_key(|&a| arcs[a].lower);
                let up = if is_root {
                    arcs[elder_arc].members.push(v);
                    None
                } else {
                    arcs.push(TreeArc {
                        lower: node,
                        upper: usize::MAX,
                        members: vec![v],
                    });
                    Some(arcs.len() - 1)
                };
                nodes.push(Node {
                    vertex: v,
                    value: values[v],
                    kind: if is_root {
                        NodeKind::Root
                    } else {
                        NodeKind::Saddle
                    },
                    up,
                    down,
                });
                let mut nr = v;
                for &r in &roots {
                    nr = sets.union(nr, r);
                }
                if let Some(a) = up {
                    open_arc[nr] = a;
                }
                elder_rank[nr] = er;
            }
        }
    }

    let last = last.expect("grid has at least one vertex");
    let root = match nodes.last() {
        Some(node) if node.vertex == last && node.kind == NodeKind::Root => nodes.len() - 1,
        Some(node) if node.vertex == last && n == 1 => {
            // a single vertex is both the only minimum and the root, joined by a self-arc
            arcs[0].upper = 0;
            0
        }
        _ => {
            let r = sets.find(last);
            let arc = open_arc[r];
            let id = nodes.len();
            arcs[arc].upper = id;
            nodes.push(Node {
                vertex: last,
                value: values[last],
                kind: NodeKind::Root,
                up: None,
                down: vec![arc],
            });
            id
        }
    };
    MergeTree {
        grid,
        values,
        nodes,
        arcs,
        root,
    }
}

/// A minimum and the node where its component dies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PersistencePair {
    pub min: NodeId,
    /// Saddle, or the root for the global minimum.
    pub partner: NodeId,
    pub persistence: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PersistencePairing {
    /// Ordered by minimum node, so the global minimum's pair comes first.
    pub pairs: Vec<PersistencePair>,
}

impl PersistencePairing {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn total_persistence(&self) -> f64 {
        self.pairs.iter().map(|p| p.persistence).sum()
    }
}

/// Elder-rule pairing: at each merge the younger minima die.
pub fn persistence_pairs(t: &MergeTree) -> PersistencePairing {
    let elder = t.elders();
    let mut pairs = Vec::with_capacity(t.leaf_count());
    for (id, node) in t.nodes.iter().enumerate() {
        for &a in &node.down {
            let child_elder = elder[t.arcs[a].lower];
            if child_elder != elder[id] {
                pairs.push((child_elder, id));
            }
        }
    }
    pairs.push((elder[t.root], t.root));
    pairs.sort_unstable();
    PersistencePairing {
        pairs: pairs
            .into_iter()
            .map(|(min, partner)| PersistencePair {
                min,
                partner,
                persistence: t.nodes[partner].value - t.nodes[min].value,
            })
            .collect(),
    }
}

/// Member count of each pair's branch arcs times its persistence.
pub fn hypervolume_per_pair(t: &MergeTree, pairing: &PersistencePairing) -> Vec<f64> {
    pairing
        .pairs
        .iter()
        .map(|p| branch_size(t, p) as f64 * p.persistence)
        .collect()
}

pub(crate) fn branch_size(t: &MergeTree, p: &PersistencePair) -> usize {
    if p.min == p.partner {
        return t.arcs.iter().map(|a| a.members.len()).sum();
    }
    t.path_arcs(p.min, p.partner)
        .iter().map(|&a| t.arcs[a].members.len()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn path_tree(values: &[f64]) -> MergeTree {
        let grid = GridSpec::with_dims(values.len(), 1, 1).unwrap();
        MergeTree::from_values(grid, values.to_vec()).unwrap()
    }

    #[test]
    fn hand_traced_path() {
        let t = path_tree(&[0.0, 2.0, 1.0, 3.0]);
        let kinds: Vec<(usize, NodeKind)> = t.nodes().iter().map(|n| (n.vertex, n.kind)).collect();
        assert_eq!(
            kinds,
            vec![
                (0, NodeKind::LeafMinimum),
                (2, NodeKind::LeafMinimum),
                (1, NodeKind::Saddle),
                (3, NodeKind::Root)
            ]
        );
        let arcs: Vec<(usize, usize, Vec<usize>)> = t
            .arcs()
            .iter()
            .map(|a| (t.node(a.lower).vertex, t.node(a.upper).vertex, a.members.clone()))
            .collect();
        assert_eq!(
            arcs,
            vec![(0, 1, vec![0]), (2, 1, vec![2]), (1, 3, vec![1, 3])]
        );
        let p = persistence_pairs(&t);
        let pv: Vec<(usize, usize, f64)> = p
            .pairs
            .iter()
            .map(|q| (t.node(q.min).vertex, t.node(q.partner).vertex, q.persistence))
            .collect();
        assert_eq!(pv, vec![(0, 3, 3.0), (2, 1, 1.0)]);
    }

    #[test]
    fn monotone_field_has_one_leaf() {
        let t = path_tree(&[0.0, 1.0, 2.0, 5.0, 9.0]);
        assert_eq!(t.leaf_count(), 1);
        assert_eq!(t.saddle_count(), 0);
        assert_eq!(t.arcs().len(), 1);
        assert_eq!(t.arcs()[0].members, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn constant_field_single_leaf_at_vertex_zero() {
        let grid = GridSpec::with_dims(3, 3, 1).unwrap();
        let t = MergeTree::from_values(grid, vec![7.0; 9]).unwrap();
        assert_eq!(t.leaf_count(), 1);
        assert_eq!(t.node(0).vertex, 0);
        assert_eq!(t.arcs().len(), 1);
        assert_eq!(t.arcs()[0].members.len(), 9);
    }

    #[test]
    fn single_vertex_tree() {
        let t = path_tree(&[4.0]);
        assert_eq!(t.leaf_count(), 1);
        assert_eq!(t.root(), 0);
        let p = persistence_pairs(&t);
        assert_eq!(p.len(), 1);
        assert_eq!(p.pairs[0].persistence, 0.0);
        assert_eq!(hypervolume_per_pair(&t, &p), vec![0.0]);
    }

    #[test]
    fn root_that_merges_components() {
        // the global maximum is the only connection between the two minima
        let t = path_tree(&[0.0, 5.0, 1.0]);
        let root = t.node(t.root());
        assert_eq!(root.vertex, 1);
        assert_eq!(root.kind, NodeKind::Root);
        assert_eq!(root.down.len(), 2);
        // the root vertex joins the elder child arc
        assert_eq!(t.arcs()[0].members, vec![0, 1]);
        let p = persistence_pairs(&t);
        assert_eq!(p.pairs.len(), 2);
        assert!(p.pairs.iter().all(|q| q.partner == t.root()));
    }

    #[test]
    fn equal_minima_resolved_by_index() {
        let t = path_tree(&[1.0, 3.0, 1.0]);
        let p = persistence_pairs(&t);
        assert_eq!(t.node(p.pairs[0].min).vertex, 0);
        assert_eq!(t.node(p.pairs[1].min).vertex, 2);
        assert_eq!(p.pairs[1].persistence, 2.0);
    }

    #[test]
    fn non_finite_rejected() {
        let grid = GridSpec::with_dims(2, 1, 1).unwrap();
        assert_eq!(
            MergeTree::from_values(grid, vec![0.0, f64::NAN]).unwrap_err(),
            MergeTreeError::NonFinite(1)
        );
    }

    #[test]
    fn hypervolume_is_count_times_persistence() {
        // basin {3,4,5,6,7} with minimum 5 closes at saddle 2 (value 4)
        let t = path_tree(&[0.0, 1.0, 4.0, 3.5, 3.0, 2.0, 2.5, 3.2, 9.0]);
        let p = persistence_pairs(&t);
        let hv = hypervolume_per_pair(&t, &p);
        let child = p.pairs.iter().position(|q| t.node(q.min).vertex == 5).unwrap();
        assert_eq!(p.pairs[child].persistence, 2.0);
        assert_eq!(hv[child], 2.0 * 5.0);
    }
}
