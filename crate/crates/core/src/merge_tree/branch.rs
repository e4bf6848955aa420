use serde::{Deserialize, Serialize};

use super::{persistence_pairs, ArcId, MergeTree, NodeId};

/// A monotone path from a minimum to the node where it dies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub min: NodeId,
    pub partner: NodeId,
    pub persistence: f64,
    pub arcs: Vec<ArcId>,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BranchDecomposition {
    /// Branch 0 belongs to the global minimum.
    pub branches: Vec<Branch>,
}

impl BranchDecomposition {
    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    /// For every arc of the tree, the branch containing it.
    pub fn arc_branches(&self, arc_count: usize) -> Vec<usize> {
        let mut out = vec![usize::MAX; arc_count];
        for (b, br) in self.branches.iter().enumerate() {
            for &a in &br.arcs {
                out[a] = b;
            }
        }
        out
    }
}

/// One branch per persistence pair. A branch's parent is the branch that
/// passes through its partner node.
pub fn branch_decomposition(t: &MergeTree) -> BranchDecomposition {
    let pairing = persistence_pairs(t);
    let elder = t.elders();
    let mut by_min = vec![usize::MAX; t.nodes().len()];
    for (b, p) in pairing.pairs.iter().enumerate() {
        by_min[p.min] = b;
    }
    let mut branches: Vec<Branch> = pairing
        .pairs
        .iter()
        .map(|p| Branch {
            min: p.min,
            partner: p.partner,
            persistence: p.persistence,
            arcs: if p.min == p.partner {
                (0..t.arcs().len()).collect()
            } else {
                t.path_arcs(p.min, p.partner)
            },
            parent: None,
            children: Vec::new(),
        })
        .collect();
    for b in 0..branches.len() {
        let owner = by_min[elder[branches[b].partner]];
        if owner != b {
            branches[b].parent = Some(owner);
            branches[owner].children.push(b);
        }
    }
    BranchDecomposition { branches }
}
