use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::{sweep_cmp, MergeTree, MergeTreeError, Node, NodeId, NodeKind, TreeArc};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    #[default]
    Persistence,
    Hypervolume,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Persistence => "persistence",
            Metric::Hypervolume => "hypervolume",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "persistence" => Some(Metric::Persistence),
            "hypervolume" => Some(Metric::Hypervolume),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    metric: f64,
    min_value: f64,
    min_vertex: usize,
    leaf: NodeId,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.metric
            .total_cmp(&other.metric)
            .then(self.min_value.total_cmp(&other.min_value))
            .then(self.min_vertex.cmp(&other.min_vertex))
    }
}

struct Work<'a> {
    tree: &'a MergeTree,
    elder: Vec<NodeId>,
    node_alive: Vec<bool>,
    up: Vec<Option<usize>>,
    down: Vec<Vec<usize>>,
    arc_alive: Vec<bool>,
    upper: Vec<NodeId>,
    members: Vec<Vec<usize>>,
    metric: Metric,
}

impl Work<'_> {
    /// A leaf is a candidate when it is not the elder minimum at its saddle.
    fn candidate(&self, leaf: NodeId) -> Option<Candidate> {
        let node = &self.tree.nodes[leaf];
        if node.kind != NodeKind::LeafMinimum || !self.node_alive[leaf] {
            return None;
        }
        let arc = self.up[leaf]?;
        let saddle = self.upper[arc];
        if saddle == leaf || self.elder[saddle] == leaf {
            return None;
        }
        let persistence = self.tree.nodes[saddle].value - node.value;
        let metric = match self.metric {
            Metric::Persistence => persistence,
            Metric::Hypervolume => self.members[arc].len() as f64 * persistence,
        };
        Some(Candidate {
            metric,
            min_value: node.value,
            min_vertex: node.vertex,
            leaf,
        })
    }

    fn cancel(&mut self, leaf: NodeId) -> Option<NodeId> {
        let arc = self.up[leaf].expect("candidate leaf has an arc");
        let saddle = self.upper[arc];
        let elder_arc = *self.down[saddle]
            .iter()
            .find(|&&a| self.elder[self.tree.arcs[a].lower] == self.elder[saddle])
            .expect("saddle has an elder child");
        // members go to the arc of the elder path below the saddle whose value
        // range holds them
        let values = &self.tree.values;
        let mut path = Vec::new();
        let mut node = self.elder[saddle];
        while node != saddle {
            let a = self.up[node].expect("path reaches the saddle");
            path.push(a);
            node = self.upper[a];
        }
        let lower_vertex: Vec<usize> = path
            .iter()
            .map(|&a| self.tree.nodes[self.tree.arcs[a].lower].vertex)
            .collect();
        for v in std::mem::take(&mut self.members[arc]) {
            let slot = lower_vertex.partition_point(|&l| sweep_cmp(values, l, v).is_le());
            self.members[path[slot - 1]].push(v);
        }
        self.down[saddle].retain(|&a| a != arc);
        self.node_alive[leaf] = false;
        self.arc_alive[arc] = false;
        self.up[leaf] = None;

        if self.down[saddle].len() == 1 && saddle != self.tree.root {
            // splice out the regular saddle
            let above = self.up[saddle].expect("non-root saddle has an arc");
            let parent = self.upper[above];
            let moved = std::mem::take(&mut self.members[above]);
            self.members[elder_arc].extend(moved);
            self.upper[elder_arc] = parent;
            for a in self.down[parent].iter_mut() {
                if *a == above {
                    *a = elder_arc;
                }
            }
            self.node_alive[saddle] = false;
            self.arc_alive[above] = false;
            self.up[saddle] = None;
            self.down[saddle].clear();
            return Some(self.tree.arcs[elder_arc].lower);
        }
        None
    }
}

impl MergeTree {
    /// Repeatedly cancels the lowest-metric leaf pair whose metric is strictly
    /// below `threshold`. The global minimum's branch is never cancelled.
    ///
    /// The returned tree is compacted: nodes keep sweep order and arc members
    /// are sorted by sweep order.
    pub fn simplify(&self, metric: Metric, threshold: f64) -> Result<MergeTree, MergeTreeError> {
        if !(threshold >= 0.0) {
            return Err(MergeTreeError::BadThreshold(threshold));
        }
        let t = self;
        let mut w = Work {
            tree: t,
            elder: t.elders(),
            node_alive: vec![true; t.nodes.len()],
            up: t.nodes.iter().map(|n| n.up).collect(),
            down: t.nodes.iter().map(|n| n.down.clone()).collect(),
            arc_alive: vec![true; t.arcs.len()],
            upper: t.arcs.iter().map(|a| a.upper).collect(),
            members: t.arcs.iter().map(|a| a.members.clone()).collect(),
            metric,
        };
        let mut heap: BinaryHeap<Reverse<Candidate>> =
            t.leaves().filter_map(|l| w.candidate(l)).map(Reverse).collect();
        while let Some(Reverse(c)) = heap.pop() {
            if !(c.metric < threshold) {
                break;
            }
            if !w.node_alive[c.leaf] {
                continue;
            }
            if let Some(lower) = w.cancel(c.leaf) {
                if let Some(next) = w.candidate(lower) {
                    heap.push(Reverse(next));
                }
            }
        }
        Ok(compact(w))
    }
}

fn compact(w: Work<'_>) -> MergeTree {
    let t = w.tree;
    let values = t.shared_values();
    let mut node_map = vec![usize::MAX; t.nodes.len()];
    let mut next = 0;
    for (i, alive) in w.node_alive.iter().enumerate() {
        if *alive {
            node_map[i] = next;
            next += 1;
        }
    }
    // arcs are owned by their lower node, so ordering by lower node is total
    let mut live_arcs: Vec<usize> = (0..t.arcs.len()).filter(|&a| w.arc_alive[a]).collect();
    live_arcs.sort_by_key(|&a| node_map[t.arcs[a].lower]);
    let mut arc_map = vec![usize::MAX; t.arcs.len()];
    for (new, &old) in live_arcs.iter().enumerate() {
        arc_map[old] = new;
    }
    let Work {
        node_alive,
        up,
        down,
        upper,
        mut members,
        ..
    } = w;
    let arcs: Vec<TreeArc> = live_arcs
        .iter()
        .map(|&a| {
            let mut m = std::mem::take(&mut members[a]);
            m.sort_unstable_by(|&x, &y| sweep_cmp(&values, x, y));
            TreeArc {
                lower: node_map[t.arcs[a].lower],
                upper: node_map[upper[a]],
                members: m,
            }
        })
        .collect();
    let nodes: Vec<Node> = t
        .nodes
        .iter()
        .enumerate()
        .filter(|(i, _)| node_alive[*i])
        .map(|(i, n)| {
            let mut d: Vec<usize> = down[i].iter().map(|&a| arc_map[a]).collect();
            d.sort_unstable();
            Node {
                vertex: n.vertex,
                value: n.value,
                kind: n.kind,
                up: up[i].map(|a| arc_map[a]),
                down: d,
            }
        })
        .collect();
    MergeTree::from_parts(*t.grid(), values, nodes, arcs, node_map[t.root])
}
