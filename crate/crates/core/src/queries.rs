//! Domain segmentations extracted from a merge tree.
//!
//! Every method returns segments that are connected under the grid
//! connectivity. Segment ids are assigned in ascending `(min value, min
//! vertex)` order; unlabeled vertices carry [`BACKGROUND`].

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::GridSpec;
use crate::merge_tree::{
    branch_decomposition, hypervolume_per_pair, persistence_pairs, sweep_cmp, MergeTree,
    MergeTreeError, Metric, PersistencePairing,
};
use crate::scalar::ScalarField;
use crate::union_find::DisjointSets;

pub const BACKGROUND: i32 = -1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QueryError {
    #[error("query method {0} requires a cut level")]
    MissingCutLevel(&'static str),
    #[error("crown queries require a positive delta")]
    MissingDelta,
    #[error("delta must be a positive finite number, got {0}")]
    BadDelta(f64),
    #[error("cut level must be finite, got {0}")]
    BadCutLevel(f64),
    #[error("field and tree disagree: {0}")]
    Mismatch(String),
    #[error("spec asks for {requested}, operation is {operation}")]
    WrongMethod {
        requested: &'static str,
        operation: &'static str,
    },
    #[error(transparent)]
    Tree(#[from] MergeTreeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryMethod {
    BranchDecomposition,
    LeafArcs,
    Subtrees,
    Crown,
}

impl QueryMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            QueryMethod::BranchDecomposition => "branch_decomposition",
            QueryMethod::LeafArcs => "leaf_arcs",
            QueryMethod::Subtrees => "subtrees",
            QueryMethod::Crown => "crown",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            QueryMethod::BranchDecomposition,
            QueryMethod::LeafArcs,
            QueryMethod::Subtrees,
            QueryMethod::Crown,
        ]
        .into_iter()
        .find(|m| m.as_str() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Simplification {
    pub metric: Metric,
    pub threshold: f64,
}

impl Default for Simplification {
    fn default() -> Self {
        Simplification {
            metric: Metric::Persistence,
            threshold: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuerySpec {
    pub method: QueryMethod,
    #[serde(default)]
    pub simplification: Simplification,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cut_level: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

impl QuerySpec {
    pub fn new(method: QueryMethod) -> Self {
        QuerySpec {
            method,
            simplification: Simplification::default(),
            cut_level: None,
            delta: None,
        }
    }

    pub fn branch_decomposition(metric: Metric, threshold: f64) -> Self {
        Self::new(QueryMethod::BranchDecomposition).simplified(metric, threshold)
    }

    pub fn leaf_arcs(metric: Metric, threshold: f64) -> Self {
        Self::new(QueryMethod::LeafArcs).simplified(metric, threshold)
    }

    pub fn subtrees(cut_level: f64) -> Self {
        QuerySpec {
            cut_level: Some(cut_level),
            ..Self::new(QueryMethod::Subtrees)
        }
    }

    pub fn crown(delta: f64) -> Self {
        QuerySpec {
            delta: Some(delta),
            ..Self::new(QueryMethod::Crown)
        }
    }

    pub fn simplified(mut self, metric: Metric, threshold: f64) -> Self {
        self.simplification = Simplification { metric, threshold };
        self
    }

    pub fn validate(&self) -> Result<(), QueryError> {
        let t = self.simplification.threshold;
        if !(t >= 0.0) {
            return Err(MergeTreeError::BadThreshold(t).into());
        }
        match self.method {
            QueryMethod::Subtrees => match self.cut_level {
                None => Err(QueryError::MissingCutLevel(self.method.as_str())),
                Some(c) if c.is_nan() => Err(QueryError::BadCutLevel(c)),
                _ => Ok(()),
            },
            QueryMethod::Crown => match self.delta {
                None => Err(QueryError::MissingDelta),
                Some(d) if !(d > 0.0) || d.is_nan() => Err(QueryError::BadDelta(d)),
                _ => Ok(()),
            },
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub id: usize,
    pub min_vertex: usize,
    pub min_value: f64,
    pub size: usize,
    pub metric: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segmentation {
    pub grid: GridSpec,
    pub labels: Vec<i32>,
    pub segments: Vec<Segment>,
    pub spec: QuerySpec,
    /// Conditions worth surfacing to the caller, such as an empty result.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl Segmentation {
    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn background_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == BACKGROUND).count()
    }

    /// Vertex ids of each segment, in ascending vertex order.
    pub fn segment_vertices(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.segments.len()];
        for (v, &l) in self.labels.iter().enumerate() {
            if l != BACKGROUND {
                out[l as usize].push(v);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub id: usize,
    pub min_value: f64,
    pub size: usize,
    pub metric: f64,
}

/// Segment table sorted by minimum value, then id.
pub fn segmentation_report(s: &Segmentation) -> Vec<ReportRow> {
    let mut rows: Vec<ReportRow> = s
        .segments
        .iter()
        .map(|g| ReportRow {
            id: g.id,
            min_value: g.min_value,
            size: g.size,
            metric: g.metric,
        })
        .collect();
    rows.sort_by(|a, b| a.min_value.total_cmp(&b.min_value).then(a.id.cmp(&b.id)));
    rows
}

/// Dispatches on `spec.method`.
pub fn run_query(
    field: &ScalarField,
    t: &MergeTree,
    spec: &QuerySpec,
) -> Result<Segmentation, QueryError> {
    match spec.method {
        QueryMethod::BranchDecomposition => segment_branch_decomposition(t, spec),
        QueryMethod::LeafArcs => segment_leaf_arcs(t, spec),
        QueryMethod::Subtrees => segment_subtrees(t, spec),
        QueryMethod::Crown => segment_crowns(field, t, spec),
    }
}

fn expect_method(spec: &QuerySpec, method: QueryMethod) -> Result<(), QueryError> {
    if spec.method != method {
        return Err(QueryError::WrongMethod {
            requested: spec.method.as_str(),
            operation: method.as_str(),
        });
    }
    spec.validate()
}

fn simplified(t: &MergeTree, spec: &QuerySpec) -> Result<MergeTree, QueryError> {
    Ok(t.simplify(spec.simplification.metric, spec.simplification.threshold)?)
}

fn pair_metrics(t: &MergeTree, pairing: &PersistencePairing, metric: Metric) -> Vec<f64> {
    match metric {
        Metric::Persistence => pairing.pairs.iter().map(|p| p.persistence).collect(),
        Metric::Hypervolume => hypervolume_per_pair(t, pairing),
    }
}

/// One segment per surviving branch. Pieces of a branch cut off from its
/// minimum are handed to the neighboring segment that reaches them first.
pub fn segment_branch_decomposition(
    t: &MergeTree,
    spec: &QuerySpec,
) -> Result<Segmentation, QueryError> {
    expect_method(spec, QueryMethod::BranchDecomposition)?;
    let st = simplified(t, spec)?;
    let bd = branch_decomposition(&st);
    let pairing = persistence_pairs(&st);
    let metrics = pair_metrics(&st, &pairing, spec.simplification.metric);
    let groups = bd
        .branches
        .iter()
        .enumerate()
        .map(|(b, br)| Group {
            vertices: br
                .arcs
                .iter()
                .flat_map(|&a| st.arc(a).members.iter().copied())
                .collect(),
            metric: metrics[b],
        })
        .collect();
    Ok(finalize(&st, groups, true, *spec, Vec::new()))
}

/// One segment per remaining leaf, made of its incident arc.
pub fn segment_leaf_arcs(t: &MergeTree, spec: &QuerySpec) -> Result<Segmentation, QueryError> {
    expect_method(spec, QueryMethod::LeafArcs)?;
    let st = simplified(t, spec)?;
    let pairing = persistence_pairs(&st);
    let metrics = pair_metrics(&st, &pairing, spec.simplification.metric);
    let groups = pairing
        .pairs
        .iter()
        .zip(&metrics)
        .map(|(p, &metric)| {
            let arc = st.node(p.min).up.expect("leaf has an arc");
            Group {
                vertices: st.arc(arc).members.clone(),
                metric,
            }
        })
        .collect();
    Ok(finalize(&st, groups, false, *spec, Vec::new()))
}

/// Sub-trees below `cut_level`: vertices strictly below the cut, grouped by
/// the part of the tree they hang from.
pub fn segment_subtrees(t: &MergeTree, spec: &QuerySpec) -> Result<Segmentation, QueryError> {
    expect_method(spec, QueryMethod::Subtrees)?;
    let cut = spec.cut_level.expect("validated");
    let st = simplified(t, spec)?;
    let mut notes = Vec::new();
    if st.node(0).value >= cut {
        notes.push(format!(
            "cut level {cut} is not above the global minimum {}; segmentation is empty",
            st.node(0).value
        ));
        return Ok(finalize(&st, Vec::new(), false, *spec, notes));
    }
    let pairing = persistence_pairs(&st);
    let metrics = pair_metrics(&st, &pairing, spec.simplification.metric);
    let mut metric_of_leaf = vec![0.0; st.nodes().len()];
    for (p, &m) in pairing.pairs.iter().zip(&metrics) {
        metric_of_leaf[p.min] = m;
    }

    let arcs = st.arcs();
    let mut sets = DisjointSets::new(arcs.len());
    for (a, arc) in arcs.iter().enumerate() {
        let upper = st.node(arc.upper);
        if upper.value < cut {
            // a root that merges components has no arc above it
            let anchor = upper.up.unwrap_or_else(|| upper.down[0]);
            sets.union(a, anchor);
        }
    }
    let mut group_of_root = vec![usize::MAX; arcs.len()];
    let mut groups: Vec<Group> = Vec::new();
    let elder = st.elders();
    for (a, arc) in arcs.iter().enumerate() {
        if st.node(arc.lower).value >= cut {
            continue;
        }
        let r = sets.find(a);
        if group_of_root[r] == usize::MAX {
            group_of_root[r] = groups.len();
            groups.push(Group {
                vertices: Vec::new(),
                metric: f64::NEG_INFINITY,
            });
        }
        let g = &mut groups[group_of_root[r]];
        g.vertices
            .extend(arc.members.iter().copied().filter(|&v| st.values()[v] < cut));
        g.metric = g.metric.max(metric_of_leaf[elder[arc.lower]]);
    }
    Ok(finalize(&st, groups, false, *spec, notes))
}

/// Crown features: for each minimum `a` with persistence at least `delta`, the
/// component of `{h <= h(a) + delta}` containing `a`. The global minimum never
/// dies and always qualifies. Overlapping crowns are merged into one segment.
pub fn segment_crowns(
    field: &ScalarField,
    t: &MergeTree,
    spec: &QuerySpec,
) -> Result<Segmentation, QueryError> {
    expect_method(spec, QueryMethod::Crown)?;
    if field.grid() != t.grid() || field.values() != t.values() {
        return Err(QueryError::Mismatch(
            "crown queries need the field the tree was built from".into(),
        ));
    }
    let delta = spec.delta.expect("validated");
    let st = simplified(t, spec)?;
    let values = field.values();
    let grid = *field.grid();
    let pairing = persistence_pairs(&st);

    let mut seeds: Vec<(usize, f64, f64)> = pairing
        .pairs
        .iter()
        .enumerate()
        .filter(|(i, p)| *i == 0 || p.persistence >= delta)
        .map(|(_, p)| {
            let v = st.node(p.min).vertex;
            (v, values[v] + delta, p.persistence)
        })
        .collect();
    // highest level first: a lower crown that touches a visited vertex is
    // contained in the crown that visited it
    seeds.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

    let mut in_crown = vec![false; values.len()];
    let mut crown_metric = vec![f64::NEG_INFINITY; values.len()];
    let mut queue = VecDeque::new();
    for &(seed, level, persistence) in &seeds {
        crown_metric[seed] = crown_metric[seed].max(persistence);
        if in_crown[seed] {
            continue;
        }
        in_crown[seed] = true;
        queue.push_back(seed);
        while let Some(v) = queue.pop_front() {
            grid.for_each_neighbor(v, |u| {
                if !in_crown[u] && values[u] <= level {
                    in_crown[u] = true;
                    queue.push_back(u);
                }
            });
        }
    }

    let mut groups = Vec::new();
    let mut seen = vec![false; values.len()];
    for start in 0..values.len() {
        if !in_crown[start] || seen[start] {
            continue;
        }
        let mut vertices = vec![start];
        let mut metric = f64::NEG_INFINITY;
        seen[start] = true;
        let mut head = 0;
        while head < vertices.len() {
            let v = vertices[head];
            head += 1;
            metric = metric.max(crown_metric[v]);
            grid.for_each_neighbor(v, |u| {
                if in_crown[u] && !seen[u] {
                    seen[u] = true;
                    vertices.push(u);
                }
            });
        }
        groups.push(Group { vertices, metric });
    }
    Ok(finalize(&st, groups, false, *spec, Vec::new()))
}

struct Group {
    vertices: Vec<usize>,
    metric: f64,
}

/// Keeps the connected piece of each group that holds its minimum. The rest
/// is absorbed by neighboring segments when `absorb` is set, otherwise it
/// becomes background. Ids are then assigned by `(min value, min vertex)`.
fn finalize(
    t: &MergeTree,
    groups: Vec<Group>,
    absorb: bool,
    spec: QuerySpec,
    notes: Vec<String>,
) -> Segmentation {
    let grid = *t.grid();
    let values = t.values();
    let n = values.len();
    let mut tentative = vec![BACKGROUND; n];
    for (g, group) in groups.iter().enumerate() {
        for &v in &group.vertices {
            tentative[v] = g as i32;
        }
    }

    let mut labels = vec![BACKGROUND; n];
    let mut queue = VecDeque::new();
    for (g, group) in groups.iter().enumerate() {
        let Some(&start) = group
            .vertices
            .iter()
            .min_by(|&&a, &&b| sweep_cmp(values, a, b))
        else {
            continue;
        };
        let g = g as i32;
        labels[start] = g;
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            grid.for_each_neighbor(v, |u| {
                if tentative[u] == g && labels[u] == BACKGROUND {
                    labels[u] = g;
                    queue.push_back(u);
                }
            });
        }
    }

    if absorb {
        queue.extend((0..n).filter(|&v| labels[v] != BACKGROUND));
        while let Some(v) = queue.pop_front() {
            let l = labels[v];
            grid.for_each_neighbor(v, |u| {
                if labels[u] == BACKGROUND && tentative[u] != BACKGROUND {
                    labels[u] = l;
                    queue.push_back(u);
                }
            });
        }
    }

    let mut mins: Vec<Option<usize>> = vec![None; groups.len()];
    let mut sizes = vec![0usize; groups.len()];
    for (v, &l) in labels.iter().enumerate() {
        if l == BACKGROUND {
            continue;
        }
        let g = l as usize;
        sizes[g] += 1;
        match mins[g] {
            Some(m) if sweep_cmp(values, m, v).is_le() => {}
            _ => mins[g] = Some(v),
        }
    }
    let mut live: Vec<usize> = (0..groups.len()).filter(|&g| sizes[g] > 0).collect();
    live.sort_by(|&a, &b| {
        sweep_cmp(values, mins[a].expect("live"), mins[b].expect("live"))
    });
    let mut remap = vec![BACKGROUND; groups.len()];
    for (id, &g) in live.iter().enumerate() {
        remap[g] = id as i32;
    }
    for l in labels.iter_mut() {
        if *l != BACKGROUND {
            *l = remap[*l as usize];
        }
    }
    let segments = live
        .iter()
        .enumerate()
        .map(|(id, &g)| {
            let m = mins[g].expect("live");
            Segment {
                id,
                min_vertex: m,
                min_value: values[m],
                size: sizes[g],
                metric: groups[g].metric,
            }
        })
        .collect();
    Segmentation {
        grid,
        labels,
        segments,
        spec,
        notes,
    }
}
