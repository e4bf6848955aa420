//! Brute-force oracles shared by the property tests and the acceptance run.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use timt_core::field::{Channel, MultiField};
use timt_core::grid::GridSpec;
use timt_core::merge_tree::{hypervolume_per_pair, persistence_pairs, sweep_order, MergeTree, NodeKind};
use timt_core::queries::{segmentation_report, Segmentation, BACKGROUND};
use timt_core::scalar::ScalarField;

/// What the oracle sees when vertex `v` enters the sub-level set.
pub struct Event {
    /// Elder minima of the components `v` touches, before the merge.
    touched: Vec<usize>,
    /// Elder minimum of `v`'s component after insertion.
    elder_after: usize,
    /// Last critical vertex (leaf or merge) of `v`'s component before insertion.
    last_critical: Vec<(usize, usize)>,
}

/// Components of the inserted vertices via plain BFS.
pub fn component_ids(grid: &GridSpec, inserted: &[bool]) -> Vec<usize> {
    let n = inserted.len();
    let mut comp = vec![usize::MAX; n];
    let mut next = 0;
    for s in 0..n {
        if !inserted[s] || comp[s] != usize::MAX {
            continue;
        }
        let mut stack = vec![s];
        comp[s] = next;
        while let Some(v) = stack.pop() {
            for u in grid.neighbors(v) {
                if inserted[u] && comp[u] == usize::MAX {
                    comp[u] = next;
                    stack.push(u);
                }
            }
        }
        next += 1;
    }
    comp
}

pub fn oracle(grid: &GridSpec, values: &[f64]) -> Vec<(usize, Event)> {
    let order = sweep_order(values);
    let mut rank = vec![0; values.len()];
    for (r, &v) in order.iter().enumerate() {
        rank[v] = r;
    }
    let mut inserted = vec![false; values.len()];
    // per vertex: elder minimum and last critical vertex of its component
    let mut elder = vec![usize::MAX; values.len()];
    let mut critical = vec![usize::MAX; values.len()];
    let mut events = Vec::new();
    for &v in &order {
        let before = component_ids(grid, &inserted);
        let mut touched: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
        for u in grid.neighbors(v) {
            if inserted[u] {
                touched.insert(before[u], (elder[u], critical[u]));
            }
        }
        inserted[v] = true;
        let mut mins: Vec<(usize, usize)> = touched.values().copied().collect();
        mins.sort_by_key(|&(m, _)| rank[m]);
        let elder_after = mins.first().map(|m| m.0).unwrap_or(v);
        let new_critical = if mins.len() == 1 { mins[0].1 } else { v };
        let after = component_ids(grid, &inserted);
        for u in 0..values.len() {
            if inserted[u] && after[u] == after[v] {
                elder[u] = elder_after;
                critical[u] = new_critical;
            }
        }
        events.push((
            v,
            Event {
                touched: mins.iter().map(|m| m.0).collect(),
                elder_after,
                last_critical: mins,
            },
        ));
    }
    events
}

pub fn check_tree(grid: GridSpec, values: Vec<f64>) -> Result<(), TestCaseError> {
    let t = MergeTree::from_values(grid, values.clone()).unwrap();
    let events = oracle(&grid, &values);
    let last = events.last().unwrap().0;

    let expected_leaves: BTreeSet<usize> = events
        .iter()
        .filter(|(_, e)| e.touched.is_empty())
        .map(|(v, _)| *v)
        .collect();
    let leaves: BTreeSet<usize> = t.leaves().map(|l| t.node(l).vertex).collect();
    prop_assert_eq!(&leaves, &expected_leaves);

    let expected_merges: BTreeMap<usize, usize> = events
        .iter()
        .filter(|(_, e)| e.touched.len() >= 2)
        .map(|(v, e)| (*v, e.touched.len()))
        .collect();
    let merges: BTreeMap<usize, usize> = t
        .nodes()
        .iter()
        .filter(|n| n.down.len() >= 2)
        .map(|n| (n.vertex, n.down.len()))
        .collect();
    prop_assert_eq!(&merges, &expected_merges);
    let root = t.node(t.root());
    prop_assert_eq!(root.vertex, last);
    if values.len() > 1 {
        prop_assert_eq!(root.kind, NodeKind::Root);
        prop_assert_eq!(
            t.nodes().iter().filter(|n| n.kind == NodeKind::Root).count(),
            1
        );
    }

    // arc membership: the arc starts at the last critical event of the component
    let arc_of = t.vertex_arcs();
    for (v, e) in &events {
        let lower = t.node(t.arc(arc_of[*v]).lower).vertex;
        let expected = match e.touched.len() {
            0 => *v,
            1 => e.last_critical[0].1,
            _ if *v == last => e.last_critical[0].1,
            _ => *v,
        };
        prop_assert_eq!(lower, expected, "vertex {}", v);
    }

    // partition and value bounds
    let mut seen = vec![0; values.len()];
    for arc in t.arcs() {
        let lo = t.node(arc.lower).value;
        let hi = t.node(arc.upper).value;
        for &m in &arc.members {
            seen[m] += 1;
            prop_assert!(lo <= values[m] && values[m] <= hi);
        }
    }
    prop_assert!(seen.iter().all(|&c| c == 1));

    // elder-rule pairs and hypervolumes
    let mut expected_pairs: BTreeSet<(usize, usize)> = BTreeSet::new();
    for (v, e) in &events {
        for &m in e.touched.iter().skip(1) {
            expected_pairs.insert((m, *v));
        }
    }
    expected_pairs.insert((events[0].0, last));
    let pairing = persistence_pairs(&t);
    let pairs: BTreeSet<(usize, usize)> = pairing
        .pairs
        .iter()
        .map(|p| (t.node(p.min).vertex, t.node(p.partner).vertex))
        .collect();
    prop_assert_eq!(&pairs, &expected_pairs);
    prop_assert_eq!(pairing.len(), leaves.len());

    let hv = hypervolume_per_pair(&t, &pairing);
    for (p, h) in pairing.pairs.iter().zip(&hv) {
        let m = t.node(p.min).vertex;
        let count = events.iter().filter(|(_, e)| e.elder_after == m).count();
        prop_assert_eq!(*h, count as f64 * p.persistence);
    }
    Ok(())
}

/// Components of the vertices selected by `keep`, each as a sorted set.
pub fn components(grid: &GridSpec, keep: &[bool]) -> BTreeSet<Vec<usize>> {
    let mut seen = vec![false; keep.len()];
    let mut out = BTreeSet::new();
    for s in 0..keep.len() {
        if !keep[s] || seen[s] {
            continue;
        }
        seen[s] = true;
        let mut stack = vec![s];
        let mut comp = vec![];
        while let Some(v) = stack.pop() {
            comp.push(v);
            for u in grid.neighbors(v) {
                if keep[u] && !seen[u] {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        comp.sort_unstable();
        out.insert(comp);
    }
    out
}

pub fn segment_sets(s: &Segmentation) -> BTreeSet<Vec<usize>> {
    s.segment_vertices().into_iter().collect()
}

pub fn check_common(f: &ScalarField, s: &Segmentation) -> Result<(), TestCaseError> {
    let values = f.values();
    let vertices = s.segment_vertices();
    prop_assert_eq!(s.labels.len(), values.len());
    for l in &s.labels {
        prop_assert!(*l == BACKGROUND || (*l >= 0 && (*l as usize) < s.segments.len()));
    }
    for (id, (seg, verts)) in s.segments.iter().zip(&vertices).enumerate() {
        prop_assert_eq!(seg.id, id);
        prop_assert_eq!(seg.size, verts.len());
        prop_assert!(!verts.is_empty());
        let mut keep = vec![false; values.len()];
        for &v in verts {
            keep[v] = true;
        }
        prop_assert_eq!(components(f.grid(), &keep).len(), 1, "segment {} is disconnected", id);
        let min = verts.iter().map(|&v| values[v]).fold(f64::INFINITY, f64::min);
        prop_assert_eq!(seg.min_value, min);
        prop_assert_eq!(values[seg.min_vertex], min);
        prop_assert!(verts.contains(&seg.min_vertex));
    }
    for w in s.segments.windows(2) {
        prop_assert!((w[0].min_value, w[0].min_vertex) < (w[1].min_value, w[1].min_vertex));
    }
    prop_assert_eq!(segmentation_report(s).len(), s.len());
    Ok(())
}

pub fn crown_oracle(f: &ScalarField, t: &MergeTree, delta: f64) -> BTreeSet<Vec<usize>> {
    let values = f.values();
    let mut in_union = vec![false; values.len()];
    for (i, p) in persistence_pairs(t).pairs.iter().enumerate() {
        if i > 0 && p.persistence < delta {
            continue;
        }
        let a = t.node(p.min).vertex;
        let keep: Vec<bool> = values.iter().map(|&h| h <= values[a] + delta).collect();
        let comp = components(f.grid(), &keep)
            .into_iter()
            .find(|c| c.contains(&a))
            .unwrap();
        for v in comp {
            in_union[v] = true;
        }
    }
    components(f.grid(), &in_union)
}

/// Three channels, each a sum of random low-frequency sinusoids.
pub fn smooth_multifield(seed: u64, dims: [usize; 3]) -> MultiField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = GridSpec::with_dims(dims[0], dims[1], dims[2]).unwrap();
    let channels = ["u", "v", "w"]
        .iter()
        .map(|name| {
            let waves: Vec<([f64; 3], f64, f64)> = (0..3)
                .map(|_| {
                    let k = std::array::from_fn(|_| rng.random_range(-0.6..0.6));
                    (k, rng.random_range(0.0..6.3), rng.random_range(0.2..1.0))
                })
                .collect();
            let values = (0..grid.len())
                .map(|i| {
                    let c = grid.coords(i).map(|v| v as f64);
                    waves
                        .iter()
                        .map(|(k, phase, amp)| {
                            amp * (k[0] * c[0] + k[1] * c[1] + k[2] * c[2] + phase).sin()
                        })
                        .sum()
                })
                .collect();
            Channel::raw(*name, values)
        })
        .collect();
    MultiField::new(grid, channels).unwrap()
}
