use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{persistence_pairs, MergeTree, MergeTreeError};

/// Largest combined point count accepted by [`bottleneck_distance`].
pub const MAX_BOTTLENECK_POINTS: usize = 2000;

/// Birth/death pairs of a merge tree. The pair of the global minimum, which
/// dies at the root, is kept apart as the essential pair.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PersistenceDiagram {
    pub points: Vec<(f64, f64)>,
    pub essential: Option<(f64, f64)>,
}

impl PersistenceDiagram {
    pub fn new(points: Vec<(f64, f64)>, essential: Option<(f64, f64)>) -> Self {
        PersistenceDiagram { points, essential }
    }

    pub fn len(&self) -> usize {
        self.points.len() + usize::from(self.essential.is_some())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn persistence_diagram(t: &MergeTree) -> PersistenceDiagram {
    let pairing = persistence_pairs(t);
    let mut points = Vec::with_capacity(pairing.len());
    let mut essential = None;
    for (i, p) in pairing.pairs.iter().enumerate() {
        let bd = (t.node(p.min).value, t.node(p.partner).value);
        if i == 0 {
            essential = Some(bd);
        } else {
            points.push(bd);
        }
    }
    PersistenceDiagram { points, essential }
}

fn linf(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).abs().max((a.1 - b.1).abs())
}

fn diag(a: (f64, f64)) -> f64 {
    (a.1 - a.0).abs() / 2.0
}

/// Exact bottleneck distance. Essential pairs are matched to each other; an
/// unmatched essential pair is treated as an ordinary point.
pub fn bottleneck_distance(
    a: &PersistenceDiagram,
    b: &PersistenceDiagram,
) -> Result<f64, MergeTreeError> {
    let mut pa = a.points.clone();
    let mut pb = b.points.clone();
    let mut base: f64 = 0.0;
    match (a.essential, b.essential) {
        (Some(x), Some(y)) => base = linf(x, y),
        (Some(x), None) => pa.push(x),
        (None, Some(y)) => pb.push(y),
        (None, None) => {}
    }
    let total = pa.len() + pb.len();
    if total > MAX_BOTTLENECK_POINTS {
        return Err(MergeTreeError::DiagramTooLarge(total));
    }
    Ok(base.max(finite_bottleneck(&pa, &pb)))
}

/// Left side: points of `a` then diagonal copies of `b`. Right side: points of
/// `b` then diagonal copies of `a`.
fn finite_bottleneck(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let n = a.len();
    let m = b.len();
    if n + m == 0 {
        return 0.0;
    }
    let mut candidates: Vec<f64> = Vec::with_capacity(n * m + n + m + 1);
    candidates.push(0.0);
    for &p in a {
        candidates.push(diag(p));
        for &q in b {
            candidates.push(linf(p, q));
        }
    }
    candidates.extend(b.iter().map(|&q| diag(q)));
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();

    let cost = |l: usize, r: usize| -> f64 {
        match (l < n, r < m) {
            (true, true) => linf(a[l], b[r]),
            (true, false) => {
                if r - m == l {
                    diag(a[l])
                } else {
                    f64::INFINITY
                }
            }
            (false, true) => {
                if l - n == r {
                    diag(b[r])
                } else {
                    f64::INFINITY
                }
            }
            (false, false) => 0.0,
        }
    };
    let size = n + m;
    let feasible = |t: f64| -> bool {
        let adj: Vec<Vec<usize>> = (0..size)
            .map(|l| (0..size).filter(|&r| cost(l, r) <= t).collect())
            .collect();
        hopcroft_karp(&adj, size) == size
    };
    let (mut lo, mut hi) = (0, candidates.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if feasible(candidates[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    candidates[lo]
}

fn hopcroft_karp(adj: &[Vec<usize>], right: usize) -> usize {
    const FREE: usize = usize::MAX;
    let left = adj.len();
    let mut match_l = vec![FREE; left];
    let mut match_r = vec![FREE; right];
    let mut dist = vec![0usize; left];
    let mut matched = 0;
    loop {
        let mut queue = VecDeque::new();
        let mut found = false;
        for l in 0..left {
            if match_l[l] == FREE {
                dist[l] = 0;
                queue.push_back(l);
            } else {
                dist[l] = usize::MAX;
            }
        }
        while let Some(l) = queue.pop_front() {
            for &r in &adj[l] {
                let next = match_r[r];
                if next == FREE {
                    found = true;
                } else if dist[next] == usize::MAX {
                    dist[next] = dist[l] + 1;
                    queue.push_back(next);
                }
            }
        }
        if !found {
            return matched;
        }
        for l in 0..left {
            if match_l[l] == FREE && augment(l, adj, &mut match_l, &mut match_r, &mut dist) {
                matched += 1;
            }
        }
    }
}

fn augment(
    l: usize,
    adj: &[Vec<usize>],
    match_l: &mut [usize],
    match_r: &mut [usize],
    dist: &mut [usize],
) -> bool {
    for &r in &adj[l] {
        let next = match_r[r];
        if next == usize::MAX
            || (dist[next] == dist[l] + 1 && augment(next, adj, match_l, match_r, dist))
        {
            match_l[l] = r;
            match_r[r] = l;
            return true;
        }
    }
    dist[l] = usize::MAX;
    false
}
