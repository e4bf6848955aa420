//! Hausdorff distance between traits that are unions of primitives.
//!
//! `d_H(T1, T2) = max(sup_{a in T1} d_T2(a), sup_{b in T2} d_T1(b))`. The
//! distance functions `d_T` are exact; only the suprema are taken over
//! samples, so extended primitives give a lower estimate that is off by at
//! most the sampling covering radius.

use super::{TraitError, TraitExpr, TraitNode, TraitPrimitive};

const MAX_SAMPLES: u128 = 5_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HausdorffEstimate {
    pub value: f64,
    /// `None` when both traits are finite point sets and the value is exact.
    pub step: Option<f64>,
}

impl HausdorffEstimate {
    pub fn is_exact(&self) -> bool {
        self.step.is_none()
    }
}

/// Union members of a trait, in a common channel order.
struct PrimitiveSet {
    channels: Vec<String>,
    members: Vec<TraitPrimitive>,
}

impl PrimitiveSet {
    fn from_expr(expr: &TraitExpr) -> Result<Self, TraitError> {
        let mut members = Vec::new();
        collect_union(&expr.root, expr.semantics, &mut members)?;
        let channels = members[0].channels().to_vec();
        for m in &members[1..] {
            if !same_set(m.channels(), &channels) {
                return Err(TraitError::SubspaceMismatch(
                    channels.clone(),
                    m.channels().to_vec(),
                ));
            }
        }
        Ok(PrimitiveSet { channels, members })
    }

    fn distance(&self, a: &[f64]) -> f64 {
        self.members
            .iter()
            .map(|m| m.distance(a))
            .fold(f64::INFINITY, f64::min)
    }

    /// Re-expresses every member in the channel order `order`.
    fn reorder(&mut self, order: &[String]) {
        let perm: Vec<usize> = order
            .iter()
            .map(|c| self.channels.iter().position(|x| x == c).unwrap())
            .collect();
        for m in &mut self.members {
            *m = permute(m, &perm);
        }
        self.channels = order.to_vec();
    }

    fn all_points(&self) -> bool {
        self.members
            .iter()
            .all(|m| matches!(m, TraitPrimitive::Point { .. }))
    }

    fn samples(&self, step: f64) -> Result<Vec<Vec<f64>>, TraitError> {
        let mut out = Vec::new();
        for m in &self.members {
            sample_primitive(m, step, &mut out)?;
        }
        Ok(out)
    }
}

fn same_set(a: &[String], b: &[String]) -> bool {
    a.len() == b.len() && a.iter().all(|c| b.contains(c))
}

fn collect_union(
    node: &TraitNode,
    semantics: super::Semantics,
    out: &mut Vec<TraitPrimitive>,
) -> Result<(), TraitError> {
    match node {
        TraitNode::Leaf { primitive } => {
            primitive.validate()?;
            out.push(primitive.clone());
            Ok(())
        }
        // union is OR under set semantics only
        TraitNode::Or { children } if semantics == super::Semantics::Csg => {
            if children.is_empty() {
                return Err(TraitError::EmptyNode("or"));
            }
            children
                .iter()
                .try_for_each(|c| collect_union(c, semantics, out))
        }
        TraitNode::Or { .. } => Err(TraitError::UnsupportedForHausdorff("paper_literal or")),
        TraitNode::And { .. } => Err(TraitError::UnsupportedForHausdorff("and")),
        TraitNode::Not { .. } => Err(TraitError::UnsupportedForHausdorff("not")),
        TraitNode::ProductL2 { .. } => Err(TraitError::UnsupportedForHausdorff("product_l2")),
    }
}

fn permute(p: &TraitPrimitive, perm: &[usize]) -> TraitPrimitive {
    let pv = |v: &[f64]| perm.iter().map(|&i| v[i]).collect::<Vec<f64>>();
    let pc = |c: &[String]| perm.iter().map(|&i| c[i].clone()).collect::<Vec<String>>();
    match p {
        TraitPrimitive::Point { channels, coords } => TraitPrimitive::Point {
            channels: pc(channels),
            coords: pv(coords),
        },
        TraitPrimitive::Segment { channels, a, b } => TraitPrimitive::Segment {
            channels: pc(channels),
            a: pv(a),
            b: pv(b),
        },
        TraitPrimitive::Box {
            channels,
            intervals,
        } => TraitPrimitive::Box {
            channels: pc(channels),
            intervals: perm.iter().map(|&i| intervals[i]).collect(),
        },
        TraitPrimitive::Polygon { channels, vertices } => {
            if perm == [0, 1] {
                p.clone()
            } else {
                // swapping the axes mirrors the polygon; reverse to stay counter-clockwise
                let mut v: Vec<[f64; 2]> = vertices.iter().map(|q| [q[1], q[0]]).collect();
                v.reverse();
                TraitPrimitive::Polygon {
                    channels: [channels[1].clone(), channels[0].clone()],
                    vertices: v,
                }
            }
        }
    }
}

fn steps(len: f64, step: f64) -> usize {
    ((len / step).ceil() as usize).max(1)
}

fn sample_segment(p: &[f64], q: &[f64], step: f64, out: &mut Vec<Vec<f64>>) {
    let len = p
        .iter()
        .zip(q)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let n = steps(len, step);
    for k in 0..=n {
        let t = k as f64 / n as f64;
        out.push(p.iter().zip(q).map(|(a, b)| a + t * (b - a)).collect());
    }
}

fn sample_primitive(
    p: &TraitPrimitive,
    step: f64,
    out: &mut Vec<Vec<f64>>,
) -> Result<(), TraitError> {
    match p {
        TraitPrimitive::Point { coords, .. } => out.push(coords.clone()),
        TraitPrimitive::Segment { a, b, .. } => sample_segment(a, b, step, out),
        TraitPrimitive::Box { intervals, .. } => {
            if !intervals.iter().all(|iv| iv.is_bounded()) {
                return Err(TraitError::Unbounded);
            }
            let counts: Vec<usize> = intervals
                .iter()
                .map(|iv| if iv.hi > iv.lo { steps(iv.hi - iv.lo, step) + 1 } else { 1 })
                .collect();
            let total: u128 = counts.iter().map(|&c| c as u128).product();
            if total > MAX_SAMPLES {
                return Err(TraitError::TooManySamples(total));
            }
            let mut idx = vec![0usize; counts.len()];
            loop {
                out.push(
                    idx.iter()
                        .zip(intervals)
                        .zip(&counts)
                        .map(|((&k, iv), &c)| {
                            if c == 1 {
                                iv.lo
                            } else {
                                iv.lo + (iv.hi - iv.lo) * k as f64 / (c - 1) as f64
                            }
                        })
                        .collect(),
                );
                let mut d = 0;
                loop {
                    if d == idx.len() {
                        return Ok(());
                    }
                    idx[d] += 1;
                    if idx[d] < counts[d] {
                        break;
                    }
                    idx[d] = 0;
                    d += 1;
                }
            }
        }
        TraitPrimitive::Polygon { vertices, .. } => {
            let n = vertices.len();
            for i in 0..n {
                sample_segment(&vertices[i], &vertices[(i + 1) % n], step, out);
            }
            let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
            for v in vertices {
                for k in 0..2 {
                    lo[k] = lo[k].min(v[k]);
                    hi[k] = hi[k].max(v[k]);
                }
            }
            let nx = steps(hi[0] - lo[0], step);
            let ny = steps(hi[1] - lo[1], step);
            if (nx as u128 + 1) * (ny as u128 + 1) > MAX_SAMPLES {
                return Err(TraitError::TooManySamples((nx as u128 + 1) * (ny as u128 + 1)));
            }
            for j in 0..=ny {
                for i in 0..=nx {
                    let q = [
                        lo[0] + (hi[0] - lo[0]) * i as f64 / nx as f64,
                        lo[1] + (hi[1] - lo[1]) * j as f64 / ny as f64,
                    ];
                    if p.distance(&q) == 0.0 {
                        out.push(q.to_vec());
                    }
                }
            }
        }
    }
    Ok(())
}

fn directed(samples: &[Vec<f64>], target: &PrimitiveSet) -> f64 {
    samples
        .iter()
        .map(|s| target.distance(s))
        .fold(0.0, f64::max)
}

/// Symmetric Hausdorff distance between two traits over the same channels.
///
/// Exact for finite point sets; otherwise the suprema are estimated on
/// samples spaced at most `step` apart along every axis.
pub fn hausdorff_distance(
    t1: &TraitExpr,
    t2: &TraitExpr,
    step: f64,
) -> Result<HausdorffEstimate, TraitError> {
    if !(step.is_finite() && step > 0.0) {
        return Err(TraitError::BadStep);
    }
    let s1 = PrimitiveSet::from_expr(t1)?;
    let mut s2 = PrimitiveSet::from_expr(t2)?;
    if !same_set(&s1.channels, &s2.channels) {
        return Err(TraitError::SubspaceMismatch(s1.channels, s2.channels));
    }
    s2.reorder(&s1.channels);
    let exact = s1.all_points() && s2.all_points();
    let a = directed(&s1.samples(step)?, &s2);
    let b = directed(&s2.samples(step)?, &s1);
    Ok(HausdorffEstimate {
        value: a.max(b),
        step: (!exact).then_some(step),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leaf(p: TraitPrimitive) -> TraitExpr {
        TraitExpr::leaf(p)
    }

    #[test]
    fn two_points() {
        let a = leaf(TraitPrimitive::point(&["x", "y"], &[0.0, 0.0]));
        let b = leaf(TraitPrimitive::point(&["x", "y"], &[3.0, 4.0]));
        let h = hausdorff_distance(&a, &b, 0.1).unwrap();
        assert_eq!(h.value, 5.0);
        assert!(h.is_exact());
    }

    #[test]
    fn identical_traits_are_at_zero() {
        let t = leaf(TraitPrimitive::polygon(
            "x",
            "y",
            &[[0.0, 0.0], [2.0, 0.0], [1.0, 1.5]],
        ));
        let h = hausdorff_distance(&t, &t, 0.05).unwrap();
        assert!(h.value < 1e-12);
        assert_eq!(h.step, Some(0.05));
    }

    #[test]
    fn channel_order_does_not_matter() {
        let a = leaf(TraitPrimitive::point(&["x", "y"], &[1.0, 2.0]));
        let b = leaf(TraitPrimitive::point(&["y", "x"], &[2.0, 1.0]));
        assert_eq!(hausdorff_distance(&a, &b, 1.0).unwrap().value, 0.0);
        let p = leaf(TraitPrimitive::polygon(
            "x",
            "y",
            &[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
        ));
        let q = leaf(TraitPrimitive::polygon(
            "y",
            "x",
            &[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
        ));
        assert!(hausdorff_distance(&p, &q, 0.01).unwrap().value < 0.02);
    }

    #[test]
    fn segment_against_translated_copy() {
        let v = [0.3, -0.7];
        let a = leaf(TraitPrimitive::segment(&["x", "y"], &[0.0, 0.0], &[1.0, 2.0]));
        let b = leaf(TraitPrimitive::segment(
            &["x", "y"],
            &[v[0], v[1]],
            &[1.0 + v[0], 2.0 + v[1]],
        ));
        let step = 0.01;
        let h = hausdorff_distance(&a, &b, step).unwrap();
        let norm = (v[0] * v[0] + v[1] * v[1]).sqrt();
        assert!((h.value - norm).abs() <= 2.0 * step);
    }

    #[test]
    fn unsupported_and_mismatched() {
        let a = leaf(TraitPrimitive::point(&["x"], &[0.0]));
        let b = leaf(TraitPrimitive::point(&["y"], &[0.0]));
        assert!(matches!(
            hausdorff_distance(&a, &b, 0.1),
            Err(TraitError::SubspaceMismatch(..))
        ));
        let n = TraitExpr::new(TraitNode::not(TraitNode::leaf(TraitPrimitive::point(
            &["x"],
            &[0.0],
        ))));
        assert!(matches!(
            hausdorff_distance(&a, &n, 0.1),
            Err(TraitError::UnsupportedForHausdorff(_))
        ));
        let open = leaf(TraitPrimitive::boxed(&["x"], &[(0.0, f64::INFINITY)]));
        assert_eq!(hausdorff_distance(&a, &open, 0.1).unwrap_err(), TraitError::Unbounded);
        assert_eq!(hausdorff_distance(&a, &a, 0.0).unwrap_err(), TraitError::BadStep);
    }

    #[test]
    fn union_of_points_is_exact() {
        let a = TraitExpr::new(TraitNode::or(vec![
            TraitNode::leaf(TraitPrimitive::point(&["x"], &[0.0])),
            TraitNode::leaf(TraitPrimitive::point(&["x"], &[10.0])),
        ]));
        let b = leaf(TraitPrimitive::point(&["x"], &[1.0]));
        let h = hausdorff_distance(&a, &b, 0.5).unwrap();
        assert_eq!(h.value, 9.0);
        assert!(h.is_exact());
    }
}
