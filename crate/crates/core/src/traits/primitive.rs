//! Trait primitives and their exact Euclidean distance functions.

use serde::{Deserialize, Serialize};

use super::TraitError;

/// A closed interval; infinite bounds stand for an open side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "IntervalDoc", into = "IntervalDoc")]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }
}

/// Serialized form: `null` marks an unbounded side.
#[derive(Serialize, Deserialize)]
struct IntervalDoc {
    lo: Option<f64>,
    hi: Option<f64>,
}

impl From<IntervalDoc> for Interval {
    fn from(d: IntervalDoc) -> Self {
        Interval {
            lo: d.lo.unwrap_or(f64::NEG_INFINITY),
            hi: d.hi.unwrap_or(f64::INFINITY),
        }
    }
}

impl From<Interval> for IntervalDoc {
    fn from(i: Interval) -> Self {
        IntervalDoc {
            lo: i.lo.is_finite().then_some(i.lo),
            hi: i.hi.is_finite().then_some(i.hi),
        }
    }
}

/// A subset of an attribute subspace spanned by named channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TraitPrimitive {
    Point {
        channels: Vec<String>,
        coords: Vec<f64>,
    },
    Segment {
        channels: Vec<String>,
        a: Vec<f64>,
        b: Vec<f64>,
    },
    Box {
        channels: Vec<String>,
        intervals: Vec<Interval>,
    },
    /// Strictly convex polygon with counter-clockwise vertices.
    Polygon {
        channels: [String; 2],
        vertices: Vec<[f64; 2]>,
    },
}

impl TraitPrimitive {
    pub fn point(channels: &[&str], coords: &[f64]) -> Self {
        TraitPrimitive::Point {
            channels: channels.iter().map(|s| s.to_string()).collect(),
            coords: coords.to_vec(),
        }
    }

    pub fn segment(channels: &[&str], a: &[f64], b: &[f64]) -> Self {
        TraitPrimitive::Segment {
            channels: channels.iter().map(|s| s.to_string()).collect(),
            a: a.to_vec(),
            b: b.to_vec(),
        }
    }

    pub fn boxed(channels: &[&str], intervals: &[(f64, f64)]) -> Self {
        TraitPrimitive::Box {
            channels: channels.iter().map(|s| s.to_string()).collect(),
            intervals: intervals.iter().map(|&(lo, hi)| Interval::new(lo, hi)).collect(),
        }
    }

    pub fn polygon(x: &str, y: &str, vertices: &[[f64; 2]]) -> Self {
        TraitPrimitive::Polygon {
            channels: [x.to_string(), y.to_string()],
            vertices: vertices.to_vec(),
        }
    }

    pub fn channels(&self) -> &[String] {
        match self {
            TraitPrimitive::Point { channels, .. }
            | TraitPrimitive::Segment { channels, .. }
            | TraitPrimitive::Box { channels, .. } => channels,
            TraitPrimitive::Polygon { channels, .. } => channels,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            TraitPrimitive::Point { .. } => "point",
            TraitPrimitive::Segment { .. } => "segment",
            TraitPrimitive::Box { .. } => "box",
            TraitPrimitive::Polygon { .. } => "polygon",
        }
    }

    pub fn validate(&self) -> Result<(), TraitError> {
        let channels = self.channels();
        if channels.is_empty() {
            return Err(TraitError::invalid(self, "no channels"));
        }
        for (k, c) in channels.iter().enumerate() {
            if channels[..k].contains(c) {
                return Err(TraitError::invalid(self, format!("channel `{c}` repeated")));
            }
        }
        let dim = channels.len();
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match self {
            TraitPrimitive::Point { coords, .. } => {
                if coords.len() != dim {
                    return Err(TraitError::invalid(self, "coords length differs from channels"));
                }
                if !finite(coords) {
                    return Err(TraitError::invalid(self, "non-finite coordinate"));
                }
            }
            TraitPrimitive::Segment { a, b, .. } => {
                if a.len() != dim || b.len() != dim {
                    return Err(TraitError::invalid(self, "endpoint length differs from channels"));
                }
                if !finite(a) || !finite(b) {
                    return Err(TraitError::invalid(self, "non-finite endpoint"));
                }
            }
            TraitPrimitive::Box { intervals, .. } => {
                if intervals.len() != dim {
                    return Err(TraitError::invalid(self, "interval count differs from channels"));
                }
                for iv in intervals {
                    if iv.lo.is_nan() || iv.hi.is_nan() || iv.lo > iv.hi {
                        return Err(TraitError::invalid(self, "interval with lo > hi"));
                    }
                    if iv.lo == f64::INFINITY || iv.hi == f64::NEG_INFINITY {
                        return Err(TraitError::invalid(self, "empty interval"));
                    }
                }
            }
            TraitPrimitive::Polygon { vertices, .. } => {
                if vertices.len() < 3 {
                    return Err(TraitError::invalid(self, "polygon needs at least 3 vertices"));
                }
                if !vertices.iter().all(|v| finite(v)) {
                    return Err(TraitError::invalid(self, "non-finite polygon vertex"));
                }
                let n = vertices.len();
                for i in 0..n {
                    let (p, q, r) = (vertices[i], vertices[(i + 1) % n], vertices[(i + 2) % n]);
                    if cross(sub(q, p), sub(r, q)) <= 0.0 {
                        return Err(TraitError::invalid(
                            self,
                            format!("polygon is not strictly convex counter-clockwise at vertex {}", (i + 1) % n),
                        ));
                    }
                }
                // a strictly convex polygon turns exactly once
                let mut winding = 0.0;
                for i in 0..n {
                    let e0 = sub(vertices[(i + 1) % n], vertices[i]);
                    let e1 = sub(vertices[(i + 2) % n], vertices[(i + 1) % n]);
                    winding += cross(e0, e1).atan2(dot(e0, e1));
                }
                if (winding - std::f64::consts::TAU).abs() > 1e-6 {
                    return Err(TraitError::invalid(self, "polygon is self-intersecting"));
                }
            }
        }
        Ok(())
    }

    /// Distance from `a` (coordinates in this primitive's channel order) to the primitive.
    pub fn distance(&self, a: &[f64]) -> f64 {
        match self {
            TraitPrimitive::Point { coords, .. } => a
                .iter()
                .zip(coords)
                .map(|(x, c)| (x - c) * (x - c))
                .sum::<f64>()
                .sqrt(),
            TraitPrimitive::Segment { a: p, b: q, .. } => point_segment_distance(a, p, q),
            TraitPrimitive::Box { intervals, .. } => a
                .iter()
                .zip(intervals)
                .map(|(&x, iv)| {
                    let r = if x < iv.lo {
                        iv.lo - x
                    } else if x > iv.hi {
                        x - iv.hi
                    } else {
                        0.0
                    };
                    r * r
                })
                .sum::<f64>()
                .sqrt(),
            TraitPrimitive::Polygon { vertices, .. } => {
                let p = [a[0], a[1]];
                let n = vertices.len();
                let inside = (0..n).all(|i| {
                    cross(sub(vertices[(i + 1) % n], vertices[i]), sub(p, vertices[i])) >= 0.0
                });
                if inside {
                    return 0.0;
                }
                (0..n)
                    .map(|i| point_segment_distance(&p, &vertices[i], &vertices[(i + 1) % n]))
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }
}

fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub(crate) fn point_segment_distance(x: &[f64], p: &[f64], q: &[f64]) -> f64 {
    let mut dd = 0.0;
    let mut proj = 0.0;
    for k in 0..x.len() {
        let d = q[k] - p[k];
        dd += d * d;
        proj += (x[k] - p[k]) * d;
    }
    let t = if dd > 0.0 { (proj / dd).clamp(0.0, 1.0) } else { 0.0 };
    let mut s = 0.0;
    for k in 0..x.len() {
        let c = p[k] + t * (q[k] - p[k]);
        s += (x[k] - c) * (x[k] - c);
    }
    s.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> TraitPrimitive {
        TraitPrimitive::polygon("x", "y", &[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    }

    #[test]
    fn point_distance_is_pythagorean() {
        let p = TraitPrimitive::point(&["x", "y"], &[3.0, 4.0]);
        assert_eq!(p.distance(&[0.0, 0.0]), 5.0);
    }

    #[test]
    fn polygon_interior_and_exterior() {
        let sq = unit_square();
        sq.validate().unwrap();
        assert_eq!(sq.distance(&[0.5, 0.5]), 0.0);
        assert_eq!(sq.distance(&[1.0, 0.5]), 0.0);
        assert!((sq.distance(&[2.0, 0.5]) - 1.0).abs() < 1e-15);
        assert!((sq.distance(&[2.0, 2.0]) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn box_distance_matches_dense_boundary_sampling() {
        let b = TraitPrimitive::boxed(&["x", "y"], &[(0.0, 1.0), (0.0, 1.0)]);
        let exact = b.distance(&[2.0, 2.0]);
        // brute force: densest boundary sampling of the unit square
        let n = 200_000;
        let mut best = f64::INFINITY;
        for k in 0..=n {
            let t = k as f64 / n as f64;
            for p in [[t, 0.0], [t, 1.0], [0.0, t], [1.0, t]] {
                let d = ((2.0 - p[0]).powi(2) + (2.0 - p[1]).powi(2)).sqrt();
                best = best.min(d);
            }
        }
        assert!((exact - best).abs() < 1e-6);
        assert!((exact - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(b.distance(&[0.3, 0.9]), 0.0);
    }

    #[test]
    fn segment_distance_cases() {
        let s = TraitPrimitive::segment(&["x", "y"], &[0.0, 0.0], &[2.0, 0.0]);
        assert_eq!(s.distance(&[1.0, 3.0]), 3.0);
        assert_eq!(s.distance(&[5.0, 4.0]), 5.0);
        assert_eq!(s.distance(&[-3.0, 4.0]), 5.0);
        let degenerate = TraitPrimitive::segment(&["x"], &[1.0], &[1.0]);
        assert_eq!(degenerate.distance(&[4.0]), 3.0);
    }

    #[test]
    fn validation_rejects_bad_primitives() {
        let reflex = TraitPrimitive::polygon(
            "x",
            "y",
            &[[0.0, 0.0], [2.0, 0.0], [1.0, 0.5], [2.0, 2.0], [0.0, 2.0]],
        );
        assert!(reflex.validate().is_err());
        let clockwise =
            TraitPrimitive::polygon("x", "y", &[[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]]);
        assert!(clockwise.validate().is_err());
        let collinear = TraitPrimitive::polygon("x", "y", &[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]);
        assert!(collinear.validate().is_err());
        let star = TraitPrimitive::polygon(
            "x",
            "y",
            &[[0.0, 0.0], [2.0, 1.0], [-1.0, 1.0], [1.0, 0.0], [0.5, 3.0]],
        );
        assert!(star.validate().is_err());
        assert!(TraitPrimitive::boxed(&["x"], &[(1.0, 0.0)]).validate().is_err());
        assert!(TraitPrimitive::point(&["x", "y"], &[1.0]).validate().is_err());
        assert!(TraitPrimitive::point(&["x", "x"], &[1.0, 2.0]).validate().is_err());
        assert!(TraitPrimitive::point(&["x"], &[f64::NAN]).validate().is_err());
    }

    #[test]
    fn open_interval_round_trips_as_null() {
        let b = TraitPrimitive::boxed(&["v"], &[(f64::NEG_INFINITY, 2.0)]);
        b.validate().unwrap();
        let json = serde_json::to_string(&b).unwrap();
        assert!(json.contains(r#""lo":null"#));
        let back: TraitPrimitive = serde_json::from_str(&json).unwrap();
        assert_eq!(back, b);
        assert_eq!(b.distance(&[-1e300]), 0.0);
        assert_eq!(b.distance(&[3.0]), 1.0);
    }
}
