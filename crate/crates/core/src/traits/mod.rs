//! Traits in attribute space and the distance fields they induce on the domain.
//!
//! A trait is a subset of attribute space built from primitives (points,
//! segments, boxes, convex polygons) that each live in a named channel
//! subspace. Leaves measure Euclidean distance in their own subspace only;
//! inner nodes combine the leaf distance fields pointwise.

mod hausdorff;
mod primitive;
mod similarity;

pub use hausdorff::{hausdorff_distance, HausdorffEstimate};
pub use primitive::{Interval, TraitPrimitive};
pub use similarity::{similarity_field, similarity_to_distance, SimilarityField};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::MultiField;
use crate::scalar::{Meaning, ScalarField, ScalarFieldError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TraitError {
    #[error("invalid {kind} primitive: {message}")]
    Invalid { kind: &'static str, message: String },
    #[error("trait references unknown channel `{0}`")]
    UnknownChannel(String),
    #[error("{0} node needs at least one child")]
    EmptyNode(&'static str),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("expected a {expected:?} field, got {got:?}")]
    WrongMeaning { expected: Meaning, got: Meaning },
    #[error("NOT takes exactly one field, got {0}")]
    NotArity(usize),
    #[error("no fields to combine")]
    NoFields,
    #[error("atom is the zero vector")]
    ZeroAtom,
    #[error("atom has dimension {got}, multi-field has {expected} channels")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("traits span different channel sets: {0:?} vs {1:?}")]
    SubspaceMismatch(Vec<String>, Vec<String>),
    #[error("Hausdorff distance is only defined here for unions of primitives, found {0}")]
    UnsupportedForHausdorff(&'static str),
    #[error("primitive has an unbounded interval; cap it before sampling")]
    Unbounded,
    #[error("sampling step must be positive and finite")]
    BadStep,
    #[error("sampling would need {0} points")]
    TooManySamples(u128),
    #[error(transparent)]
    Field(#[from] ScalarFieldError),
}

impl TraitError {
    pub(crate) fn invalid(p: &TraitPrimitive, message: impl Into<String>) -> Self {
        TraitError::Invalid {
            kind: p.kind_name(),
            message: message.into(),
        }
    }
}

/// How AND / OR map onto pointwise distance-field operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Semantics {
    /// Set semantics: AND is `max`, OR is `min`.
    #[default]
    Csg,
    /// AND is `min`, OR is `max`.
    PaperLiteral,
}

impl Semantics {
    pub fn as_str(self) -> &'static str {
        match self {
            Semantics::Csg => "csg",
            Semantics::PaperLiteral => "paper_literal",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "csg" => Some(Semantics::Csg),
            "paper_literal" => Some(Semantics::PaperLiteral),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CombineOp {
    And,
    Or,
    Not,
    /// `sqrt(sum d_i^2)`, the metric of the Cartesian product space.
    ProductL2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum TraitNode {
    Leaf { primitive: TraitPrimitive },
    And { children: Vec<TraitNode> },
    Or { children: Vec<TraitNode> },
    Not { child: Box<TraitNode> },
    ProductL2 { children: Vec<TraitNode> },
}

impl TraitNode {
    pub fn leaf(primitive: TraitPrimitive) -> Self {
        TraitNode::Leaf { primitive }
    }

    pub fn and(children: Vec<TraitNode>) -> Self {
        TraitNode::And { children }
    }

    pub fn or(children: Vec<TraitNode>) -> Self {
        TraitNode::Or { children }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(child: TraitNode) -> Self {
        TraitNode::Not {
            child: Box::new(child),
        }
    }

    pub fn product_l2(children: Vec<TraitNode>) -> Self {
        TraitNode::ProductL2 { children }
    }

    fn validate(&self) -> Result<(), TraitError> {
        match self {
            TraitNode::Leaf { primitive } => primitive.validate(),
            TraitNode::And { children } => validate_children("and", children),
            TraitNode::Or { children } => validate_children("or", children),
            TraitNode::ProductL2 { children } => validate_children("product_l2", children),
            TraitNode::Not { child } => child.validate(),
        }
    }

    /// Leaves in depth-first order.
    pub fn leaves(&self) -> Vec<&TraitPrimitive> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a TraitPrimitive>) {
        match self {
            TraitNode::Leaf { primitive } => out.push(primitive),
            TraitNode::And { children }
            | TraitNode::Or { children }
            | TraitNode::ProductL2 { children } => {
                children.iter().for_each(|c| c.collect_leaves(out))
            }
            TraitNode::Not { child } => child.collect_leaves(out),
        }
    }
}

fn validate_children(name: &'static str, children: &[TraitNode]) -> Result<(), TraitError> {
    if children.is_empty() {
        return Err(TraitError::EmptyNode(name));
    }
    children.iter().try_for_each(TraitNode::validate)
}

/// A trait expression together with the boolean-operator convention.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraitExpr {
    pub semantics: Semantics,
    pub root: TraitNode,
}

impl TraitExpr {
    pub fn new(root: TraitNode) -> Self {
        TraitExpr {
            semantics: Semantics::default(),
            root,
        }
    }

    pub fn leaf(primitive: TraitPrimitive) -> Self {
        Self::new(TraitNode::leaf(primitive))
    }

    pub fn with_semantics(mut self, semantics: Semantics) -> Self {
        self.semantics = semantics;
        self
    }

    /// Structural validation independent of any data set.
    pub fn validate(&self) -> Result<(), TraitError> {
        self.root.validate()
    }

    /// Validates the expression against `mf`: every leaf channel must exist.
    pub fn validate_for(&self, mf: &MultiField) -> Result<(), TraitError> {
        self.validate()?;
        for leaf in self.root.leaves() {
            for c in leaf.channels() {
                if mf.channel_index(c).is_none() {
                    return Err(TraitError::UnknownChannel(c.clone()));
                }
            }
        }
        Ok(())
    }
}

/// The result of evaluating a trait over a multi-field.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub field: ScalarField,
    /// Vertices whose composed value was clamped up to zero.
    pub clamped: usize,
    /// Channels whose open box bounds were capped at the data range.
    pub capped: Vec<String>,
}

/// Replaces open box sides by the data range of the channel.
pub fn cap_to_data_range(p: &TraitPrimitive, mf: &MultiField) -> (TraitPrimitive, Vec<String>) {
    match p {
        TraitPrimitive::Box {
            channels,
            intervals,
        } => {
            let mut capped = Vec::new();
            let intervals = channels
                .iter()
                .zip(intervals)
                .map(|(c, iv)| {
                    if iv.is_bounded() {
                        return *iv;
                    }
                    let (lo, hi) = mf.channel(c).map(|ch| ch.range()).unwrap_or((iv.lo, iv.hi));
                    capped.push(c.clone());
                    let new_lo = if iv.lo.is_finite() { iv.lo } else { lo.min(iv.hi) };
                    let new_hi = if iv.hi.is_finite() { iv.hi } else { hi.max(iv.lo) };
                    Interval::new(new_lo, new_hi)
                })
                .collect();
            (
                TraitPrimitive::Box {
                    channels: channels.clone(),
                    intervals,
                },
                capped,
            )
        }
        other => (other.clone(), Vec::new()),
    }
}

fn leaf_values(p: &TraitPrimitive, mf: &MultiField) -> Result<Vec<f64>, TraitError> {
    let idx = mf
        .resolve(p.channels())
        .map_err(|_| unknown_channel(p, mf))?;
    let dim = idx.len();
    Ok((0..mf.len())
        .into_par_iter()
        .map_init(
            || vec![0.0; dim],
            |buf, i| {
                mf.gather(&idx, i, buf);
                p.distance(buf)
            },
        )
        .collect())
}

fn unknown_channel(p: &TraitPrimitive, mf: &MultiField) -> TraitError {
    let missing = p
        .channels()
        .iter()
        .find(|c| mf.channel_index(c).is_none())
        .cloned()
        .unwrap_or_default();
    TraitError::UnknownChannel(missing)
}

/// Distance from every vertex's attribute vector to one primitive.
pub fn primitive_field(p: &TraitPrimitive, mf: &MultiField) -> Result<ScalarField, TraitError> {
    p.validate()?;
    Ok(ScalarField::new(*mf.grid(), leaf_values(p, mf)?, Meaning::Distance)?)
}

/// Evaluates `h_T = d_T ∘ f` at every vertex, reporting clamps and caps.
pub fn evaluate(expr: &TraitExpr, mf: &MultiField) -> Result<Evaluation, TraitError> {
    expr.validate_for(mf)?;
    let mut clamped = 0;
    let mut capped = Vec::new();
    let values = eval_node(&expr.root, expr.semantics, mf, &mut clamped, &mut capped)?;
    Ok(Evaluation {
        field: ScalarField::new(*mf.grid(), values, Meaning::Distance)?,
        clamped,
        capped,
    })
}

/// The trait-induced distance field of `expr` over `mf`.
pub fn induced_distance_field(expr: &TraitExpr, mf: &MultiField) -> Result<ScalarField, TraitError> {
    evaluate(expr, mf).map(|e| e.field)
}

fn eval_node(
    node: &TraitNode,
    semantics: Semantics,
    mf: &MultiField,
    clamped: &mut usize,
    capped: &mut Vec<String>,
) -> Result<Vec<f64>, TraitError> {
    let (op, children): (CombineOp, Vec<&TraitNode>) = match node {
        TraitNode::Leaf { primitive } => {
            let (p, caps) = cap_to_data_range(primitive, mf);
            capped.extend(caps);
            return leaf_values(&p, mf);
        }
        TraitNode::And { children } => (CombineOp::And, children.iter().collect()),
        TraitNode::Or { children } => (CombineOp::Or, children.iter().collect()),
        TraitNode::ProductL2 { children } => (CombineOp::ProductL2, children.iter().collect()),
        TraitNode::Not { child } => (CombineOp::Not, vec![child.as_ref()]),
    };
    let inputs = children
        .into_iter()
        .map(|c| eval_node(c, semantics, mf, clamped, capped))
        .collect::<Result<Vec<_>, _>>()?;
    let refs: Vec<&[f64]> = inputs.iter().map(Vec::as_slice).collect();
    let (values, n) = combine_values(op, &refs, semantics)?;
    *clamped += n;
    Ok(values)
}

fn combine_values(
    op: CombineOp,
    inputs: &[&[f64]],
    semantics: Semantics,
) -> Result<(Vec<f64>, usize), TraitError> {
    let first = inputs.first().ok_or(TraitError::NoFields)?;
    let n = first.len();
    let fold = |f: fn(f64, f64) -> f64| -> Vec<f64> {
        (0..n)
            .map(|i| inputs[1..].iter().fold(first[i], |acc, v| f(acc, v[i])))
            .collect()
    };
    let mut values = match (op, semantics) {
        (CombineOp::And, Semantics::Csg) | (CombineOp::Or, Semantics::PaperLiteral) => {
            fold(f64::max)
        }
        (CombineOp::Or, Semantics::Csg) | (CombineOp::And, Semantics::PaperLiteral) => {
            fold(f64::min)
        }
        (CombineOp::Not, _) => {
            if inputs.len() != 1 {
                return Err(TraitError::NotArity(inputs.len()));
            }
            // negate, then shift so the minimum is zero
            let max = first.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            first.iter().map(|v| max - v).collect()
        }
        (CombineOp::ProductL2, _) => (0..n)
            .map(|i| inputs.iter().map(|v| v[i] * v[i]).sum::<f64>().sqrt())
            .collect(),
    };
    let mut clamped = 0;
    for v in values.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
            clamped += 1;
        }
    }
    Ok((values, clamped))
}

/// Pointwise combination of distance fields.
///
/// Returns the combined field and the number of vertices clamped to zero.
pub fn combine_fields(
    op: CombineOp,
    fields: &[&ScalarField],
    semantics: Semantics,
) -> Result<(ScalarField, usize), TraitError> {
    let first = fields.first().ok_or(TraitError::NoFields)?;
    for f in fields {
        if f.grid() != first.grid() {
            return Err(TraitError::GridMismatch);
        }
        if f.meaning() != Meaning::Distance {
            return Err(TraitError::WrongMeaning {
                expected: Meaning::Distance,
                got: f.meaning(),
            });
        }
    }
    let refs: Vec<&[f64]> = fields.iter().map(|f| f.values()).collect();
    let (values, clamped) = combine_values(op, &refs, semantics)?;
    Ok((ScalarField::new(*first.grid(), values, Meaning::Distance)?, clamped))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Channel;
    use crate::grid::GridSpec;

    fn dist(values: Vec<f64>) -> ScalarField {
        let g = GridSpec::with_dims(values.len(), 1, 1).unwrap();
        ScalarField::new(g, values, Meaning::Distance).unwrap()
    }

    fn mf2(xs: &[f64], ys: &[f64]) -> MultiField {
        let g = GridSpec::with_dims(xs.len(), 1, 1).unwrap();
        MultiField::new(
            g,
            vec![Channel::raw("x", xs.to_vec()), Channel::raw("y", ys.to_vec())],
        )
        .unwrap()
    }

    #[test]
    fn csg_or_is_idempotent() {
        let h = dist(vec![0.5, 0.0, 3.0]);
        let (or, _) = combine_fields(CombineOp::Or, &[&h, &h], Semantics::Csg).unwrap();
        assert_eq!(or, h);
    }

    #[test]
    fn and_under_both_semantics() {
        let h1 = dist(vec![0.0, 2.0]);
        let h2 = dist(vec![1.0, 0.0]);
        let (csg, _) = combine_fields(CombineOp::And, &[&h1, &h2], Semantics::Csg).unwrap();
        assert_eq!(csg.values(), &[1.0, 2.0]);
        let (lit, _) =
            combine_fields(CombineOp::And, &[&h1, &h2], Semantics::PaperLiteral).unwrap();
        assert_eq!(lit.values(), &[0.0, 0.0]);
        let (or_lit, _) =
            combine_fields(CombineOp::Or, &[&h1, &h2], Semantics::PaperLiteral).unwrap();
        assert_eq!(or_lit.values(), &[1.0, 2.0]);
    }

    #[test]
    fn not_reverses_and_offsets() {
        let h = dist(vec![0.0, 1.0, 4.0]);
        for s in [Semantics::Csg, Semantics::PaperLiteral] {
            let (n, clamped) = combine_fields(CombineOp::Not, &[&h], s).unwrap();
            assert_eq!(n.values(), &[4.0, 3.0, 0.0]);
            assert_eq!(clamped, 0);
        }
        assert_eq!(
            combine_fields(CombineOp::Not, &[&h, &h], Semantics::Csg).unwrap_err(),
            TraitError::NotArity(2)
        );
    }

    #[test]
    fn product_l2_combines_subspace_distances() {
        let h1 = dist(vec![3.0, 0.0]);
        let h2 = dist(vec![4.0, 0.0]);
        let (p, _) = combine_fields(CombineOp::ProductL2, &[&h1, &h2], Semantics::Csg).unwrap();
        assert_eq!(p.values(), &[5.0, 0.0]);
    }

    #[test]
    fn combine_rejects_mismatches() {
        let a = dist(vec![0.0, 1.0]);
        let b = dist(vec![0.0, 1.0, 2.0]);
        assert_eq!(
            combine_fields(CombineOp::Or, &[&a, &b], Semantics::Csg).unwrap_err(),
            TraitError::GridMismatch
        );
        let g = GridSpec::with_dims(2, 1, 1).unwrap();
        let s = ScalarField::new(g, vec![0.5, 0.5], Meaning::Similarity).unwrap();
        assert!(matches!(
            combine_fields(CombineOp::Or, &[&a, &s], Semantics::Csg),
            Err(TraitError::WrongMeaning { .. })
        ));
    }

    #[test]
    fn point_trait_at_vertex_vanishes_there() {
        let mf = mf2(&[0.0, 1.0, 2.5], &[3.0, -1.0, 0.25]);
        let t = TraitExpr::leaf(TraitPrimitive::point(&["x", "y"], &[1.0, -1.0]));
        let h = induced_distance_field(&t, &mf).unwrap();
        assert_eq!(h.values()[1], 0.0);
        assert!(h.values()[0] > 0.0 && h.values()[2] > 0.0);
    }

    #[test]
    fn full_range_box_is_zero_everywhere() {
        let mf = mf2(&[0.0, 1.0, 2.5], &[3.0, -1.0, 0.25]);
        let t = TraitExpr::leaf(TraitPrimitive::boxed(
            &["x", "y"],
            &[(0.0, 2.5), (-1.0, 3.0)],
        ));
        let h = induced_distance_field(&t, &mf).unwrap();
        assert!(h.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn open_box_is_capped_and_reported() {
        let mf = mf2(&[0.0, 1.0, 2.5], &[3.0, -1.0, 0.25]);
        let t = TraitExpr::leaf(TraitPrimitive::boxed(&["x"], &[(f64::NEG_INFINITY, 0.5)]));
        let e = evaluate(&t, &mf).unwrap();
        assert_eq!(e.capped, vec!["x".to_string()]);
        assert_eq!(e.field.values(), &[0.0, 0.5, 2.0]);
    }

    #[test]
    fn channels_outside_subspace_do_not_contribute() {
        let mf = mf2(&[1.0, 1.0], &[0.0, 100.0]);
        let t = TraitExpr::leaf(TraitPrimitive::point(&["x"], &[1.0]));
        let h = induced_distance_field(&t, &mf).unwrap();
        assert_eq!(h.values(), &[0.0, 0.0]);
    }

    #[test]
    fn unknown_channel_and_empty_nodes_rejected() {
        let mf = mf2(&[1.0], &[0.0]);
        let t = TraitExpr::leaf(TraitPrimitive::point(&["z"], &[1.0]));
        assert_eq!(
            induced_distance_field(&t, &mf).unwrap_err(),
            TraitError::UnknownChannel("z".into())
        );
        let t = TraitExpr::new(TraitNode::and(vec![]));
        assert_eq!(t.validate().unwrap_err(), TraitError::EmptyNode("and"));
    }

    #[test]
    fn csg_and_of_boxes_is_zero_on_intersection_only() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let mf = mf2(&xs, &xs);
        let t = TraitExpr::new(TraitNode::and(vec![
            TraitNode::leaf(TraitPrimitive::boxed(&["x"], &[(2.0, 6.0)])),
            TraitNode::leaf(TraitPrimitive::boxed(&["y"], &[(4.0, 8.0)])),
        ]));
        let h = induced_distance_field(&t, &mf).unwrap();
        let zeros: Vec<usize> = (0..10).filter(|&i| h.values()[i] == 0.0).collect();
        assert_eq!(zeros, vec![4, 5, 6]);
    }

    #[test]
    fn expression_json_shape() {
        let t = TraitExpr::new(TraitNode::or(vec![
            TraitNode::leaf(TraitPrimitive::point(&["x"], &[1.0])),
            TraitNode::not(TraitNode::leaf(TraitPrimitive::boxed(&["y"], &[(0.0, 1.0)]))),
        ]))
        .with_semantics(Semantics::PaperLiteral);
        let json = serde_json::to_string(&t).unwrap();
        assert!(json.starts_with(r#"{"semantics":"paper_literal","root":{"op":"or""#));
        let back: TraitExpr = serde_json::from_str(&json).unwrap();
        assert_eq!(back, t);
    }
}
