//! The `timt-trait/1` document: a versioned wrapper around a trait
//! expression.
//!
//! ```json
//! {"version": "timt-trait/1", "semantics": "csg",
//!  "root": {"op": "leaf", "primitive": {"kind": "point", "channels": ["a", "b"], "coords": [0.5, 1.0]}}}
//! ```
//!
//! The canonical byte form is compact JSON in field declaration order, so a
//! parse followed by [`TraitDocument::canonical_bytes`] is idempotent.

use std::path::Path;

use serde::{Deserialize, Serialize};
use timt_core::field::MultiField;
use timt_core::traits::{Semantics, TraitExpr, TraitNode};

use crate::error::{parse_json, read_file, write_file, IoError};

pub const TRAIT_VERSION: &str = "timt-trait/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraitDocument {
    pub version: String,
    #[serde(default)]
    pub semantics: Semantics,
    pub root: TraitNode,
}

impl TraitDocument {
    pub fn new(expr: TraitExpr) -> Self {
        TraitDocument {
            version: TRAIT_VERSION.to_string(),
            semantics: expr.semantics,
            root: expr.root,
        }
    }

    /// Parses and structurally validates a document.
    pub fn parse(bytes: &[u8]) -> Result<Self, IoError> {
        let doc: TraitDocument = parse_json(bytes)?;
        if doc.version != TRAIT_VERSION {
            return Err(IoError::UnknownVersion {
                expected: TRAIT_VERSION,
                found: doc.version,
            });
        }
        validate_node(&doc.root, "root")?;
        Ok(doc)
    }

    pub fn expr(&self) -> TraitExpr {
        TraitExpr {
            semantics: self.semantics,
            root: self.root.clone(),
        }
    }

    pub fn canonical_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("trait document serializes")
    }

    /// Checks that every channel the document names exists in `mf`.
    pub fn check_channels(&self, mf: &MultiField) -> Result<(), IoError> {
        self.expr().validate_for(mf)?;
        Ok(())
    }
}

/// Validates node by node so the error names the offending location.
fn validate_node(node: &TraitNode, path: &str) -> Result<(), IoError> {
    let children = |name: &str, children: &[TraitNode]| {
        if children.is_empty() {
            return Err(IoError::doc(
                format!("{path}.children"),
                format!("{name} node needs at least one child"),
            ));
        }
        for (k, c) in children.iter().enumerate() {
            validate_node(c, &format!("{path}.children[{k}]"))?;
        }
        Ok(())
    };
    match node {
        TraitNode::Leaf { primitive } => primitive
            .validate()
            .map_err(|e| IoError::doc(format!("{path}.primitive"), e.to_string())),
        TraitNode::And { children: c } => children("and", c),
        TraitNode::Or { children: c } => children("or", c),
        TraitNode::ProductL2 { children: c } => children("product_l2", c),
        TraitNode::Not { child } => validate_node(child, &format!("{path}.child")),
    }
}

pub fn load_trait(path: &Path) -> Result<TraitDocument, IoError> {
    TraitDocument::parse(&read_file(path)?)
}

pub fn save_trait(doc: &TraitDocument, path: &Path) -> Result<(), IoError> {
    write_file(path, &doc.canonical_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use timt_core::traits::TraitPrimitive;

    #[test]
    fn canonical_form_is_a_fixed_point() {
        let text = r#"{ "root": {"op": "or", "children": [
            {"op": "leaf", "primitive": {"kind": "box", "channels": ["a"], "intervals": [{"lo": 0.1, "hi": null}]}},
            {"op": "not", "child": {"op": "leaf", "primitive": {"coords": [1e0], "kind": "point", "channels": ["b"]}}}
          ]}, "version": "timt-trait/1", "semantics": "paper_literal" }"#;
        let doc = TraitDocument::parse(text.as_bytes()).unwrap();
        let once = doc.canonical_bytes();
        let twice = TraitDocument::parse(&once).unwrap().canonical_bytes();
        assert_eq!(once, twice);
        assert!(std::str::from_utf8(&once).unwrap().starts_with(r#"{"version":"timt-trait/1","semantics":"paper_literal""#));
    }

    #[test]
    fn invalid_nodes_are_located() {
        let bad = TraitDocument::new(TraitExpr::new(TraitNode::and(vec![
            TraitNode::leaf(TraitPrimitive::point(&["a"], &[0.0])),
            TraitNode::not(TraitNode::leaf(TraitPrimitive::boxed(&["a"], &[(2.0, 1.0)]))),
        ])));
        match TraitDocument::parse(&bad.canonical_bytes()).unwrap_err() {
            IoError::Document(issue) => {
                assert_eq!(issue.path, "root.children[1].child.primitive");
                assert!(issue.message.contains("lo > hi"));
            }
            e => panic!("unexpected {e}"),
        }
        let empty = r#"{"version": "timt-trait/1", "root": {"op": "or", "children": []}}"#;
        match TraitDocument::parse(empty.as_bytes()).unwrap_err() {
            IoError::Document(issue) => assert_eq!(issue.path, "root.children"),
            e => panic!("unexpected {e}"),
        }
        let typo = r#"{"version": "timt-trait/1", "semantic": "csg", "root": {"op": "or", "children": []}}"#;
        assert!(matches!(TraitDocument::parse(typo.as_bytes()).unwrap_err(), IoError::Document(_)));
    }

    #[test]
    fn semantics_defaults_to_csg() {
        let text = r#"{"version": "timt-trait/1", "root": {"op": "leaf", "primitive": {"kind": "point", "channels": ["a"], "coords": [0]}}}"#;
        assert_eq!(TraitDocument::parse(text.as_bytes()).unwrap().semantics, Semantics::Csg);
    }
}
