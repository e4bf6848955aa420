//! Trait-induced merge trees for multi-field data on structured grids.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dictionary;
pub mod field;
pub mod grid;
pub mod merge_tree;
pub mod queries;
pub mod scalar;
pub mod stability;
pub mod tensor;
pub mod traits;
mod union_find;

/// Crate version, recorded in run records.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use field::{assemble_attribute_space, derive_channel, Channel, DerivedKind, MultiField, Scaling};
pub use grid::{Connectivity, GridSpec};
pub use merge_tree::{compute_merge_tree, MergeTree};
pub use queries::{run_query, QueryMethod, QuerySpec, Segmentation, BACKGROUND};
pub use scalar::{Meaning, ScalarField};
pub use dictionary::{ksvd_learn, Dictionary, KsvdConfig, SparseCodes};
pub use stability::{verify_stability_chain, StabilityReport};
pub use traits::{induced_distance_field, Semantics, TraitExpr, TraitNode, TraitPrimitive};
