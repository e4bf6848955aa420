//! The computations shared by the command line and the HTTP service, so
//! both produce identical artifacts for identical inputs.

use timt_core::dictionary::{ksvd_learn, sparse_code_all, suggest_atom_traits, AtomSuggestion, Dictionary, KsvdConfig};
use timt_core::field::{assemble_attribute_space, MultiField, Scaling};
use timt_core::queries::{run_query, QuerySpec, Segmentation};
use timt_core::scalar::ScalarField;
use timt_core::traits::{evaluate, similarity_field, similarity_to_distance, Evaluation, TraitExpr, TraitPrimitive};
use timt_core::{compute_merge_tree, BACKGROUND};

use crate::dictionary_io::StoredDictionary;
use crate::error::IoError;
use crate::trait_doc::TraitDocument;
use crate::tree_export::Direction;

pub fn evaluate_trait(doc: &TraitDocument, mf: &MultiField) -> Result<Evaluation, IoError> {
    doc.check_channels(mf)?;
    Ok(evaluate(&doc.expr(), mf)?)
}

/// Runs `spec` on the merge tree of `field` swept in `direction`. Segment
/// values stay in the swept orientation.
pub fn segment_field(field: &ScalarField, direction: Direction, spec: &QuerySpec) -> Result<Segmentation, IoError> {
    spec.validate()?;
    let oriented = direction.oriented(field);
    let tree = compute_merge_tree(&oriented)?;
    Ok(run_query(&oriented, &tree, spec)?)
}

/// Point trait at atom `k`, over the dictionary's attribute space.
pub fn atom_trait(stored: &StoredDictionary, k: usize) -> Result<TraitDocument, IoError> {
    if k >= stored.dictionary.len() {
        return Err(IoError::Mismatch(format!(
            "atom {k} out of range, dictionary has {} atoms",
            stored.dictionary.len()
        )));
    }
    let names: Vec<&str> = stored.header.channels.iter().map(String::as_str).collect();
    Ok(TraitDocument::new(TraitExpr::leaf(TraitPrimitive::point(
        &names,
        &stored.dictionary.atom(k),
    ))))
}

/// Distance field of atom `k`: Euclidean distance to the atom as a point
/// trait, or one minus the cosine similarity when `cosine` is set.
pub fn atom_distance(stored: &StoredDictionary, mf: &MultiField, k: usize, cosine: bool) -> Result<ScalarField, IoError> {
    let space = stored.header.attribute_space(mf)?;
    let doc = atom_trait(stored, k)?;
    if cosine {
        let s = similarity_field(&stored.dictionary.atom(k), &space)?;
        Ok(similarity_to_distance(&s.field)?)
    } else {
        Ok(evaluate_trait(&doc, &space)?.field)
    }
}

/// Learns a dictionary over the selected, rescaled channels.
pub fn learn_dictionary(
    mf: &MultiField,
    select: &[String],
    scaling: &[Scaling],
    cfg: &KsvdConfig,
) -> Result<Dictionary, IoError> {
    let space = assemble_attribute_space(mf, select, scaling)?;
    let (d, _) = ksvd_learn(&space.attribute_matrix(), cfg)?;
    Ok(d)
}

/// Ranked atom traits, with codes recomputed against `mf`.
pub fn dictionary_suggestions(stored: &StoredDictionary, mf: &MultiField) -> Result<Vec<AtomSuggestion>, IoError> {
    let space = stored.header.attribute_space(mf)?;
    let codes = sparse_code_all(&stored.dictionary, &space.attribute_matrix(), stored.header.t0)?;
    Ok(suggest_atom_traits(&stored.dictionary, &codes, &space)?)
}

/// Labels each vertex with the atom whose cosine-distance crown covers it
/// at the smallest distance; `None` where no crown reaches.
pub fn atom_crown_labels(stored: &StoredDictionary, mf: &MultiField, delta: f64) -> Result<Vec<Option<usize>>, IoError> {
    let mut best: Vec<Option<(usize, f64)>> = vec![None; mf.len()];
    for k in 0..stored.dictionary.len() {
        let h = atom_distance(stored, mf, k, true)?;
        let seg = segment_field(&h, Direction::Sublevel, &QuerySpec::crown(delta))?;
        for (v, &l) in seg.labels.iter().enumerate() {
            let value = h.values()[v];
            if l != BACKGROUND && best[v].is_none_or(|(_, b)| value < b) {
                best[v] = Some((k, value));
            }
        }
    }
    Ok(best.into_iter().map(|b| b.map(|(k, _)| k)).collect())
}
