use rayon::prelude::*;

use super::TraitError;
use crate::field::MultiField;
use crate::scalar::{Meaning, ScalarField};

/// A cosine-similarity field plus the number of zero-norm attribute vectors
/// (mapped to similarity 0).
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityField {
    pub field: ScalarField,
    pub zero_norm: usize,
}

/// Cosine similarity between every vertex's attribute vector and `atom`.
pub fn similarity_field(atom: &[f64], mf: &MultiField) -> Result<SimilarityField, TraitError> {
    if atom.len() != mf.dimension() {
        return Err(TraitError::DimensionMismatch {
            expected: mf.dimension(),
            got: atom.len(),
        });
    }
    let atom_norm = atom.iter().map(|a| a * a).sum::<f64>().sqrt();
    if !(atom_norm > 0.0) || !atom_norm.is_finite() {
        return Err(TraitError::ZeroAtom);
    }
    let unit: Vec<f64> = atom.iter().map(|a| a / atom_norm).collect();
    let channels = mf.channels();
    let values: Vec<Option<f64>> = (0..mf.len())
        .into_par_iter()
        .map(|i| {
            let mut dot = 0.0;
            let mut nn = 0.0;
            for (c, u) in channels.iter().zip(&unit) {
                let x = c.values[i];
                dot += x * u;
                nn += x * x;
            }
            if nn > 0.0 {
                Some((dot / nn.sqrt()).clamp(-1.0, 1.0))
            } else {
                None
            }
        })
        .collect();
    let zero_norm = values.iter().filter(|v| v.is_none()).count();
    let field = ScalarField::new(
        *mf.grid(),
        values.into_iter().map(|v| v.unwrap_or(0.0)).collect(),
        Meaning::Similarity,
    )?;
    Ok(SimilarityField { field, zero_norm })
}

/// `1 - s`: similarity maxima become distance minima.
pub fn similarity_to_distance(s: &ScalarField) -> Result<ScalarField, TraitError> {
    if s.meaning() != Meaning::Similarity {
        return Err(TraitError::WrongMeaning {
            expected: Meaning::Similarity,
            got: s.meaning(),
        });
    }
    Ok(ScalarField::new(
        *s.grid(),
        s.values().iter().map(|v| 1.0 - v).collect(),
        Meaning::Distance,
    )?)
}
