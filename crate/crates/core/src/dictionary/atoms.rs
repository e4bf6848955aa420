use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{Dictionary, DictionaryError, SparseCodes};
use crate::field::MultiField;
use crate::traits::{TraitExpr, TraitPrimitive};
use crate::union_find::DisjointSets;

/// Pairwise cosine similarity of atoms.
pub fn atom_similarity_matrix(d: &Dictionary) -> DMatrix<f64> {
    let a = d.atoms();
    let k = a.ncols();
    let norms: Vec<f64> = a.column_iter().map(|c| c.norm()).collect();
    let mut s = DMatrix::identity(k, k);
    for i in 0..k {
        for j in (i + 1)..k {
            let v = (a.column(i).dot(&a.column(j)) / (norms[i] * norms[j])).clamp(-1.0, 1.0);
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomCluster {
    /// Ascending atom indices.
    pub members: Vec<usize>,
    pub representative: usize,
}

/// Single-linkage clusters over `S[i][j] >= threshold`, ordered by their
/// smallest member. The representative has the largest summed similarity to
/// the rest of its cluster.
pub fn cluster_atoms(s: &DMatrix<f64>, threshold: f64) -> Result<Vec<AtomCluster>, DictionaryError> {
    let k = s.nrows();
    if s.ncols() != k || s.iter().any(|v| !v.is_finite()) {
        return Err(DictionaryError::BadSimilarity);
    }
    for i in 0..k {
        for j in (i + 1)..k {
            if (s[(i, j)] - s[(j, i)]).abs() > 1e-12 {
                return Err(DictionaryError::BadSimilarity);
            }
        }
    }
    let mut sets = DisjointSets::new(k);
    for i in 0..k {
        for j in (i + 1)..k {
            if s[(i, j)] >= threshold {
                sets.union(i, j);
            }
        }
    }
    let mut slot = vec![usize::MAX; k];
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for i in 0..k {
        let r = sets.find(i);
        if slot[r] == usize::MAX {
            slot[r] = clusters.len();
            clusters.push(Vec::new());
        }
        clusters[slot[r]].push(i);
    }
    Ok(clusters
        .into_iter()
        .map(|members| {
            let mut representative = members[0];
            let mut best = f64::NEG_INFINITY;
            for &i in &members {
                let total: f64 = members.iter().map(|&j| s[(i, j)]).sum();
                if total > best {
                    best = total;
                    representative = i;
                }
            }
            AtomCluster {
                members,
                representative,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomSuggestion {
    pub atom: usize,
    /// A point trait at the atom's coordinates over the channels of the
    /// attribute space the dictionary was trained on.
    pub trait_expr: TraitExpr,
    /// Sum of absolute coefficients of this atom over all data columns.
    pub score: f64,
}

/// One point trait per atom, ranked by usage (descending, ties by atom index).
pub fn suggest_atom_traits(
    d: &Dictionary,
    codes: &SparseCodes,
    mf: &MultiField,
) -> Result<Vec<AtomSuggestion>, DictionaryError> {
    if d.dimension() != mf.dimension() {
        return Err(DictionaryError::DimensionMismatch {
            expected: mf.dimension(),
            got: d.dimension(),
        });
    }
    if codes.k != d.len() {
        return Err(DictionaryError::DimensionMismatch {
            expected: d.len(),
            got: codes.k,
        });
    }
    let mut scores = vec![0.0; d.len()];
    for col in &codes.columns {
        for &(i, v) in &col.entries {
            scores[i] += v.abs();
        }
    }
    let names = mf.channel_names();
    let mut out: Vec<AtomSuggestion> = (0..d.len())
        .map(|atom| AtomSuggestion {
            atom,
            trait_expr: TraitExpr::leaf(TraitPrimitive::point(&names, &d.atom(atom))),
            score: scores[atom],
        })
        .collect();
    out.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.atom.cmp(&b.atom)));
    Ok(out)
}
