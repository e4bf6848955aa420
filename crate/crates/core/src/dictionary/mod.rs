//! Sparse dictionary learning over the attribute matrix.
//!
//! Signals are the columns of an `M x N` attribute matrix. A dictionary holds
//! `K` unit-norm atoms as the columns of an `M x K` matrix, and every signal
//! is approximated by at most `T0` atoms.

mod atoms;
mod ksvd;
mod omp;

pub use atoms::{atom_similarity_matrix, cluster_atoms, suggest_atom_traits, AtomCluster, AtomSuggestion};
pub use ksvd::{ksvd_learn, KsvdConfig, EARLY_STOP_TOL, EARLY_STOP_WINDOW};
pub use omp::{omp_sparse_code, sparse_code_all, OmpResult, OMP_TOL};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const UNIT_NORM_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DictionaryError {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("sparsity level {t0} must be in 1..={k}")]
    BadSparsity { t0: usize, k: usize },
    #[error("atom count must be at least 1")]
    NoAtoms,
    #[error("expected dimension {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("{k} atoms need at least {k} data columns, got {n}")]
    TooFewColumns { k: usize, n: usize },
    #[error("data matrix has rank 0")]
    Degenerate,
    #[error("atom {atom} has norm {norm}, expected 1")]
    NotUnitNorm { atom: usize, norm: f64 },
    #[error("similarity matrix must be square and symmetric")]
    BadSimilarity,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub t0: usize,
    pub iterations: usize,
    pub seed: u64,
    pub final_rmse: f64,
    /// RMSE after the coding step of every iteration.
    pub rmse_history: Vec<f64>,
    /// `(iteration, atom)` for every atom re-seeded from a data column.
    pub reseeded: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    atoms: DMatrix<f64>,
    pub meta: TrainingMeta,
}

impl Dictionary {
    /// Wraps an `M x K` matrix whose columns must already be unit-norm.
    pub fn new(atoms: DMatrix<f64>) -> Result<Self, DictionaryError> {
        if atoms.ncols() == 0 {
            return Err(DictionaryError::NoAtoms);
        }
        if atoms.iter().any(|v| !v.is_finite()) {
            return Err(DictionaryError::NonFinite("dictionary"));
        }
        for (atom, col) in atoms.column_iter().enumerate() {
            let norm = col.norm();
            if (norm - 1.0).abs() > UNIT_NORM_TOL {
                return Err(DictionaryError::NotUnitNorm { atom, norm });
            }
        }
        Ok(Dictionary {
            atoms,
            meta: TrainingMeta::default(),
        })
    }

    /// Normalizes every column; zero columns are rejected.
    pub fn normalized(mut atoms: DMatrix<f64>) -> Result<Self, DictionaryError> {
        for (atom, mut col) in atoms.column_iter_mut().enumerate() {
            let norm = col.norm();
            if !(norm > 0.0) || !norm.is_finite() {
                return Err(DictionaryError::NotUnitNorm { atom, norm });
            }
            col /= norm;
        }
        Self::new(atoms)
    }

    pub fn with_meta(mut self, meta: TrainingMeta) -> Self {
        self.meta = meta;
        self
    }

    pub fn atoms(&self) -> &DMatrix<f64> {
        &self.atoms
    }

    pub fn atom(&self, k: usize) -> Vec<f64> {
        self.atoms.column(k).iter().copied().collect()
    }

    /// Signal dimension `M`.
    pub fn dimension(&self) -> usize {
        self.atoms.nrows()
    }

    /// Atom count `K`.
    pub fn len(&self) -> usize {
        self.atoms.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.ncols() == 0
    }
}

/// A sparse `K`-vector as `(atom, coefficient)` pairs sorted by atom.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SparseVector {
    pub entries: Vec<(usize, f64)>,
}

impl SparseVector {
    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, atom: usize) -> f64 {
        self.entries
            .binary_search_by_key(&atom, |e| e.0)
            .map(|i| self.entries[i].1)
            .unwrap_or(0.0)
    }

    pub fn to_dense(&self, k: usize) -> DVector<f64> {
        let mut out = DVector::zeros(k);
        for &(i, v) in &self.entries {
            out[i] = v;
        }
        out
    }

    pub(crate) fn from_dense(col: impl Iterator<Item = f64>) -> Self {
        SparseVector {
            entries: col
                .enumerate()
                .filter(|(_, v)| *v != 0.0)
                .collect(),
        }
    }
}

/// Codes of `N` signals over `K` atoms.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SparseCodes {
    pub k: usize,
    pub columns: Vec<SparseVector>,
}

impl SparseCodes {
    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn max_nnz(&self) -> usize {
        self.columns.iter().map(|c| c.nnz()).max().unwrap_or(0)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.k, self.columns.len());
        for (j, col) in self.columns.iter().enumerate() {
            for &(i, v) in &col.entries {
                out[(i, j)] = v;
            }
        }
        out
    }

    pub(crate) fn from_dense(c: &DMatrix<f64>) -> Self {
        SparseCodes {
            k: c.nrows(),
            columns: c
                .column_iter()
                .map(|col| SparseVector::from_dense(col.iter().copied()))
                .collect(),
        }
    }
}

/// Root mean square of `F - D C` over all entries.
pub fn reconstruction_rmse(f: &DMatrix<f64>, d: &Dictionary, c: &SparseCodes) -> f64 {
    let r = f - d.atoms() * c.to_dense();
    (r.norm_squared() / (f.nrows() * f.ncols()).max(1) as f64).sqrt()
}
