use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::{Dictionary, DictionaryError, SparseCodes, SparseVector};

/// Relative residual norm at which OMP stops early.
pub const OMP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct OmpResult {
    pub code: SparseVector,
    /// Residual norm after each round.
    pub residual_norms: Vec<f64>,
}

impl OmpResult {
    pub fn residual_norm(&self) -> f64 {
        self.residual_norms.last().copied().unwrap_or(f64::NAN)
    }
}

/// Orthogonal matching pursuit with a full least-squares refit every round.
pub fn omp_sparse_code(d: &Dictionary, signal: &[f64], t0: usize) -> Result<OmpResult, DictionaryError> {
    if signal.len() != d.dimension() {
        return Err(DictionaryError::DimensionMismatch {
            expected: d.dimension(),
            got: signal.len(),
        });
    }
    if t0 == 0 || t0 > d.len() {
        return Err(DictionaryError::BadSparsity { t0, k: d.len() });
    }
    if signal.iter().any(|v| !v.is_finite()) {
        return Err(DictionaryError::NonFinite("signal"));
    }
    Ok(omp(d.atoms(), &DVector::from_column_slice(signal), t0))
}

pub(crate) fn omp(d: &DMatrix<f64>, signal: &DVector<f64>, t0: usize) -> OmpResult {
    let k = d.ncols();
    let norm = signal.norm();
    let stop = OMP_TOL * norm.max(1.0);
    let mut residual = signal.clone();
    let mut selected: Vec<usize> = Vec::with_capacity(t0);
    let mut coeffs = DVector::zeros(0);
    let mut residual_norms = vec![norm];
    while selected.len() < t0 && residual.norm() > stop {
        let corr = d.tr_mul(&residual);
        let mut best = None;
        let mut best_abs = 0.0;
        for i in 0..k {
            let c = corr[i].abs();
            if c > best_abs && !selected.contains(&i) {
                best = Some(i);
                best_abs = c;
            }
        }
        let Some(i) = best else { break };
        selected.push(i);
        let sub = d.select_columns(selected.iter());
        let svd = sub.clone().svd(true, true);
        coeffs = match svd.solve(signal, f64::EPSILON * norm.max(1.0)) {
            Ok(c) => c,
            Err(_) => break,
        };
        residual = signal - &sub * &coeffs;
        residual_norms.push(residual.norm());
    }
    let mut entries: Vec<(usize, f64)> = selected
        .iter()
        .zip(coeffs.iter())
        .filter(|(_, c)| **c != 0.0)
        .map(|(&i, &c)| (i, c))
        .collect();
    entries.sort_unstable_by_key(|e| e.0);
    OmpResult {
        code: SparseVector { entries },
        residual_norms,
    }
}

/// OMP codes of every column of `f`.
pub fn sparse_code_all(d: &Dictionary, f: &DMatrix<f64>, t0: usize) -> Result<SparseCodes, DictionaryError> {
    if f.nrows() != d.dimension() {
        return Err(DictionaryError::DimensionMismatch {
            expected: d.dimension(),
            got: f.nrows(),
        });
    }
    if t0 == 0 || t0 > d.len() {
        return Err(DictionaryError::BadSparsity { t0, k: d.len() });
    }
    if f.iter().any(|v| !v.is_finite()) {
        return Err(DictionaryError::NonFinite("data matrix"));
    }
    let columns = (0..f.ncols())
        .into_par_iter()
        .map(|j| omp(d.atoms(), &f.column(j).into_owned(), t0).code)
        .collect();
    Ok(SparseCodes { k: d.len(), columns })
}
