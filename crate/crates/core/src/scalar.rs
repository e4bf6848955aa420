use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::GridSpec;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScalarFieldError {
    #[error("field has {got} values, grid has {expected} vertices")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite value at vertex {0}")]
    NonFinite(usize),
    #[error("negative value {value} at vertex {index} in a distance field")]
    NegativeDistance { index: usize, value: f64 },
    #[error("similarity {value} at vertex {index} is outside [-1, 1]")]
    SimilarityRange { index: usize, value: f64 },
}

/// What the values of a scalar field measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Meaning {
    /// Nonnegative distance to a trait.
    Distance,
    /// Cosine similarity in `[-1, 1]`.
    Similarity,
    Generic,
}

/// One finite value per grid vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
    meaning: Meaning,
}

impl ScalarField {
    pub fn new(grid: GridSpec, values: Vec<f64>, meaning: Meaning) -> Result<Self, ScalarFieldError> {
        if values.len() != grid.len() {
            return Err(ScalarFieldError::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        for (index, &value) in values.iter().enumerate() {
            if !value.is_finite() {
                return Err(ScalarFieldError::NonFinite(index));
            }
            match meaning {
                Meaning::Distance if value < 0.0 => {
                    return Err(ScalarFieldError::NegativeDistance { index, value })
                }
                Meaning::Similarity if !(-1.0..=1.0).contains(&value) => {
                    return Err(ScalarFieldError::SimilarityRange { index, value })
                }
                _ => {}
            }
        }
        Ok(ScalarField {
            grid,
            values,
            meaning,
        })
    }

    pub fn generic(grid: GridSpec, values: Vec<f64>) -> Result<Self, ScalarFieldError> {
        Self::new(grid, values, Meaning::Generic)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn meaning(&self) -> Meaning {
        self.meaning
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    /// The negated field, for super-level analysis through the sub-level code path.
    pub fn negated(&self) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|v| -v).collect(),
            meaning: Meaning::Generic,
        }
    }

    pub fn with_grid(mut self, grid: GridSpec) -> Result<Self, ScalarFieldError> {
        if grid.len() != self.values.len() {
            return Err(ScalarFieldError::LengthMismatch {
                expected: grid.len(),
                got: self.values.len(),
            });
        }
        self.grid = grid;
        Ok(self)
    }
}
