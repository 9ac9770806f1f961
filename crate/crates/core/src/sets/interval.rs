use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Axis-aligned box `[lower, upper]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalVector {
    lower: DVector<f64>,
    upper: DVector<f64>,
}

impl IntervalVector {
    pub fn new(lower: DVector<f64>, upper: DVector<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::dims("interval bounds", lower.len(), upper.len()));
        }
        for (dim, (&lo, &hi)) in lower.iter().zip(upper.iter()).enumerate() {
            // NaN fails this comparison too
            if !(lo <= hi) {
                return Err(Error::InvalidInterval {
                    dim,
                    lower: lo,
                    upper: hi,
                });
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn from_slices(lower: &[f64], upper: &[f64]) -> Result<Self> {
        Self::new(
            DVector::from_column_slice(lower),
            DVector::from_column_slice(upper),
        )
    }

    pub fn degenerate(point: DVector<f64>) -> Self {
        Self {
            lower: point.clone(),
            upper: point,
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &DVector<f64> {
        &self.lower
    }

    pub fn upper(&self) -> &DVector<f64> {
        &self.upper
    }

    pub fn midpoint(&self) -> DVector<f64> {
        (&self.lower + &self.upper) * 0.5
    }

    pub fn radius(&self) -> DVector<f64> {
        (&self.upper - &self.lower) * 0.5
    }

    pub fn contains(&self, p: &DVector<f64>, tol: f64) -> bool {
        p.len() == self.dim()
            && p.iter()
                .zip(self.lower.iter().zip(self.upper.iter()))
                .all(|(&x, (&lo, &hi))| x >= lo - tol && x <= hi + tol)
    }

    /// True when `other` lies inside `self` up to `tol`.
    pub fn encloses(&self, other: &IntervalVector, tol: f64) -> bool {
        self.dim() == other.dim()
            && (0..self.dim()).all(|i| {
                other.lower[i] >= self.lower[i] - tol && other.upper[i] <= self.upper[i] + tol
            })
    }
}
