use nalgebra::DMatrix;

use crate::{Error, Result};

/// Set of matrices `C + Σ β_i G_i` with `β ∈ [-1, 1]^γ`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixZonotope {
    center: DMatrix<f64>,
    generators: Vec<DMatrix<f64>>,
}

impl MatrixZonotope {
    pub fn new(center: DMatrix<f64>, generators: Vec<DMatrix<f64>>) -> Result<Self> {
        for g in &generators {
            if g.shape() != center.shape() {
                return Err(Error::dims(
                    "matrix zonotope generator",
                    center.nrows() * center.ncols(),
                    g.nrows() * g.ncols(),
                ));
            }
        }
        Ok(Self { center, generators })
    }

    pub fn center(&self) -> &DMatrix<f64> {
        &self.center
    }

    pub fn generators(&self) -> &[DMatrix<f64>] {
        &self.generators
    }

    pub fn num_generators(&self) -> usize {
        self.generators.len()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.center.shape()
    }

    /// Member matrix for the given generator coefficients.
    pub fn member(&self, beta: &[f64]) -> Result<DMatrix<f64>> {
        if beta.len() != self.generators.len() {
            return Err(Error::dims(
                "matrix zonotope coefficients",
                self.generators.len(),
                beta.len(),
            ));
        }
        Ok(self
            .generators
            .iter()
            .zip(beta)
            .fold(self.center.clone(), |acc, (g, &b)| acc + g * b))
    }
}
