use nalgebra::{DMatrix, DVector};

use super::Grid;
use crate::error::{Error, Result};

/// `n` curves evaluated on a shared grid; row `i` is curve `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalSample {
    grid: Grid,
    values: DMatrix<f64>,
}

impl FunctionalSample {
    pub fn new(grid: Grid, values: DMatrix<f64>) -> Result<FunctionalSample> {
        if values.ncols() != grid.len() {
            return Err(Error::dims(format!(
                "sample has {} columns but the grid has {} nodes",
                values.ncols(),
                grid.len()
            )));
        }
        for j in 0..values.ncols() {
            for i in 0..values.nrows() {
                if !values[(i, j)].is_finite() {
                    return Err(Error::NonFinite { row: i, col: j });
                }
            }
        }
        Ok(FunctionalSample { grid, values })
    }

    /// Builds a sample by evaluating `f(i, t)` at every grid node.
    pub fn from_fn(grid: Grid, n: usize, mut f: impl FnMut(usize, f64) -> f64) -> Result<FunctionalSample> {
        let nodes = grid.nodes().to_vec();
        let values = DMatrix::from_fn(n, nodes.len(), |i, j| f(i, nodes[j]));
        FunctionalSample::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_values(self) -> DMatrix<f64> {
        self.values
    }

    /// Number of curves.
    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    /// Number of grid nodes.
    pub fn m(&self) -> usize {
        self.values.ncols()
    }

    pub fn curve(&self, i: usize) -> Vec<f64> {
        self.values.row(i).iter().copied().collect()
    }

    /// Squared L² norm of every curve.
    pub fn squared_norms(&self) -> Vec<f64> {
        let w = self.grid.weights();
        (0..self.n())
            .map(|i| self.values.row(i).iter().zip(w).map(|(v, w)| w * v * v).sum())
            .collect()
    }

    /// Pointwise sum with another sample on the same grid.
    pub fn add(&self, other: &FunctionalSample) -> Result<FunctionalSample> {
        if !self.grid.conforms(&other.grid) || self.n() != other.n() {
            return Err(Error::dims("adding samples with different grids or sizes"));
        }
        Ok(FunctionalSample { grid: self.grid.clone(), values: &self.values + &other.values })
    }

    pub fn scale(&self, c: f64) -> FunctionalSample {
        FunctionalSample { grid: self.grid.clone(), values: &self.values * c }
    }

    /// Subsample of the given rows.
    pub fn select_rows(&self, rows: &[usize]) -> FunctionalSample {
        let values = DMatrix::from_fn(rows.len(), self.m(), |i, j| self.values[(rows[i], j)]);
        FunctionalSample { grid: self.grid.clone(), values }
    }

    pub fn column_means(&self) -> DVector<f64> {
        column_means(&self.values)
    }
}

pub(crate) fn column_means(values: &DMatrix<f64>) -> DVector<f64> {
    let n = values.nrows().max(1) as f64;
    DVector::from_iterator(values.ncols(), values.column_iter().map(|c| c.sum() / n))
}

/// Subtracts the mean curve. Returns the centered sample and the mean.
pub fn center(sample: &FunctionalSample) -> (FunctionalSample, DVector<f64>) {
    let mean = sample.column_means();
    let mut values = sample.values.clone();
    for (j, mut col) in values.column_iter_mut().enumerate() {
        col.add_scalar_mut(-mean[j]);
    }
    (FunctionalSample { grid: sample.grid.clone(), values }, mean)
}
