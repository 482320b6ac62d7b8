use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::sample::column_means;
use super::{center, FunctionalSample, Grid};
use crate::error::{Error, Result};

/// Coefficients of a sample in a truncated basis: row `i` holds curve `i`,
/// column `j` its coefficient on basis element `j`.
pub type ScoreMatrix = DMatrix<f64>;

/// Empirical functional principal components of a sample.
///
/// Eigenfunctions are orthonormal under the grid's quadrature inner product.
/// Eigenvalues use the `1/n` covariance divisor.
#[derive(Debug, Clone, PartialEq)]
pub struct FpcBasis {
    grid: Grid,
    mean: DVector<f64>,
    /// `k × m`; row `j` is eigenfunction `j` on the grid.
    eigenfunctions: DMatrix<f64>,
    eigenvalues: Vec<f64>,
    cum_ev: Vec<f64>,
}

impl FpcBasis {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Mean curve removed before the decomposition (zero if the input was
    /// already centered).
    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn eigenfunctions(&self) -> &DMatrix<f64> {
        &self.eigenfunctions
    }

    pub fn eigenfunction(&self, j: usize) -> Vec<f64> {
        self.eigenfunctions.row(j).iter().copied().collect()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Cumulative proportion of explained variance.
    pub fn cum_ev(&self) -> &[f64] {
        &self.cum_ev
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// First `k` elements of the basis.
    pub fn truncated(&self, k: usize) -> Result<FpcBasis> {
        if k == 0 || k > self.len() {
            return Err(Error::invalid(format!("cannot truncate a basis of {} elements to {k}", self.len())));
        }
        Ok(FpcBasis {
            grid: self.grid.clone(),
            mean: self.mean.clone(),
            eigenfunctions: self.eigenfunctions.rows(0, k).into_owned(),
            eigenvalues: self.eigenvalues[..k].to_vec(),
            cum_ev: self.cum_ev[..k].to_vec(),
        })
    }

    /// Builds a basis from explicit orthonormal functions (used for tests and
    /// for projecting onto known bases).
    pub fn from_functions(grid: Grid, functions: DMatrix<f64>) -> Result<FpcBasis> {
        if functions.ncols() != grid.len() {
            return Err(Error::dims("basis functions do not conform to the grid"));
        }
        let k = functions.nrows();
        Ok(FpcBasis {
            mean: DVector::zeros(grid.len()),
            grid,
            eigenfunctions: functions,
            eigenvalues: vec![0.0; k],
            cum_ev: (1..=k).map(|j| j as f64 / k as f64).collect(),
        })
    }
}

/// FPC decomposition of a centered sample, keeping `k_max` components.
pub fn fpc(sample: &FunctionalSample, k_max: usize) -> Result<(FpcBasis, ScoreMatrix)> {
    let (n, m) = (sample.n(), sample.m());
    if k_max == 0 || k_max > n.min(m) {
        return Err(Error::invalid(format!("k_max = {k_max} outside 1..={}", n.min(m))));
    }
    let values = sample.values();
    let scale = values.amax();
    let tol = 1e-8 * if scale > 0.0 { scale } else { 1.0 };
    let max_mean = column_means(values).amax();
    if max_mean > tol {
        return Err(Error::NotCentered { max_mean, tol });
    }

    let grid = sample.grid();
    let sqrt_w: Vec<f64> = grid.weights().iter().map(|w| w.sqrt()).collect();
    // W^{1/2} C W^{1/2} with C = V'V / n
    let mut weighted = values.clone();
    for (j, mut col) in weighted.column_iter_mut().enumerate() {
        col *= sqrt_w[j];
    }
    let op = (weighted.transpose() * &weighted) / n as f64;
    let eig = SymmetricEigen::new(op);

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let all: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let total: f64 = all.iter().sum();

    let mut eigenfunctions = DMatrix::zeros(k_max, m);
    for (row, &idx) in order.iter().take(k_max).enumerate() {
        let u = eig.eigenvectors.column(idx);
        let mut phi: Vec<f64> = (0..m).map(|t| u[t] / sqrt_w[t]).collect();
        let norm = grid.dot(&phi, &phi).sqrt();
        let pivot = phi.iter().copied().fold(0.0_f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        phi.iter_mut().for_each(|v| *v *= sign / norm);
        eigenfunctions.row_mut(row).copy_from_slice(&phi);
    }

    let eigenvalues = all[..k_max].to_vec();
    let mut cum_ev = Vec::with_capacity(k_max);
    let mut acc = 0.0;
    for &l in &eigenvalues {
        acc += l;
        cum_ev.push(if total > 0.0 { (acc / total).min(1.0) } else { 1.0 });
    }

    let basis = FpcBasis {
        grid: grid.clone(),
        mean: DVector::zeros(m),
        eigenfunctions,
        eigenvalues,
        cum_ev,
    };
    let scores = project_values(values, &basis, k_max);
    Ok((basis, scores))
}

/// Centers `sample`, then decomposes it. The returned basis remembers the mean.
pub fn fpc_centering(sample: &FunctionalSample, k_max: usize) -> Result<(FpcBasis, ScoreMatrix)> {
    let (centered, mean) = center(sample);
    let (mut basis, scores) = fpc(&centered, k_max)?;
    basis.mean = mean;
    Ok((basis, scores))
}

/// Smallest `k` whose cumulative explained variance reaches `threshold`.
pub fn truncate_by_ev(basis: &FpcBasis, threshold: f64) -> Result<usize> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::invalid(format!("EV threshold {threshold} outside (0, 1]")));
    }
    Ok(basis
        .cum_ev
        .iter()
        .position(|&c| c >= threshold - 1e-12)
        .map(|i| i + 1)
        .unwrap_or(basis.len()))
}

fn project_values(values: &DMatrix<f64>, basis: &FpcBasis, k: usize) -> ScoreMatrix {
    let w = basis.grid.weights();
    let mut weighted = basis.eigenfunctions.rows(0, k).transpose();
    for (t, mut row) in weighted.row_iter_mut().enumerate() {
        row *= w[t];
    }
    values * weighted
}

/// Scores of `sample` on the first `k` elements of `basis`.
pub fn project(sample: &FunctionalSample, basis: &FpcBasis, k: usize) -> Result<ScoreMatrix> {
    if !sample.grid().conforms(&basis.grid) {
        return Err(Error::dims("sample and basis live on different grids"));
    }
    if k > basis.len() {
        return Err(Error::dims(format!("requested {k} scores from a basis of {}", basis.len())));
    }
    Ok(project_values(sample.values(), basis, k))
}

/// Curves `Σ_j scores[i][j] · basis_j` (the basis mean is not added back).
pub fn reconstruct(scores: &ScoreMatrix, basis: &FpcBasis) -> Result<FunctionalSample> {
    let k = scores.ncols();
    if k > basis.len() {
        return Err(Error::dims(format!("{k} score columns for a basis of {}", basis.len())));
    }
    let values = scores * basis.eigenfunctions.rows(0, k);
    FunctionalSample::new(basis.grid.clone(), values)
}
