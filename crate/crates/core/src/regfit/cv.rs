use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::lasso::{fit_lasso_from, lambda_max, LassoOptions};
use super::ols::check_shapes;
use super::{EstimatorKind, EstimatorSpec};
use crate::error::{Error, Result};
use crate::fdata::ScoreMatrix;
use crate::rng::{substream, Domain};

const GRID_POINTS: usize = 100;
const GRID_TOP: f64 = 1e2;
const GRID_BOTTOM: f64 = 1e-3;
const EXTENSION_POINTS: usize = 40;
const MAX_EXTENSIONS: usize = 3;

/// Cross-validation error along a decreasing penalty grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CvCurve {
    pub lambdas: Vec<f64>,
    /// Mean squared prediction error per observation (summed over response scores).
    pub cvm: Vec<f64>,
    /// Standard error of `cvm` across folds.
    pub cvsd: Vec<f64>,
    /// Fold of each observation (`i` itself for leave-one-out).
    pub folds: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaSelection {
    pub lambda_cv: f64,
    pub lambda_1se: f64,
    pub curve: CvCurve,
}

fn log_step() -> f64 {
    (GRID_TOP / GRID_BOTTOM).log10() / (GRID_POINTS - 1) as f64
}

/// `GRID_POINTS` log-spaced penalties from `1e2` down to `1e-3`.
pub fn default_grid() -> Vec<f64> {
    let step = log_step();
    (0..GRID_POINTS).map(|i| 10f64.powf(GRID_TOP.log10() - step * i as f64)).collect()
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::invalid("empty penalty grid"));
    }
    if grid.iter().any(|l| !(*l > 0.0) || !l.is_finite()) {
        return Err(Error::invalid("penalty grid values must be positive and finite"));
    }
    if grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::invalid("penalty grid must be strictly decreasing"));
    }
    Ok(())
}

fn fold_assignment(n: usize, k: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut substream(seed, Domain::Folds, 0));
    let mut folds = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        folds[i] = pos % k;
    }
    folds
}

// Leave-one-out errors of ridge for every grid value via the hat diagonal.
fn ridge_loo(x: &ScoreMatrix, y: &ScoreMatrix, grid: &[f64]) -> CvCurve {
    let n = x.nrows();
    let svd = x.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let s2: Vec<f64> = svd.singular_values.iter().map(|s| s * s).collect();
    let uty = u.transpose() * y;
    let mut cvm = Vec::with_capacity(grid.len());
    let mut cvsd = Vec::with_capacity(grid.len());
    for &lambda in grid {
        let factors: Vec<f64> = s2.iter().map(|s| s / (s + lambda)).collect();
        let mut shrunk = uty.clone();
        for (k, mut row) in shrunk.row_iter_mut().enumerate() {
            row *= factors[k];
        }
        let fitted = &u * shrunk;
        let errs: Vec<f64> = (0..n)
            .map(|i| {
                let h: f64 = (0..s2.len()).map(|k| u[(i, k)] * u[(i, k)] * factors[k]).sum();
                let r = (y.row(i) - fitted.row(i)).norm_squared();
                let d = 1.0 - h;
                if d > 1e-12 {
                    r / (d * d)
                } else {
                    f64::INFINITY
                }
            })
            .collect();
        let (m, sd) = pooled(&errs.iter().map(|&e| (e, 1.0)).collect::<Vec<_>>());
        cvm.push(m);
        cvsd.push(sd);
    }
    CvCurve { lambdas: grid.to_vec(), cvm, cvsd, folds: (0..n).collect() }
}

// (weighted mean, standard error) of per-fold mean errors with fold sizes as weights.
fn pooled(folds: &[(f64, f64)]) -> (f64, f64) {
    let total: f64 = folds.iter().map(|(_, w)| w).sum();
    let mean = folds.iter().map(|(e, w)| e * w).sum::<f64>() / total;
    let k = folds.len();
    if k < 2 || !mean.is_finite() {
        return (mean, 0.0);
    }
    let var = folds.iter().map(|(e, w)| w * (e - mean).powi(2)).sum::<f64>() / total / (k - 1) as f64;
    (mean, var.sqrt())
}

fn lasso_kfold(x: &ScoreMatrix, y: &ScoreMatrix, grid: &[f64], k: usize, seed: u64) -> Result<CvCurve> {
    let n = x.nrows();
    let folds = fold_assignment(n, k, seed);
    let per_fold: Vec<Vec<f64>> = (0..k)
        .into_par_iter()
        .map(|f| -> Result<Vec<f64>> {
            let train: Vec<usize> = (0..n).filter(|&i| folds[i] != f).collect();
            let test: Vec<usize> = (0..n).filter(|&i| folds[i] == f).collect();
            let xt = x.select_rows(&train);
            let yt = y.select_rows(&train);
            let xv = x.select_rows(&test);
            let yv = y.select_rows(&test);
            let mut warm: Option<DMatrix<f64>> = None;
            let mut errs = Vec::with_capacity(grid.len());
            for &lambda in grid {
                let fit = fit_lasso_from(&xt, &yt, lambda, 1.0, warm.as_ref(), LassoOptions::default())
                    .map_err(|e| e.context(format!("cross-validation fold {f}, penalty {lambda}")))?;
                errs.push((&yv - &xv * &fit.b).norm_squared());
                warm = Some(fit.b);
            }
            Ok(errs)
        })
        .collect::<Result<_>>()?;
    let sizes: Vec<f64> = (0..k).map(|f| folds.iter().filter(|&&g| g == f).count() as f64).collect();
    let mut cvm = Vec::with_capacity(grid.len());
    let mut cvsd = Vec::with_capacity(grid.len());
    for l in 0..grid.len() {
        let parts: Vec<(f64, f64)> = (0..k).map(|f| (per_fold[f][l] / sizes[f], sizes[f])).collect();
        let (m, sd) = pooled(&parts);
        cvm.push(m);
        cvsd.push(sd);
    }
    Ok(CvCurve { lambdas: grid.to_vec(), cvm, cvsd, folds })
}

fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

fn extend(grid: &[f64], up: bool) -> Vec<f64> {
    let step = 10f64.powf(log_step());
    let mut out = Vec::with_capacity(grid.len() + EXTENSION_POINTS);
    if up {
        let top = grid[0];
        out.extend((1..=EXTENSION_POINTS).rev().map(|i| top * step.powi(i as i32)));
        out.extend_from_slice(grid);
    } else {
        out.extend_from_slice(grid);
        let bottom = grid[grid.len() - 1];
        out.extend((1..=EXTENSION_POINTS).map(|i| bottom / step.powi(i as i32)));
    }
    out
}

/// Chooses `λ_CV` (minimum CV error) and `λ_1SE` (largest penalty within one
/// standard error of the minimum).
///
/// Ridge uses exact leave-one-out errors from the hat diagonal; the lasso
/// kinds use seeded K-fold CV of the lasso path with warm starts. When the
/// spec carries no grid, the default grid is extended (at most three times
/// per side) while the minimum sits on a boundary.
pub fn select_lambda(x: &ScoreMatrix, y: &ScoreMatrix, spec: &EstimatorSpec, seed: u64) -> Result<LambdaSelection> {
    check_shapes(x, y)?;
    let n = x.nrows();
    let is_ridge = match spec.kind {
        EstimatorKind::Ridge => true,
        EstimatorKind::Lasso | EstimatorKind::L1s => false,
        EstimatorKind::Fpcr => return Err(Error::invalid("least squares has no penalty to select")),
    };
    if !is_ridge && (spec.folds < 2 || spec.folds > n) {
        return Err(Error::invalid(format!("{} folds for {n} observations", spec.folds)));
    }
    let curve_for = |grid: &[f64]| -> Result<CvCurve> {
        if is_ridge {
            Ok(ridge_loo(x, y, grid))
        } else {
            lasso_kfold(x, y, grid, spec.folds, seed)
        }
    };

    let mut grid = match &spec.lambda_grid {
        Some(g) => {
            validate_grid(g)?;
            g.clone()
        }
        None => default_grid(),
    };
    let mut curve = curve_for(&grid)?;
    if spec.lambda_grid.is_none() {
        let lmax = if is_ridge { f64::INFINITY } else { lambda_max(x, y, 1.0) };
        let (mut down, mut up) = (0, 0);
        loop {
            let best = argmin(&curve.cvm);
            if best == grid.len() - 1 && down < MAX_EXTENSIONS {
                down += 1;
                grid = extend(&grid, false);
            } else if best == 0 && up < MAX_EXTENSIONS && grid[0] < lmax {
                up += 1;
                grid = extend(&grid, true);
            } else {
                break;
            }
            curve = curve_for(&grid)?;
        }
    }

    let best = argmin(&curve.cvm);
    if !curve.cvm[best].is_finite() {
        return Err(Error::invalid("cross-validation error is not finite on the whole grid"));
    }
    let threshold = curve.cvm[best] + curve.cvsd[best];
    let one_se = curve.cvm.iter().position(|&v| v <= threshold).unwrap_or(best);
    Ok(LambdaSelection { lambda_cv: curve.lambdas[best], lambda_1se: curve.lambdas[one_se], curve })
}
