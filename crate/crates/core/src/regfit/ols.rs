use nalgebra::{DMatrix, SymmetricEigen};

use super::{EstimatorKind, Fit};
use crate::error::{Error, Result};
use crate::fdata::ScoreMatrix;

/// Largest tolerated condition number of `X'X`.
pub const MAX_CONDITION: f64 = 1e13;

pub(crate) fn check_shapes(x: &ScoreMatrix, y: &ScoreMatrix) -> Result<()> {
    if x.nrows() != y.nrows() {
        return Err(Error::dims(format!("X has {} rows, Y has {}", x.nrows(), y.nrows())));
    }
    if x.nrows() == 0 || y.ncols() == 0 {
        return Err(Error::dims("empty design or response"));
    }
    Ok(())
}

fn condition(gram: &DMatrix<f64>) -> f64 {
    let eig = SymmetricEigen::new(gram.clone()).eigenvalues;
    let (lo, hi) = (eig.min(), eig.max());
    if lo <= 0.0 || hi <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Least squares `B = (X'X)⁻¹X'Y` with hat matrix `X(X'X)⁻¹X'`.
pub fn fit_fpcr(x: &ScoreMatrix, y: &ScoreMatrix) -> Result<Fit> {
    check_shapes(x, y)?;
    let (n, p) = x.shape();
    if p == 0 {
        return Err(Error::dims("design has no columns"));
    }
    if n < p {
        return Err(Error::RankDeficient { what: format!("design with {n} rows and {p} columns"), condition: f64::INFINITY });
    }
    let cond = condition(&(x.transpose() * x));
    if !(cond <= MAX_CONDITION) {
        return Err(Error::RankDeficient { what: "X'X".into(), condition: cond });
    }
    let qr = x.clone().qr();
    let q = qr.q();
    let r = qr.r();
    let b = r
        .solve_upper_triangular(&(q.transpose() * y))
        .ok_or_else(|| Error::RankDeficient { what: "QR factor of X".into(), condition: cond })?;
    let hat = &q * q.transpose();
    let residuals = y - x * &b;
    Ok(Fit { kind: EstimatorKind::Fpcr, b, selected: (0..p).collect(), lambda: 0.0, alpha: 0.0, hat: Some(hat), residuals })
}

/// Ridge `B = (X'X + λI)⁻¹X'Y` with hat matrix `X(X'X + λI)⁻¹X'`.
///
/// The penalty is on the unscaled cross-product, so it corresponds to the
/// elastic-net objective with `α = 0` at penalty `λ/n`.
pub fn fit_ridge(x: &ScoreMatrix, y: &ScoreMatrix, lambda: f64) -> Result<Fit> {
    check_shapes(x, y)?;
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::invalid(format!("ridge penalty {lambda} must be finite and nonnegative")));
    }
    if lambda == 0.0 {
        let mut fit = fit_fpcr(x, y)?;
        fit.kind = EstimatorKind::Ridge;
        return Ok(fit);
    }
    let p = x.ncols();
    let mut gram = x.transpose() * x;
    for j in 0..p {
        gram[(j, j)] += lambda;
    }
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::RankDeficient { what: "X'X + λI".into(), condition: f64::INFINITY })?;
    let b = chol.solve(&(x.transpose() * y));
    let hat = x * chol.solve(&x.transpose());
    let hat = (&hat + hat.transpose()) * 0.5;
    let residuals = y - x * &b;
    Ok(Fit { kind: EstimatorKind::Ridge, b, selected: (0..p).collect(), lambda, alpha: 0.0, hat: Some(hat), residuals })
}
