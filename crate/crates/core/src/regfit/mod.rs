//! Estimators of the truncated coefficient matrix `B` in `Y = X B + E`
//! (score form of the functional linear model): least squares, ridge,
//! row-wise group lasso, and lasso-selection followed by least squares.

mod cv;
mod lasso;
mod ols;

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

pub use cv::{default_grid, select_lambda, CvCurve, LambdaSelection};
pub use lasso::{fit_lasso, kkt_gap, lambda_max, objective, LassoOptions};
pub use ols::{fit_fpcr, fit_ridge, MAX_CONDITION};

use crate::error::{Error, Result};
use crate::fdata::{FpcBasis, ScoreMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimatorKind {
    /// Ordinary least squares on the scores.
    Fpcr,
    /// Ridge penalty.
    Ridge,
    /// Row-wise group lasso.
    Lasso,
    /// Group-lasso row selection, then least squares on the selected rows.
    L1s,
}

impl EstimatorKind {
    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Fpcr => "fpcr",
            EstimatorKind::Ridge => "ridge",
            EstimatorKind::Lasso => "lasso",
            EstimatorKind::L1s => "l1s",
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fpcr" | "ols" => Ok(EstimatorKind::Fpcr),
            "ridge" | "fpcr-l2" | "l2" => Ok(EstimatorKind::Ridge),
            "lasso" | "fpcr-l1" | "l1" => Ok(EstimatorKind::Lasso),
            "l1s" | "fpcr-l1s" => Ok(EstimatorKind::L1s),
            other => Err(Error::invalid(format!("unknown estimator '{other}' (expected fpcr, ridge, lasso or l1s)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaPolicy {
    Fixed(f64),
    /// Minimum cross-validation error.
    Cv,
    /// Largest penalty within one standard error of the minimum.
    OneSe,
}

impl fmt::Display for LambdaPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LambdaPolicy::Fixed(l) => write!(f, "{l}"),
            LambdaPolicy::Cv => f.write_str("cv"),
            LambdaPolicy::OneSe => f.write_str("1se"),
        }
    }
}

impl FromStr for LambdaPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cv" | "min" => Ok(LambdaPolicy::Cv),
            "1se" | "onese" => Ok(LambdaPolicy::OneSe),
            other => other
                .parse::<f64>()
                .ok()
                .filter(|l| l.is_finite() && *l >= 0.0)
                .map(LambdaPolicy::Fixed)
                .ok_or_else(|| Error::invalid(format!("penalty policy '{other}' is not cv, 1se or a nonnegative number"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorSpec {
    pub kind: EstimatorKind,
    /// Elastic-net mixing; only the lasso kind reads it (L1S always uses 1).
    pub alpha: f64,
    pub lambda_policy: LambdaPolicy,
    /// Decreasing penalty grid; `None` uses [`default_grid`] with boundary extension.
    pub lambda_grid: Option<Vec<f64>>,
    /// Folds for lasso cross-validation.
    pub folds: usize,
}

impl EstimatorSpec {
    pub fn new(kind: EstimatorKind, lambda_policy: LambdaPolicy) -> EstimatorSpec {
        let alpha = if kind == EstimatorKind::Ridge { 0.0 } else { 1.0 };
        EstimatorSpec { kind, alpha, lambda_policy, lambda_grid: None, folds: 10 }
    }
}

impl Default for EstimatorSpec {
    fn default() -> Self {
        EstimatorSpec::new(EstimatorKind::L1s, LambdaPolicy::OneSe)
    }
}

/// A fitted coefficient matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Fit {
    pub kind: EstimatorKind,
    /// `p × q`; rows outside `selected` are zero.
    pub b: DMatrix<f64>,
    /// Retained covariate components (all of them for least squares and ridge).
    pub selected: Vec<usize>,
    pub lambda: f64,
    /// Elastic-net mixing used by the penalty (0 for ridge and least squares).
    pub alpha: f64,
    /// Hat matrix when the fit is linear in `Y`.
    pub hat: Option<DMatrix<f64>>,
    /// `Y − X B`.
    pub residuals: ScoreMatrix,
}

impl Fit {
    pub fn p_tilde(&self) -> usize {
        self.selected.len()
    }
}

/// Group-lasso selection at penalty `lambda`, then least squares on the
/// selected columns.
pub fn fit_l1s(x: &ScoreMatrix, y: &ScoreMatrix, lambda: f64) -> Result<Fit> {
    let selection = fit_lasso(x, y, lambda, 1.0)?;
    l1s_refit(x, y, selection.selected, lambda)
}

fn l1s_refit(x: &ScoreMatrix, y: &ScoreMatrix, selected: Vec<usize>, lambda: f64) -> Result<Fit> {
    let (n, p) = x.shape();
    let q = y.ncols();
    if selected.is_empty() {
        return Ok(Fit {
            kind: EstimatorKind::L1s,
            b: DMatrix::zeros(p, q),
            selected,
            lambda,
            alpha: 1.0,
            hat: Some(DMatrix::zeros(n, n)),
            residuals: y.clone(),
        });
    }
    let sub = x.select_columns(&selected);
    let ols = fit_fpcr(&sub, y).map_err(|e| e.context("least-squares refit on the selected components"))?;
    let mut b = DMatrix::zeros(p, q);
    for (row, &j) in selected.iter().enumerate() {
        b.set_row(j, &ols.b.row(row));
    }
    Ok(Fit { kind: EstimatorKind::L1s, b, selected, lambda, alpha: 1.0, hat: ols.hat, residuals: ols.residuals })
}

/// Fits `spec`, selecting the penalty first when the policy asks for it.
pub fn fit_estimator(x: &ScoreMatrix, y: &ScoreMatrix, spec: &EstimatorSpec, seed: u64) -> Result<(Fit, Option<LambdaSelection>)> {
    if spec.kind == EstimatorKind::Fpcr {
        return Ok((fit_fpcr(x, y)?, None));
    }
    let (lambda, selection) = match spec.lambda_policy {
        LambdaPolicy::Fixed(l) => (l, None),
        LambdaPolicy::Cv | LambdaPolicy::OneSe => {
            let sel = select_lambda(x, y, spec, seed)?;
            let l = if spec.lambda_policy == LambdaPolicy::Cv { sel.lambda_cv } else { sel.lambda_1se };
            (l, Some(sel))
        }
    };
    let fit = match spec.kind {
        EstimatorKind::Ridge => fit_ridge(x, y, lambda)?,
        EstimatorKind::Lasso => fit_lasso(x, y, lambda, spec.alpha)?,
        EstimatorKind::L1s => fit_l1s(x, y, lambda)?,
        EstimatorKind::Fpcr => unreachable!(),
    };
    Ok((fit, selection))
}

/// Residuals of a refit to a new response `y_star` with the penalty and the
/// selected components frozen. Uses `(I − H) Y*` when the fit has a hat matrix.
pub fn refit_residuals(fit: &Fit, x: &ScoreMatrix, y_star: &ScoreMatrix) -> Result<ScoreMatrix> {
    match &fit.hat {
        Some(h) => {
            if h.nrows() != y_star.nrows() {
                return Err(Error::dims("bootstrap response does not match the hat matrix"));
            }
            Ok(y_star - h * y_star)
        }
        None => refit_residuals_explicit(fit, x, y_star),
    }
}

/// Same as [`refit_residuals`] but always solving the estimation problem again.
pub fn refit_residuals_explicit(fit: &Fit, x: &ScoreMatrix, y_star: &ScoreMatrix) -> Result<ScoreMatrix> {
    if fit.selected.is_empty() {
        return Ok(y_star.clone());
    }
    let sub = x.select_columns(&fit.selected);
    let refit = match fit.kind {
        EstimatorKind::Fpcr | EstimatorKind::L1s => fit_fpcr(&sub, y_star)?,
        EstimatorKind::Ridge => fit_ridge(&sub, y_star, fit.lambda)?,
        EstimatorKind::Lasso => fit_lasso(&sub, y_star, fit.lambda, fit.alpha)?,
    };
    Ok(refit.residuals)
}

/// `X_new · B`.
pub fn predict(fit: &Fit, x_new: &ScoreMatrix) -> Result<ScoreMatrix> {
    if x_new.ncols() != fit.b.nrows() {
        return Err(Error::dims(format!("{} columns for a {}-row coefficient matrix", x_new.ncols(), fit.b.nrows())));
    }
    Ok(x_new * &fit.b)
}

/// Kernel `β(s,t) = Σ_jk B_jk Ψ_j(s) Φ_k(t)` on the product of the two grids.
pub fn beta_surface(b: &DMatrix<f64>, basis_x: &FpcBasis, basis_y: &FpcBasis) -> Result<DMatrix<f64>> {
    let (p, q) = b.shape();
    if p > basis_x.len() || q > basis_y.len() {
        return Err(Error::dims(format!(
            "{p}×{q} coefficients for bases of {} and {} elements",
            basis_x.len(),
            basis_y.len()
        )));
    }
    let psi = basis_x.eigenfunctions().rows(0, p);
    let phi = basis_y.eigenfunctions().rows(0, q);
    Ok(psi.transpose() * b * phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fdata::{center, fpc, make_grid, FunctionalSample};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn gaussian(n: usize, p: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, p, |_, _| rng.sample(StandardNormal))
    }

    #[test]
    fn parse_names() {
        assert_eq!("L1S".parse::<EstimatorKind>().unwrap(), EstimatorKind::L1s);
        assert_eq!("fpcr-l2".parse::<EstimatorKind>().unwrap(), EstimatorKind::Ridge);
        assert!("pls".parse::<EstimatorKind>().is_err());
        assert_eq!("1se".parse::<LambdaPolicy>().unwrap(), LambdaPolicy::OneSe);
        assert_eq!("0.25".parse::<LambdaPolicy>().unwrap(), LambdaPolicy::Fixed(0.25));
        assert!("-1".parse::<LambdaPolicy>().is_err());
        assert!("nan".parse::<LambdaPolicy>().is_err());
    }

    #[test]
    fn l1s_extremes() {
        let x = gaussian(30, 4, 1);
        let y = &x * gaussian(4, 2, 2) + gaussian(30, 2, 3) * 0.1;
        let all = fit_l1s(&x, &y, 1e-6).unwrap();
        assert_eq!(all.selected, vec![0, 1, 2, 3]);
        assert!((&all.b - fit_fpcr(&x, &y).unwrap().b).amax() < 1e-10);
        let none = fit_l1s(&x, &y, lambda_max(&x, &y, 1.0) * 1.5).unwrap();
        assert!(none.selected.is_empty());
        assert_eq!(none.b.amax(), 0.0);
        assert_eq!(none.hat.as_ref().unwrap().amax(), 0.0);
        assert_eq!(none.residuals, y);
    }

    #[test]
    fn l1s_hat_is_projector_of_selected_rank() {
        let x = gaussian(40, 6, 4);
        let mut b0 = DMatrix::zeros(6, 2);
        b0[(1, 0)] = 2.0;
        b0[(4, 1)] = -1.5;
        let y = &x * b0 + gaussian(40, 2, 5) * 0.3;
        let fit = fit_l1s(&x, &y, 0.3).unwrap();
        let h = fit.hat.as_ref().unwrap();
        assert!((h * h - h).amax() < 1e-8);
        assert!((h - h.transpose()).amax() < 1e-12);
        assert!((h.trace() - fit.p_tilde() as f64).abs() < 1e-8);
        let sub = x.select_columns(&fit.selected);
        assert!((sub.transpose() * &fit.residuals).amax() < 1e-8);
        assert!(fit.selected.contains(&1) && fit.selected.contains(&4));
    }

    #[test]
    fn fast_and_explicit_refits_agree() {
        let x = gaussian(25, 3, 6);
        let y = gaussian(25, 2, 7);
        let y_star = gaussian(25, 2, 8);
        for fit in [fit_fpcr(&x, &y).unwrap(), fit_ridge(&x, &y, 2.0).unwrap(), fit_l1s(&x, &y, 0.05).unwrap()] {
            let fast = refit_residuals(&fit, &x, &y_star).unwrap();
            let slow = refit_residuals_explicit(&fit, &x, &y_star).unwrap();
            assert!((fast - slow).amax() < 1e-8, "{}", fit.kind);
        }
    }

    #[test]
    fn predict_is_linear() {
        let fit = fit_fpcr(&gaussian(20, 3, 1), &gaussian(20, 2, 2)).unwrap();
        let (a, b) = (gaussian(5, 3, 3), gaussian(5, 3, 4));
        let lhs = predict(&fit, &(&a * 2.0 + &b * -0.5)).unwrap();
        let rhs = predict(&fit, &a).unwrap() * 2.0 + predict(&fit, &b).unwrap() * -0.5;
        assert!((lhs - rhs).amax() < 1e-12);
        let zero = Fit { b: DMatrix::zeros(3, 2), ..fit.clone() };
        assert_eq!(predict(&zero, &a).unwrap().amax(), 0.0);
        assert!(predict(&fit, &gaussian(5, 2, 5)).is_err());
    }

    #[test]
    fn surface_parseval() {
        let gx = make_grid(0.0, 1.0, 41).unwrap();
        let gy = make_grid(2.0, 3.0, 31).unwrap();
        let sx = FunctionalSample::from_fn(gx.clone(), 6, |i, s| ((i + 1) as f64 * s).sin() + (i as f64) * s * s).unwrap();
        let sy = FunctionalSample::from_fn(gy.clone(), 6, |i, t| ((i + 2) as f64 * t).cos() - (i as f64) * t).unwrap();
        let (bx, _) = fpc(&center(&sx).0, 3).unwrap();
        let (by, _) = fpc(&center(&sy).0, 2).unwrap();
        let b = gaussian(3, 2, 9);
        let surface = beta_surface(&b, &bx, &by).unwrap();
        let mut norm = 0.0;
        for s in 0..41 {
            for t in 0..31 {
                norm += gx.weights()[s] * gy.weights()[t] * surface[(s, t)].powi(2);
            }
        }
        assert!((norm - b.norm_squared()).abs() < 1e-8 * b.norm_squared());
        let mut single = DMatrix::zeros(3, 2);
        single[(0, 0)] = 1.0;
        let outer = beta_surface(&single, &bx, &by).unwrap();
        assert!((outer[(7, 9)] - bx.eigenfunction(0)[7] * by.eigenfunction(0)[9]).abs() < 1e-14);
        assert_eq!(beta_surface(&DMatrix::zeros(3, 2), &bx, &by).unwrap().amax(), 0.0);
    }
}
