//! The goodness-of-fit test: FPC truncation, estimation, the PCvM statistic,
//! and its golden-section wild bootstrap calibration on residual scores.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fdata::{center, fpc, truncate_by_ev, FpcBasis, FunctionalSample, ScoreMatrix};
use crate::pcvm::{adot, pcvm_statistic, tie_tolerance, AdotMatrix, PcvmValue};
use crate::regfit::{
    beta_surface, fit_estimator, fit_lasso, refit_residuals, EstimatorKind, EstimatorSpec, Fit, LambdaPolicy, LambdaSelection,
};
use crate::rng::{substream, Domain};

/// Lower support point `(1−√5)/2` of the golden-section law.
pub const GOLDEN_LOW: f64 = -0.618_033_988_749_894_8;
/// Upper support point `(1+√5)/2`.
pub const GOLDEN_HIGH: f64 = 1.618_033_988_749_895;
/// Probability `(5+√5)/10` of the lower point.
pub const GOLDEN_P_LOW: f64 = 0.723_606_797_749_979;

/// Two-point multipliers with mean 0, variance 1 and third moment 1.
pub fn golden_multipliers<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| if rng.random::<f64>() < GOLDEN_P_LOW { GOLDEN_LOW } else { GOLDEN_HIGH }).collect()
}

/// Fraction of bootstrap statistics at least as large as `stat`.
pub fn pvalue(stat: f64, boot: &[f64]) -> Result<f64> {
    if boot.is_empty() {
        return Err(Error::invalid("no bootstrap statistics"));
    }
    Ok(boot.iter().filter(|&&b| stat <= b).count() as f64 / boot.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GofConfig {
    /// Explained-variance target choosing `p`.
    pub ev_x: f64,
    /// Explained-variance target choosing `q`.
    pub ev_y: f64,
    /// Bootstrap replicates.
    pub b: usize,
    pub estimator: EstimatorSpec,
    pub seed: u64,
}

impl Default for GofConfig {
    fn default() -> Self {
        GofConfig { ev_x: 0.99, ev_y: 0.99, b: 1000, estimator: EstimatorSpec::default(), seed: 0 }
    }
}

impl GofConfig {
    fn validate(&self) -> Result<()> {
        if self.b == 0 {
            return Err(Error::invalid("at least one bootstrap replicate is required"));
        }
        for ev in [self.ev_x, self.ev_y] {
            if !(ev > 0.0 && ev <= 1.0) {
                return Err(Error::invalid(format!("EV threshold {ev} outside (0, 1]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GofResult {
    pub statistic: PcvmValue,
    /// Bootstrap statistics in replicate order.
    pub boot_stats: Vec<f64>,
    pub p_value: f64,
    /// Covariate components after EV truncation.
    pub p: usize,
    /// Components kept by the estimator (indices in `selected`).
    pub p_tilde: usize,
    pub q: usize,
    pub selected: Vec<usize>,
    /// Penalty used (0 for least squares).
    pub lambda: f64,
    pub lambda_cv: Option<f64>,
    pub lambda_1se: Option<f64>,
    /// Explained variance reached by the `p` and `q` components.
    pub ev_x: f64,
    pub ev_y: f64,
    pub estimator: EstimatorKind,
}

// Centered samples decomposed and truncated by explained variance.
struct Truncated {
    basis_x: FpcBasis,
    basis_y: FpcBasis,
    x: ScoreMatrix,
    y: ScoreMatrix,
}

fn truncate(x: &FunctionalSample, y: &FunctionalSample, cfg: &GofConfig) -> Result<Truncated> {
    cfg.validate()?;
    let n = x.n();
    if y.n() != n {
        return Err(Error::dims(format!("{n} covariate curves but {} response curves", y.n())));
    }
    if n < 3 {
        return Err(Error::invalid(format!("the test needs at least 3 curves, got {n}")));
    }
    let (cx, _) = center(x);
    let (cy, _) = center(y);
    let (bx, sx) = fpc(&cx, n.min(x.m())).map_err(|e| e.context("covariate FPC"))?;
    let (by, sy) = fpc(&cy, n.min(y.m())).map_err(|e| e.context("response FPC"))?;
    let p = truncate_by_ev(&bx, cfg.ev_x)?;
    let q = truncate_by_ev(&by, cfg.ev_y)?;
    Ok(Truncated {
        x: sx.columns(0, p).into_owned(),
        y: sy.columns(0, q).into_owned(),
        basis_x: bx.truncated(p)?,
        basis_y: by.truncated(q)?,
    })
}

fn covariate_adot(x: &ScoreMatrix, selected: &[usize]) -> Result<AdotMatrix> {
    // With nothing selected the statistic is the no-effects one on all components.
    let xs = if selected.is_empty() { x.clone() } else { x.select_columns(selected) };
    adot(&xs, tie_tolerance(&xs))
}

fn center_columns(m: &mut DMatrix<f64>) {
    let n = m.nrows() as f64;
    for mut col in m.column_iter_mut() {
        let mean = col.sum() / n;
        col.add_scalar_mut(-mean);
    }
}

fn scaled_rows(e: &ScoreMatrix, v: &[f64]) -> ScoreMatrix {
    let mut out = e.clone();
    for (i, mut row) in out.row_iter_mut().enumerate() {
        row *= v[i];
    }
    out
}

fn bootstrap<F>(b: usize, seed: u64, n: usize, replicate: F) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    (0..b)
        .into_par_iter()
        .map(|r| {
            let v = golden_multipliers(n, &mut substream(seed, Domain::Bootstrap, r as u64));
            replicate(&v).map_err(|e| Error::Replicate { index: r, source: Box::new(e) })
        })
        .collect()
}

/// Tests the composite hypothesis that `Y` follows a functional linear model in `X`.
pub fn run_gof(x: &FunctionalSample, y: &FunctionalSample, cfg: &GofConfig) -> Result<GofResult> {
    let t = truncate(x, y, cfg)?;
    let (fit, selection) = fit_estimator(&t.x, &t.y, &cfg.estimator, cfg.seed).map_err(|e| e.context("estimating the kernel"))?;
    let a = covariate_adot(&t.x, &fit.selected)?;
    let statistic = pcvm_statistic(&fit.residuals, &a)?;
    let fitted = &t.x * &fit.b;
    let n = t.x.nrows();
    let boot_stats = bootstrap(cfg.b, cfg.seed, n, |v| {
        let mut y_star = &fitted + scaled_rows(&fit.residuals, v);
        center_columns(&mut y_star);
        let e_star = refit_residuals(&fit, &t.x, &y_star)?;
        Ok(pcvm_statistic(&e_star, &a)?.value)
    })?;
    finish(statistic, boot_stats, &t, &fit, selection.map(|s| (s.lambda_cv, s.lambda_1se)), cfg)
}

/// Tests the simple hypothesis `β = β₀`; `beta0` is the kernel on the
/// covariate × response grids (all zeros for the no-effects test).
pub fn run_gof_simple(x: &FunctionalSample, y: &FunctionalSample, beta0: &DMatrix<f64>, cfg: &GofConfig) -> Result<GofResult> {
    if beta0.nrows() != x.m() || beta0.ncols() != y.m() {
        return Err(Error::dims(format!(
            "{}×{} kernel for {} covariate and {} response nodes",
            beta0.nrows(),
            beta0.ncols(),
            x.m(),
            y.m()
        )));
    }
    let t = truncate(x, y, cfg)?;
    let b0 = project_kernel(beta0, &t.basis_x, &t.basis_y);
    let (p, q) = (t.x.ncols(), t.y.ncols());

    let (selected, lambda, lambdas) = match cfg.estimator.kind {
        EstimatorKind::Fpcr | EstimatorKind::Ridge => ((0..p).collect::<Vec<_>>(), 0.0, None),
        EstimatorKind::Lasso | EstimatorKind::L1s => {
            let spec = EstimatorSpec { kind: EstimatorKind::Lasso, alpha: 1.0, ..cfg.estimator.clone() };
            let (fit, sel) = match spec.lambda_policy {
                LambdaPolicy::Fixed(l) => (fit_lasso(&t.x, &t.y, l, 1.0)?, None),
                _ => fit_estimator(&t.x, &t.y, &spec, cfg.seed)?,
            };
            (fit.selected, fit.lambda, sel.map(|s| (s.lambda_cv, s.lambda_1se)))
        }
    };
    let mut b = DMatrix::zeros(p, q);
    for &j in &selected {
        b.set_row(j, &b0.row(j));
    }
    let residuals = &t.y - &t.x * &b;
    let a = covariate_adot(&t.x, &selected)?;
    let statistic = pcvm_statistic(&residuals, &a)?;
    let boot_stats = bootstrap(cfg.b, cfg.seed, t.x.nrows(), |v| {
        // (X̃B⁰ + V∘E) centered, minus X̃B⁰ (already centered)
        let mut e_star = scaled_rows(&residuals, v);
        center_columns(&mut e_star);
        Ok(pcvm_statistic(&e_star, &a)?.value)
    })?;
    let fit = Fit { kind: cfg.estimator.kind, b, selected, lambda, alpha: 1.0, hat: None, residuals };
    finish(statistic, boot_stats, &t, &fit, lambdas, cfg)
}

/// A fitted kernel with the truncation that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelEstimate {
    /// `β̂(s, t)` on the covariate × response grids.
    pub surface: DMatrix<f64>,
    pub fit: Fit,
    pub selection: Option<LambdaSelection>,
    pub p: usize,
    pub q: usize,
    pub ev_x: f64,
    pub ev_y: f64,
}

/// Estimates the kernel with the truncation and estimator of `cfg`
/// (the bootstrap size is not used).
pub fn estimate_kernel(x: &FunctionalSample, y: &FunctionalSample, cfg: &GofConfig) -> Result<KernelEstimate> {
    let t = truncate(x, y, &GofConfig { b: cfg.b.max(1), ..cfg.clone() })?;
    let (fit, selection) = fit_estimator(&t.x, &t.y, &cfg.estimator, cfg.seed).map_err(|e| e.context("estimating the kernel"))?;
    let (p, q) = (t.x.ncols(), t.y.ncols());
    Ok(KernelEstimate {
        surface: beta_surface(&fit.b, &t.basis_x, &t.basis_y)?,
        fit,
        selection,
        p,
        q,
        ev_x: t.basis_x.cum_ev()[p - 1],
        ev_y: t.basis_y.cum_ev()[q - 1],
    })
}

/// Coefficients `∫∫ β₀(s,t) Ψ_j(s) Φ_k(t) ds dt` of a kernel on two bases.
pub fn project_kernel(beta0: &DMatrix<f64>, basis_x: &FpcBasis, basis_y: &FpcBasis) -> DMatrix<f64> {
    let mut psi = basis_x.eigenfunctions().clone();
    for (s, mut col) in psi.column_iter_mut().enumerate() {
        col *= basis_x.grid().weights()[s];
    }
    let mut phi = basis_y.eigenfunctions().clone();
    for (t, mut col) in phi.column_iter_mut().enumerate() {
        col *= basis_y.grid().weights()[t];
    }
    psi * beta0 * phi.transpose()
}

fn finish(
    statistic: PcvmValue,
    boot_stats: Vec<f64>,
    t: &Truncated,
    fit: &Fit,
    lambdas: Option<(f64, f64)>,
    cfg: &GofConfig,
) -> Result<GofResult> {
    let p_value = pvalue(statistic.value, &boot_stats)?;
    let (p, q) = (t.x.ncols(), t.y.ncols());
    Ok(GofResult {
        statistic,
        boot_stats,
        p_value,
        p,
        p_tilde: fit.selected.len(),
        q,
        selected: fit.selected.clone(),
        lambda: fit.lambda,
        lambda_cv: lambdas.map(|l| l.0),
        lambda_1se: lambdas.map(|l| l.1),
        ev_x: t.basis_x.cum_ev()[p - 1],
        ev_y: t.basis_y.cum_ev()[q - 1],
        estimator: cfg.estimator.kind,
    })
}
