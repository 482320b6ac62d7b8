use nalgebra::DMatrix;

use super::ols::check_shapes;
use super::{EstimatorKind, Fit};
use crate::error::{Error, Result};
use crate::fdata::ScoreMatrix;

/// Stopping rule of the block coordinate descent solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LassoOptions {
    /// KKT gap tolerance relative to `max_j ‖X_j'Y‖/n`.
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for LassoOptions {
    fn default() -> Self {
        LassoOptions { tol: 1e-7, max_sweeps: 10_000 }
    }
}

/// Smallest penalty at which the group lasso returns `B = 0`.
pub fn lambda_max(x: &ScoreMatrix, y: &ScoreMatrix, alpha: f64) -> f64 {
    let n = x.nrows() as f64;
    let xty = x.transpose() * y;
    let top = xty.row_iter().map(|r| r.norm()).fold(0.0, f64::max) / n;
    if alpha > 0.0 {
        top / alpha
    } else {
        f64::INFINITY
    }
}

/// Value of `(1/2n)‖Y − XB‖² + λ[(1−α)/2 ‖B‖² + α Σ_j ‖B_j‖]`.
pub fn objective(x: &ScoreMatrix, y: &ScoreMatrix, b: &DMatrix<f64>, lambda: f64, alpha: f64) -> f64 {
    let n = x.nrows() as f64;
    let rss = (y - x * b).norm_squared();
    let group: f64 = b.row_iter().map(|r| r.norm()).sum();
    rss / (2.0 * n) + lambda * (0.5 * (1.0 - alpha) * b.norm_squared() + alpha * group)
}

/// Largest violation of the group KKT conditions at `b`.
pub fn kkt_gap(x: &ScoreMatrix, y: &ScoreMatrix, b: &DMatrix<f64>, lambda: f64, alpha: f64) -> f64 {
    let n = x.nrows() as f64;
    let grad = -(x.transpose() * (y - x * b)) / n + b * (lambda * (1.0 - alpha));
    kkt_from_gradient(&grad, b, lambda, alpha)
}

fn kkt_from_gradient(grad: &DMatrix<f64>, b: &DMatrix<f64>, lambda: f64, alpha: f64) -> f64 {
    let mut gap = 0.0_f64;
    for (g, row) in grad.row_iter().zip(b.row_iter()) {
        let norm = row.norm();
        let v = if norm > 0.0 { (g + row * (lambda * alpha / norm)).norm() } else { (g.norm() - lambda * alpha).max(0.0) };
        gap = gap.max(v);
    }
    gap
}

/// Block coordinate descent from `init`. `on_sweep` sees the objective after
/// every sweep.
pub(crate) fn solve(
    x: &ScoreMatrix,
    y: &ScoreMatrix,
    lambda: f64,
    alpha: f64,
    init: Option<&DMatrix<f64>>,
    opts: LassoOptions,
    mut on_sweep: impl FnMut(&DMatrix<f64>),
) -> Result<DMatrix<f64>> {
    let (n, p) = x.shape();
    let q = y.ncols();
    let nf = n as f64;
    let mut b = init.cloned().unwrap_or_else(|| DMatrix::zeros(p, q));
    let mut resid = y - x * &b;
    let lips: Vec<f64> = x.column_iter().map(|c| c.norm_squared() / nf).collect();
    let scale = (x.transpose() * y).row_iter().map(|r| r.norm()).fold(0.0, f64::max) / nf;
    let tol = opts.tol * scale.max(f64::MIN_POSITIVE);
    let mut z = vec![0.0; q];
    let mut gap = f64::INFINITY;

    for _sweep in 0..opts.max_sweeps {
        for j in 0..p {
            if lips[j] == 0.0 {
                continue;
            }
            let xj = x.column(j);
            for k in 0..q {
                z[k] = xj.dot(&resid.column(k)) / nf + lips[j] * b[(j, k)];
            }
            let znorm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
            let shrink = if znorm > 0.0 { (1.0 - lambda * alpha / znorm).max(0.0) } else { 0.0 };
            let denom = lips[j] + lambda * (1.0 - alpha);
            for k in 0..q {
                let new = shrink * z[k] / denom;
                let delta = new - b[(j, k)];
                if delta != 0.0 {
                    resid.column_mut(k).axpy(-delta, &xj, 1.0);
                    b[(j, k)] = new;
                }
            }
        }
        on_sweep(&b);
        let grad = -(x.transpose() * &resid) / nf + &b * (lambda * (1.0 - alpha));
        gap = kkt_from_gradient(&grad, &b, lambda, alpha);
        if gap <= tol {
            return Ok(b);
        }
    }
    Err(Error::NonConvergence { iterations: opts.max_sweeps, kkt_gap: gap, tol })
}

pub(crate) fn fit_lasso_from(
    x: &ScoreMatrix,
    y: &ScoreMatrix,
    lambda: f64,
    alpha: f64,
    init: Option<&DMatrix<f64>>,
    opts: LassoOptions,
) -> Result<Fit> {
    check_shapes(x, y)?;
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::invalid(format!("penalty {lambda} must be finite and nonnegative")));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::invalid(format!("mixing parameter {alpha} outside [0, 1]")));
    }
    let b = solve(x, y, lambda, alpha, init, opts, |_| {})?;
    let selected = b.row_iter().enumerate().filter(|(_, r)| r.norm() > 0.0).map(|(j, _)| j).collect();
    let residuals = y - x * &b;
    Ok(Fit { kind: EstimatorKind::Lasso, b, selected, lambda, alpha, hat: None, residuals })
}

/// Row-wise group lasso (elastic net with mixing `alpha`) by block
/// coordinate descent. Columns are used as given, without standardization.
pub fn fit_lasso(x: &ScoreMatrix, y: &ScoreMatrix, lambda: f64, alpha: f64) -> Result<Fit> {
    fit_lasso_from(x, y, lambda, alpha, None, LassoOptions::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regfit::fit_fpcr;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn gaussian(n: usize, p: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, p, |_, _| rng.sample(StandardNormal))
    }

    #[test]
    fn zero_above_lambda_max() {
        let x = gaussian(30, 5, 1);
        let y = gaussian(30, 3, 2);
        let lm = lambda_max(&x, &y, 1.0);
        let fit = fit_lasso(&x, &y, lm, 1.0).unwrap();
        assert_eq!(fit.b.amax(), 0.0);
        assert!(fit.selected.is_empty());
        let fit = fit_lasso(&x, &y, lm * 0.9, 1.0).unwrap();
        assert!(!fit.selected.is_empty());
    }

    #[test]
    fn zero_penalty_matches_ols() {
        let x = gaussian(40, 4, 3);
        let y = gaussian(40, 2, 4);
        let fit = fit_lasso_from(&x, &y, 0.0, 1.0, None, LassoOptions { tol: 1e-12, max_sweeps: 10_000 }).unwrap();
        assert!((fit.b - fit_fpcr(&x, &y).unwrap().b).amax() < 1e-6);
    }

    #[test]
    fn orthonormal_design_soft_thresholds_rows() {
        let n = 40;
        let x = gaussian(n, 4, 5).qr().q() * (n as f64).sqrt();
        let y = gaussian(n, 3, 6) + &x * gaussian(4, 3, 7);
        let lambda = 0.4;
        let fit = fit_lasso(&x, &y, lambda, 1.0).unwrap();
        let z = x.transpose() * &y / n as f64;
        for j in 0..4 {
            let zj = z.row(j);
            let shrink = (1.0 - lambda / zj.norm()).max(0.0);
            assert!((fit.b.row(j) - zj * shrink).amax() < 1e-6);
        }
    }

    #[test]
    fn non_convergence_reported() {
        let x = gaussian(30, 6, 8);
        let y = gaussian(30, 2, 9);
        let err = fit_lasso_from(&x, &y, 1e-3, 1.0, None, LassoOptions { tol: 1e-14, max_sweeps: 1 }).unwrap_err();
        assert!(matches!(err, Error::NonConvergence { iterations: 1, .. }));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn descent_and_kkt(seed in 0u64..100_000, frac in 0.01f64..1.0, alpha in 0.2f64..=1.0) {
            let x = gaussian(25, 6, seed);
            let y = gaussian(25, 3, seed + 1) + &x * gaussian(6, 3, seed + 2) * 0.5;
            let lambda = frac * lambda_max(&x, &y, alpha);
            let mut values = Vec::new();
            let b = solve(&x, &y, lambda, alpha, None, LassoOptions::default(), |b| values.push(objective(&x, &y, b, lambda, alpha))).unwrap();
            let start = objective(&x, &y, &DMatrix::zeros(6, 3), lambda, alpha);
            prop_assert!(values[0] <= start + 1e-12);
            for w in values.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0));
            }
            let scale = lambda_max(&x, &y, 1.0);
            prop_assert!(kkt_gap(&x, &y, &b, lambda, alpha) <= 1e-6 * scale);
            let high = fit_lasso(&x, &y, lambda_max(&x, &y, alpha) * 1.01, alpha).unwrap();
            let low = fit_lasso(&x, &y, 0.0, alpha).unwrap();
            prop_assert!(high.b.norm() <= low.b.norm());
        }
    }
}
