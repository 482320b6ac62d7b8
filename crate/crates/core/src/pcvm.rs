//! Closed-form projected Cramér–von Mises statistic.
//!
//! The statistic is a quadratic form `Tr[E' A E]` in the residual scores,
//! where `A` aggregates the solid angles of spherical wedges spanned by the
//! covariate scores. `A` holds the raw angular sums; every `π`/`Γ` factor
//! lives in [`statistic_constant`].

use std::f64::consts::PI;
use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::DMatrix;
use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::fdata::{GramFactor, ScoreMatrix};

const TWO_PI: f64 = 2.0 * PI;

static ADOT_BUILDS: AtomicU64 = AtomicU64::new(0);

/// Number of [`adot`] matrices built by this process so far.
pub fn adot_builds() -> u64 {
    ADOT_BUILDS.load(Ordering::Relaxed)
}

/// Aggregated wedge angles `A_ij = Σ_r A∠(x_i, x_j, x_r)` of a score sample.
#[derive(Debug, Clone, PartialEq)]
pub struct AdotMatrix {
    a: DMatrix<f64>,
    p: usize,
}

impl AdotMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    /// Dimension of the covariate scores the matrix was built from.
    pub fn p(&self) -> usize {
        self.p
    }
}

/// Value of the statistic together with the dimensions it was computed in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcvmValue {
    pub value: f64,
    pub n: usize,
    pub p: usize,
    pub q: usize,
}

/// Default coincidence tolerance for a score sample.
pub fn tie_tolerance(x: &ScoreMatrix) -> f64 {
    let max_norm = x.row_iter().map(|r| r.norm()).fold(0.0, f64::max);
    1e-10 * (1.0 + max_norm)
}

// Angle between unit vectors; unlike acos of the dot product this stays
// accurate for nearly parallel or antiparallel pairs.
#[inline]
fn unit_angle(a: &[f64], b: &[f64]) -> f64 {
    let (mut diff, mut sum) = (0.0, 0.0);
    for (s, t) in a.iter().zip(b) {
        diff += (s - t) * (s - t);
        sum += (s + t) * (s + t);
    }
    2.0 * diff.sqrt().atan2(sum.sqrt())
}

/// Solid angle (unscaled) of the wedge `{z : (x_i−x_r)·z ≤ 0, (x_j−x_r)·z ≤ 0}`.
pub fn wedge_angle(xi: &[f64], xj: &[f64], xr: &[f64], tie_tol: f64) -> f64 {
    let di: Vec<f64> = xi.iter().zip(xr).map(|(a, b)| a - b).collect();
    let dj: Vec<f64> = xj.iter().zip(xr).map(|(a, b)| a - b).collect();
    let ni = di.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nj = dj.iter().map(|v| v * v).sum::<f64>().sqrt();
    match (ni <= tie_tol, nj <= tie_tol) {
        (true, true) => TWO_PI,
        (true, false) | (false, true) => PI,
        (false, false) => {
            let ui: Vec<f64> = di.iter().map(|v| v / ni).collect();
            let uj: Vec<f64> = dj.iter().map(|v| v / nj).collect();
            PI - unit_angle(&ui, &uj)
        }
    }
}

/// Builds `A•` from covariate scores (rows are observations).
pub fn adot(x: &ScoreMatrix, tie_tol: f64) -> Result<AdotMatrix> {
    let (n, p) = x.shape();
    if n == 0 || p == 0 {
        return Err(Error::invalid("adot needs at least one observation and one score column"));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite covariate score"));
    }
    ADOT_BUILDS.fetch_add(1, Ordering::Relaxed);

    // unit[(i * n + r) * p ..] = (x_i − x_r)/‖x_i − x_r‖, or zeros when tied
    let mut unit = vec![0.0; n * n * p];
    let mut tied = vec![false; n * n];
    unit.par_chunks_mut(n * p).zip(tied.par_chunks_mut(n)).enumerate().for_each(|(i, (u, t))| {
        for r in 0..n {
            let d = &mut u[r * p..(r + 1) * p];
            for k in 0..p {
                d[k] = x[(i, k)] - x[(r, k)];
            }
            let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm <= tie_tol {
                t[r] = true;
                d.iter_mut().for_each(|v| *v = 0.0);
            } else {
                d.iter_mut().for_each(|v| *v /= norm);
            }
        }
    });

    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let ui = &unit[i * n * p..(i + 1) * n * p];
            let ti = &tied[i * n..(i + 1) * n];
            (i..n)
                .map(|j| {
                    let uj = &unit[j * n * p..(j + 1) * n * p];
                    let tj = &tied[j * n..(j + 1) * n];
                    let mut acc = 0.0;
                    for r in 0..n {
                        acc += match (ti[r], tj[r]) {
                            (true, true) => TWO_PI,
                            (true, false) | (false, true) => PI,
                            (false, false) => PI - unit_angle(&ui[r * p..(r + 1) * p], &uj[r * p..(r + 1) * p]),
                        };
                    }
                    acc
                })
                .collect()
        })
        .collect();

    let mut a = DMatrix::zeros(n, n);
    for (i, row) in rows.into_iter().enumerate() {
        for (off, v) in row.into_iter().enumerate() {
            a[(i, i + off)] = v;
            a[(i + off, i)] = v;
        }
    }
    Ok(AdotMatrix { a, p })
}

/// `A•` for scores expressed in a non-orthonormal covariate basis with Gram
/// factor `gram`: the scores are first mapped to orthonormal coordinates.
pub fn adot_general(x: &ScoreMatrix, gram: &GramFactor, tie_tol: f64) -> Result<AdotMatrix> {
    if x.ncols() != gram.dim() {
        return Err(Error::dims(format!("{} score columns for a {}-dimensional Gram factor", x.ncols(), gram.dim())));
    }
    adot(&(x * gram.cholesky.transpose()), tie_tol)
}

/// `∫_{S^{q−1}} (e_1·ω)² dω = 2π^{q/2} / (q Γ(q/2))`.
pub fn sphere_moment_constant(q: usize) -> Result<f64> {
    if q == 0 {
        return Err(Error::invalid("q must be positive"));
    }
    let h = q as f64 / 2.0;
    Ok((2f64.ln() + h * PI.ln() - (q as f64).ln() - ln_gamma(h)).exp())
}

/// Leading constant `2π^{p/2+q/2−1} / (q Γ(p/2) Γ(q/2))` of the trace form.
pub fn statistic_constant(p: usize, q: usize) -> Result<f64> {
    if p == 0 || q == 0 {
        return Err(Error::invalid("p and q must be positive"));
    }
    let (hp, hq) = (p as f64 / 2.0, q as f64 / 2.0);
    Ok((2f64.ln() + (hp + hq - 1.0) * PI.ln() - (q as f64).ln() - ln_gamma(hp) - ln_gamma(hq)).exp())
}

/// `(1/n²) · constant · Tr[E' A E]` for residual scores in an orthonormal basis.
pub fn pcvm_statistic(e: &ScoreMatrix, a: &AdotMatrix) -> Result<PcvmValue> {
    let n = a.n();
    if e.nrows() != n {
        return Err(Error::dims(format!("{} residual rows for an A• of order {n}", e.nrows())));
    }
    let q = e.ncols();
    let c = statistic_constant(a.p, q)?;
    let ae = &a.a * e;
    let trace = ae.component_mul(e).sum();
    Ok(PcvmValue { value: (c * trace / (n * n) as f64).max(0.0), n, p: a.p, q })
}

/// Scalar-response statistic evaluated by direct summation.
pub fn pcvm_statistic_scalar(e: &[f64], a: &AdotMatrix) -> Result<PcvmValue> {
    let n = a.n();
    if e.len() != n {
        return Err(Error::dims(format!("{} residuals for an A• of order {n}", e.len())));
    }
    let c = 2.0 * PI.powf((a.p as f64 - 1.0) / 2.0) / ((ln_gamma(a.p as f64 / 2.0)).exp() * PI.sqrt());
    let mut acc = 0.0;
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            row += a.a[(i, j)] * e[j];
        }
        acc += e[i] * row;
    }
    Ok(PcvmValue { value: (c * acc / (n * n) as f64).max(0.0), n, p: a.p, q: 1 })
}

/// Statistic for residual scores in a non-orthonormal response basis with
/// Gram factor `q_factor`; `a` must come from [`adot_general`] with the
/// covariate factor `p_factor`.
///
/// The scores are mapped isometrically to orthonormal coordinates, so the
/// value does not depend on the choice of basis for the same spans.
pub fn pcvm_statistic_general(
    e: &ScoreMatrix,
    q_factor: &GramFactor,
    p_factor: &GramFactor,
    a: &AdotMatrix,
) -> Result<PcvmValue> {
    if e.ncols() != q_factor.dim() {
        return Err(Error::dims("residual scores do not match the response Gram factor"));
    }
    if a.p != p_factor.dim() {
        return Err(Error::dims("A• was not built in the covariate basis dimension"));
    }
    pcvm_statistic(&(e * q_factor.cholesky.transpose()), a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::DVector;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn gaussian(n: usize, p: usize, seed: u64) -> ScoreMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, p, |_, _| rng.sample(StandardNormal))
    }

    fn random_rotation(p: usize, seed: u64) -> DMatrix<f64> {
        gaussian(p, p, seed).qr().q()
    }

    #[test]
    fn wedge_cases() {
        let tol = 1e-10;
        assert_eq!(wedge_angle(&[0.3, -1.0], &[0.3, -1.0], &[0.3, -1.0], tol), TWO_PI);
        assert_relative_eq!(wedge_angle(&[1.0, 0.0], &[0.0, 1.0], &[0.0, 0.0], tol), PI / 2.0);
        assert_relative_eq!(wedge_angle(&[1.0, 0.0], &[-1.0, 0.0], &[0.0, 0.0], tol), 0.0);
        assert_relative_eq!(wedge_angle(&[1.0, 0.0], &[1.0, 0.0], &[0.0, 0.0], tol), PI);
        assert_eq!(wedge_angle(&[1.0, 0.0], &[0.0, 0.0], &[0.0, 0.0], tol), PI);
        // nearly coincident approach to x_i = x_j ≠ x_r
        assert_relative_eq!(wedge_angle(&[1.0, 1e-9], &[1.0, 0.0], &[0.0, 0.0], tol), PI, epsilon = 1e-8);
    }

    #[test]
    fn single_observation() {
        let a = adot(&DMatrix::from_element(1, 3, 0.5), 1e-10).unwrap();
        assert_eq!(a.matrix()[(0, 0)], TWO_PI);
        let e = DMatrix::from_element(1, 1, 1.7);
        let a1 = adot(&DMatrix::from_element(1, 1, 0.2), 1e-10).unwrap();
        assert_relative_eq!(pcvm_statistic(&e, &a1).unwrap().value, 4.0 * 1.7 * 1.7, max_relative = 1e-13);
    }

    #[test]
    fn two_distinct_rows_by_enumeration() {
        let x = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 2.0, -1.0]);
        let a = adot(&x, 1e-10).unwrap();
        // (i,j,r): (0,0,0) 2π, (0,0,1) π, (0,1,0) π, (0,1,1) π, and symmetric ones.
        let expected = DMatrix::from_row_slice(2, 2, &[3.0 * PI, 2.0 * PI, 2.0 * PI, 3.0 * PI]);
        assert!((a.matrix() - expected).amax() < 1e-14);
    }

    #[test]
    fn adot_matches_triple_loop() {
        let mut x = gaussian(9, 3, 4);
        let row = x.row(2).into_owned();
        x.set_row(5, &row);
        let tol = tie_tolerance(&x);
        let a = adot(&x, tol).unwrap();
        let rows: Vec<Vec<f64>> = x.row_iter().map(|r| r.iter().copied().collect()).collect();
        for i in 0..9 {
            for j in 0..9 {
                let s: f64 = (0..9).map(|r| wedge_angle(&rows[i], &rows[j], &rows[r], tol)).sum();
                assert_relative_eq!(a.matrix()[(i, j)], s, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn sphere_moment_values() {
        assert_relative_eq!(sphere_moment_constant(1).unwrap(), 2.0, max_relative = 1e-14);
        assert_relative_eq!(sphere_moment_constant(2).unwrap(), PI, max_relative = 1e-14);
        assert_relative_eq!(sphere_moment_constant(3).unwrap(), 4.0 * PI / 3.0, max_relative = 1e-14);
        assert!(sphere_moment_constant(0).is_err());
    }

    #[test]
    fn zero_residuals_give_zero() {
        let a = adot(&gaussian(6, 2, 1), 1e-10).unwrap();
        assert_eq!(pcvm_statistic(&DMatrix::zeros(6, 3), &a).unwrap().value, 0.0);
    }

    #[test]
    fn scalar_path_agrees() {
        for seed in 0..5 {
            let x = gaussian(12, 1 + seed as usize, seed);
            let a = adot(&x, tie_tolerance(&x)).unwrap();
            let e = gaussian(12, 1, seed + 100);
            let v1 = pcvm_statistic(&e, &a).unwrap().value;
            let v2 = pcvm_statistic_scalar(e.as_slice(), &a).unwrap().value;
            assert_relative_eq!(v1, v2, max_relative = 1e-10);
        }
    }

    #[test]
    fn general_form_with_identity_factors() {
        let x = gaussian(10, 3, 2);
        let e = gaussian(10, 2, 3);
        let a = adot(&x, 1e-10).unwrap();
        let g = pcvm_statistic_general(&e, &GramFactor::identity(2), &GramFactor::identity(3), &a).unwrap();
        assert_eq!(g.value, pcvm_statistic(&e, &a).unwrap().value);
    }

    #[test]
    fn general_form_is_basis_invariant() {
        // Doubling every basis function halves the scores; the Gram factors are 2I.
        let x = gaussian(10, 3, 7);
        let e = gaussian(10, 2, 8);
        let a = adot(&x, 1e-10).unwrap();
        let reference = pcvm_statistic(&e, &a).unwrap().value;
        let pf = GramFactor::from_gram(DMatrix::identity(3, 3) * 4.0).unwrap();
        let qf = GramFactor::from_gram(DMatrix::identity(2, 2) * 4.0).unwrap();
        let xs = &x * 0.5;
        let es = &e * 0.5;
        let a2 = adot_general(&xs, &pf, 1e-10).unwrap();
        let v = pcvm_statistic_general(&es, &qf, &pf, &a2).unwrap().value;
        assert_relative_eq!(v, reference, max_relative = 1e-8);
        // a general, non-diagonal basis change
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.0, 0.8]);
        let gram = m.transpose() * &m;
        let qf = GramFactor::from_gram(gram).unwrap();
        let coords = &e * qf.cholesky.transpose().try_inverse().unwrap();
        let v = pcvm_statistic_general(&coords, &qf, &GramFactor::identity(3), &a).unwrap().value;
        assert_relative_eq!(v, reference, max_relative = 1e-8);
    }

    #[test]
    fn counter_increments() {
        let before = adot_builds();
        adot(&gaussian(3, 1, 0), 1e-10).unwrap();
        assert!(adot_builds() > before);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn adot_invariances(seed in 0u64..100_000, n in 2usize..15, p in 1usize..5, scale in 0.01f64..100.0) {
            let x = gaussian(n, p, seed);
            let a = adot(&x, tie_tolerance(&x)).unwrap();
            let shift = DVector::from_iterator(p, gaussian(1, p, seed + 1).iter().copied());
            let mut moved = &x * random_rotation(p, seed + 2) * scale;
            for mut row in moved.row_iter_mut() {
                row += shift.transpose();
            }
            let b = adot(&moved, tie_tolerance(&moved)).unwrap();
            prop_assert!((a.matrix() - b.matrix()).amax() <= 1e-8);
            prop_assert!((a.matrix() - a.matrix().transpose()).amax() <= 1e-10);
            prop_assert!(a.matrix().iter().all(|&v| (0.0..=TWO_PI * n as f64 + 1e-9).contains(&v)));
            prop_assert!(a.matrix().clone().symmetric_eigenvalues().min() > 0.0);
        }

        #[test]
        fn quadratic_scaling(seed in 0u64..100_000, c in -10.0f64..10.0) {
            let x = gaussian(8, 2, seed);
            let e = gaussian(8, 3, seed + 9);
            let a = adot(&x, 1e-10).unwrap();
            let base = pcvm_statistic(&e, &a).unwrap().value;
            let scaled = pcvm_statistic(&(&e * c), &a).unwrap().value;
            prop_assert!((scaled - c * c * base).abs() <= 1e-10 * (1.0 + c * c * base));
            prop_assert!(base >= 0.0);
        }
    }
}
