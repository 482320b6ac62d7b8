//! Numerical self-checks of the library against its Monte Carlo oracles.
//!
//! Each check is parameterized by its size so the same code serves the quick
//! `verify` subcommand and the full acceptance runs.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use flmgof::gof::{golden_multipliers, GOLDEN_HIGH, GOLDEN_LOW};
use flmgof::oracle::{mc_sphere_moment, mc_pcvm, mc_wedge_area, wedge_scale};
use flmgof::pcvm::{adot, sphere_moment_constant, pcvm_statistic, pcvm_statistic_general, pcvm_statistic_scalar, tie_tolerance, wedge_angle};
use flmgof::fdata::GramFactor;
use flmgof::regfit::{fit_estimator, refit_residuals, refit_residuals_explicit, EstimatorKind, EstimatorSpec, LambdaPolicy};
use flmgof::rng::{substream, Domain};

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

fn gaussian_vec(len: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

/// Misses tolerated out of `count` comparisons (1 in 25).
fn allowed_misses(count: usize) -> usize {
    count / 25
}

/// Closed-form statistic against Monte Carlo integration over both spheres.
pub fn closed_form_vs_oracle(instances: usize, draws: usize, seed: u64) -> Outcome {
    let mut rng = substream(seed, Domain::Aux, 1);
    let mut hits = 0;
    let mut worst: f64 = 0.0;
    for k in 0..instances {
        let n = rng.random_range(2..=20);
        let (p, q) = (rng.random_range(1..=3), rng.random_range(1..=3));
        let x = gaussian(n, p, &mut rng);
        let e = gaussian(n, q, &mut rng);
        let value = adot(&x, tie_tolerance(&x)).and_then(|a| pcvm_statistic(&e, &a)).map(|v| v.value);
        let mc = mc_pcvm(&e, &x, draws, seed.wrapping_add(k as u64));
        if let (Ok(v), Ok(mc)) = (value, mc) {
            if mc.se > 0.0 {
                worst = worst.max(mc.z_score(v).abs());
            }
            if mc.covers(v, 3.0) {
                hits += 1;
            }
        }
    }
    Outcome {
        name: "closed form vs oracle",
        passed: instances - hits <= allowed_misses(instances),
        detail: format!("{hits}/{instances} within 3 SE ({draws} draws, max |z| {worst:.2} among non-exact cases)"),
    }
}

/// Wedge angles against hit-or-miss areas, plus the four exact cases.
pub fn wedge_areas(triples: usize, draws: usize, seed: u64) -> Outcome {
    let tol = 1e-10;
    let (a, b, o) = ([1.0, 2.0, 0.5], [-0.5, 1.0, 3.0], [0.0, 0.0, 0.0]);
    let exact = [
        wedge_angle(&a, &a, &a, tol) == 2.0 * PI,
        wedge_angle(&a, &b, &a, tol) == PI && wedge_angle(&a, &b, &b, tol) == PI,
        wedge_angle(&a, &a, &o, tol) == PI,
        (wedge_angle(&[1.0, 0.0], &[0.0, 1.0], &[0.0, 0.0], tol) - PI / 2.0).abs() < 1e-15,
    ];
    let exact_ok = exact.iter().all(|&c| c);
    let dims = [1, 2, 3, 5];
    let mut rng = substream(seed, Domain::Aux, 2);
    let mut hits = 0;
    for k in 0..triples {
        let p = dims[k % dims.len()];
        let (xi, xj, xr) = (gaussian_vec(p, &mut rng), gaussian_vec(p, &mut rng), gaussian_vec(p, &mut rng));
        let area = wedge_angle(&xi, &xj, &xr, tol) * wedge_scale(p);
        if mc_wedge_area(&xi, &xj, &xr, tol, draws, seed.wrapping_add(k as u64)).is_ok_and(|mc| mc.covers(area, 3.0)) {
            hits += 1;
        }
    }
    Outcome {
        name: "wedge areas",
        passed: exact_ok && triples - hits <= allowed_misses(triples),
        detail: format!(
            "{hits}/{triples} within 3 binomial SE ({draws} draws); analytic cases {}",
            if exact_ok { "exact" } else { "wrong" }
        ),
    }
}

/// `∫ (x·ω)(y·ω) dω = 2π^{q/2}/(qΓ(q/2)) x·y` on spheres of dimension `q − 1`.
pub fn sphere_moment(pairs: usize, draws: usize, seed: u64, max_misses: usize) -> Outcome {
    let mut rng = substream(seed, Domain::Aux, 3);
    let mut hits = 0;
    for q in 1..=4 {
        let c = sphere_moment_constant(q).expect("positive dimension");
        for k in 0..pairs {
            let (x, y) = (gaussian_vec(q, &mut rng), gaussian_vec(q, &mut rng));
            let dot: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
            if mc_sphere_moment(&x, &y, draws, seed.wrapping_add((q * 1000 + k) as u64)).is_ok_and(|mc| mc.covers(c * dot, 3.0)) {
                hits += 1;
            }
        }
    }
    let total = 4 * pairs;
    Outcome {
        name: "sphere inner-product identity",
        passed: total - hits <= max_misses,
        detail: format!("{hits}/{total} within 3 SE ({draws} draws)"),
    }
}

/// Smallest eigenvalue of `A•` over random score matrices with distinct rows.
pub fn adot_positive_definite(matrices: usize, seed: u64) -> Outcome {
    let mut rng = substream(seed, Domain::Aux, 4);
    let dims = [1, 2, 5];
    let mut positive = 0;
    let mut smallest = f64::INFINITY;
    for k in 0..matrices {
        let n = rng.random_range(2..=50);
        let x = gaussian(n, dims[k % dims.len()], &mut rng);
        let Ok(a) = adot(&x, tie_tolerance(&x)) else { continue };
        let min = SymmetricEigen::new(a.matrix().clone()).eigenvalues.min();
        smallest = smallest.min(min);
        if min > 0.0 {
            positive += 1;
        }
    }
    Outcome {
        name: "A• positive definite",
        passed: positive == matrices,
        detail: format!("{positive}/{matrices} positive definite (smallest eigenvalue {smallest:.3e})"),
    }
}

/// With one response component the matrix statistic, its general-basis form
/// and a direct scalar summation agree.
pub fn scalar_reduction(instances: usize, seed: u64) -> Outcome {
    let mut rng = substream(seed, Domain::Aux, 5);
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let n = rng.random_range(2..=40);
        let p = rng.random_range(1..=4);
        let x = gaussian(n, p, &mut rng);
        let e = gaussian(n, 1, &mut rng);
        let a = adot(&x, tie_tolerance(&x)).expect("finite scores");
        let scalar = pcvm_statistic_scalar(e.as_slice(), &a).expect("matching sizes").value;
        let matrix = pcvm_statistic(&e, &a).expect("matching sizes").value;
        let general = pcvm_statistic_general(&e, &GramFactor::identity(1), &GramFactor::identity(p), &a).expect("matching sizes").value;
        for v in [matrix, general] {
            worst = worst.max((v - scalar).abs() / scalar.abs().max(f64::MIN_POSITIVE));
        }
    }
    Outcome {
        name: "scalar-response reduction",
        passed: worst <= 1e-10,
        detail: format!("max relative difference {worst:.2e} over {instances} instances"),
    }
}

/// Sample moments of the golden-section multipliers.
pub fn golden_moments(draws: usize, seed: u64) -> Outcome {
    let v = golden_multipliers(draws, &mut substream(seed, Domain::Aux, 6));
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let third = v.iter().map(|x| x.powi(3)).sum::<f64>() / n;
    let two_point = v.iter().all(|&x| x == GOLDEN_LOW || x == GOLDEN_HIGH);
    Outcome {
        name: "golden multipliers",
        passed: mean.abs() <= 0.005 && (var - 1.0).abs() <= 0.01 && (third - 1.0).abs() <= 0.02 && two_point,
        detail: format!("mean {mean:.5}, variance {var:.5}, third moment {third:.5}, two-point support {two_point} ({draws} draws)"),
    }
}

/// Hat-matrix residuals `(I − H) Y*` against an explicit refit.
pub fn hat_fast_path(instances: usize, seed: u64) -> Outcome {
    let mut rng = substream(seed, Domain::Aux, 7);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for k in 0..instances {
        let n = rng.random_range(15..=40);
        let (p, q) = (rng.random_range(1..=5), rng.random_range(1..=3));
        let x = gaussian(n, p, &mut rng);
        let signal = DMatrix::from_fn(p, q, |i, _| if i < 2 { 1.5 } else { 0.0 });
        let y = &x * signal + gaussian(n, q, &mut rng);
        let y_star = gaussian(n, q, &mut rng);
        for kind in [EstimatorKind::Fpcr, EstimatorKind::L1s] {
            let spec = EstimatorSpec::new(kind, LambdaPolicy::Cv);
            let Ok((fit, _)) = fit_estimator(&x, &y, &spec, seed.wrapping_add(k as u64)) else { continue };
            let (Ok(fast), Ok(slow)) = (refit_residuals(&fit, &x, &y_star), refit_residuals_explicit(&fit, &x, &y_star)) else {
                worst = f64::INFINITY;
                continue;
            };
            worst = worst.max((fast - slow).amax());
            checked += 1;
        }
    }
    Outcome {
        name: "hat-matrix fast path",
        passed: checked == 2 * instances && worst <= 1e-8,
        detail: format!("max abs difference {worst:.2e} over {checked} fits"),
    }
}
