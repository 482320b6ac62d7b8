//! Brute-force Monte Carlo oracles for the closed-form statistic.
//!
//! Nothing here is used by the test pipeline itself; these estimators exist
//! to cross-check [`crate::pcvm`] by integrating over spheres directly. The
//! zero-dimensional sphere `{−1, +1}` is always enumerated exhaustively, so
//! estimates involving only `p = 1` or `q = 1` spheres are exact.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::fdata::ScoreMatrix;
use crate::rng::{substream, Domain};

const BATCH: usize = 8192;

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub se: f64,
}

impl McEstimate {
    /// Whether `value` lies within `k` standard errors. A relative floor of
    /// `1e-9` keeps exact (zero-SE) estimates comparable.
    pub fn covers(&self, value: f64, k: f64) -> bool {
        let band = (k * self.se).max(1e-9 * value.abs().max(self.estimate.abs())).max(1e-12);
        (self.estimate - value).abs() <= band
    }

    pub fn z_score(&self, value: f64) -> f64 {
        if self.se > 0.0 {
            (self.estimate - value) / self.se
        } else if self.estimate == value {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Surface area `2π^{p/2}/Γ(p/2)` of the unit sphere in `R^p` (2 for `p = 1`).
pub fn sphere_area(p: usize) -> f64 {
    let h = p as f64 / 2.0;
    (2f64.ln() + h * PI.ln() - ln_gamma(h)).exp()
}

/// Factor `π^{p/2−1}/Γ(p/2)` turning a wedge angle into a surface area.
pub fn wedge_scale(p: usize) -> f64 {
    sphere_area(p) / (2.0 * PI)
}

/// Uniform directions on the unit sphere in `R^dimension`.
pub struct SphereSampler {
    dimension: usize,
    rng: ChaCha8Rng,
}

impl SphereSampler {
    pub fn new(dimension: usize, rng: ChaCha8Rng) -> Result<SphereSampler> {
        if dimension == 0 {
            return Err(Error::invalid("sphere dimension must be positive"));
        }
        Ok(SphereSampler { dimension, rng })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn sample(&mut self) -> Vec<f64> {
        let mut out = vec![0.0; self.dimension];
        fill_direction(&mut self.rng, &mut out);
        out
    }
}

/// Overwrites `out` with a uniform point on the unit sphere (normalized
/// Gaussian vector).
pub fn fill_direction<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    loop {
        let mut norm = 0.0;
        for v in out.iter_mut() {
            *v = rng.sample(StandardNormal);
            norm += *v * *v;
        }
        if norm > 1e-300 {
            let norm = norm.sqrt();
            out.iter_mut().for_each(|v| *v /= norm);
            return;
        }
    }
}

// Directions used for one draw: both signs on S⁰, one uniform point otherwise.
fn directions(dim: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    if dim == 1 {
        vec![vec![1.0], vec![-1.0]]
    } else {
        let mut z = vec![0.0; dim];
        fill_direction(rng, &mut z);
        vec![z]
    }
}

// Mean and standard error of per-draw values, then scaled by `scale`.
fn summarize(sum: f64, sum_sq: f64, count: usize, scale: f64) -> McEstimate {
    let m = count as f64;
    let mean = sum / m;
    let var = if count > 1 { ((sum_sq - m * mean * mean) / (m - 1.0)).max(0.0) } else { 0.0 };
    McEstimate { estimate: scale * mean, se: scale * (var / m).sqrt() }
}

// Runs `draw` over `draws` draws split into seeded batches and accumulates
// (sum, sum of squares) deterministically by batch index.
fn batched<F>(draws: usize, seed: u64, draw: F) -> (f64, f64)
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    let batches = draws.div_ceil(BATCH);
    let parts: Vec<(f64, f64)> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = substream(seed, Domain::Oracle, b as u64);
            let len = BATCH.min(draws - b * BATCH);
            let (mut s, mut ss) = (0.0, 0.0);
            for _ in 0..len {
                let v = draw(&mut rng);
                s += v;
                ss += v * v;
            }
            (s, ss)
        })
        .collect();
    parts.into_iter().fold((0.0, 0.0), |(a, b), (c, d)| (a + c, b + d))
}

/// Estimates the surface area of `{z : (x_i−x_r)·z ≤ 0, (x_j−x_r)·z ≤ 0}`.
///
/// A difference of norm at most `tie_tol` imposes no constraint.
pub fn mc_wedge_area(xi: &[f64], xj: &[f64], xr: &[f64], tie_tol: f64, draws: usize, seed: u64) -> Result<McEstimate> {
    let p = xi.len();
    if p == 0 || xj.len() != p || xr.len() != p {
        return Err(Error::dims("wedge vertices must share a positive dimension"));
    }
    if draws == 0 {
        return Err(Error::invalid("draws must be positive"));
    }
    let diff = |x: &[f64]| -> Option<Vec<f64>> {
        let d: Vec<f64> = x.iter().zip(xr).map(|(a, b)| a - b).collect();
        let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
        (norm > tie_tol).then_some(d)
    };
    let (di, dj) = (diff(xi), diff(xj));
    let inside = |z: &[f64]| {
        let ok = |d: &Option<Vec<f64>>| d.as_ref().is_none_or(|d| d.iter().zip(z).map(|(a, b)| a * b).sum::<f64>() <= 0.0);
        ok(&di) && ok(&dj)
    };
    let area = sphere_area(p);
    if p == 1 {
        let hits = [1.0, -1.0].iter().filter(|&&z| inside(&[z])).count();
        return Ok(McEstimate { estimate: hits as f64, se: 0.0 });
    }
    let (hits, _) = batched(draws, seed, |rng| {
        let mut z = vec![0.0; p];
        fill_direction(rng, &mut z);
        if inside(&z) {
            1.0
        } else {
            0.0
        }
    });
    let f = hits / draws as f64;
    Ok(McEstimate { estimate: area * f, se: area * (f * (1.0 - f) / draws as f64).sqrt() })
}

/// Integrand of the statistic for fixed directions `g`, `h`:
/// `(1/n²) Σ_l (Σ_i 1{x_i·g ≤ x_l·g} e_i·h)²`.
pub fn pcvm_integrand(e: &ScoreMatrix, x: &ScoreMatrix, g: &[f64], h: &[f64]) -> f64 {
    let n = x.nrows();
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let proj: f64 = (0..x.ncols()).map(|k| x[(i, k)] * g[k]).sum();
            let mark: f64 = (0..e.ncols()).map(|k| e[(i, k)] * h[k]).sum();
            (proj, mark)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut total = 0.0;
    let mut cum = 0.0;
    let mut start = 0;
    while start < n {
        let mut end = start;
        while end < n && pairs[end].0 == pairs[start].0 {
            cum += pairs[end].1;
            end += 1;
        }
        total += (end - start) as f64 * cum * cum;
        start = end;
    }
    total / (n * n) as f64
}

/// Monte Carlo evaluation of the statistic as an integral over both spheres
/// of the squared residual marked empirical process against its ecdf.
pub fn mc_pcvm(e: &ScoreMatrix, x: &ScoreMatrix, draws: usize, seed: u64) -> Result<McEstimate> {
    let (n, p) = x.shape();
    let q = e.ncols();
    if e.nrows() != n || n == 0 || p == 0 || q == 0 {
        return Err(Error::dims("residual and covariate scores must have matching, non-empty rows"));
    }
    if draws == 0 {
        return Err(Error::invalid("draws must be positive"));
    }
    let scale = sphere_area(p) * sphere_area(q);
    let one_draw = |rng: &mut ChaCha8Rng| {
        let gdirs = directions(p, rng);
        let hdirs = directions(q, rng);
        let mut acc = 0.0;
        for g in &gdirs {
            for h in &hdirs {
                acc += pcvm_integrand(e, x, g, h);
            }
        }
        acc / (gdirs.len() * hdirs.len()) as f64
    };
    if p == 1 && q == 1 {
        let mut rng = substream(seed, Domain::Oracle, 0);
        return Ok(McEstimate { estimate: scale * one_draw(&mut rng), se: 0.0 });
    }
    let (s, ss) = batched(draws, seed, one_draw);
    Ok(summarize(s, ss, draws, scale))
}

/// Monte Carlo estimate of `∫_{S^{q−1}} (x·ω)(y·ω) dω`.
pub fn mc_sphere_moment(x: &[f64], y: &[f64], draws: usize, seed: u64) -> Result<McEstimate> {
    let q = x.len();
    if q == 0 || y.len() != q {
        return Err(Error::dims("vectors must share a positive dimension"));
    }
    if draws == 0 {
        return Err(Error::invalid("draws must be positive"));
    }
    let f = |w: &[f64]| -> f64 {
        let a: f64 = x.iter().zip(w).map(|(s, t)| s * t).sum();
        let b: f64 = y.iter().zip(w).map(|(s, t)| s * t).sum();
        a * b
    };
    let area = sphere_area(q);
    if q == 1 {
        return Ok(McEstimate { estimate: f(&[1.0]) + f(&[-1.0]), se: 0.0 });
    }
    let (s, ss) = batched(draws, seed, |rng| {
        let mut w = vec![0.0; q];
        fill_direction(rng, &mut w);
        f(&w)
    });
    Ok(summarize(s, ss, draws, area))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pcvm::{adot, sphere_moment_constant, pcvm_statistic, tie_tolerance, wedge_angle};
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;
    use rand::SeedableRng;

    fn gaussian(n: usize, p: usize, seed: u64) -> ScoreMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, p, |_, _| rng.sample(StandardNormal))
    }

    #[test]
    fn areas() {
        assert_relative_eq!(sphere_area(1), 2.0, max_relative = 1e-14);
        assert_relative_eq!(sphere_area(2), 2.0 * PI, max_relative = 1e-14);
        assert_relative_eq!(sphere_area(3), 4.0 * PI, max_relative = 1e-14);
        assert_relative_eq!(wedge_scale(2), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn sampler_emits_unit_vectors() {
        let mut s = SphereSampler::new(4, substream(1, Domain::Oracle, 0)).unwrap();
        for _ in 0..100 {
            let z = s.sample();
            assert!((z.iter().map(|v| v * v).sum::<f64>().sqrt() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn full_sphere_when_all_coincide() {
        let x = [0.3, -1.0, 2.0];
        let est = mc_wedge_area(&x, &x, &x, 1e-10, 10_000, 1).unwrap();
        assert_relative_eq!(est.estimate, sphere_area(3), max_relative = 1e-14);
        assert_eq!(est.se, 0.0);
    }

    #[test]
    fn quarter_circle() {
        let est = mc_wedge_area(&[1.0, 0.0], &[0.0, 1.0], &[0.0, 0.0], 1e-10, 200_000, 2).unwrap();
        assert!(est.covers(PI / 2.0, 3.0), "{est:?}");
    }

    #[test]
    fn random_wedge_p3() {
        let (a, b, c) = ([0.2, -0.4, 1.0], [1.1, 0.3, -0.2], [0.0, 0.5, 0.1]);
        let est = mc_wedge_area(&a, &b, &c, 1e-10, 1_000_000, 3).unwrap();
        assert!(est.covers(wedge_angle(&a, &b, &c, 1e-10) * wedge_scale(3), 3.0), "{est:?}");
    }

    #[test]
    fn zero_residuals() {
        let x = gaussian(5, 2, 1);
        assert_eq!(mc_pcvm(&DMatrix::zeros(5, 2), &x, 1000, 1).unwrap().estimate, 0.0);
    }

    #[test]
    fn scalar_single_observation_is_exact() {
        let est = mc_pcvm(&DMatrix::from_element(1, 1, 0.7), &DMatrix::from_element(1, 1, -2.0), 10, 0).unwrap();
        assert_relative_eq!(est.estimate, 4.0 * 0.49, max_relative = 1e-14);
        assert_eq!(est.se, 0.0);
    }

    #[test]
    fn scalar_case_matches_closed_form_exactly() {
        let x = gaussian(7, 1, 5);
        let e = gaussian(7, 1, 6);
        let est = mc_pcvm(&e, &x, 10, 0).unwrap();
        let closed = pcvm_statistic(&e, &adot(&x, tie_tolerance(&x)).unwrap()).unwrap().value;
        assert_relative_eq!(est.estimate, closed, max_relative = 1e-12);
    }

    #[test]
    fn closed_form_within_band() {
        let x = gaussian(10, 2, 11);
        let e = gaussian(10, 2, 12);
        let est = mc_pcvm(&e, &x, 400_000, 13).unwrap();
        let closed = pcvm_statistic(&e, &adot(&x, tie_tolerance(&x)).unwrap()).unwrap().value;
        assert!(est.covers(closed, 3.0), "{est:?} vs {closed}");
        assert!((est.estimate - closed).abs() / closed < 0.02);
    }

    #[test]
    fn integrand_matches_pointwise_sum() {
        let x = gaussian(6, 3, 1);
        let e = gaussian(6, 2, 2);
        let (g, h) = ([0.6, 0.0, 0.8], [0.0, 1.0]);
        let direct: f64 = (0..6)
            .map(|l| {
                let pl: f64 = (0..3).map(|k| x[(l, k)] * g[k]).sum();
                let s: f64 = (0..6)
                    .filter(|&i| (0..3).map(|k| x[(i, k)] * g[k]).sum::<f64>() <= pl)
                    .map(|i| e[(i, 1)])
                    .sum();
                s * s
            })
            .sum::<f64>()
            / 36.0;
        assert_relative_eq!(pcvm_integrand(&e, &x, &g, &h), direct, max_relative = 1e-12);
    }

    #[test]
    fn sphere_moment_cases() {
        let est = mc_sphere_moment(&[1.0, 0.0], &[1.0, 0.0], 200_000, 1).unwrap();
        assert!(est.covers(PI, 3.0));
        let est = mc_sphere_moment(&[1.0, 0.0, 0.0], &[0.0, 2.0, 0.0], 200_000, 2).unwrap();
        assert!(est.covers(0.0, 3.0));
        let (x, y) = ([0.3, -1.2, 0.5, 2.0], [1.0, 0.4, -0.7, 0.2]);
        let dot: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let est = mc_sphere_moment(&x, &y, 500_000, 3).unwrap();
        assert!(est.covers(sphere_moment_constant(4).unwrap() * dot, 3.0));
        let est = mc_sphere_moment(&[1.5], &[-2.0], 10, 0).unwrap();
        assert_eq!(est.estimate, -6.0);
    }

    #[test]
    fn deterministic_under_seed() {
        let x = gaussian(5, 2, 1);
        let e = gaussian(5, 3, 2);
        assert_eq!(mc_pcvm(&e, &x, 20_000, 4).unwrap(), mc_pcvm(&e, &x, 20_000, 4).unwrap());
    }
}
