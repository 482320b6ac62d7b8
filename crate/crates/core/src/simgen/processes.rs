use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal, Uniform};

use crate::error::{Error, Result};
use crate::fdata::{FunctionalSample, Grid};

/// Terms kept in the series processes.
pub const SERIES_TERMS: usize = 50;

/// Random functional processes used as covariates and errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Process {
    /// `Σ_j λ_j ε_j √2 sin((j−½)πs)`, `λ_j = 1/(π²(j−½)²)`, `ε_j ~ N(0, sd²)`.
    Cm { sd: f64 },
    /// Brownian motion `sd² · min(s, t)` in the grid's own coordinates.
    Bm { sd: f64 },
    /// `Σ_j j^{−7/4} U_j Ψ_j`, `U_j` uniform on `(−√5, √5)`.
    IkX,
    /// `Σ_j j^{−4/5} ε_j Ψ_j`, `ε_j ~ N(0, sd²)`.
    IkE { sd: f64 },
    /// Gaussian process with covariance `variance · exp(−|s−t|/range)`.
    Gp { variance: f64, range: f64 },
    /// Stationary Ornstein–Uhlenbeck, covariance `sd² · exp(−drift·|s−t|)`.
    Ou { sd: f64, drift: f64 },
}

impl Process {
    pub const CM: Process = Process::Cm { sd: 2.0 };
    pub const BM: Process = Process::Bm { sd: 0.15 };
    pub const IK_X: Process = Process::IkX;
    pub const IK_E: Process = Process::IkE { sd: 1.5 };
    pub const GP: Process = Process::Gp { variance: 36.0, range: 0.2 };
    pub const OU: Process = Process::Ou { sd: 0.35, drift: 1.0 };

    pub fn name(&self) -> &'static str {
        match self {
            Process::Cm { .. } => "cm",
            Process::Bm { .. } => "bm",
            Process::IkX => "ik-x",
            Process::IkE { .. } => "ik-e",
            Process::Gp { .. } => "gp",
            Process::Ou { .. } => "ou",
        }
    }

    fn covariance(&self, s: f64, t: f64) -> Option<f64> {
        match *self {
            Process::Bm { sd } => Some(sd * sd * s.min(t)),
            Process::Gp { variance, range } => Some(variance * (-(s - t).abs() / range).exp()),
            Process::Ou { sd, drift } => Some(sd * sd * (-drift * (s - t).abs()).exp()),
            _ => None,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Process::Cm { sd } | Process::Bm { sd } | Process::IkE { sd } => sd > 0.0,
            Process::IkX => true,
            Process::Gp { variance, range } => variance > 0.0 && range > 0.0,
            Process::Ou { sd, drift } => sd > 0.0 && drift > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("non-positive parameter in {self:?}")))
        }
    }
}

impl fmt::Display for Process {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Process {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cm" => Ok(Process::CM),
            "bm" => Ok(Process::BM),
            "ik-x" | "ikx" | "ik" => Ok(Process::IK_X),
            "ik-e" | "ike" => Ok(Process::IK_E),
            "gp" => Ok(Process::GP),
            "ou" => Ok(Process::OU),
            other => Err(Error::invalid(format!("unknown process '{other}'"))),
        }
    }
}

/// Cosine basis on the unit interval: `Ψ_1 = 1`, `Ψ_j(u) = √2 cos(jπu)`.
pub fn ik_basis(j: usize, u: f64) -> f64 {
    if j == 1 {
        1.0
    } else {
        SQRT_2 * (j as f64 * PI * u).cos()
    }
}

/// Sine basis of the CM process: `√2 sin((j−½)πu)`.
pub fn cm_basis(j: usize, u: f64) -> f64 {
    SQRT_2 * ((j as f64 - 0.5) * PI * u).sin()
}

/// Factor of a covariance matrix for drawing Gaussian paths. Nodes with zero
/// variance are pinned to zero.
#[derive(Debug, Clone)]
pub struct GaussianSampler {
    active: Vec<usize>,
    lower: DMatrix<f64>,
    m: usize,
}

impl GaussianSampler {
    pub fn new(cov: &DMatrix<f64>) -> Result<GaussianSampler> {
        let m = cov.nrows();
        let max_diag = cov.diagonal().amax();
        if !(max_diag > 0.0) {
            return Err(Error::NotPositiveDefinite { pivot: max_diag, jitter_steps: 0 });
        }
        let active: Vec<usize> = (0..m).filter(|&i| cov[(i, i)] > 1e-14 * max_diag).collect();
        let sub = cov.select_rows(&active).select_columns(&active);
        let k = active.len();
        let trace = sub.trace();
        if let Some(c) = sub.clone().cholesky() {
            return Ok(GaussianSampler { active, lower: c.l(), m });
        }
        let mut jitter = 1e-10 * trace / k as f64;
        for _ in 0..8 {
            let mut jittered = sub.clone();
            for i in 0..k {
                jittered[(i, i)] += jitter;
            }
            if let Some(c) = jittered.cholesky() {
                return Ok(GaussianSampler { active, lower: c.l(), m });
            }
            jitter *= 2.0;
        }
        let pivot = sub.symmetric_eigenvalues().min();
        Err(Error::NotPositiveDefinite { pivot, jitter_steps: 8 })
    }

    /// One path; consumes exactly `active` standard normals.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let z = DVector::from_fn(self.active.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
        let v = &self.lower * z;
        let mut out = DVector::zeros(self.m);
        for (k, &i) in self.active.iter().enumerate() {
            out[i] = v[k];
        }
        out
    }
}

/// Covariance matrix of `process` on the grid nodes, if it is a covariance kind.
pub fn covariance_matrix(process: &Process, grid: &Grid) -> Option<DMatrix<f64>> {
    let nodes = grid.nodes();
    process.covariance(nodes[0], nodes[0])?;
    Some(DMatrix::from_fn(nodes.len(), nodes.len(), |i, j| process.covariance(nodes[i], nodes[j]).unwrap()))
}

/// `n` independent paths. Paths are drawn one after another from `rng`, so
/// the first `k` paths do not depend on `n`.
pub fn simulate<R: Rng + ?Sized>(process: &Process, grid: &Grid, n: usize, rng: &mut R) -> Result<FunctionalSample> {
    process.validate()?;
    if n == 0 {
        return Err(Error::invalid("cannot simulate an empty sample"));
    }
    let m = grid.len();
    let u = grid.unit_nodes();
    let mut values = DMatrix::zeros(n, m);
    match *process {
        Process::Cm { sd } => {
            let basis = DMatrix::from_fn(SERIES_TERMS, m, |j, t| {
                let jj = j + 1;
                cm_basis(jj, u[t]) / (PI * PI * (jj as f64 - 0.5).powi(2))
            });
            let normal = Normal::new(0.0, sd).expect("positive sd");
            for i in 0..n {
                let coef = DVector::from_fn(SERIES_TERMS, |_, _| normal.sample(rng));
                values.row_mut(i).copy_from(&(coef.transpose() * &basis));
            }
        }
        Process::IkX | Process::IkE { .. } => {
            let (decay, coef_dist): (f64, Box<dyn Fn(&mut R) -> f64>) = match *process {
                Process::IkX => {
                    let uni = Uniform::new(-5f64.sqrt(), 5f64.sqrt()).expect("valid bounds");
                    (-7.0 / 4.0, Box::new(move |r: &mut R| uni.sample(r)))
                }
                Process::IkE { sd } => {
                    let normal = Normal::new(0.0, sd).expect("positive sd");
                    (-4.0 / 5.0, Box::new(move |r: &mut R| normal.sample(r)))
                }
                _ => unreachable!(),
            };
            let basis = DMatrix::from_fn(SERIES_TERMS, m, |j, t| ((j + 1) as f64).powf(decay) * ik_basis(j + 1, u[t]));
            for i in 0..n {
                let coef = DVector::from_fn(SERIES_TERMS, |_, _| coef_dist(rng));
                values.row_mut(i).copy_from(&(coef.transpose() * &basis));
            }
        }
        Process::Bm { .. } | Process::Gp { .. } | Process::Ou { .. } => {
            let cov = covariance_matrix(process, grid).expect("covariance kind");
            let sampler = GaussianSampler::new(&cov)?;
            for i in 0..n {
                values.row_mut(i).copy_from(&sampler.draw(rng).transpose());
            }
        }
    }
    FunctionalSample::new(grid.clone(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fdata::make_grid;
    use crate::rng::{substream, Domain};

    fn column_var(v: &DMatrix<f64>, t: usize) -> f64 {
        let n = v.nrows() as f64;
        let mean = v.column(t).sum() / n;
        v.column(t).iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    }

    fn corr(v: &DMatrix<f64>, a: usize, b: usize) -> f64 {
        let n = v.nrows() as f64;
        let (ma, mb) = (v.column(a).sum() / n, v.column(b).sum() / n);
        let cov: f64 = (0..v.nrows()).map(|i| (v[(i, a)] - ma) * (v[(i, b)] - mb)).sum::<f64>() / (n - 1.0);
        cov / (column_var(v, a) * column_var(v, b)).sqrt()
    }

    #[test]
    fn brownian_motion() {
        let grid = make_grid(0.0, 1.0, 101).unwrap();
        let s = simulate(&Process::BM, &grid, 10_000, &mut substream(1, Domain::Covariate, 0)).unwrap();
        assert!(s.values().column(0).iter().all(|&v| v == 0.0));
        let var = column_var(s.values(), 100);
        assert!((var / 0.0225 - 1.0).abs() < 0.1, "{var}");
    }

    #[test]
    fn gaussian_process_moments() {
        let grid = make_grid(0.0, 1.0, 101).unwrap();
        let s = simulate(&Process::GP, &grid, 10_000, &mut substream(2, Domain::Covariate, 0)).unwrap();
        for t in [0, 30, 77] {
            assert!((column_var(s.values(), t) / 36.0 - 1.0).abs() < 0.05);
        }
        assert!((corr(s.values(), 30, 50) - (-1f64).exp()).abs() < 0.05);
    }

    #[test]
    fn ornstein_uhlenbeck_moments() {
        let grid = make_grid(2.0, 3.0, 101).unwrap();
        let s = simulate(&Process::OU, &grid, 10_000, &mut substream(3, Domain::Error, 0)).unwrap();
        assert!((column_var(s.values(), 40) / 0.1225 - 1.0).abs() < 0.05);
        assert!((corr(s.values(), 10, 60) - (-0.5f64).exp()).abs() < 0.05);
    }

    #[test]
    fn cm_score_spread() {
        let grid = make_grid(0.0, 1.0, 101).unwrap();
        let s = simulate(&Process::CM, &grid, 10_000, &mut substream(4, Domain::Covariate, 0)).unwrap();
        for j in 1..=2 {
            let f: Vec<f64> = grid.nodes().iter().map(|&u| cm_basis(j, u)).collect();
            let scores: Vec<f64> = (0..s.n()).map(|i| grid.inner_product(&s.curve(i), &f).unwrap()).collect();
            let sd = (scores.iter().map(|v| v * v).sum::<f64>() / scores.len() as f64).sqrt();
            let target = 2.0 / (PI * PI * (j as f64 - 0.5).powi(2));
            assert!((sd / target - 1.0).abs() < 0.1, "j={j}: {sd} vs {target}");
        }
    }

    #[test]
    fn covariance_kinds_match_analytic_on_subgrid() {
        for (process, lo, hi) in [(Process::BM, 0.0, 1.0), (Process::GP, 0.0, 1.0), (Process::OU, 2.0, 3.0)] {
            let grid = make_grid(lo, hi, 21).unwrap();
            let s = simulate(&process, &grid, 10_000, &mut substream(5, Domain::Aux, 0)).unwrap();
            let cov = covariance_matrix(&process, &grid).unwrap();
            let v = s.values();
            let n = v.nrows() as f64;
            let scale = cov.diagonal().amax();
            for a in (0..21).step_by(4) {
                for b in (0..21).step_by(5) {
                    let emp: f64 = (0..v.nrows()).map(|i| v[(i, a)] * v[(i, b)]).sum::<f64>() / n;
                    assert!((emp - cov[(a, b)]).abs() <= 0.1 * scale, "{process} ({a},{b})");
                }
            }
        }
    }

    #[test]
    fn prefix_consistency_and_determinism() {
        let grid = make_grid(0.0, 1.0, 31).unwrap();
        for process in [Process::CM, Process::BM, Process::IK_X, Process::IK_E, Process::GP, Process::OU] {
            let a = simulate(&process, &grid, 5, &mut substream(9, Domain::Covariate, 1)).unwrap();
            let b = simulate(&process, &grid, 8, &mut substream(9, Domain::Covariate, 1)).unwrap();
            assert_eq!(a.values(), &b.values().rows(0, 5).into_owned(), "{process}");
        }
    }

    #[test]
    fn names_round_trip() {
        for process in [Process::CM, Process::BM, Process::IK_X, Process::IK_E, Process::GP, Process::OU] {
            assert_eq!(process.name().parse::<Process>().unwrap(), process);
        }
        assert!("wiener".parse::<Process>().is_err());
    }

    #[test]
    fn singular_covariance_rejected() {
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(GaussianSampler::new(&cov), Err(Error::NotPositiveDefinite { .. })));
    }
}
