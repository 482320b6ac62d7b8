use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng;

use super::processes::{ik_basis, simulate, Process, SERIES_TERMS};
use crate::error::{Error, Result};
use crate::fdata::{make_grid, FunctionalSample, Grid};

/// Nodes per grid in every scenario.
pub const GRID_NODES: usize = 101;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    /// Quadratic kernel, CM covariate, Brownian errors.
    S1,
    /// Egg-carton kernel, Gaussian-process covariate, Ornstein–Uhlenbeck errors.
    S2,
    /// Sparse series kernel on the cosine basis, IK covariate and errors.
    S3,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::S1, Scenario::S2, Scenario::S3];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::S1 => "s1",
            Scenario::S2 => "s2",
            Scenario::S3 => "s3",
        }
    }

    pub fn covariate(self) -> Process {
        match self {
            Scenario::S1 => Process::CM,
            Scenario::S2 => Process::GP,
            Scenario::S3 => Process::IK_X,
        }
    }

    pub fn error(self) -> Process {
        match self {
            Scenario::S1 => Process::BM,
            Scenario::S2 => Process::OU,
            Scenario::S3 => Process::IK_E,
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "s1" | "1" => Ok(Scenario::S1),
            "s2" | "2" => Ok(Scenario::S2),
            "s3" | "3" => Ok(Scenario::S3),
            other => Err(Error::invalid(format!("unknown scenario '{other}' (expected s1, s2 or s3)"))),
        }
    }
}

/// Coefficient `b_jk` of the S3 kernel (1-based indices).
pub fn s3_coefficient(j: usize, k: usize) -> f64 {
    if j <= 4 || k <= 4 {
        return 0.0;
    }
    let sign = if (j + k) % 2 == 0 { 1.0 } else { -1.0 };
    6.0 * sign * ((j - 4) as f64).powf(-12.0 / 5.0) * ((k - 4) as f64).powf(-0.25)
}

/// A scenario on concrete covariate and response grids.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub scenario: Scenario,
    pub grid_x: Grid,
    pub grid_y: Grid,
}

impl ScenarioSpec {
    /// Covariates on `[0,1]`, responses on `[0,1]` (simple-hypothesis studies).
    pub fn unit(scenario: Scenario) -> ScenarioSpec {
        ScenarioSpec {
            scenario,
            grid_x: make_grid(0.0, 1.0, GRID_NODES).expect("valid grid"),
            grid_y: make_grid(0.0, 1.0, GRID_NODES).expect("valid grid"),
        }
    }

    /// Covariates on `[0,1]`, responses on `[2,3]` (estimation and composite studies).
    pub fn shifted(scenario: Scenario) -> ScenarioSpec {
        ScenarioSpec {
            scenario,
            grid_x: make_grid(0.0, 1.0, GRID_NODES).expect("valid grid"),
            grid_y: make_grid(2.0, 3.0, GRID_NODES).expect("valid grid"),
        }
    }

    pub fn simulate_covariate<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<FunctionalSample> {
        simulate(&self.scenario.covariate(), &self.grid_x, n, rng)
    }

    pub fn simulate_error<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<FunctionalSample> {
        simulate(&self.scenario.error(), &self.grid_y, n, rng)
    }

    /// Whether the two grids have the same nodes, so `X(t)` makes sense on the response grid.
    pub fn identified(&self) -> bool {
        self.grid_x.conforms(&self.grid_y)
    }
}

/// The scenario kernel `β(s,t)` on `grid_x × grid_y`.
pub fn kernel_surface(spec: &ScenarioSpec) -> DMatrix<f64> {
    let (gx, gy) = (&spec.grid_x, &spec.grid_y);
    let (a, c) = (gx.lower(), gy.lower());
    let (sx, ty) = (gx.nodes(), gy.nodes());
    match spec.scenario {
        Scenario::S1 => DMatrix::from_fn(sx.len(), ty.len(), |i, j| (sx[i] - a).powi(2) + (ty[j] - c).powi(2)),
        Scenario::S2 => DMatrix::from_fn(sx.len(), ty.len(), |i, j| {
            2.0 * ((6.0 * PI * (sx[i] - a)).sin() + (6.0 * PI * (ty[j] - c)).cos())
        }),
        Scenario::S3 => {
            let (us, ut) = (gx.unit_nodes(), gy.unit_nodes());
            let phi = DMatrix::from_fn(us.len(), SERIES_TERMS, |i, j| ik_basis(j + 1, us[i]));
            let psi = DMatrix::from_fn(SERIES_TERMS, ut.len(), |k, j| ik_basis(k + 1, ut[j]));
            let b = DMatrix::from_fn(SERIES_TERMS, SERIES_TERMS, |j, k| s3_coefficient(j + 1, k + 1));
            phi * b * psi
        }
    }
}

/// `Y_i(t) = ∫ β(s,t) X_i(s) ds` by quadrature over the covariate grid.
pub fn apply_linear(x: &FunctionalSample, surface: &DMatrix<f64>, grid_y: &Grid) -> Result<FunctionalSample> {
    if surface.nrows() != x.m() || surface.ncols() != grid_y.len() {
        return Err(Error::dims(format!(
            "{}×{} surface for {} covariate nodes and {} response nodes",
            surface.nrows(),
            surface.ncols(),
            x.m(),
            grid_y.len()
        )));
    }
    let mut weighted = x.values().clone();
    for (s, mut col) in weighted.column_iter_mut().enumerate() {
        col *= x.grid().weights()[s];
    }
    FunctionalSample::new(grid_y.clone(), weighted * surface)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DeviationFamily {
    /// No term.
    Ne,
    /// Linear term `⟨⟨X, β⟩⟩`.
    Fr,
    /// Concurrent term `β̃(t) X(t)`.
    Concurrent,
    /// Quadratic term `X²(a + (t−c)(b−a)/(d−c)) − 1`.
    Nlq,
    /// Trigonometric term `(sin 2πt − cos 2πt) ‖X‖²`.
    Nlt,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviationSpec {
    pub family: DeviationFamily,
    pub intensity: f64,
}

/// Concurrent coefficient `β̃(t)` of each scenario.
pub fn concurrent_coefficient(scenario: Scenario, t: f64, a: f64) -> f64 {
    match scenario {
        Scenario::S1 => ((PI * t).sin() - (PI * t).cos()).abs().sqrt(),
        Scenario::S2 => (t - a + 0.5).ln(),
        Scenario::S3 => (t - 0.5).powi(3),
    }
}

/// The deviation term `δ · Δ(X)` on the response grid.
pub fn apply_deviation(x: &FunctionalSample, dev: &DeviationSpec, spec: &ScenarioSpec) -> Result<FunctionalSample> {
    if !(dev.intensity >= 0.0) || !dev.intensity.is_finite() {
        return Err(Error::invalid(format!("deviation intensity {} must be nonnegative", dev.intensity)));
    }
    if !x.grid().conforms(&spec.grid_x) {
        return Err(Error::dims("covariate sample is not on the scenario grid"));
    }
    let gy = &spec.grid_y;
    let (n, my) = (x.n(), gy.len());
    let delta = dev.intensity;
    let (a, b) = (spec.grid_x.lower(), spec.grid_x.upper());
    let (c, d) = (gy.lower(), gy.upper());
    let values = match dev.family {
        DeviationFamily::Ne => DMatrix::zeros(n, my),
        DeviationFamily::Fr => apply_linear(x, &kernel_surface(spec), gy)?.into_values() * delta,
        DeviationFamily::Concurrent => {
            if !spec.identified() {
                return Err(Error::invalid("concurrent deviations need identical covariate and response grids"));
            }
            let coef: Vec<f64> = gy.nodes().iter().map(|&t| concurrent_coefficient(spec.scenario, t, a)).collect();
            DMatrix::from_fn(n, my, |i, t| delta * coef[t] * x.values()[(i, t)])
        }
        DeviationFamily::Nlq => {
            let mapped: Vec<f64> = gy.nodes().iter().map(|&t| a + (t - c) * (b - a) / (d - c)).collect();
            let mut out = DMatrix::zeros(n, my);
            for i in 0..n {
                let curve = x.curve(i);
                for (t, &s) in mapped.iter().enumerate() {
                    let v = spec.grid_x.interpolate(&curve, s);
                    out[(i, t)] = delta * (v * v - 1.0);
                }
            }
            out
        }
        DeviationFamily::Nlt => {
            let norms = x.squared_norms();
            let shape: Vec<f64> = gy.nodes().iter().map(|&t| (2.0 * PI * t).sin() - (2.0 * PI * t).cos()).collect();
            DMatrix::from_fn(n, my, |i, t| delta * shape[t] * norms[i])
        }
    };
    FunctionalSample::new(gy.clone(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fdata::inner_product;
    use crate::rng::{substream, Domain};

    #[test]
    fn s1_corners() {
        let spec = ScenarioSpec::shifted(Scenario::S1);
        let k = kernel_surface(&spec);
        assert_eq!(k[(0, 0)], 0.0);
        assert!((k[(100, 100)] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn s3_leading_block_vanishes() {
        let spec = ScenarioSpec::shifted(Scenario::S3);
        let k = kernel_surface(&spec);
        let (gx, gy) = (&spec.grid_x, &spec.grid_y);
        let (us, ut) = (gx.unit_nodes(), gy.unit_nodes());
        for j in 1..=4 {
            for l in 1..=6 {
                let mut coef = 0.0;
                for s in 0..us.len() {
                    for t in 0..ut.len() {
                        coef += gx.weights()[s] * gy.weights()[t] * k[(s, t)] * ik_basis(j, us[s]) * ik_basis(l, ut[t]);
                    }
                }
                assert!(coef.abs() < 1e-3, "({j},{l}) {coef}");
            }
        }
        assert_eq!(s3_coefficient(4, 9), 0.0);
        assert_eq!(s3_coefficient(9, 3), 0.0);
        assert!((s3_coefficient(5, 5) - 6.0).abs() < 1e-15);
        assert!(s3_coefficient(5, 6) < 0.0);
    }

    #[test]
    fn linear_operator_cases() {
        let spec = ScenarioSpec::shifted(Scenario::S1);
        let ones = FunctionalSample::from_fn(spec.grid_x.clone(), 2, |_, _| 1.0).unwrap();
        let out = apply_linear(&ones, &DMatrix::from_element(101, 101, 1.0), &spec.grid_y).unwrap();
        assert!(out.values().iter().all(|v| (v - 1.0).abs() < 1e-12));
        let zero = apply_linear(&ones, &DMatrix::zeros(101, 101), &spec.grid_y).unwrap();
        assert_eq!(zero.values().amax(), 0.0);

        let x = spec.simulate_covariate(3, &mut substream(1, Domain::Covariate, 0)).unwrap();
        let f: Vec<f64> = spec.grid_x.nodes().iter().map(|s| s.cos()).collect();
        let g: Vec<f64> = spec.grid_y.nodes().iter().map(|t| t * t).collect();
        let surface = DMatrix::from_fn(101, 101, |s, t| f[s] * g[t]);
        let out = apply_linear(&x, &surface, &spec.grid_y).unwrap();
        for i in 0..3 {
            let ip = inner_product(&x.curve(i), &f, &spec.grid_x).unwrap();
            for t in [0, 50, 100] {
                assert!((out.values()[(i, t)] - ip * g[t]).abs() < 1e-12);
            }
        }
        assert!(apply_linear(&x, &DMatrix::zeros(100, 101), &spec.grid_y).is_err());
    }

    #[test]
    fn deviation_edge_cases() {
        let spec = ScenarioSpec::unit(Scenario::S1);
        let x = spec.simulate_covariate(4, &mut substream(2, Domain::Covariate, 0)).unwrap();
        for family in [DeviationFamily::Fr, DeviationFamily::Concurrent, DeviationFamily::Nlq, DeviationFamily::Nlt] {
            let d = apply_deviation(&x, &DeviationSpec { family, intensity: 0.0 }, &spec).unwrap();
            assert_eq!(d.values().amax(), 0.0);
        }
        let zero = FunctionalSample::from_fn(spec.grid_x.clone(), 2, |_, _| 0.0).unwrap();
        let nlt = apply_deviation(&zero, &DeviationSpec { family: DeviationFamily::Nlt, intensity: 1.0 }, &spec).unwrap();
        assert_eq!(nlt.values().amax(), 0.0);
        let ones = FunctionalSample::from_fn(spec.grid_x.clone(), 2, |_, _| 1.0).unwrap();
        let shifted = ScenarioSpec::shifted(Scenario::S1);
        let nlq = apply_deviation(&ones, &DeviationSpec { family: DeviationFamily::Nlq, intensity: 0.7 }, &shifted).unwrap();
        assert!(nlq.values().amax() < 1e-12);
        let err = apply_deviation(&x, &DeviationSpec { family: DeviationFamily::Concurrent, intensity: 1.0 }, &shifted);
        assert!(err.is_err());
    }

    #[test]
    fn nlq_on_identified_grids_squares_pointwise() {
        let spec = ScenarioSpec::unit(Scenario::S2);
        let x = spec.simulate_covariate(2, &mut substream(3, Domain::Covariate, 0)).unwrap();
        let d = apply_deviation(&x, &DeviationSpec { family: DeviationFamily::Nlq, intensity: 2.0 }, &spec).unwrap();
        for t in [0, 33, 100] {
            let v = x.values()[(1, t)];
            assert!((d.values()[(1, t)] - 2.0 * (v * v - 1.0)).abs() < 1e-9 * (1.0 + v * v));
        }
    }

    #[test]
    fn linearity_of_forward_operator() {
        let spec = ScenarioSpec::shifted(Scenario::S2);
        let x1 = spec.simulate_covariate(3, &mut substream(4, Domain::Covariate, 0)).unwrap();
        let x2 = spec.simulate_covariate(3, &mut substream(4, Domain::Covariate, 1)).unwrap();
        let k = kernel_surface(&spec);
        let combo = x1.scale(2.0).add(&x2.scale(-3.0)).unwrap();
        let lhs = apply_linear(&combo, &k, &spec.grid_y).unwrap();
        let rhs = apply_linear(&x1, &k, &spec.grid_y).unwrap().scale(2.0).add(&apply_linear(&x2, &k, &spec.grid_y).unwrap().scale(-3.0)).unwrap();
        assert!((lhs.values() - rhs.values()).amax() < 1e-9 * lhs.values().amax());
    }
}
