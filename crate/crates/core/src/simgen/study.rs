use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::scenario::{apply_deviation, apply_linear, kernel_surface, DeviationFamily, DeviationSpec, Scenario, ScenarioSpec};
use crate::error::{Error, Result};
use crate::fdata::{center, fpc, FunctionalSample};
use crate::gof::{run_gof, run_gof_simple, GofConfig, GofResult};
use crate::regfit::{beta_surface, fit_estimator, EstimatorKind, EstimatorSpec};
use crate::rng::{derive_seed, substream, Domain};

/// Which family of studies a hypothesis belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TestKind {
    /// `H₀: β = 0` against linear, concurrent and nonlinear deviations.
    Simple,
    /// `H₀: linear model` against nonlinear deviations.
    Composite,
}

impl TestKind {
    pub fn name(self) -> &'static str {
        match self {
            TestKind::Simple => "simple",
            TestKind::Composite => "composite",
        }
    }

    /// Covariate and response grids used by this kind of study.
    pub fn scenario_spec(self, scenario: Scenario) -> ScenarioSpec {
        match self {
            TestKind::Simple => ScenarioSpec::unit(scenario),
            TestKind::Composite => ScenarioSpec::shifted(scenario),
        }
    }
}

impl FromStr for TestKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "simple" => Ok(TestKind::Simple),
            "composite" => Ok(TestKind::Composite),
            other => Err(Error::invalid(format!("unknown test kind '{other}'"))),
        }
    }
}

/// A null model or a deviation at one of three intensity levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HypothesisSpec {
    pub family: DeviationFamily,
    /// Intensity level `1..=3`; `None` for the null models.
    pub level: Option<usize>,
}

impl HypothesisSpec {
    pub const NE: HypothesisSpec = HypothesisSpec { family: DeviationFamily::Ne, level: None };
    pub const FR: HypothesisSpec = HypothesisSpec { family: DeviationFamily::Fr, level: None };

    pub fn new(family: DeviationFamily, level: usize) -> HypothesisSpec {
        HypothesisSpec { family, level: Some(level) }
    }

    pub fn is_null(&self) -> bool {
        self.level.is_none()
    }

    /// Short name as accepted by [`FromStr`], e.g. `ne`, `fr3`, `nlq1`.
    pub fn code(&self) -> String {
        let base = match self.family {
            DeviationFamily::Ne => "ne",
            DeviationFamily::Fr => "fr",
            DeviationFamily::Concurrent => "c",
            DeviationFamily::Nlq => "nlq",
            DeviationFamily::Nlt => "nlt",
        };
        match self.level {
            Some(h) => format!("{base}{h}"),
            None => base.to_string(),
        }
    }

    /// Deviation intensity `δ_h` for `scenario` under `test`.
    pub fn intensity(&self, scenario: Scenario, test: TestKind) -> Result<f64> {
        let Some(h) = self.level else {
            return Ok(match (self.family, test) {
                (DeviationFamily::Ne, _) => 0.0,
                (DeviationFamily::Fr, TestKind::Composite) => 0.5,
                _ => return Err(Error::invalid(format!("'{}' needs an intensity level 1-3", self.code()))),
            });
        };
        if !(1..=3).contains(&h) {
            return Err(Error::invalid(format!("intensity level {h} outside 1-3")));
        }
        use DeviationFamily::*;
        use Scenario::*;
        let table: [f64; 3] = match (test, self.family, scenario) {
            (TestKind::Simple, Fr, S1) => [0.035, 0.08, 0.15],
            (TestKind::Simple, Fr, S2) => [0.01, 0.02, 0.03],
            (TestKind::Simple, Fr, S3) => [1.0, 1.3, 1.6],
            (TestKind::Simple, Concurrent, S1) => [0.025, 0.05, 0.15],
            (TestKind::Simple, Concurrent, S2) => [0.2, 0.6, 1.0],
            (TestKind::Simple, Concurrent, S3) => [0.01, 0.025, 0.05],
            (TestKind::Simple, Nlq | Nlt, S1) => [0.025, 0.075, 0.15],
            (TestKind::Simple, Nlq | Nlt, S2) => [0.02, 0.04, 0.1],
            (TestKind::Simple, Nlq | Nlt, S3) => [0.2, 0.35, 0.55],
            (TestKind::Composite, Nlq, S1) => [0.02, 0.04, 0.1],
            (TestKind::Composite, Nlq, S2) => [0.01, 0.02, 0.03],
            (TestKind::Composite, Nlq, S3) => [0.02, 0.15, 0.5],
            (TestKind::Composite, Nlt, S1) => [0.03, 0.05, 0.1],
            (TestKind::Composite, Nlt, S2) => [0.035, 0.045, 0.055],
            (TestKind::Composite, Nlt, S3) => [0.025, 0.2, 0.45],
            _ => {
                return Err(Error::invalid(format!("hypothesis '{}' is not part of the {} menu", self.code(), test.name())))
            }
        };
        Ok(table[h - 1])
    }

    /// Response sample `Y` built from covariates `x` and errors `e`.
    pub fn response(&self, spec: &ScenarioSpec, test: TestKind, x: &FunctionalSample, e: &FunctionalSample) -> Result<FunctionalSample> {
        let delta = self.intensity(spec.scenario, test)?;
        let term = |family| apply_deviation(x, &DeviationSpec { family, intensity: delta }, spec);
        match test {
            TestKind::Simple => term(self.family)?.add(e),
            TestKind::Composite => match self.family {
                DeviationFamily::Ne => Ok(e.clone()),
                DeviationFamily::Fr => term(DeviationFamily::Fr)?.add(e),
                DeviationFamily::Nlq | DeviationFamily::Nlt => {
                    let linear = apply_linear(x, &kernel_surface(spec), &spec.grid_y)?;
                    linear.add(&term(self.family)?)?.add(e)
                }
                DeviationFamily::Concurrent => unreachable!("rejected by intensity"),
            },
        }
    }
}

impl fmt::Display for HypothesisSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.code())
    }
}

impl FromStr for HypothesisSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let split = s.find(|c: char| c.is_ascii_digit()).unwrap_or(s.len());
        let (base, digits) = s.split_at(split);
        let family = match base {
            "ne" => DeviationFamily::Ne,
            "fr" => DeviationFamily::Fr,
            "c" => DeviationFamily::Concurrent,
            "nlq" => DeviationFamily::Nlq,
            "nlt" => DeviationFamily::Nlt,
            _ => return Err(Error::invalid(format!("unknown hypothesis '{s}'"))),
        };
        let level = if digits.is_empty() {
            None
        } else {
            match digits.parse::<usize>() {
                Ok(h @ 1..=3) => Some(h),
                _ => return Err(Error::invalid(format!("hypothesis '{s}': level must be 1, 2 or 3"))),
            }
        };
        if family == DeviationFamily::Ne && level.is_some() {
            return Err(Error::invalid("the no-effects hypothesis has no intensity level"));
        }
        if level.is_none() && !matches!(family, DeviationFamily::Ne | DeviationFamily::Fr) {
            return Err(Error::invalid(format!("hypothesis '{s}' needs a level 1-3")));
        }
        Ok(HypothesisSpec { family, level })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub scenario: Scenario,
    pub test: TestKind,
    pub hypotheses: Vec<HypothesisSpec>,
    pub ns: Vec<usize>,
    /// Monte Carlo replicates per cell.
    pub m: usize,
    pub gof: GofConfig,
    /// Rejection level.
    pub level: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RejectionRow {
    pub scenario: Scenario,
    pub test: TestKind,
    pub hypothesis: HypothesisSpec,
    pub n: usize,
    pub estimator: EstimatorKind,
    pub rejection_rate: f64,
    /// Binomial standard error of the rejection rate.
    pub mc_se: f64,
    pub mean_p_tilde: f64,
    pub p_values: Vec<f64>,
}

/// Replicate `r` of a study: covariates and errors for the largest `n`
/// (smaller samples are prefixes), and the seed of its bootstrap.
fn replicate_data(spec: &ScenarioSpec, n: usize, seed: u64, r: usize) -> Result<(FunctionalSample, FunctionalSample)> {
    let x = spec.simulate_covariate(n, &mut substream(seed, Domain::Covariate, r as u64))?;
    let e = spec.simulate_error(n, &mut substream(seed, Domain::Error, r as u64))?;
    Ok((x, e))
}

fn one_test(cfg: &StudyConfig, spec: &ScenarioSpec, hyp: &HypothesisSpec, n: usize, r: usize, zero: &DMatrix<f64>) -> Result<GofResult> {
    let (x, e) = replicate_data(spec, n, cfg.gof.seed, r)?;
    let y = hyp.response(spec, cfg.test, &x, &e)?;
    let gof = GofConfig { seed: derive_seed(cfg.gof.seed, Domain::Replicate, r as u64), ..cfg.gof.clone() };
    match cfg.test {
        TestKind::Simple => run_gof_simple(&x, &y, zero, &gof),
        TestKind::Composite => run_gof(&x, &y, &gof),
    }
}

/// Empirical rejection rates of the test for every hypothesis and sample size.
pub fn run_study(cfg: &StudyConfig) -> Result<Vec<RejectionRow>> {
    if cfg.m == 0 || cfg.ns.is_empty() || cfg.hypotheses.is_empty() {
        return Err(Error::invalid("a study needs replicates, sample sizes and hypotheses"));
    }
    if !(cfg.level > 0.0 && cfg.level < 1.0) {
        return Err(Error::invalid(format!("rejection level {} outside (0, 1)", cfg.level)));
    }
    let spec = cfg.test.scenario_spec(cfg.scenario);
    for h in &cfg.hypotheses {
        h.intensity(cfg.scenario, cfg.test)?;
    }
    let zero = DMatrix::zeros(spec.grid_x.len(), spec.grid_y.len());
    let mut rows = Vec::new();
    for hyp in &cfg.hypotheses {
        for &n in &cfg.ns {
            let results: Vec<GofResult> = (0..cfg.m)
                .into_par_iter()
                .map(|r| one_test(cfg, &spec, hyp, n, r, &zero).map_err(|e| Error::Replicate { index: r, source: Box::new(e) }))
                .collect::<Result<_>>()?;
            let m = cfg.m as f64;
            let rejections = results.iter().filter(|r| r.p_value <= cfg.level).count() as f64;
            let rate = rejections / m;
            rows.push(RejectionRow {
                scenario: cfg.scenario,
                test: cfg.test,
                hypothesis: *hyp,
                n,
                estimator: cfg.gof.estimator.kind,
                rejection_rate: rate,
                mc_se: (rate * (1.0 - rate) / m).sqrt(),
                mean_p_tilde: results.iter().map(|r| r.p_tilde as f64).sum::<f64>() / m,
                p_values: results.iter().map(|r| r.p_value).collect(),
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationConfig {
    pub scenario: Scenario,
    pub n: usize,
    /// Fixed truncation orders.
    pub p: usize,
    pub q: usize,
    pub m: usize,
    pub estimator: EstimatorSpec,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationRow {
    pub scenario: Scenario,
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub estimator: EstimatorKind,
    /// Mean of `‖β − β̂‖` over replicates.
    pub mean_error: f64,
    pub mc_se: f64,
    pub mean_p_tilde: f64,
    pub sd_p_tilde: f64,
    pub mean_ev_x: f64,
    pub mean_ev_y: f64,
    pub errors: Vec<f64>,
}

/// `L²` norm of a kernel on the product of two grids.
pub fn surface_norm(surface: &DMatrix<f64>, spec: &ScenarioSpec) -> f64 {
    let (ws, wt) = (spec.grid_x.weights(), spec.grid_y.weights());
    let mut acc = 0.0;
    for s in 0..surface.nrows() {
        for t in 0..surface.ncols() {
            acc += ws[s] * wt[t] * surface[(s, t)].powi(2);
        }
    }
    acc.sqrt()
}

/// Averaged estimation error of the kernel with fixed truncation `(p, q)`.
pub fn run_estimation_study(cfg: &EstimationConfig) -> Result<EstimationRow> {
    if cfg.m == 0 || cfg.p == 0 || cfg.q == 0 {
        return Err(Error::invalid("estimation studies need positive m, p and q"));
    }
    if cfg.p > cfg.n || cfg.q > cfg.n {
        return Err(Error::invalid(format!("truncation ({}, {}) exceeds n = {}", cfg.p, cfg.q, cfg.n)));
    }
    let spec = ScenarioSpec::shifted(cfg.scenario);
    let beta = kernel_surface(&spec);
    let per: Vec<(f64, usize, f64, f64)> = (0..cfg.m)
        .into_par_iter()
        .map(|r| -> Result<_> {
            let run = || -> Result<_> {
                let (x, e) = replicate_data(&spec, cfg.n, cfg.seed, r)?;
                let y = apply_linear(&x, &beta, &spec.grid_y)?.add(&e)?;
                let (bx, sx) = fpc(&center(&x).0, cfg.p)?;
                let (by, sy) = fpc(&center(&y).0, cfg.q)?;
                let (fit, _) = fit_estimator(&sx, &sy, &cfg.estimator, derive_seed(cfg.seed, Domain::Replicate, r as u64))?;
                let estimate = beta_surface(&fit.b, &bx, &by)?;
                let err = surface_norm(&(&beta - estimate), &spec);
                Ok((err, fit.selected.len(), bx.cum_ev()[cfg.p - 1], by.cum_ev()[cfg.q - 1]))
            };
            run().map_err(|e| Error::Replicate { index: r, source: Box::new(e) })
        })
        .collect::<Result<_>>()?;
    let m = cfg.m as f64;
    let errors: Vec<f64> = per.iter().map(|v| v.0).collect();
    let mean_error = errors.iter().sum::<f64>() / m;
    let sd = if cfg.m > 1 { (errors.iter().map(|e| (e - mean_error).powi(2)).sum::<f64>() / (m - 1.0)).sqrt() } else { 0.0 };
    let mean_p_tilde = per.iter().map(|v| v.1 as f64).sum::<f64>() / m;
    let sd_p_tilde = if cfg.m > 1 {
        (per.iter().map(|v| (v.1 as f64 - mean_p_tilde).powi(2)).sum::<f64>() / (m - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(EstimationRow {
        scenario: cfg.scenario,
        n: cfg.n,
        p: cfg.p,
        q: cfg.q,
        estimator: cfg.estimator.kind,
        mean_error,
        mc_se: sd / m.sqrt(),
        mean_p_tilde,
        sd_p_tilde,
        mean_ev_x: per.iter().map(|v| v.2).sum::<f64>() / m,
        mean_ev_y: per.iter().map(|v| v.3).sum::<f64>() / m,
        errors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regfit::LambdaPolicy;

    #[test]
    fn hypothesis_codes_round_trip() {
        for code in ["ne", "fr", "fr1", "fr3", "c2", "nlq1", "nlt3"] {
            assert_eq!(code.parse::<HypothesisSpec>().unwrap().code(), code);
        }
        for bad in ["ne1", "nlq", "c", "fr4", "xx", "nlq0"] {
            assert!(bad.parse::<HypothesisSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn intensity_menus() {
        let h = |s: &str| s.parse::<HypothesisSpec>().unwrap();
        assert_eq!(h("fr3").intensity(Scenario::S1, TestKind::Simple).unwrap(), 0.15);
        assert_eq!(h("nlt2").intensity(Scenario::S2, TestKind::Simple).unwrap(), 0.04);
        assert_eq!(h("nlq1").intensity(Scenario::S1, TestKind::Composite).unwrap(), 0.02);
        assert_eq!(h("nlt3").intensity(Scenario::S3, TestKind::Composite).unwrap(), 0.45);
        assert_eq!(h("fr").intensity(Scenario::S2, TestKind::Composite).unwrap(), 0.5);
        assert!(h("c1").intensity(Scenario::S1, TestKind::Composite).is_err());
        assert!(h("fr").intensity(Scenario::S1, TestKind::Simple).is_err());
    }

    #[test]
    fn composite_null_reduces_to_linear_model() {
        let spec = ScenarioSpec::shifted(Scenario::S2);
        let (x, e) = replicate_data(&spec, 6, 3, 0).unwrap();
        let lin = apply_linear(&x, &kernel_surface(&spec), &spec.grid_y).unwrap();
        let fr = HypothesisSpec::FR.response(&spec, TestKind::Composite, &x, &e).unwrap();
        assert!((fr.values() - (lin.values() * 0.5 + e.values())).amax() < 1e-12);
        let zero = HypothesisSpec::NE.response(&spec, TestKind::Composite, &x, &e).unwrap();
        assert_eq!(zero.values(), e.values());
    }

    #[test]
    fn single_replicate_study() {
        let cfg = StudyConfig {
            scenario: Scenario::S1,
            test: TestKind::Simple,
            hypotheses: vec![HypothesisSpec::NE],
            ns: vec![20],
            m: 1,
            gof: GofConfig { b: 20, seed: 1, estimator: EstimatorSpec::new(EstimatorKind::Fpcr, LambdaPolicy::Cv), ..GofConfig::default() },
            level: 0.05,
        };
        let rows = run_study(&cfg).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].rejection_rate == 0.0 || rows[0].rejection_rate == 1.0);
        assert_eq!(rows, run_study(&cfg).unwrap());
    }

    #[test]
    fn prefix_consistent_replicates() {
        let spec = ScenarioSpec::shifted(Scenario::S3);
        let (x1, e1) = replicate_data(&spec, 5, 9, 2).unwrap();
        let (x2, e2) = replicate_data(&spec, 9, 9, 2).unwrap();
        assert_eq!(x1.values(), &x2.values().rows(0, 5).into_owned());
        assert_eq!(e1.values(), &e2.values().rows(0, 5).into_owned());
    }

    #[test]
    fn tiny_estimation_study() {
        let cfg = EstimationConfig {
            scenario: Scenario::S1,
            n: 40,
            p: 2,
            q: 1,
            m: 3,
            estimator: EstimatorSpec::new(EstimatorKind::Fpcr, LambdaPolicy::Cv),
            seed: 4,
        };
        let row = run_estimation_study(&cfg).unwrap();
        assert_eq!(row.errors.len(), 3);
        assert!(row.mean_error > 0.0 && row.mean_error < 5.0);
        assert_eq!(row.mean_p_tilde, 2.0);
        assert!(run_estimation_study(&EstimationConfig { p: 41, ..cfg }).is_err());
    }
}
