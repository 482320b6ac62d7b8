use crate::error::{Error, Result};

/// Quadrature rule used to build equispaced grid weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Quadrature {
    #[default]
    Trapezoid,
    /// Composite Simpson; needs an odd number of nodes.
    Simpson,
}

/// Discretization of an interval together with quadrature weights.
///
/// All L² geometry in the crate (inner products, norms, projections) is the
/// weighted sum `Σ_t w_t f(t) g(t)` over the grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    lower: f64,
    upper: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Grid {
    /// Equispaced grid with composite trapezoid weights.
    pub fn equispaced(lower: f64, upper: f64, m: usize) -> Result<Grid> {
        Grid::equispaced_with(lower, upper, m, Quadrature::Trapezoid)
    }

    pub fn equispaced_with(lower: f64, upper: f64, m: usize, rule: Quadrature) -> Result<Grid> {
        if m < 2 {
            return Err(Error::invalid(format!("grid needs at least 2 nodes, got {m}")));
        }
        if !(lower.is_finite() && upper.is_finite()) || lower >= upper {
            return Err(Error::invalid(format!("grid interval [{lower}, {upper}] is empty or not finite")));
        }
        let h = (upper - lower) / (m - 1) as f64;
        let mut nodes: Vec<f64> = (0..m).map(|i| lower + h * i as f64).collect();
        nodes[m - 1] = upper;
        let weights = match rule {
            Quadrature::Trapezoid => {
                let mut w = vec![h; m];
                w[0] = h / 2.0;
                w[m - 1] = h / 2.0;
                w
            }
            Quadrature::Simpson => {
                if m % 2 == 0 || m < 3 {
                    return Err(Error::invalid(format!("Simpson rule needs an odd node count >= 3, got {m}")));
                }
                (0..m)
                    .map(|i| {
                        let c = if i == 0 || i == m - 1 {
                            1.0
                        } else if i % 2 == 1 {
                            4.0
                        } else {
                            2.0
                        };
                        c * h / 3.0
                    })
                    .collect()
            }
        };
        Ok(Grid { lower, upper, nodes, weights })
    }

    /// Grid on arbitrary strictly increasing nodes with trapezoid weights.
    ///
    /// When `[lower, upper]` extends beyond the outer nodes the end weights
    /// absorb the extra length (constant extrapolation).
    pub fn from_nodes(nodes: Vec<f64>, lower: f64, upper: f64) -> Result<Grid> {
        let m = nodes.len();
        if m < 2 {
            return Err(Error::invalid(format!("grid needs at least 2 nodes, got {m}")));
        }
        if nodes.iter().any(|x| !x.is_finite()) || !lower.is_finite() || !upper.is_finite() {
            return Err(Error::invalid("grid nodes must be finite"));
        }
        if let Some(i) = nodes.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::invalid(format!(
                "grid nodes must be strictly increasing (node {} = {} follows {})",
                i + 1,
                nodes[i + 1],
                nodes[i]
            )));
        }
        if !(upper - lower).is_finite() {
            return Err(Error::invalid(format!("grid span [{lower}, {upper}] overflows")));
        }
        if lower > nodes[0] || upper < nodes[m - 1] {
            return Err(Error::invalid(format!(
                "interval [{lower}, {upper}] does not contain nodes [{}, {}]",
                nodes[0],
                nodes[m - 1]
            )));
        }
        let mut weights = vec![0.0; m];
        for i in 0..m - 1 {
            let half = 0.5 * (nodes[i + 1] - nodes[i]);
            weights[i] += half;
            weights[i + 1] += half;
        }
        weights[0] += nodes[0] - lower;
        weights[m - 1] += upper - nodes[m - 1];
        Ok(Grid { lower, upper, nodes, weights })
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nodes mapped affinely onto `[0, 1]`.
    pub fn unit_nodes(&self) -> Vec<f64> {
        let span = self.upper - self.lower;
        self.nodes.iter().map(|t| (t - self.lower) / span).collect()
    }

    /// Quadrature inner product of two grid functions.
    pub fn inner_product(&self, f: &[f64], g: &[f64]) -> Result<f64> {
        if f.len() != self.len() || g.len() != self.len() {
            return Err(Error::dims(format!(
                "inner product of lengths {} and {} on a grid of {} nodes",
                f.len(),
                g.len(),
                self.len()
            )));
        }
        Ok(self.dot(f, g))
    }

    pub(crate) fn dot(&self, f: &[f64], g: &[f64]) -> f64 {
        self.weights.iter().zip(f).zip(g).map(|((w, a), b)| w * a * b).sum()
    }

    /// Whether two grids share nodes and weights (up to 1e-12 relative).
    pub fn conforms(&self, other: &Grid) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()));
        self.len() == other.len()
            && self.nodes.iter().zip(&other.nodes).all(|(&a, &b)| close(a, b))
            && self.weights.iter().zip(&other.weights).all(|(&a, &b)| close(a, b))
    }

    /// Linear interpolation of a grid function at `x` (clamped to the outer nodes).
    pub fn interpolate(&self, f: &[f64], x: f64) -> f64 {
        let m = self.len();
        if x <= self.nodes[0] {
            return f[0];
        }
        if x >= self.nodes[m - 1] {
            return f[m - 1];
        }
        let k = self.nodes.partition_point(|&t| t <= x).min(m - 1);
        let (t0, t1) = (self.nodes[k - 1], self.nodes[k]);
        // halves keep the differences finite for nodes near ±f64::MAX
        let a = (0.5 * x - 0.5 * t0) / (0.5 * t1 - 0.5 * t0);
        (1.0 - a) * f[k - 1] + a * f[k]
    }
}

/// Equispaced trapezoid grid on `[lower, upper]` with `m` nodes.
pub fn make_grid(lower: f64, upper: f64, m: usize) -> Result<Grid> {
    Grid::equispaced(lower, upper, m)
}

/// `Σ_t w_t f_t g_t`, the L² inner product on `grid`.
pub fn inner_product(f: &[f64], g: &[f64], grid: &Grid) -> Result<f64> {
    grid.inner_product(f, g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn two_node_trapezoid() {
        let g = make_grid(0.0, 1.0, 2).unwrap();
        assert_eq!(g.nodes(), &[0.0, 1.0]);
        assert_eq!(g.weights(), &[0.5, 0.5]);
    }

    #[test]
    fn hundred_and_one_nodes() {
        let g = make_grid(0.0, 1.0, 101).unwrap();
        assert_eq!(g.len(), 101);
        assert_abs_diff_eq!(g.weights()[0], 0.005, epsilon = 1e-15);
        assert_abs_diff_eq!(g.weights()[100], 0.005, epsilon = 1e-15);
        for w in &g.weights()[1..100] {
            assert_abs_diff_eq!(*w, 0.01, epsilon = 1e-15);
        }
        let total: f64 = g.weights().iter().sum();
        assert!((total - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn three_nodes_on_shifted_interval() {
        let g = make_grid(2.0, 3.0, 3).unwrap();
        assert_eq!(g.nodes(), &[2.0, 2.5, 3.0]);
        assert_eq!(g.weights(), &[0.25, 0.5, 0.25]);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(make_grid(0.0, 1.0, 1).is_err());
        assert!(make_grid(1.0, 1.0, 5).is_err());
        assert!(make_grid(2.0, 1.0, 5).is_err());
        assert!(Grid::equispaced_with(0.0, 1.0, 4, Quadrature::Simpson).is_err());
        assert!(Grid::from_nodes(vec![0.0, 0.5, 0.5], 0.0, 1.0).is_err());
        assert!(Grid::from_nodes(vec![0.0, 0.5, 1.0], 0.1, 1.0).is_err());
    }

    #[test]
    fn inner_product_examples() {
        let g = make_grid(0.0, 1.0, 101).unwrap();
        let one = vec![1.0; 101];
        assert_abs_diff_eq!(inner_product(&one, &one, &g).unwrap(), 1.0, epsilon = 1e-12);
        let s: Vec<f64> = g.nodes().to_vec();
        assert_abs_diff_eq!(inner_product(&s, &one, &g).unwrap(), 0.5, epsilon = 1e-6);
        let sin: Vec<f64> = s.iter().map(|x| (2.0 * PI * x).sin()).collect();
        let cos: Vec<f64> = s.iter().map(|x| (2.0 * PI * x).cos()).collect();
        assert_abs_diff_eq!(inner_product(&sin, &cos, &g).unwrap(), 0.0, epsilon = 1e-4);
        assert!(inner_product(&one[..100], &one, &g).is_err());
    }

    #[test]
    fn simpson_integrates_cubics_exactly() {
        let g = Grid::equispaced_with(0.0, 2.0, 11, Quadrature::Simpson).unwrap();
        let f: Vec<f64> = g.nodes().iter().map(|x| x * x * x).collect();
        let one = vec![1.0; 11];
        assert_abs_diff_eq!(g.inner_product(&f, &one).unwrap(), 4.0, epsilon = 1e-12);
    }

    #[test]
    fn from_nodes_matches_equispaced() {
        let a = make_grid(0.0, 1.0, 11).unwrap();
        let b = Grid::from_nodes(a.nodes().to_vec(), 0.0, 1.0).unwrap();
        assert!(a.conforms(&b));
    }

    #[test]
    fn interpolation_is_exact_on_lines() {
        let g = make_grid(0.0, 1.0, 11).unwrap();
        let f: Vec<f64> = g.nodes().iter().map(|x| 3.0 * x - 1.0).collect();
        for x in [0.0, 0.05, 0.33, 0.999, 1.0] {
            assert_abs_diff_eq!(g.interpolate(&f, x), 3.0 * x - 1.0, epsilon = 1e-12);
        }
    }
}
