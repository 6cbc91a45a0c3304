//! Uniform space and spectral grids with their quadrature weights.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Smallest admissible number of space nodes.
pub const MIN_SPACE_NODES: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum QuadratureRule {
    #[default]
    Trapezoid,
    /// Composite Simpson; a 3/8 panel closes grids with an odd interval count.
    Simpson,
}

/// Uniform grid `0 = x_0 < ... < x_{n-1} = x_max` on the truncated half-line.
#[derive(Clone, Debug, PartialEq)]
pub struct SpaceGrid {
    x_max: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    rule: QuadratureRule,
}

impl SpaceGrid {
    pub fn new(x_max: f64, n_x: usize) -> Result<Self> {
        Self::with_rule(x_max, n_x, QuadratureRule::Trapezoid)
    }

    pub fn with_rule(x_max: f64, n_x: usize, rule: QuadratureRule) -> Result<Self> {
        if !(x_max.is_finite() && x_max > 0.0) {
            return Err(Error::InvalidGrid(format!("x_max must be positive, got {x_max}")));
        }
        if n_x < MIN_SPACE_NODES {
            return Err(Error::GridTooSmall { min: MIN_SPACE_NODES, got: n_x });
        }
        let h = x_max / (n_x - 1) as f64;
        let mut nodes: Vec<f64> = (0..n_x).map(|i| i as f64 * h).collect();
        nodes[n_x - 1] = x_max;
        let weights = match rule {
            QuadratureRule::Trapezoid => trapezoid_weights(n_x, h),
            QuadratureRule::Simpson => simpson_weights(n_x, h),
        };
        Ok(Self { x_max, nodes, weights, rule })
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn step(&self) -> f64 {
        self.x_max / (self.nodes.len() - 1) as f64
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn rule(&self) -> QuadratureRule {
        self.rule
    }

    /// Index of the node closest to `x`, clamped to the grid.
    pub fn nearest_index(&self, x: f64) -> usize {
        let i = (x / self.step()).round();
        i.clamp(0.0, (self.len() - 1) as f64) as usize
    }

    /// Samples a function at every node.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.nodes.iter().map(|&x| f(x)).collect()
    }

    pub fn same_as(&self, other: &SpaceGrid) -> bool {
        self.len() == other.len() && self.x_max == other.x_max
    }
}

/// Which variable the spectral axis is reported in. Nodes are always stored
/// as wavenumbers `k >= 0`; functions of `lambda` are evaluated at `k^2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SpectralVariable {
    #[default]
    Wavenumber,
    Eigenvalue,
}

/// Uniform wavenumber grid `0 = k_0 < ... < k_{n-1} = k_max` with trapezoid weights.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralGrid {
    k_max: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    convention: SpectralVariable,
}

impl SpectralGrid {
    pub fn new(k_max: f64, n_k: usize) -> Result<Self> {
        if !(k_max.is_finite() && k_max > 0.0) {
            return Err(Error::InvalidGrid(format!("k_max must be positive, got {k_max}")));
        }
        if n_k < 2 {
            return Err(Error::GridTooSmall { min: 2, got: n_k });
        }
        let dk = k_max / (n_k - 1) as f64;
        let mut nodes: Vec<f64> = (0..n_k).map(|j| j as f64 * dk).collect();
        nodes[n_k - 1] = k_max;
        Ok(Self { k_max, nodes, weights: trapezoid_weights(n_k, dk), convention: SpectralVariable::Wavenumber })
    }

    /// Grid whose cutoff is the Nyquist wavenumber `pi / h` of `space`, with
    /// as many nodes as the space grid. On this pairing the discrete cosine
    /// transform and its inverse are exact inverses of each other.
    pub fn matched(space: &SpaceGrid) -> Result<Self> {
        Self::new(PI / space.step(), space.len())
    }

    pub fn with_convention(mut self, convention: SpectralVariable) -> Self {
        self.convention = convention;
        self
    }

    pub fn k_max(&self) -> f64 {
        self.k_max
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn step(&self) -> f64 {
        self.k_max / (self.nodes.len() - 1) as f64
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn convention(&self) -> SpectralVariable {
        self.convention
    }

    /// `lambda_j = k_j^2`.
    pub fn lambda(&self, j: usize) -> f64 {
        self.nodes[j] * self.nodes[j]
    }

    pub fn nearest_index(&self, k: f64) -> usize {
        let j = (k / self.step()).round();
        j.clamp(0.0, (self.len() - 1) as f64) as usize
    }

    pub fn same_as(&self, other: &SpectralGrid) -> bool {
        self.len() == other.len() && self.k_max == other.k_max
    }
}

/// `sum_i values_i * weights_i`, accumulated left to right.
pub fn quadrature(values: &[f64], weights: &[f64]) -> Result<f64> {
    if values.len() != weights.len() {
        return Err(Error::LengthMismatch { expected: weights.len(), got: values.len() });
    }
    Ok(values.iter().zip(weights).map(|(v, w)| v * w).sum())
}

pub(crate) fn trapezoid_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; n];
    w[0] = 0.5 * h;
    w[n - 1] = 0.5 * h;
    w
}

fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    let intervals = n - 1;
    let mut w = vec![0.0; n];
    // Simpson panels over an even number of intervals, 3/8 panel for the rest.
    let simpson_intervals = if intervals.is_multiple_of(2) { intervals } else { intervals - 3 };
    for p in (0..simpson_intervals).step_by(2) {
        w[p] += h / 3.0;
        w[p + 1] += 4.0 * h / 3.0;
        w[p + 2] += h / 3.0;
    }
    if simpson_intervals < intervals {
        let s = simpson_intervals;
        let c = 3.0 * h / 8.0;
        w[s] += c;
        w[s + 1] += 3.0 * c;
        w[s + 2] += 3.0 * c;
        w[s + 3] += c;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn weights_sum_to_length() {
        for n in [8, 9, 101, 512] {
            for rule in [QuadratureRule::Trapezoid, QuadratureRule::Simpson] {
                let g = SpaceGrid::with_rule(3.5, n, rule).unwrap();
                let s: f64 = g.weights().iter().sum();
                assert_abs_diff_eq!(s, 3.5, epsilon = 1e-12 * 3.5);
            }
        }
    }

    #[test]
    fn unit_integrand() {
        let g = SpaceGrid::new(1.0, 101).unwrap();
        let ones = vec![1.0; g.len()];
        assert_abs_diff_eq!(quadrature(&ones, g.weights()).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn linear_trapezoid_and_quadratic_simpson() {
        let g = SpaceGrid::new(1.0, 101).unwrap();
        let f = g.sample(|x| x);
        assert_abs_diff_eq!(quadrature(&f, g.weights()).unwrap(), 0.5, epsilon = 1e-4);

        let g = SpaceGrid::with_rule(1.0, 101, QuadratureRule::Simpson).unwrap();
        let f = g.sample(|x| x * x);
        assert_abs_diff_eq!(quadrature(&f, g.weights()).unwrap(), 1.0 / 3.0, epsilon = 1e-8);
    }

    #[test]
    fn simpson_is_exact_for_cubics_on_both_parities() {
        for n in [8, 9, 64, 65] {
            let g = SpaceGrid::with_rule(2.0, n, QuadratureRule::Simpson).unwrap();
            let f = g.sample(|x| 1.0 - 2.0 * x + 0.5 * x * x * x);
            let exact = 2.0 - 4.0 + 0.5 * 16.0 / 4.0;
            let got = quadrature(&f, g.weights()).unwrap();
            assert!((got - exact).abs() <= 1e-10 * exact.abs().max(1.0), "n={n}: {got}");
        }
    }

    #[test]
    fn trapezoid_order() {
        let err = |n| {
            let g = SpaceGrid::new(2.0, n).unwrap();
            let f = g.sample(|x: f64| (3.0 * x).sin() * (-x).exp());
            let exact = {
                // int_0^2 e^{-x} sin 3x dx
                let e = (-2.0f64).exp();
                (3.0 - e * (6.0f64.sin() + 3.0 * 6.0f64.cos())) / 10.0
            };
            (quadrature(&f, g.weights()).unwrap() - exact).abs()
        };
        assert!(err(65) / err(129) >= 3.0);
        assert!(err(129) / err(257) >= 3.0);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(matches!(SpaceGrid::new(1.0, 7), Err(Error::GridTooSmall { .. })));
        assert!(SpaceGrid::new(0.0, 10).is_err());
        assert!(SpectralGrid::new(1.0, 1).is_err());
        assert!(quadrature(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn spectral_grid_layout() {
        let g = SpectralGrid::new(10.0, 101).unwrap();
        assert_eq!(g.nodes()[0], 0.0);
        assert!(g.nodes().windows(2).all(|w| w[1] > w[0]));
        assert_abs_diff_eq!(g.lambda(10), 1.0, epsilon = 1e-12);
        let g = g.with_convention(SpectralVariable::Eigenvalue);
        assert_eq!(g.convention(), SpectralVariable::Eigenvalue);
    }
}
