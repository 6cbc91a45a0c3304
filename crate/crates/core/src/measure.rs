//! Absolutely continuous spectral measures `dGamma = gamma(k) dk` on a spectral grid.
//!
//! A measure stores an *effective* nodal density: `density[j] * grid.weights[j]`
//! is the integral of the trapezoid hat function at node `j` against the exact
//! density. For the Lebesgue cosine measure this is exactly `2/pi` at every node.
//! For the shifted family the density has an integrable inverse square root
//! singularity at `k = sqrt(c)` and product integration keeps the rule second
//! order for integrands that are smooth in `k`.

use serde::Serialize;
use std::f64::consts::FRAC_2_PI;

use crate::error::{Error, Result};
use crate::grids::SpectralGrid;
use crate::potential::PotentialSpec;
use crate::quad::GaussLegendre;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "c")]
pub enum MeasureKind {
    /// `(2/pi) dk`, the measure of `-D^2` with a Neumann-type condition at 0.
    LebesgueCosine,
    /// Measure of `-D^2 + c`: `(2/pi) k / sqrt(k^2 - c)` for `k > sqrt(c)`, zero below.
    ShiftedCosine(f64),
    Custom,
}

/// Spectral multiplier relating two measures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Multiplier {
    /// `gamma_other / gamma_base`.
    Ratio,
    /// `sqrt(gamma_other / gamma_base)`.
    SqrtRatio,
}

#[derive(Clone, Debug)]
pub struct SpectralMeasure {
    grid: SpectralGrid,
    kind: MeasureKind,
    density: Vec<f64>,
}

/// `make_cosine_measure`: density identically `2/pi`.
pub fn make_cosine_measure(grid: &SpectralGrid) -> SpectralMeasure {
    SpectralMeasure::cosine(grid)
}

impl SpectralMeasure {
    pub fn cosine(grid: &SpectralGrid) -> Self {
        Self { grid: grid.clone(), kind: MeasureKind::LebesgueCosine, density: vec![FRAC_2_PI; grid.len()] }
    }

    pub fn shifted_cosine(grid: &SpectralGrid, c: f64) -> Result<Self> {
        if !(c.is_finite() && c >= 0.0) {
            return Err(Error::Unsupported(format!("shifted cosine measure needs c >= 0 (no bound states), got {c}")));
        }
        if c == 0.0 {
            return Ok(Self::cosine(grid));
        }
        let s = c.sqrt();
        Self::from_density_fn(grid, MeasureKind::ShiftedCosine(c), |k| shifted_density(c, k), &[s])
    }

    /// The measure supplied analytically for a closed-form potential family.
    pub fn for_potential(q: &PotentialSpec, grid: &SpectralGrid) -> Result<Self> {
        match q.closed_form_constant() {
            Some(c) => Self::shifted_cosine(grid, c),
            None => Err(Error::Unsupported(format!("no analytic spectral measure for potential {}", q.label()))),
        }
    }

    /// Nodal density samples used directly as effective density.
    pub fn custom(grid: &SpectralGrid, density: Vec<f64>) -> Result<Self> {
        if density.len() != grid.len() {
            return Err(Error::LengthMismatch { expected: grid.len(), got: density.len() });
        }
        validate_density(&density)?;
        Ok(Self { grid: grid.clone(), kind: MeasureKind::Custom, density })
    }

    /// Product integration of the trapezoid hats against `density`, whose only
    /// non-smooth points are listed in `singular`.
    pub fn from_density_fn(
        grid: &SpectralGrid,
        kind: MeasureKind,
        density: impl Fn(f64) -> f64,
        singular: &[f64],
    ) -> Result<Self> {
        let weights = product_weights(grid, &density, singular);
        let eff: Vec<f64> = weights.iter().zip(grid.weights()).map(|(w, g)| w / g).collect();
        validate_density(&eff)?;
        Ok(Self { grid: grid.clone(), kind, density: eff })
    }

    /// Measure with density `gamma_base * P`, where `P` is the multiplier between
    /// `base` and `other`.
    pub fn multiplied(base: &SpectralMeasure, other: &SpectralMeasure, mult: Multiplier) -> Result<Self> {
        if !base.grid.same_as(&other.grid) {
            return Err(Error::GridMismatch("measures live on different spectral grids".into()));
        }
        if let Some(j) = base.density.iter().zip(&other.density).position(|(&b, &o)| b <= 0.0 && o > 0.0) {
            return Err(Error::DegenerateMeasure(format!(
                "base density vanishes at k = {} where the other measure has mass",
                base.grid.nodes()[j]
            )));
        }
        if base.density == other.density {
            return Ok(base.clone());
        }
        let point = |k: f64| -> Option<f64> {
            let b = base.point_density(k)?;
            let o = other.point_density(k)?;
            Some(match mult {
                Multiplier::Ratio if b > 0.0 => o,
                Multiplier::Ratio => 0.0,
                Multiplier::SqrtRatio => (b * o).sqrt(),
            })
        };
        if base.is_analytic() && other.is_analytic() {
            let mut singular = base.singular_points();
            singular.extend(other.singular_points());
            return Self::from_density_fn(&base.grid, MeasureKind::Custom, |k| point(k).unwrap_or(0.0), &singular);
        }
        let density = base
            .density
            .iter()
            .zip(&other.density)
            .map(|(&b, &o)| match mult {
                Multiplier::Ratio if b > 0.0 => o,
                Multiplier::Ratio => 0.0,
                Multiplier::SqrtRatio => (b * o).sqrt(),
            })
            .collect();
        Self::custom(&base.grid, density)
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    pub fn kind(&self) -> MeasureKind {
        self.kind
    }

    /// Effective nodal density.
    pub fn density(&self) -> &[f64] {
        &self.density
    }

    /// Quadrature weights for `int F dGamma`.
    pub fn weights(&self) -> Vec<f64> {
        self.density.iter().zip(self.grid.weights()).map(|(d, w)| d * w).collect()
    }

    pub fn total_mass(&self) -> f64 {
        self.weights().iter().sum()
    }

    /// Scales the density by `factor` (kind becomes custom unless `factor == 1`).
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let density = self.density.iter().map(|d| d * factor).collect();
        let mut out = Self::custom(&self.grid, density)?;
        if factor == 1.0 {
            out.kind = self.kind;
        }
        Ok(out)
    }

    /// Pointwise density for analytic kinds.
    pub fn point_density(&self, k: f64) -> Option<f64> {
        match self.kind {
            MeasureKind::LebesgueCosine => Some(FRAC_2_PI),
            MeasureKind::ShiftedCosine(c) => Some(shifted_density(c, k)),
            MeasureKind::Custom => None,
        }
    }

    fn is_analytic(&self) -> bool {
        self.kind != MeasureKind::Custom
    }

    fn singular_points(&self) -> Vec<f64> {
        match self.kind {
            MeasureKind::ShiftedCosine(c) => vec![c.sqrt()],
            _ => Vec::new(),
        }
    }

    /// Sup of `gamma_other / gamma_self` over nodes where `self` has mass.
    pub fn max_ratio(&self, other: &SpectralMeasure) -> f64 {
        self.density.iter().zip(&other.density).filter(|(&a, _)| a > 0.0).map(|(&a, &b)| b / a).fold(0.0, f64::max)
    }
}

fn shifted_density(c: f64, k: f64) -> f64 {
    let d = k * k - c;
    if d <= 0.0 {
        0.0
    } else {
        FRAC_2_PI * k / d.sqrt()
    }
}

fn validate_density(density: &[f64]) -> Result<()> {
    match density.iter().position(|d| !(d.is_finite() && *d >= 0.0)) {
        Some(index) => Err(Error::InvalidDensity { index, value: density[index] }),
        None => Ok(()),
    }
}

/// `W_j = int hat_j(k) density(k) dk`, exact up to the Gauss rule error.
fn product_weights(grid: &SpectralGrid, density: &dyn Fn(f64) -> f64, singular: &[f64]) -> Vec<f64> {
    let gl = GaussLegendre::new(16);
    let nodes = grid.nodes();
    let mut w = vec![0.0; nodes.len()];
    for j in 0..nodes.len() - 1 {
        let (a, b) = (nodes[j], nodes[j + 1]);
        let len = b - a;
        let mut cuts = vec![a];
        cuts.extend(singular.iter().copied().filter(|&s| s > a && s < b));
        cuts.push(b);
        for seg in cuts.windows(2) {
            let (lo, hi) = (seg[0], seg[1]);
            let left = |k: f64| (b - k) / len * density(k);
            let right = |k: f64| (k - a) / len * density(k);
            w[j] += integrate_near(&gl, lo, hi, singular, &left);
            w[j + 1] += integrate_near(&gl, lo, hi, singular, &right);
        }
    }
    w
}

/// `int_lo^hi f`, using `k = s +- u^4` around the nearest singular point `s`
/// outside `(lo, hi)` so that inverse-root singularities become smooth.
fn integrate_near(gl: &GaussLegendre, lo: f64, hi: f64, singular: &[f64], f: &dyn Fn(f64) -> f64) -> f64 {
    let nearest = singular.iter().copied().min_by(|x, y| dist(*x, lo, hi).total_cmp(&dist(*y, lo, hi)));
    match nearest {
        Some(s) if s <= lo => {
            let (u0, u1) = ((lo - s).powf(0.25), (hi - s).powf(0.25));
            gl.integrate(u0, u1, |u| {
                let u3 = u * u * u;
                4.0 * u3 * f(s + u3 * u)
            })
        }
        Some(s) if s >= hi => {
            let (u0, u1) = ((s - hi).powf(0.25), (s - lo).powf(0.25));
            gl.integrate(u0, u1, |u| {
                let u3 = u * u * u;
                4.0 * u3 * f(s - u3 * u)
            })
        }
        _ => gl.integrate(lo, hi, f),
    }
}

fn dist(s: f64, lo: f64, hi: f64) -> f64 {
    if s < lo {
        lo - s
    } else if s > hi {
        s - hi
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn cosine_density_is_two_over_pi() {
        let g = SpectralGrid::new(10.0, 101).unwrap();
        let m = make_cosine_measure(&g);
        assert!(m.density().iter().all(|&d| d == FRAC_2_PI));
        assert_abs_diff_eq!(m.total_mass(), FRAC_2_PI * 10.0, epsilon = 1e-12);

        let g2 = SpectralGrid::new(3.0, 2).unwrap();
        let m2 = make_cosine_measure(&g2);
        let w = m2.weights();
        assert_eq!(w[0], w[1]);
        assert_eq!(m2.density(), &[FRAC_2_PI, FRAC_2_PI]);
    }

    #[test]
    fn shifted_mass_is_exact() {
        let g = SpectralGrid::new(10.0, 101).unwrap();
        for c in [0.5, 1.0, 2.0, 1.234] {
            let m = SpectralMeasure::shifted_cosine(&g, c).unwrap();
            assert_abs_diff_eq!(m.total_mass(), 2.0 / PI * (100.0 - c).sqrt(), epsilon = 1e-10);
            assert!(m.density().iter().all(|&d| d >= 0.0 && d.is_finite()));
        }
    }

    #[test]
    fn product_weights_integrate_linear_functions_exactly() {
        // int_{1}^{10} k * (2/pi) k / sqrt(k^2-1) dk
        let g = SpectralGrid::new(10.0, 64).unwrap();
        let m = SpectralMeasure::shifted_cosine(&g, 1.0).unwrap();
        let got: f64 = m.weights().iter().zip(g.nodes()).map(|(w, k)| w * k).sum();
        let exact = 2.0 / PI * {
            let f = |k: f64| 0.5 * k * (k * k - 1.0).sqrt() + 0.5 * (k + (k * k - 1.0).sqrt()).ln();
            f(10.0) - f(1.0)
        };
        assert_abs_diff_eq!(got, exact, epsilon = 1e-9);
    }

    #[test]
    fn rejects_negative_density() {
        let g = SpectralGrid::new(1.0, 3).unwrap();
        assert!(matches!(
            SpectralMeasure::custom(&g, vec![1.0, -1.0, 1.0]),
            Err(Error::InvalidDensity { index: 1, .. })
        ));
        assert!(SpectralMeasure::shifted_cosine(&g, -1.0).is_err());
    }

    #[test]
    fn multipliers() {
        let g = SpectralGrid::new(20.0, 201).unwrap();
        let p = SpectralMeasure::cosine(&g);
        let q = SpectralMeasure::shifted_cosine(&g, 1.0).unwrap();
        let ratio = SpectralMeasure::multiplied(&p, &q, Multiplier::Ratio).unwrap();
        for (a, b) in ratio.density().iter().zip(q.density()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
        let same = SpectralMeasure::multiplied(&p, &p, Multiplier::SqrtRatio).unwrap();
        for d in same.density() {
            assert_abs_diff_eq!(*d, FRAC_2_PI, epsilon = 1e-13);
        }
        // base without mass where the other has some
        assert!(SpectralMeasure::multiplied(&q, &p, Multiplier::Ratio).is_err());
    }
}
