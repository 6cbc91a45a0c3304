//! Compactly supported test functions with exactly known supports.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::grids::SpaceGrid;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CorpusFunction {
    /// `(1 - ((x - center)/radius)^2)^power` inside the radius.
    Bump { center: f64, radius: f64, power: u32 },
    /// One on `[start, end]` with C^4 ramps of width `ramp` inside the interval.
    /// A zero `start` means no left ramp (the even extension is smooth there).
    SmoothedIndicator { start: f64, end: f64, ramp: f64 },
    /// Gaussian profile multiplied by a quartic bump window of the given radius.
    Gaussian { center: f64, width: f64, radius: f64 },
    /// Polynomial in `(x - center)/radius` times a bump.
    PolyBump { center: f64, radius: f64, power: u32, coeffs: Vec<f64> },
    /// Sharp indicator of `[start, end]`, sampled as `1/2` exactly at the jumps.
    Indicator { start: f64, end: f64 },
}

impl CorpusFunction {
    pub fn bump(center: f64, radius: f64, power: u32) -> Self {
        Self::Bump { center, radius, power }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Self::Bump { center, radius, power } => bump(x, *center, *radius, *power),
            Self::SmoothedIndicator { start, end, ramp } => {
                if x < *start || x > *end {
                    return 0.0;
                }
                let up = if *start == 0.0 { 1.0 } else { smoothstep((x - start) / ramp) };
                up * smoothstep((end - x) / ramp)
            }
            Self::Gaussian { center, width, radius } => {
                let u = (x - center) / width;
                (-0.5 * u * u).exp() * bump(x, *center, *radius, 4)
            }
            Self::PolyBump { center, radius, power, coeffs } => {
                let u = (x - center) / radius;
                let p = coeffs.iter().rev().fold(0.0, |acc, c| acc * u + c);
                p * bump(x, *center, *radius, *power)
            }
            Self::Indicator { start, end } => {
                if x == *start || x == *end {
                    0.5
                } else if x > *start && x < *end {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Closed support interval intersected with the half-line.
    pub fn support(&self) -> (f64, f64) {
        let (a, b) = match self {
            Self::Bump { center, radius, .. }
            | Self::Gaussian { center, radius, .. }
            | Self::PolyBump { center, radius, .. } => (center - radius, center + radius),
            Self::SmoothedIndicator { start, end, .. } | Self::Indicator { start, end } => (*start, *end),
        };
        (a.max(0.0), b)
    }

    /// Right end of the support.
    pub fn sigma(&self) -> f64 {
        self.support().1
    }

    pub fn sample(&self, grid: &SpaceGrid) -> Vec<f64> {
        grid.sample(|x| self.eval(x))
    }

    pub fn label(&self) -> String {
        match self {
            Self::Bump { center, radius, power } => format!("bump(c={center},r={radius},p={power})"),
            Self::SmoothedIndicator { start, end, ramp } => format!("smooth-indicator[{start},{end}](ramp={ramp})"),
            Self::Gaussian { center, width, radius } => format!("gaussian(c={center},w={width},r={radius})"),
            Self::PolyBump { center, radius, power, coeffs } => {
                format!("poly-bump(c={center},r={radius},p={power},deg={})", coeffs.len().saturating_sub(1))
            }
            Self::Indicator { start, end } => format!("indicator[{start},{end}]"),
        }
    }

    /// Whether the function vanishes on `[0, margin]` and `[x_max - margin, x_max]`.
    pub fn vanishes_near_ends(&self, x_max: f64, margin: f64) -> bool {
        let (a, b) = self.support();
        a >= margin && b <= x_max - margin
    }
}

fn bump(x: f64, center: f64, radius: f64, power: u32) -> f64 {
    let u = (x - center) / radius;
    if u.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - u * u).powi(power as i32)
    }
}

/// C^4 transition from 0 at `t <= 0` to 1 at `t >= 1`.
pub fn smoothstep(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let s = 1.0 - t;
    let poly = 1.0 + 5.0 * s + 15.0 * s * s + 35.0 * s.powi(3) + 70.0 * s.powi(4);
    t.powi(5) * poly
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CorpusFamily {
    /// Ten mixed members supported in the left half of the domain.
    #[default]
    Standard,
    /// Members vanishing near both ends of the domain.
    Interior,
    /// Members whose support ends exactly at each requested `sigma`.
    PaleyWiener,
}

/// Config-level description of a corpus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSpec {
    #[serde(default)]
    pub family: CorpusFamily,
    #[serde(default = "default_supports")]
    pub supports: Vec<f64>,
}

fn default_supports() -> Vec<f64> {
    vec![1.0, 2.0, 4.0]
}

impl Default for CorpusSpec {
    fn default() -> Self {
        Self { family: CorpusFamily::default(), supports: default_supports() }
    }
}

impl CorpusSpec {
    pub fn build(&self, x_max: f64) -> Vec<CorpusFunction> {
        match self.family {
            CorpusFamily::Standard => standard(x_max),
            CorpusFamily::Interior => interior(x_max),
            CorpusFamily::PaleyWiener => paley_wiener(&self.supports),
        }
    }
}

/// Ten members supported in `[0, x_max/2]`.
pub fn standard(x_max: f64) -> Vec<CorpusFunction> {
    let s = x_max / 8.0;
    vec![
        CorpusFunction::SmoothedIndicator { start: 0.0, end: s, ramp: 0.2 * s },
        CorpusFunction::SmoothedIndicator { start: 0.5 * s, end: 2.5 * s, ramp: 0.3 * s },
        CorpusFunction::bump(0.0, 1.5 * s, 4),
        CorpusFunction::bump(2.0 * s, s, 3),
        CorpusFunction::bump(3.0 * s, 0.75 * s, 6),
        CorpusFunction::Gaussian { center: 1.5 * s, width: 0.4 * s, radius: 1.2 * s },
        CorpusFunction::Gaussian { center: 3.0 * s, width: 0.25 * s, radius: 0.9 * s },
        CorpusFunction::PolyBump { center: 2.0 * s, radius: 1.5 * s, power: 4, coeffs: vec![0.5, 1.0, -2.0] },
        CorpusFunction::PolyBump { center: 1.0 * s, radius: s, power: 5, coeffs: vec![0.0, 1.0] },
        CorpusFunction::SmoothedIndicator { start: 1.0 * s, end: 3.5 * s, ramp: 0.5 * s },
    ]
}

/// Members vanishing on `[0, x_max/16]` and `[x_max/2, x_max]`.
pub fn interior(x_max: f64) -> Vec<CorpusFunction> {
    let s = x_max / 8.0;
    vec![
        CorpusFunction::bump(1.5 * s, s, 4),
        CorpusFunction::bump(2.5 * s, 0.75 * s, 6),
        CorpusFunction::Gaussian { center: 2.0 * s, width: 0.4 * s, radius: s },
        CorpusFunction::PolyBump { center: 2.0 * s, radius: 1.25 * s, power: 5, coeffs: vec![0.3, 1.0, -1.0] },
        CorpusFunction::SmoothedIndicator { start: 0.75 * s, end: 3.25 * s, ramp: 0.75 * s },
    ]
}

/// For each `sigma`, members supported in exactly `[0, sigma]`.
pub fn paley_wiener(supports: &[f64]) -> Vec<CorpusFunction> {
    supports
        .iter()
        .flat_map(|&sigma| {
            [
                CorpusFunction::bump(0.0, sigma, 4),
                CorpusFunction::bump(0.5 * sigma, 0.5 * sigma, 4),
                CorpusFunction::SmoothedIndicator { start: 0.0, end: sigma, ramp: 0.5 * sigma },
            ]
        })
        .collect()
}

/// Random linear combination coefficients in `[-1, 1]`, drawn from `rng`.
pub fn random_coefficients(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect()
}
