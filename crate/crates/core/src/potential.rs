//! Potentials `q` defining `Q = -D^2 + q` on the half-line.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grids::SpaceGrid;
use crate::quad::GaussLegendre;

/// A potential given in closed form or by samples on a uniform grid over `[0, x_max]`.
///
/// Sampled families are evaluated off-grid by local cubic interpolation, which
/// keeps the fourth-order eigenfunction integrator consistent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PotentialSpec {
    Zero,
    Constant {
        c: f64,
    },
    Sampled {
        x_max: f64,
        values: Vec<f64>,
    },
    AnalyticTable {
        x_max: f64,
        values: Vec<f64>,
        /// Declared number of continuous derivatives.
        smoothness: u32,
    },
}

impl PotentialSpec {
    pub fn constant(c: f64) -> Self {
        Self::Constant { c }
    }

    /// Samples `q` on `grid`.
    pub fn sampled(grid: &SpaceGrid, q: impl Fn(f64) -> f64) -> Result<Self> {
        let spec = Self::Sampled { x_max: grid.x_max(), values: grid.sample(q) };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Zero => Ok(()),
            Self::Constant { c } if c.is_finite() => Ok(()),
            Self::Constant { c } => Err(Error::InvalidPotential(format!("constant {c} is not finite"))),
            Self::Sampled { x_max, values } | Self::AnalyticTable { x_max, values, .. } => {
                if values.len() < 4 {
                    return Err(Error::InvalidPotential("need at least 4 samples".into()));
                }
                if !(x_max.is_finite() && *x_max > 0.0) {
                    return Err(Error::InvalidPotential(format!("table x_max {x_max} must be positive")));
                }
                if let Some(i) = values.iter().position(|v| !v.is_finite()) {
                    return Err(Error::InvalidPotential(format!("sample {i} is not finite")));
                }
                Ok(())
            }
        }
    }

    /// Checks that `q` can be evaluated everywhere on `grid`.
    pub fn check_covers(&self, grid: &SpaceGrid) -> Result<()> {
        self.validate()?;
        match self {
            Self::Sampled { x_max, .. } | Self::AnalyticTable { x_max, .. }
                if *x_max < grid.x_max() * (1.0 - 1e-12) =>
            {
                Err(Error::InvalidPotential(format!(
                    "table covers [0, {x_max}] but the grid extends to {}",
                    grid.x_max()
                )))
            }
            _ => Ok(()),
        }
    }

    /// The constant value for closed-form families (`Zero` gives `0`).
    pub fn closed_form_constant(&self) -> Option<f64> {
        match self {
            Self::Zero => Some(0.0),
            Self::Constant { c } => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Self::Zero) || matches!(self, Self::Constant { c } if *c == 0.0)
    }

    pub fn label(&self) -> String {
        match self {
            Self::Zero => "zero".into(),
            Self::Constant { c } => format!("constant({c})"),
            Self::Sampled { values, .. } => format!("sampled({} nodes)", values.len()),
            Self::AnalyticTable { values, smoothness, .. } => {
                format!("analytic-table({} nodes, C^{smoothness})", values.len())
            }
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Constant { c } => *c,
            Self::Sampled { x_max, values } | Self::AnalyticTable { x_max, values, .. } => {
                cubic_interp(*x_max, values, x)
            }
        }
    }

    /// `int_0^x q(s) ds`.
    pub fn integral(&self, x: f64) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Constant { c } => c * x,
            Self::Sampled { x_max, values } | Self::AnalyticTable { x_max, values, .. } => {
                let h = x_max / (values.len() - 1) as f64;
                let gl = GaussLegendre::new(3);
                let cell = ((x / h).floor().max(0.0) as usize).min(values.len() - 2);
                let mut acc = 0.0;
                for i in 0..cell {
                    let a = i as f64 * h;
                    acc += gl.integrate(a, a + h, |s| cubic_interp(*x_max, values, s));
                }
                let a = cell as f64 * h;
                acc + gl.integrate(a, x, |s| cubic_interp(*x_max, values, s))
            }
        }
    }
}

/// Four-point Lagrange interpolation using the stencil around the cell containing `x`.
fn cubic_interp(x_max: f64, values: &[f64], x: f64) -> f64 {
    let n = values.len();
    let h = x_max / (n - 1) as f64;
    let cell = ((x / h).floor().max(0.0) as usize).min(n - 2);
    let start = cell.saturating_sub(1).min(n - 4);
    let t = x / h - start as f64;
    let mut acc = 0.0;
    for a in 0..4 {
        let mut l = 1.0;
        for b in 0..4 {
            if a != b {
                l *= (t - b as f64) / (a as f64 - b as f64);
            }
        }
        acc += l * values[start + a];
    }
    acc
}
