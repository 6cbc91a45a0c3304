use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::catalogue::{self, CheckGroup};
use crate::corpus::CorpusSpec;
use crate::error::{Error, Result};
use crate::grids::{SpaceGrid, SpectralGrid};
use crate::potential::PotentialSpec;

/// One experiment: a potential pair, grids, corpus, enabled check groups and
/// tolerance overrides.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "CheckGroup::all")]
    pub checks: Vec<CheckGroup>,
    pub q1: PotentialSpec,
    pub q2: PotentialSpec,
    pub grid: GridSpec,
    #[serde(default)]
    pub resolution: Resolution,
    #[serde(default)]
    pub corpus: CorpusSpec,
    /// Per-check overrides keyed by check name.
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub x_max: f64,
    pub n_x: usize,
    pub k_max: f64,
    pub n_k: usize,
}

/// Secondary discretization parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Resolution {
    /// Spectral nodes for checks that integrate against a shifted measure.
    pub fine_n_k: usize,
    /// Cutoff for the Parseval checks.
    pub parseval_k_max: f64,
    /// Base width of the mollifier ladder for the spectral kernel.
    pub kernel_eps: f64,
    /// Off-diagonal band excluded from the kernel comparison.
    pub kernel_band: f64,
    pub tau_min: f64,
    pub tau_max: f64,
    pub tau_nodes: usize,
    /// Contour nodes for the Levitan coefficients.
    pub contour_nodes: usize,
}

impl Default for Resolution {
    fn default() -> Self {
        Self {
            fine_n_k: 8193,
            parseval_k_max: 200.0,
            kernel_eps: 0.004,
            kernel_band: 0.2,
            tau_min: 20.0,
            tau_max: 200.0,
            tau_nodes: 16,
            contour_nodes: 64,
        }
    }
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(Error::Config(format!("name must be a plain non-empty identifier, got {:?}", self.name)));
        }
        self.space_grid()?;
        self.spectral_grid()?;
        self.q1.validate()?;
        self.q2.validate()?;
        if !self.q1.is_zero() {
            return Err(Error::Unsupported(format!("q1 must be the zero potential, got {}", self.q1.label())));
        }
        match self.q2.closed_form_constant() {
            Some(c) if c >= 0.0 => {}
            _ => {
                return Err(Error::Unsupported(format!(
                    "q2 must be zero or a nonnegative constant, got {}",
                    self.q2.label()
                )))
            }
        }
        if self.checks.is_empty() {
            return Err(Error::Config("checks: at least one group must be enabled".into()));
        }
        for (name, tol) in &self.tolerances {
            if catalogue::find(name).is_none() {
                return Err(Error::Config(format!("tolerances: unknown check {name:?}")));
            }
            if !(*tol > 0.0 && tol.is_finite()) {
                return Err(Error::Config(format!("tolerances.{name}: must be positive, got {tol}")));
            }
        }
        if self.corpus.supports.iter().any(|s| !(*s > 0.0 && *s <= 0.5 * self.grid.x_max)) {
            return Err(Error::Config("corpus.supports: each sigma must lie in (0, x_max/2]".into()));
        }
        let r = &self.resolution;
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if r.fine_n_k < 2
            || !positive(r.parseval_k_max)
            || !positive(r.kernel_eps)
            || !(positive(r.kernel_band) || r.kernel_band == 0.0)
        {
            return Err(Error::Config("resolution: sizes and widths must be positive".into()));
        }
        if !(r.tau_min > 0.0 && r.tau_max > r.tau_min) || r.tau_nodes < 2 {
            return Err(Error::Config("resolution: need 0 < tau_min < tau_max and tau_nodes >= 2".into()));
        }
        if r.contour_nodes < 16 || !r.contour_nodes.is_multiple_of(2) {
            return Err(Error::Config("resolution.contour_nodes: must be even and >= 16".into()));
        }
        Ok(())
    }

    pub fn space_grid(&self) -> Result<SpaceGrid> {
        SpaceGrid::new(self.grid.x_max, self.grid.n_x).map_err(|e| Error::Config(format!("grid: {e}")))
    }

    pub fn spectral_grid(&self) -> Result<SpectralGrid> {
        SpectralGrid::new(self.grid.k_max, self.grid.n_k).map_err(|e| Error::Config(format!("grid: {e}")))
    }

    pub fn tolerance(&self, check: &str) -> f64 {
        self.tolerances
            .get(check)
            .copied()
            .or_else(|| catalogue::find(check).map(|c| c.default_tolerance))
            .unwrap_or(f64::NAN)
    }

    pub fn enabled(&self, group: CheckGroup) -> bool {
        self.checks.contains(&group)
    }
}
