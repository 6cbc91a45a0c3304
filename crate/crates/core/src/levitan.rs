//! Local infinite-order differential representation of operators on analytic
//! functions, and the Carleman-type residual identity between two transforms.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::CorpusFunction;
use crate::eigen::eigen_column;
use crate::error::{Error, Result};
use crate::grids::SpaceGrid;
use crate::potential::PotentialSpec;
use crate::transforms::{forward, forward_matrix};
use crate::transmute::OperatorPair;

/// Analytic function evaluated pointwise.
pub type AnalyticFn<'a> = &'a (dyn Fn(Complex64) -> Complex64 + Sync);

/// Default truncation order.
pub const DEFAULT_J_MAX: usize = 12;

/// Circle `|zeta - center| = radius` with `n_nodes` equispaced trapezoid nodes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ContourSpec {
    pub center: Complex64,
    pub radius: f64,
    pub n_nodes: usize,
}

impl ContourSpec {
    pub fn new(center: Complex64, radius: f64, n_nodes: usize) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidContour(format!("radius must be positive, got {radius}")));
        }
        if n_nodes < 16 || !n_nodes.is_multiple_of(2) {
            return Err(Error::InvalidContour(format!("n_nodes must be even and >= 16, got {n_nodes}")));
        }
        Ok(Self { center, radius, n_nodes })
    }

    pub fn centered_at(&self, z: Complex64) -> Self {
        Self { center: z, ..*self }
    }

    pub fn doubled(&self) -> Self {
        Self { n_nodes: 2 * self.n_nodes, ..*self }
    }

    /// `(zeta_m, zeta_m - center)` for each node.
    pub fn nodes(&self) -> impl Iterator<Item = (Complex64, Complex64)> + '_ {
        let n = self.n_nodes as f64;
        (0..self.n_nodes).map(move |m| {
            let d = Complex64::from_polar(self.radius, 2.0 * PI * m as f64 / n);
            (self.center + d, d)
        })
    }

    fn require_inside(&self, z: Complex64) -> Result<()> {
        if (z - self.center).norm() < self.radius * (1.0 - 1e-9) {
            Ok(())
        } else {
            Err(Error::OutsideContour(z))
        }
    }

    /// `(1 / 2 pi i) oint g(zeta) d zeta` by the trapezoid rule.
    pub fn integrate(&self, g: impl Fn(Complex64) -> Complex64) -> Complex64 {
        let sum: Complex64 = self.nodes().map(|(zeta, d)| g(zeta) * d).sum();
        sum / self.n_nodes as f64
    }
}

/// `(1 / 2 pi i) oint F(zeta) / (zeta - z) d zeta`.
pub fn cauchy_reproduce(f: AnalyticFn, contour: &ContourSpec, z: Complex64) -> Result<Complex64> {
    contour.require_inside(z)?;
    Ok(contour.integrate(|zeta| f(zeta) / (zeta - z)))
}

/// `F^{(n)}(z)` from a circle of the given radius and node count centred at `z`.
pub fn contour_derivative(f: AnalyticFn, z: Complex64, n: usize, radius: f64, n_nodes: usize) -> Complex64 {
    let c = ContourSpec { center: z, radius, n_nodes };
    let fact: f64 = (1..=n).map(|i| i as f64).product();
    c.integrate(|zeta| f(zeta) / (zeta - z).powi(n as i32 + 1)) * fact
}

/// Operator acting on analytic functions, evaluated at a point.
pub trait AnalyticOperator: Sync {
    fn apply(&self, f: AnalyticFn, z: Complex64) -> Result<Complex64>;
    fn label(&self) -> String;
}

/// `F(z) -> z F(z)`.
#[derive(Clone, Copy, Debug)]
pub struct Multiplication;

impl AnalyticOperator for Multiplication {
    fn apply(&self, f: AnalyticFn, z: Complex64) -> Result<Complex64> {
        Ok(z * f(z))
    }
    fn label(&self) -> String {
        "multiplication".into()
    }
}

/// `F -> F'`, by contour differentiation on a small circle.
#[derive(Clone, Copy, Debug)]
pub struct Derivative {
    pub radius: f64,
    pub n_nodes: usize,
}

impl Default for Derivative {
    fn default() -> Self {
        Self { radius: 0.05, n_nodes: 64 }
    }
}

impl AnalyticOperator for Derivative {
    fn apply(&self, f: AnalyticFn, z: Complex64) -> Result<Complex64> {
        Ok(contour_derivative(f, z, 1, self.radius, self.n_nodes))
    }
    fn label(&self) -> String {
        "derivative".into()
    }
}

/// `F(z) -> F(z + h)`.
#[derive(Clone, Copy, Debug)]
pub struct Shift {
    pub h: f64,
}

impl AnalyticOperator for Shift {
    fn apply(&self, f: AnalyticFn, z: Complex64) -> Result<Complex64> {
        Ok(f(z + self.h))
    }
    fn label(&self) -> String {
        format!("shift(h={})", self.h)
    }
}

/// Transform-side transfer for `q_1 = 0`, `q_2 = c`: `F(lambda) -> F(lambda - c)`.
#[derive(Clone, Copy, Debug)]
pub struct ConstantPairTransfer {
    pub c: f64,
}

impl ConstantPairTransfer {
    pub fn for_pair(q1: &PotentialSpec, q2: &PotentialSpec) -> Result<Self> {
        match (q1.is_zero(), q2.closed_form_constant()) {
            (true, Some(c)) => Ok(Self { c }),
            _ => Err(Error::Unsupported(format!(
                "closed-form transfer needs q1 = 0 and constant q2, got ({}, {})",
                q1.label(),
                q2.label()
            ))),
        }
    }
}

impl AnalyticOperator for ConstantPairTransfer {
    fn apply(&self, f: AnalyticFn, z: Complex64) -> Result<Complex64> {
        Ok(f(z - self.c))
    }
    fn label(&self) -> String {
        format!("constant-pair-transfer(c={})", self.c)
    }
}

/// `a_j(z)` for `j = 0..=j_max` at each evaluation point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExpansionCoeffs {
    pub z: Vec<Complex64>,
    /// `a[p][j]` is `a_j(z[p])`.
    pub a: Vec<Vec<Complex64>>,
    pub contour: ContourSpec,
    pub operator: String,
}

impl ExpansionCoeffs {
    pub fn j_max(&self) -> usize {
        self.a.first().map_or(0, |r| r.len() - 1)
    }

    /// CSV with header `z_real,z_imag,j,a_real,a_imag`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["z_real", "z_imag", "j", "a_real", "a_imag"])?;
        for (z, row) in self.z.iter().zip(&self.a) {
            for (j, a) in row.iter().enumerate() {
                w.write_record([
                    z.re.to_string(),
                    z.im.to_string(),
                    j.to_string(),
                    a.re.to_string(),
                    a.im.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Largest `|a_j(z) - b_j(z)|` over all entries.
    pub fn max_difference(&self, other: &ExpansionCoeffs) -> f64 {
        self.a.iter().flatten().zip(other.a.iter().flatten()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

/// `a_j(z) = (1 / j!) (1 / 2 pi i) oint (zeta - z)^j Q[1 / (zeta - .)](z) d zeta`.
pub fn levitan_coefficients(
    qop: &dyn AnalyticOperator,
    contour: &ContourSpec,
    j_max: usize,
    z: &[Complex64],
) -> Result<ExpansionCoeffs> {
    if j_max < 2 {
        return Err(Error::InvalidContour(format!("j_max must be at least 2, got {j_max}")));
    }
    for &p in z {
        contour.require_inside(p)?;
    }
    let nodes: Vec<(Complex64, Complex64)> = contour.nodes().collect();
    let a = z
        .par_iter()
        .map(|&p| {
            let mut vals = Vec::with_capacity(nodes.len());
            for &(zeta, d) in &nodes {
                let g = move |w: Complex64| (zeta - w).inv();
                let v = qop.apply(&g, p)?;
                if !v.is_finite() {
                    return Err(Error::Evaluation(format!("{} at zeta = {zeta}", qop.label())));
                }
                vals.push((zeta - p, v * d));
            }
            let mut row = Vec::with_capacity(j_max + 1);
            let mut fact = 1.0;
            for j in 0..=j_max {
                if j > 0 {
                    fact *= j as f64;
                }
                let s: Complex64 = vals.iter().map(|(u, v)| u.powi(j as i32) * v).sum();
                row.push(s / (nodes.len() as f64 * fact));
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExpansionCoeffs { z: z.to_vec(), a, contour: *contour, operator: qop.label() })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExpansionResult {
    pub z: Vec<Complex64>,
    /// Truncated sums at the requested order.
    pub values: Vec<Complex64>,
    /// Direct operator application.
    pub direct: Vec<Complex64>,
    /// `max_z |partial_J - direct|` for `J = 0..=j_trunc`.
    pub residuals: Vec<f64>,
    /// `residuals / max |direct|`.
    pub relative: Vec<f64>,
    /// First order at which the residual has not decreased over three terms.
    pub stalled_at: Option<usize>,
}

/// Residual levels below this fraction of `max |direct|` count as converged.
const STALL_FLOOR: f64 = 1e-12;

/// First `J` with `r[J-2] <= r[J-1] <= r[J]` above the noise floor.
pub fn detect_stall(residuals: &[f64], floor: f64) -> Option<usize> {
    (2..residuals.len())
        .find(|&j| residuals[j] > floor && residuals[j - 2] <= residuals[j - 1] && residuals[j - 1] <= residuals[j])
}

/// `sum_{n <= J} a_n(z) F^{(n)}(z)`, derivatives by contour integration on a
/// circle around `z` with the coefficients' contour radius.
pub fn expansion_apply(
    coeffs: &ExpansionCoeffs,
    qop: &dyn AnalyticOperator,
    f: AnalyticFn,
    j_trunc: usize,
) -> Result<ExpansionResult> {
    if j_trunc > coeffs.j_max() {
        return Err(Error::InvalidContour(format!("j_trunc {j_trunc} exceeds j_max {}", coeffs.j_max())));
    }
    let rho = coeffs.contour.radius;
    let nn = coeffs.contour.n_nodes;
    let per_point: Vec<(Vec<Complex64>, Complex64)> = coeffs
        .z
        .par_iter()
        .zip(coeffs.a.par_iter())
        .map(|(&z, a)| {
            let mut partial = Vec::with_capacity(j_trunc + 1);
            let mut acc = Complex64::new(0.0, 0.0);
            for (n, an) in a.iter().enumerate().take(j_trunc + 1) {
                acc += an * contour_derivative(f, z, n, rho, nn);
                partial.push(acc);
            }
            Ok((partial, qop.apply(f, z)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let scale = per_point.iter().map(|(_, d)| d.norm()).fold(0.0, f64::max);
    let residuals: Vec<f64> =
        (0..=j_trunc).map(|j| per_point.iter().map(|(p, d)| (p[j] - d).norm()).fold(0.0, f64::max)).collect();
    let relative = residuals.iter().map(|r| r / scale.max(f64::MIN_POSITIVE)).collect();
    let stalled_at = detect_stall(&residuals, STALL_FLOOR * scale);
    Ok(ExpansionResult {
        z: coeffs.z.clone(),
        values: per_point.iter().map(|(p, _)| p[j_trunc]).collect(),
        direct: per_point.into_iter().map(|(_, d)| d).collect(),
        residuals,
        relative,
        stalled_at,
    })
}

/// `F(lambda) = int f(x) cos(sqrt(lambda) x) dx` by quadrature; entire in `lambda`.
pub fn cosine_transform_fn<'a>(f: &'a [f64], grid: &'a SpaceGrid) -> impl Fn(Complex64) -> Complex64 + Sync + 'a {
    move |lambda: Complex64| {
        let s = lambda.sqrt();
        grid.nodes()
            .iter()
            .zip(f.iter().zip(grid.weights()))
            .filter(|(_, (v, _))| **v != 0.0)
            .map(|(&x, (v, w))| (s * x).cos() * (v * w))
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EigenExpansionRow {
    pub k: f64,
    /// `sup_x |sum_{n <= J} a_n d^n psi_1 - psi_2|` for `J = 0..=j_max`.
    pub residuals: Vec<f64>,
    pub stalled_at: Option<usize>,
}

/// Truncated `sum a_n(lambda) d^n_lambda psi_1(x, lambda)` against `psi_2` from
/// the ODE solver, at the space nodes nearest to `probe_x`. Needs `q_1 = 0`.
pub fn eigenfunction_expansion_check(
    pair: &OperatorPair,
    coeffs: &ExpansionCoeffs,
    probe_x: &[f64],
) -> Result<Vec<EigenExpansionRow>> {
    if !pair.q1.is_zero() {
        return Err(Error::Unsupported("eigenfunction expansion needs q1 = 0".into()));
    }
    let grid = pair.space();
    let idx: Vec<usize> = probe_x.iter().map(|&x| grid.nearest_index(x)).collect();
    let rho = coeffs.contour.radius;
    let nn = coeffs.contour.n_nodes;
    coeffs
        .z
        .iter()
        .zip(&coeffs.a)
        .map(|(&z, a)| {
            if z.im != 0.0 || z.re < 0.25 {
                return Err(Error::ProbeOutOfRange(z.re));
            }
            let k = z.re.sqrt();
            let psi2 = eigen_column(&pair.q2, grid, k)?;
            let mut partial = vec![Complex64::new(0.0, 0.0); idx.len()];
            let mut residuals = Vec::with_capacity(a.len());
            for (n, an) in a.iter().enumerate() {
                for (p, &i) in partial.iter_mut().zip(&idx) {
                    let x = grid.nodes()[i];
                    let psi1 = move |l: Complex64| (l.sqrt() * x).cos();
                    let d = if n == 0 {
                        Complex64::new((k * x).cos(), 0.0)
                    } else {
                        contour_derivative(&psi1, z, n, rho, nn)
                    };
                    *p += an * d;
                }
                residuals.push(partial.iter().zip(&idx).map(|(p, &i)| (p.re - psi2[i]).abs()).fold(0.0, f64::max));
            }
            let stalled_at = detect_stall(&residuals, 1e-12);
            Ok(EigenExpansionRow { k, residuals, stalled_at })
        })
        .collect()
}

/// `r_hat_1(nu_i, lambda_j) = int (psi_2 - psi_1)(x, lambda_j) psi_1(x, nu_i) dx`.
#[derive(Clone, Debug)]
pub struct ResidualTransform {
    pub values: Array2<f64>,
    pub pair: String,
}

impl ResidualTransform {
    pub fn new(pair: &OperatorPair) -> Self {
        let r = pair.eig2.psi() - pair.eig1.psi();
        let values = forward_matrix(&pair.eig1).dot(&r);
        Self { values, pair: format!("({}, {})", pair.q1.label(), pair.q2.label()) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CarlemanRow {
    pub function: String,
    pub deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CarlemanReport {
    pub rows: Vec<CarlemanRow>,
    pub worst: f64,
    /// Upper end of the compact set `K = [0, k_K]` used for `g`.
    pub k_compact: f64,
    /// `g(nu) = max_{lambda in K} |r_hat_1(nu, lambda)|`.
    pub g_profile: Vec<f64>,
    /// `||g||` in `L^2(dGamma_1)` over the full grid and over `nu <= k_max / 2`.
    pub g_norm: f64,
    pub g_norm_half: f64,
    pub g_finite: bool,
    /// Growth exponent of `gamma_1` and decay order used for the second hypothesis.
    pub p: u32,
    pub m: u32,
    pub hypothesis_b: bool,
}

/// Checks `f_2(lambda) = f_1(lambda) + int r_hat_1(nu, lambda) f_1(nu) dGamma_1(nu)`
/// on the corpus, relative to `max |f_2|`.
pub fn carleman_residual_check(
    pair: &OperatorPair,
    corpus: &[CorpusFunction],
    k_compact: f64,
) -> Result<CarlemanReport> {
    let r = ResidualTransform::new(pair);
    let wg = pair.gamma1.weights();
    let grid = pair.space();
    let rows = corpus
        .par_iter()
        .map(|f| {
            let s = f.sample(grid);
            let f1 = forward(&s, &pair.eig1)?;
            let f2 = forward(&s, &pair.eig2)?;
            let wf: Vec<f64> = f1.values().iter().zip(&wg).map(|(a, b)| a * b).collect();
            let corr = r.values.t().dot(&ndarray::ArrayView1::from(&wf));
            let scale = f2.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let dev = f2
                .values()
                .iter()
                .zip(f1.values())
                .zip(corr.iter())
                .map(|((b, a), c)| (b - a - c).abs())
                .fold(0.0, f64::max);
            Ok(CarlemanRow { function: f.label(), deviation: dev / scale.max(f64::MIN_POSITIVE) })
        })
        .collect::<Result<Vec<_>>>()?;
    let worst = rows.iter().map(|r| r.deviation).fold(0.0, f64::max);
    let nodes = pair.spectral().nodes();
    let in_k: Vec<usize> = (0..nodes.len()).filter(|&j| nodes[j] <= k_compact).collect();
    let g_profile: Vec<f64> =
        (0..nodes.len()).map(|i| in_k.iter().map(|&j| r.values[[i, j]].abs()).fold(0.0, f64::max)).collect();
    let half = 0.5 * pair.spectral().k_max();
    let (mut g_norm, mut g_norm_half) = (0.0, 0.0);
    for (i, g) in g_profile.iter().enumerate() {
        g_norm += g * g * wg[i];
        if nodes[i] <= half {
            g_norm_half += g * g * wg[i];
        }
    }
    let (g_norm, g_norm_half) = (g_norm.sqrt(), g_norm_half.sqrt());
    let (p, m) = (0, 1);
    Ok(CarlemanReport {
        rows,
        worst,
        k_compact,
        g_finite: g_norm.is_finite() && g_profile.iter().all(|g| g.is_finite()),
        g_profile,
        g_norm,
        g_norm_half,
        p,
        m,
        hypothesis_b: 2 * m >= p + 2,
    })
}
