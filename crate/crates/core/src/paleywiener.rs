//! Support reading, exponential-type estimation on the imaginary axis, and
//! triangularity probes for discrete transmutation operators.

use serde::Serialize;

use crate::corpus::{smoothstep, CorpusFunction};
use crate::error::{Error, Result};
use crate::grids::SpaceGrid;
use crate::potential::PotentialSpec;
use crate::transforms::forward;
use crate::transmute::{DiscreteOperator, OperatorPair};

/// Support threshold relative to `max |f|`.
pub const SUPPORT_REL_TOL: f64 = 1e-6;

/// Largest node with `|f| > tol`, `tol = SUPPORT_REL_TOL * max |f|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SupportEstimate {
    pub sigma_supp: f64,
    pub tol: f64,
}

pub fn support_estimate(f: &[f64], grid: &SpaceGrid) -> SupportEstimate {
    let sup = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = SUPPORT_REL_TOL * sup;
    let last = f.iter().rposition(|v| v.abs() > tol);
    SupportEstimate { sigma_supp: last.map_or(0.0, |i| grid.nodes()[i]), tol }
}

/// Smallest node with `|f| > tol`.
pub fn support_start(f: &[f64], grid: &SpaceGrid) -> f64 {
    let sup = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = SUPPORT_REL_TOL * sup;
    f.iter().position(|v| v.abs() > tol).map_or(grid.x_max(), |i| grid.nodes()[i])
}

/// `F(i tau)` stored as `sign * exp(log_abs)`; masked nodes have `log_abs = -inf`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ImaginaryAxisTransform {
    pub tau: Vec<f64>,
    pub log_abs: Vec<f64>,
    pub sign: Vec<f64>,
}

impl ImaginaryAxisTransform {
    pub fn from_values(tau: Vec<f64>, values: &[f64]) -> Result<Self> {
        if tau.len() != values.len() {
            return Err(Error::LengthMismatch { expected: tau.len(), got: values.len() });
        }
        let log_abs = values.iter().map(|v| v.abs().ln()).collect();
        let sign = values.iter().map(|v| v.signum()).collect();
        Ok(Self { tau, log_abs, sign })
    }

    pub fn value(&self, m: usize) -> f64 {
        self.sign[m] * self.log_abs[m].exp()
    }

    /// CSV with header `tau,log_abs_F`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["tau", "log_abs_F"])?;
        for (t, l) in self.tau.iter().zip(&self.log_abs) {
            w.write_record([t.to_string(), l.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Sixteen geometrically spaced nodes on `[20, 200]`.
pub fn default_tau_grid() -> Vec<f64> {
    geometric(20.0, 200.0, 16)
}

pub fn geometric(a: f64, b: f64, n: usize) -> Vec<f64> {
    let r = (b / a).ln() / (n - 1) as f64;
    (0..n).map(|m| a * (r * m as f64).exp()).collect()
}

/// `F(i tau) = int f(x) psi(x, i tau) dx` with the closed-form continuation of
/// `psi` for `q = c`: `cosh(sqrt(tau^2 + c) x)`. Evaluated in log scale.
pub fn complex_extend(f: &[f64], q: &PotentialSpec, grid: &SpaceGrid, tau: &[f64]) -> Result<ImaginaryAxisTransform> {
    let c = q
        .closed_form_constant()
        .ok_or_else(|| Error::Unsupported(format!("no closed-form complex continuation for {}", q.label())))?;
    if f.len() != grid.len() {
        return Err(Error::LengthMismatch { expected: grid.len(), got: f.len() });
    }
    let wf: Vec<(f64, f64)> = grid
        .nodes()
        .iter()
        .zip(f.iter().zip(grid.weights()))
        .filter(|(_, (v, _))| **v != 0.0)
        .map(|(&x, (v, w))| (x, v * w))
        .collect();
    let mut log_abs = Vec::with_capacity(tau.len());
    let mut sign = Vec::with_capacity(tau.len());
    for &t in tau {
        let kappa2 = t * t + c;
        let (l, s) = if wf.is_empty() {
            (f64::NEG_INFINITY, 0.0)
        } else if kappa2 > 0.0 {
            let kappa = kappa2.sqrt();
            let top = wf.iter().map(|(x, _)| kappa * x).fold(f64::NEG_INFINITY, f64::max);
            let sum: f64 = wf.iter().map(|(x, v)| 0.5 * v * ((kappa * x - top).exp() + (-kappa * x - top).exp())).sum();
            (top + sum.abs().ln(), sum.signum())
        } else {
            let om = (-kappa2).sqrt();
            let sum: f64 = wf.iter().map(|(x, v)| v * (om * x).cos()).sum();
            (sum.abs().ln(), sum.signum())
        };
        log_abs.push(l);
        sign.push(if l.is_finite() { s } else { 0.0 });
    }
    Ok(ImaginaryAxisTransform { tau: tau.to_vec(), log_abs, sign })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TypeEstimate {
    pub sigma_type: f64,
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the linear fit.
    pub residual: f64,
    pub tau_min: f64,
    pub tau_max: f64,
    /// Indices where `|F| = 0` (excluded from the fit).
    pub masked: Vec<usize>,
}

/// Least-squares slope of `log |F(i tau)|` over the upper half of the tau nodes.
pub fn estimate_type(ext: &ImaginaryAxisTransform) -> Result<TypeEstimate> {
    let n = ext.tau.len();
    if n < 8 {
        return Err(Error::TypeFit(format!("at least 8 tau nodes, got {n}")));
    }
    let (lo, hi) = ext.tau.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &t| (a.min(t), b.max(t)));
    if !(lo > 0.0 && hi >= 10.0 * lo * (1.0 - 1e-12)) {
        return Err(Error::TypeFit(format!("tau nodes spanning a decade, got [{lo}, {hi}]")));
    }
    let masked: Vec<usize> = (0..n).filter(|&m| !ext.log_abs[m].is_finite()).collect();
    let pts: Vec<(f64, f64)> =
        (n / 2..n).filter(|m| ext.log_abs[*m].is_finite()).map(|m| (ext.tau[m], ext.log_abs[m])).collect();
    if pts.len() < 2 {
        return Err(Error::TypeFit("at least two unmasked nodes in the upper half".into()));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum::<f64>() / k).sqrt();
    Ok(TypeEstimate {
        sigma_type: slope.max(0.0),
        slope,
        intercept,
        residual,
        tau_min: pts[0].0,
        tau_max: pts[pts.len() - 1].0,
        masked,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PwTolerances {
    /// Support slack in grid steps.
    pub support_nodes: f64,
    /// Allowed `|sigma_type - sigma|`.
    pub type_tol: f64,
}

impl Default for PwTolerances {
    fn default() -> Self {
        Self { support_nodes: 2.0, type_tol: 0.1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PwRow {
    pub function: String,
    pub sigma_supp_in: f64,
    pub sigma_supp_out: f64,
    pub sigma_type: f64,
    pub support_ok: bool,
    pub type_ok: bool,
    pub converse_ok: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PwReport {
    pub rows: Vec<PwRow>,
    pub pass: bool,
}

/// For each corpus member: `supp Vf` stays in `[0, sigma + slack]`, the type of
/// `Q_2 f` is `sigma` within tolerance, and conversely the support does not
/// exceed the measured type.
pub fn pwp_check(
    pair: &OperatorPair,
    v: &DiscreteOperator,
    corpus: &[CorpusFunction],
    tau: &[f64],
    tol: PwTolerances,
) -> Result<PwReport> {
    if !pair.q1.is_zero() {
        return Err(Error::Unsupported("the Paley-Wiener transfer check needs q1 = 0".into()));
    }
    let grid = pair.space();
    let slack = tol.support_nodes * grid.step();
    let mut rows = Vec::with_capacity(corpus.len());
    for f in corpus {
        let s = f.sample(grid);
        let sigma = f.sigma();
        let measured = support_estimate(&s, grid).sigma_supp;
        let vf = v.apply(&s)?;
        let sigma_out = support_estimate(&vf, grid).sigma_supp;
        let ty = estimate_type(&complex_extend(&s, &pair.q2, grid, tau)?)?.sigma_type;
        let support_ok = sigma_out <= sigma + slack;
        let type_ok = (ty - sigma).abs() <= tol.type_tol;
        let converse_ok = measured <= ty + tol.type_tol + slack;
        rows.push(PwRow {
            function: f.label(),
            sigma_supp_in: sigma,
            sigma_supp_out: sigma_out,
            sigma_type: ty,
            support_ok,
            type_ok,
            converse_ok,
            pass: support_ok && type_ok && converse_ok,
        });
    }
    let pass = rows.iter().all(|r| r.pass);
    Ok(PwReport { rows, pass })
}

/// Normalized C^2 bump `(1 - r^2)^3` of the given radius centred at `y0`.
pub fn probe_bump(grid: &SpaceGrid, y0: f64, radius: f64) -> Vec<f64> {
    let raw = CorpusFunction::bump(y0, radius, 3).sample(grid);
    let mass: f64 = raw.iter().zip(grid.weights()).map(|(a, w)| a * w).sum();
    raw.iter().map(|v| v / mass).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeRow {
    pub radius: f64,
    /// `int_{x > y0 + eps} |V delta|`.
    pub mass_beyond: f64,
    /// `int |V delta|`.
    pub column_mass: f64,
    pub ratio: f64,
    pub sup_beyond: f64,
    /// `int_{x < y0 - eps} |V* delta|` relative to `int |V* delta|`.
    pub adjoint_ratio_below: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeReport {
    pub y0: f64,
    pub eps: f64,
    pub rows: Vec<ProbeRow>,
    pub monotone: bool,
    /// Richardson estimate of the ratio in the limit of vanishing radius.
    pub extrapolated_ratio: f64,
    /// `V(x, y0)` read from the matrix column.
    pub column_profile: Vec<f64>,
}

/// Applies `V` (and its adjoint) to shrinking normalized bumps at `y0` and
/// measures how much of the result lies beyond `y0 + eps` (below `y0 - eps`).
pub fn triangularity_probe(v: &DiscreteOperator, y0: f64, radii: &[f64], eps: f64) -> Result<ProbeReport> {
    let grid = v.grid();
    let widest = radii.iter().copied().fold(0.0, f64::max);
    if y0 - widest <= 2.0 * grid.step() || y0 + widest >= grid.x_max() - 2.0 * grid.step() {
        return Err(Error::ProbeOutOfRange(y0));
    }
    let adj = v.adjoint();
    let w = grid.weights();
    let mut rows = Vec::with_capacity(radii.len());
    for &r in radii {
        let d = probe_bump(grid, y0, r);
        let out = v.apply(&d)?;
        let back = adj.apply(&d)?;
        let mut beyond = 0.0;
        let mut total = 0.0;
        let mut sup_beyond = 0.0f64;
        let mut below = 0.0;
        let mut total_adj = 0.0;
        for (i, &x) in grid.nodes().iter().enumerate() {
            total += out[i].abs() * w[i];
            total_adj += back[i].abs() * w[i];
            if x > y0 + eps {
                beyond += out[i].abs() * w[i];
                sup_beyond = sup_beyond.max(out[i].abs());
            }
            if x < y0 - eps {
                below += back[i].abs() * w[i];
            }
        }
        rows.push(ProbeRow {
            radius: r,
            mass_beyond: beyond,
            column_mass: total,
            ratio: beyond / total.max(f64::MIN_POSITIVE),
            sup_beyond,
            adjoint_ratio_below: below / total_adj.max(f64::MIN_POSITIVE),
        });
    }
    let monotone = rows.windows(2).all(|p| p[1].mass_beyond <= p[0].mass_beyond);
    let extrapolated_ratio = match rows.as_slice() {
        [.., a, b] => (2.0 * b.ratio - a.ratio).max(0.0),
        [a] => a.ratio,
        [] => 0.0,
    };
    let column_profile = v.kernel_column(grid.nearest_index(y0));
    Ok(ProbeReport { y0, eps, rows, monotone, extrapolated_ratio, column_profile })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransferRow {
    pub k: f64,
    /// `sup |psi_2 - V* psi_1|` over `[0, x_max/2]`.
    pub deviation: f64,
    /// Part of `V* psi_1 - psi_1` contributed by the kernel above the diagonal.
    pub upper_triangle_share: f64,
}

/// Compares `psi_2(., k)` with `V* psi_1(., k)` on `[0, x_max/2]`. `psi_1` is
/// tapered to zero over `[0.6, 0.9] x_max` so that it lies in the domain of `V*`.
pub fn eigenfunction_transfer_check(
    pair: &OperatorPair,
    v: &DiscreteOperator,
    probe_k: &[f64],
) -> Result<Vec<TransferRow>> {
    let grid = pair.space();
    let x_max = grid.x_max();
    let taper: Vec<f64> = grid.sample(|x| smoothstep((0.9 * x_max - x) / (0.3 * x_max)));
    let adj = v.adjoint();
    let half = grid.nearest_index(0.5 * x_max);
    let w = grid.weights();
    let mut rows = Vec::with_capacity(probe_k.len());
    for &k in probe_k {
        let j = pair.spectral().nearest_index(k);
        let k_node = pair.spectral().nodes()[j];
        let psi1: Vec<f64> = pair.eig1.column(j).iter().zip(&taper).map(|(a, b)| a * b).collect();
        let psi2 = pair.eig2.column(j);
        let moved = adj.apply(&psi1)?;
        let deviation = (0..=half).map(|i| (moved[i] - psi2[i]).abs()).fold(0.0, f64::max);
        // split V* psi1 - psi1 into contributions from x <= y and x > y
        let m = adj.matrix();
        let (mut lower, mut upper) = (0.0f64, 0.0f64);
        for i in 0..=half {
            let (mut lo, mut up) = (0.0, 0.0);
            for (jj, p) in psi1.iter().enumerate() {
                let e = m[[i, jj]] - if i == jj { 1.0 } else { 0.0 };
                if jj <= i {
                    lo += e * p;
                } else {
                    up += e * p;
                }
            }
            lower += lo.abs() * w[i];
            upper += up.abs() * w[i];
        }
        rows.push(TransferRow {
            k: k_node,
            deviation,
            upper_triangle_share: upper / (lower + upper).max(f64::MIN_POSITIVE),
        });
    }
    Ok(rows)
}

/// Classical baseline: type of the cosine transform against the support.
pub fn classical_baseline(f: &[f64], grid: &SpaceGrid, tau: &[f64]) -> Result<(SupportEstimate, TypeEstimate)> {
    let s = support_estimate(f, grid);
    let t = estimate_type(&complex_extend(f, &PotentialSpec::Zero, grid, tau)?)?;
    Ok((s, t))
}

/// Real-axis transform and imaginary-axis extension agree at `tau = 0`.
pub fn extension_consistency(f: &[f64], pair: &OperatorPair) -> Result<f64> {
    let real = forward(f, &pair.eig2)?;
    let c = pair.q2.closed_form_constant().unwrap_or(0.0);
    if c != 0.0 {
        return Ok(0.0);
    }
    let ext = complex_extend(f, &pair.q2, pair.space(), &[0.0])?;
    Ok((ext.value(0) - real.values()[0]).abs())
}
