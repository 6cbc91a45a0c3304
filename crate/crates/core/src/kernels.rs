//! Triangular transmutation kernels: the Gelfand–Levitan kernel `K` from its
//! Goursat problem, its Volterra inverse `L`, and regularized spectral kernels.
//!
//! Substituting `psi = phi + int_0^x K(x,t) phi(t) dt` into `Q psi = k^2 psi`
//! gives `K_xx - K_tt = q(x) K` on `0 <= t <= x` with `K(x,x) = (1/2) int_0^x q`
//! and `K_t(x,0) = 0`. The Neumann edge is imposed by even reflection in `t`,
//! which turns the problem into a Goursat problem with data on both
//! characteristics `t = x` and `t = -x`.

use ndarray::{Array2, Axis};
use serde::Serialize;
use std::io::Write;

use crate::corpus::CorpusFunction;
use crate::eigen::EigenTable;
use crate::error::{Error, Result};
use crate::grids::SpaceGrid;
use crate::measure::SpectralMeasure;
use crate::potential::PotentialSpec;
use crate::quad::GaussLegendre;
use crate::transforms::{forward, inverse, TransformVector};

/// Kernel magnitude at which the Goursat march is aborted.
pub const INSTABILITY_LIMIT: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum KernelKind {
    GelfandLevitan,
    Inverse,
    SpectralBeta { eps: f64 },
    SpectralGamma { eps: f64 },
    VKernel,
}

/// How the samples on and near the diagonal should be read.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "policy")]
pub enum DiagonalPolicy {
    /// Diagonal values are genuine samples of the kernel.
    Sampled,
    /// Values with `|x - t| < band` carry regularization error and are not comparable.
    Excluded { band: f64 },
}

/// Kernel samples `values[[i, j]] = K(x_i, t_j)`; row is the output variable.
#[derive(Clone, Debug)]
pub struct KernelMatrix {
    grid: SpaceGrid,
    values: Array2<f64>,
    kind: KernelKind,
    diagonal: DiagonalPolicy,
}

impl KernelMatrix {
    /// Lower-triangular kernel; entries above the diagonal are discarded.
    pub fn lower(grid: &SpaceGrid, mut values: Array2<f64>, kind: KernelKind) -> Result<Self> {
        let n = grid.len();
        if values.dim() != (n, n) {
            return Err(Error::LengthMismatch { expected: n * n, got: values.len() });
        }
        for i in 0..n {
            for j in i + 1..n {
                values[[i, j]] = 0.0;
            }
        }
        Self::full(grid, values, kind, DiagonalPolicy::Sampled)
    }

    fn full(grid: &SpaceGrid, values: Array2<f64>, kind: KernelKind, diagonal: DiagonalPolicy) -> Result<Self> {
        if let Some(p) = values.iter().position(|v| !v.is_finite()) {
            let n = grid.len();
            return Err(Error::Unstable { x: grid.nodes()[p / n] });
        }
        Ok(Self { grid: grid.clone(), values, kind, diagonal })
    }

    /// The zero kernel of the given kind.
    pub fn zero(grid: &SpaceGrid, kind: KernelKind) -> Self {
        let n = grid.len();
        Self { grid: grid.clone(), values: Array2::zeros((n, n)), kind, diagonal: DiagonalPolicy::Sampled }
    }

    pub fn grid(&self) -> &SpaceGrid {
        &self.grid
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn diagonal_policy(&self) -> DiagonalPolicy {
        self.diagonal
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[[i, j]]
    }

    /// Whether every entry above the diagonal is exactly zero.
    pub fn is_lower_triangular(&self) -> bool {
        let n = self.grid.len();
        (0..n).all(|i| (i + 1..n).all(|j| self.values[[i, j]] == 0.0))
    }

    /// `f(x) + int_0^x K(x,t) f(t) dt` with a trapezoid rule on each row.
    pub fn apply(&self, f: &[f64]) -> Result<Vec<f64>> {
        self.check_len(f)?;
        let h = self.grid.step();
        Ok((0..f.len())
            .map(|i| {
                let row = self.values.row(i);
                let mut acc = 0.0;
                for j in 0..=i {
                    acc += row_weight(i, j, h) * row[j] * f[j];
                }
                f[i] + acc
            })
            .collect())
    }

    /// `f(t) + int_t^{x_max} K(x,t) f(x) dx`, the exact adjoint of [`Self::apply`]
    /// in the trapezoid inner product.
    pub fn apply_adjoint(&self, f: &[f64]) -> Result<Vec<f64>> {
        self.check_len(f)?;
        let n = f.len();
        let h = self.grid.step();
        let omega = self.grid.weights();
        Ok((0..n)
            .map(|j| {
                let col = self.values.column(j);
                let mut acc = 0.0;
                for i in j..n {
                    acc += omega[i] * row_weight(i, j, h) * col[i] * f[i];
                }
                f[j] + acc / omega[j]
            })
            .collect())
    }

    fn check_len(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.grid.len() {
            return Err(Error::LengthMismatch { expected: self.grid.len(), got: f.len() });
        }
        Ok(())
    }

    /// CSV with header `x,t,value` over the lower triangle.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "t", "value"])?;
        let nodes = self.grid.nodes();
        for (i, x) in nodes.iter().enumerate() {
            for (j, t) in nodes.iter().enumerate().take(i + 1) {
                w.write_record([x.to_string(), t.to_string(), self.values[[i, j]].to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Trapezoid weight of node `j` in the integral over `[0, x_i]`.
pub(crate) fn row_weight(i: usize, j: usize, h: f64) -> f64 {
    if i == 0 {
        0.0
    } else if j == 0 || j == i {
        0.5 * h
    } else {
        h
    }
}

/// Second-order characteristic march for the Gelfand–Levitan kernel.
///
/// With `u = x + t`, `v = x - t` on a lattice of step `h`, each cell is closed
/// with the average of its four corners (implicit in the new corner):
/// `K_NE = K_N + K_E - K_0 + (h^2 q / 4) * mean(K_0, K_N, K_E, K_NE)`.
pub fn goursat_solve(q: &PotentialSpec, grid: &SpaceGrid) -> Result<KernelMatrix> {
    q.check_covers(grid)?;
    let n = grid.len();
    let h = grid.step();
    let top = 2 * (n - 1);
    // values at x = m h / 2, m = 0..=top
    let q_half: Vec<f64> = (0..=top).map(|m| q.eval(m as f64 * 0.5 * h)).collect();
    let gl = GaussLegendre::new(3);
    let mut half_integral = vec![0.0; top + 1];
    for m in 1..=top {
        let (a, b) = ((m - 1) as f64 * 0.5 * h, m as f64 * 0.5 * h);
        half_integral[m] = half_integral[m - 1] + 0.5 * gl.integrate(a, b, |s| q.eval(s));
    }

    let mut out = Array2::zeros((n, n));
    let mut prev: Vec<f64> = half_integral.clone();
    store_row(&mut out, 0, &prev);
    let mut cur = vec![0.0; top + 1];
    for m in 1..=top {
        cur[0] = half_integral[m];
        for nn in 1..=top - m {
            let a = 0.25 * h * h * q_half[m + nn - 1];
            let (k0, kn, ke) = (prev[nn - 1], prev[nn], cur[nn - 1]);
            let v = (kn + ke - k0 + 0.25 * a * (k0 + kn + ke)) / (1.0 - 0.25 * a);
            if !v.is_finite() || v.abs() > INSTABILITY_LIMIT {
                return Err(Error::Unstable { x: (m + nn) as f64 * 0.5 * h });
            }
            cur[nn] = v;
        }
        store_row(&mut out, m, &cur[..=top - m]);
        std::mem::swap(&mut prev, &mut cur);
    }
    KernelMatrix::lower(grid, out, KernelKind::GelfandLevitan)
}

fn store_row(out: &mut Array2<f64>, m: usize, row: &[f64]) {
    // lattice (m, nn) is grid node (i, j) = ((m + nn)/2, (m - nn)/2) when m + nn is even and nn <= m
    for nn in (m % 2..=m.min(row.len() - 1)).step_by(2) {
        let (i, j) = ((m + nn) / 2, (m - nn) / 2);
        if i < out.nrows() {
            out[[i, j]] = row[nn];
        }
    }
}

/// Regular part of `int psi1(x,k) psi2(y,k) exp(-eps k^2) dGamma` at row `y`, column `x`,
/// after removing the mollified identity `int psi1(x,k) psi1(y,k) exp(-eps k^2) dGamma`.
pub fn spectral_kernel(
    eig1: &EigenTable,
    eig2: &EigenTable,
    measure: &SpectralMeasure,
    eps: f64,
) -> Result<KernelMatrix> {
    let values = regular_part(eig1, eig2, measure, eps)?;
    KernelMatrix::full(
        eig1.space(),
        values,
        KernelKind::SpectralBeta { eps },
        DiagonalPolicy::Excluded { band: 5.0 * eps.sqrt() },
    )
}

/// The same construction with the roles of the operators exchanged; its limit is `L`.
pub fn spectral_gamma(
    eig2: &EigenTable,
    eig1: &EigenTable,
    measure2: &SpectralMeasure,
    eps: f64,
) -> Result<KernelMatrix> {
    let values = regular_part(eig2, eig1, measure2, eps)?;
    KernelMatrix::full(
        eig1.space(),
        values,
        KernelKind::SpectralGamma { eps },
        DiagonalPolicy::Excluded { band: 5.0 * eps.sqrt() },
    )
}

/// Richardson extrapolation `eps -> 0` over the ladder `{eps, eps/2, eps/4}`.
pub fn spectral_kernel_extrapolated(
    eig1: &EigenTable,
    eig2: &EigenTable,
    measure: &SpectralMeasure,
    eps: f64,
) -> Result<KernelMatrix> {
    let r1 = regular_part(eig1, eig2, measure, eps)?;
    let r2 = regular_part(eig1, eig2, measure, 0.5 * eps)?;
    let r4 = regular_part(eig1, eig2, measure, 0.25 * eps)?;
    let values = (r4 * 8.0 - r2 * 6.0 + r1) / 3.0;
    KernelMatrix::full(
        eig1.space(),
        values,
        KernelKind::SpectralBeta { eps: 0.0 },
        DiagonalPolicy::Excluded { band: 5.0 * eps.sqrt() },
    )
}

fn regular_part(eig1: &EigenTable, eig2: &EigenTable, measure: &SpectralMeasure, eps: f64) -> Result<Array2<f64>> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidRegularization(eps));
    }
    if !eig1.space().same_as(eig2.space()) {
        return Err(Error::GridMismatch("eigen tables use different space grids".into()));
    }
    if !eig1.spectral().same_as(eig2.spectral()) || !eig1.spectral().same_as(measure.grid()) {
        return Err(Error::GridMismatch("eigen tables and measure use different spectral grids".into()));
    }
    eig1.require_valid()?;
    eig2.require_valid()?;
    let w: Vec<f64> =
        measure.weights().iter().zip(measure.grid().nodes()).map(|(w, k)| w * (-eps * k * k).exp()).collect();
    let diff = eig2.psi() - eig1.psi();
    let mut weighted = eig1.psi().to_owned();
    for mut row in weighted.axis_iter_mut(Axis(0)) {
        for (v, wj) in row.iter_mut().zip(&w) {
            *v *= wj;
        }
    }
    Ok(diff.dot(&weighted.t()))
}

/// Discrete inverse of `I + K`: the lower-triangular `L` with `(I+K)(I+L) = I`
/// exactly for the row-trapezoid applicator, found by forward substitution.
pub fn invert_kernel(k: &KernelMatrix) -> Result<KernelMatrix> {
    if k.kind != KernelKind::GelfandLevitan {
        return Err(Error::Unsupported(format!("invert_kernel expects a Gelfand-Levitan kernel, got {:?}", k.kind)));
    }
    let n = k.grid.len();
    let h = k.grid.step();
    let kv = &k.values;
    let mut l = Array2::<f64>::zeros((n, n));
    l[[0, 0]] = -kv[[0, 0]];
    for i in 1..n {
        let diag = 1.0 + row_weight(i, i, h) * kv[[i, i]];
        for j in 0..=i {
            let mut acc = 0.0;
            for s in j..i {
                acc += row_weight(i, s, h) * kv[[i, s]] * row_weight(s, j, h) * l[[s, j]];
            }
            l[[i, j]] = (-kv[[i, j]] - acc / row_weight(i, j, h)) / diag;
        }
    }
    KernelMatrix::lower(&k.grid, l, KernelKind::Inverse)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FunctionDeviation {
    pub function: String,
    pub deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityReport {
    pub worst: f64,
    pub rows: Vec<FunctionDeviation>,
}

impl IdentityReport {
    fn from_rows(rows: Vec<FunctionDeviation>) -> Self {
        let worst = rows.iter().fold(0.0f64, |m, r| m.max(r.deviation));
        Self { worst, rows }
    }
}

/// Checks `h = Q^{-1} Q h` on the corpus, optionally through the mollifier
/// `exp(-eps k^2)` (`eps = 0` disables it). Deviations are relative sup norms.
pub fn delta_identity_check(
    eig: &EigenTable,
    measure: &SpectralMeasure,
    eps: f64,
    corpus: &[CorpusFunction],
) -> Result<IdentityReport> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::InvalidRegularization(eps));
    }
    let grid = eig.space();
    let damp: Vec<f64> = measure.grid().nodes().iter().map(|k| (-eps * k * k).exp()).collect();
    let mut rows = Vec::with_capacity(corpus.len());
    for f in corpus {
        let v = f.sample(grid);
        let t = forward(&v, eig)?;
        let t: TransformVector = t.multiplied(&damp, "mollified")?;
        let back = inverse(&t, eig, measure)?;
        rows.push(FunctionDeviation { function: f.label(), deviation: crate::transforms::rel_sup(&back, &v) });
    }
    Ok(IdentityReport::from_rows(rows))
}

/// Sup deviation of `(I+L)(I+K) f` and `(I+K)(I+L) f` from `f`, relative to `max |f|`.
pub fn inversion_kernel_check(k: &KernelMatrix, l: &KernelMatrix, corpus: &[CorpusFunction]) -> Result<IdentityReport> {
    if !k.grid.same_as(&l.grid) {
        return Err(Error::GridMismatch("kernels use different space grids".into()));
    }
    let mut rows = Vec::with_capacity(corpus.len());
    for f in corpus {
        let v = f.sample(&k.grid);
        let a = l.apply(&k.apply(&v)?)?;
        let b = k.apply(&l.apply(&v)?)?;
        let dev = crate::transforms::rel_sup(&a, &v).max(crate::transforms::rel_sup(&b, &v));
        rows.push(FunctionDeviation { function: f.label(), deviation: dev });
    }
    Ok(IdentityReport::from_rows(rows))
}

/// `max |a(x,t) - b(x,t)|` over the lower triangle with `x - t > band`.
pub fn kernel_cross_deviation(a: &KernelMatrix, b: &KernelMatrix, band: f64) -> Result<f64> {
    if !a.grid.same_as(&b.grid) {
        return Err(Error::GridMismatch("kernels use different space grids".into()));
    }
    let x = a.grid.nodes();
    let mut err = 0.0f64;
    for i in 0..x.len() {
        for j in 0..=i {
            if x[i] - x[j] > band {
                err = err.max((a.get(i, j) - b.get(i, j)).abs());
            }
        }
    }
    Ok(err)
}

/// `sup_x |(I + K) cos(k .) - psi_2(., k)|` for each probe `k`, with `psi_2` from
/// the ODE solver for `q2`.
pub fn transmutation_identity_check(k: &KernelMatrix, q2: &PotentialSpec, probe_k: &[f64]) -> Result<Vec<(f64, f64)>> {
    probe_k
        .iter()
        .map(|&kk| {
            let phi = k.grid.sample(|x| (kk * x).cos());
            let moved = k.apply(&phi)?;
            let psi = crate::eigen::eigen_column(q2, &k.grid, kk)?;
            let dev = moved.iter().zip(&psi).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            Ok((kk, dev))
        })
        .collect()
}
