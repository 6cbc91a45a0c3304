//! Spectral transforms `F(k) = int f psi(., k) dx`, their inverses against a
//! spectral measure, and Parseval checks.

use ndarray::Array2;
use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;

use crate::eigen::EigenTable;
use crate::error::{Error, Result};
use crate::grids::{quadrature, SpectralGrid};
use crate::measure::SpectralMeasure;

/// `|f(x_max)|` must not exceed this fraction of `max |f|` for a forward transform.
pub const SUPPORT_TOL: f64 = 1e-8;

/// Denominator floor used in relative errors.
pub const REL_FLOOR: f64 = 1e-12;

/// Values of a transform on a spectral grid.
#[derive(Clone, Debug, PartialEq)]
pub struct TransformVector {
    grid: SpectralGrid,
    values: Vec<f64>,
    source: String,
}

impl TransformVector {
    pub fn new(grid: &SpectralGrid, values: Vec<f64>, source: impl Into<String>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch { expected: grid.len(), got: values.len() });
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Evaluation(format!("transform value at node {j} is not finite")));
        }
        Ok(Self { grid: grid.clone(), values, source: source.into() })
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Which transform produced the values, e.g. `forward:P`.
    pub fn source(&self) -> &str {
        &self.source
    }

    /// Pointwise product with `m` (a spectral multiplier).
    pub fn multiplied(&self, m: &[f64], source: impl Into<String>) -> Result<Self> {
        if m.len() != self.values.len() {
            return Err(Error::LengthMismatch { expected: self.values.len(), got: m.len() });
        }
        let values = self.values.iter().zip(m).map(|(a, b)| a * b).collect();
        Self::new(&self.grid, values, source)
    }

    /// CSV with header `k,F_real`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["k", "F_real"])?;
        for (k, v) in self.grid.nodes().iter().zip(&self.values) {
            w.write_record([k.to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `F(k_j) = int f(x) psi(x, k_j) dx` over the truncated grid.
pub fn forward(f: &[f64], eig: &EigenTable) -> Result<TransformVector> {
    let grid = eig.space();
    if f.len() != grid.len() {
        return Err(Error::LengthMismatch { expected: grid.len(), got: f.len() });
    }
    check_support(f)?;
    eig.require_valid()?;
    let w = grid.weights();
    let wf: Vec<f64> = f.iter().zip(w).map(|(a, b)| a * b).collect();
    let psi = eig.psi();
    let values: Vec<f64> = (0..eig.spectral().len())
        .into_par_iter()
        .map(|j| psi.column(j).iter().zip(&wf).map(|(p, v)| p * v).sum())
        .collect();
    TransformVector::new(eig.spectral(), values, format!("forward:{}", eig.operator()))
}

/// `f(x_i) = int F(k) psi(x_i, k) dGamma(k)`.
pub fn inverse(transform: &TransformVector, eig: &EigenTable, measure: &SpectralMeasure) -> Result<Vec<f64>> {
    synthesize(transform, eig, measure)
}

/// Synthesis with eigenfunctions of one operator against the measure of the other.
pub fn cross_inverse(
    transform: &TransformVector,
    eig_other: &EigenTable,
    measure: &SpectralMeasure,
) -> Result<Vec<f64>> {
    synthesize(transform, eig_other, measure)
}

fn synthesize(transform: &TransformVector, eig: &EigenTable, measure: &SpectralMeasure) -> Result<Vec<f64>> {
    if !transform.grid().same_as(measure.grid()) || !eig.spectral().same_as(measure.grid()) {
        return Err(Error::GridMismatch("transform, eigen table and measure must share a spectral grid".into()));
    }
    eig.require_valid()?;
    let wf: Vec<f64> = transform.values().iter().zip(measure.weights()).map(|(a, b)| a * b).collect();
    let psi = eig.psi();
    Ok((0..eig.space().len()).into_par_iter().map(|i| psi.row(i).iter().zip(&wf).map(|(p, v)| p * v).sum()).collect())
}

/// `(n_k, n_x)` matrix of the forward transform, without the support check.
pub fn forward_matrix(eig: &EigenTable) -> Array2<f64> {
    let w = eig.space().weights();
    let mut m = eig.psi().t().to_owned();
    for mut row in m.rows_mut() {
        for (v, wi) in row.iter_mut().zip(w) {
            *v *= wi;
        }
    }
    m
}

/// `(n_x, n_k)` matrix of synthesis against `measure`.
pub fn inverse_matrix(eig: &EigenTable, measure: &SpectralMeasure) -> Result<Array2<f64>> {
    if !eig.spectral().same_as(measure.grid()) {
        return Err(Error::GridMismatch("eigen table and measure use different spectral grids".into()));
    }
    eig.require_valid()?;
    let w = measure.weights();
    let mut m = eig.psi().to_owned();
    for mut row in m.rows_mut() {
        for (v, wj) in row.iter_mut().zip(&w) {
            *v *= wj;
        }
    }
    Ok(m)
}

fn check_support(f: &[f64]) -> Result<()> {
    let sup = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let last = f.last().map_or(0.0, |v| v.abs());
    let tol = SUPPORT_TOL * sup;
    if last > tol {
        return Err(Error::SupportViolation { value: last, tol });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParsevalReport {
    pub lhs: f64,
    pub rhs: f64,
    pub rel_err: f64,
    pub k_max: f64,
    pub n_x: usize,
}

/// Compares `int f g dx` with `int F G dGamma`.
pub fn parseval_check(f: &[f64], g: &[f64], eig: &EigenTable, measure: &SpectralMeasure) -> Result<ParsevalReport> {
    let lhs: f64 = {
        let fg: Vec<f64> = f.iter().zip(g).map(|(a, b)| a * b).collect();
        quadrature(&fg, eig.space().weights())?
    };
    let (ff, gg) = (forward(f, eig)?, forward(g, eig)?);
    if !ff.grid().same_as(measure.grid()) {
        return Err(Error::GridMismatch("measure and eigen table use different spectral grids".into()));
    }
    let prod: Vec<f64> = ff.values().iter().zip(gg.values()).map(|(a, b)| a * b).collect();
    let rhs = quadrature(&prod, &measure.weights())?;
    Ok(ParsevalReport {
        lhs,
        rhs,
        rel_err: (lhs - rhs).abs() / lhs.abs().max(REL_FLOOR),
        k_max: measure.grid().k_max(),
        n_x: eig.space().len(),
    })
}

/// Relative sup-norm distance `max|a - b| / max(max|b|, floor)`.
pub fn rel_sup(a: &[f64], b: &[f64]) -> f64 {
    let num = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    let den = b.iter().fold(0.0f64, |m, y| m.max(y.abs()));
    num / den.max(REL_FLOOR)
}

/// Discrete `L^2` norm with the given weights.
pub fn l2_norm(f: &[f64], weights: &[f64]) -> f64 {
    f.iter().zip(weights).map(|(v, w)| v * v * w).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{self, CorpusFunction};
    use crate::eigen::{apply_operator, eigen_reference, eigen_solve, reliable_range};
    use crate::grids::SpaceGrid;
    use crate::potential::PotentialSpec;
    use crate::quad::GaussLegendre;
    use proptest::prelude::*;

    fn grids(k_max: f64, n_k: usize) -> (SpaceGrid, SpectralGrid) {
        (SpaceGrid::new(8.0, 513).unwrap(), SpectralGrid::new(k_max, n_k).unwrap())
    }

    /// Dense Gauss-Legendre oracle for `int f cos(kx)`.
    fn dense_cos_transform(f: &CorpusFunction, k: f64) -> f64 {
        let gl = GaussLegendre::new(20);
        let (a, b) = f.support();
        let cells = 400;
        let h = (b - a) / cells as f64;
        (0..cells)
            .map(|c| {
                let lo = a + c as f64 * h;
                gl.integrate(lo, lo + h, |x| f.eval(x) * (k * x).cos())
            })
            .sum()
    }

    #[test]
    fn forward_of_smoothed_indicator() {
        let gx = SpaceGrid::new(8.0, 4097).unwrap();
        let gk = SpectralGrid::new(20.0, 81).unwrap();
        let eig = eigen_reference(&gx, &gk);
        let f = CorpusFunction::SmoothedIndicator { start: 0.0, end: 1.0, ramp: 0.02 };
        let tv = forward(&f.sample(&gx), &eig).unwrap();
        for (j, &k) in gk.nodes().iter().enumerate() {
            let sinc = if k == 0.0 { 1.0 } else { k.sin() / k };
            let dense = dense_cos_transform(&f, k);
            assert!((tv.values()[j] - sinc).abs() < 0.02, "k={k}");
            assert!((tv.values()[j] - dense).abs() < 1e-3, "k={k}: {} vs {dense}", tv.values()[j]);
        }
        let zero = forward(&vec![0.0; gx.len()], &eig).unwrap();
        assert!(zero.values().iter().all(|v| *v == 0.0));
        let integral: f64 = quadrature(&f.sample(&gx), gx.weights()).unwrap();
        assert!((tv.values()[0] - integral).abs() < 1e-14);
    }

    #[test]
    fn forward_rejects_truncated_function() {
        let (gx, gk) = grids(5.0, 11);
        let eig = eigen_reference(&gx, &gk);
        assert!(matches!(forward(&vec![1.0; gx.len()], &eig), Err(Error::SupportViolation { .. })));
    }

    #[test]
    fn round_trip_reference_and_shifted() {
        let (gx, gk) = grids(100.0, 512);
        let eig = eigen_reference(&gx, &gk);
        let m = SpectralMeasure::cosine(&gk);
        for f in corpus::standard(8.0).iter().filter(|f| f.support().1 - f.support().0 >= 0.4) {
            let v = f.sample(&gx);
            let back = inverse(&forward(&v, &eig).unwrap(), &eig, &m).unwrap();
            assert!(rel_sup(&back, &v) < 1e-3, "{}: {}", f.label(), rel_sup(&back, &v));
        }
        // the shifted measure needs a finer k step to resolve the threshold k = 1
        let gk = SpectralGrid::new(100.0, 8193).unwrap();
        let q = PotentialSpec::constant(1.0);
        let eq = eigen_solve(&q, &gx, &gk).unwrap();
        let mq = SpectralMeasure::shifted_cosine(&gk, 1.0).unwrap();
        for f in corpus::standard(8.0) {
            let v = f.sample(&gx);
            let back = inverse(&forward(&v, &eq).unwrap(), &eq, &mq).unwrap();
            assert!(rel_sup(&back, &v) < 1e-2, "{}: {}", f.label(), rel_sup(&back, &v));
        }
        let zero = TransformVector::new(&gk, vec![0.0; gk.len()], "zero").unwrap();
        let eig = eigen_reference(&gx, &gk);
        let m = SpectralMeasure::cosine(&gk);
        assert!(inverse(&zero, &eig, &m).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn cross_inverse_degenerate_cases() {
        let (gx, gk) = grids(40.0, 161);
        let eig = eigen_reference(&gx, &gk);
        let m = SpectralMeasure::cosine(&gk);
        let v = corpus::standard(8.0)[2].sample(&gx);
        let tv = forward(&v, &eig).unwrap();
        assert_eq!(cross_inverse(&tv, &eig, &m).unwrap(), inverse(&tv, &eig, &m).unwrap());
        let doubled = m.scaled(2.0).unwrap();
        let a = cross_inverse(&tv, &eig, &doubled).unwrap();
        let b = inverse(&tv, &eig, &m).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - 2.0 * y).abs() <= 1e-12 * (1.0 + y.abs()));
        }
        let other = SpectralGrid::new(41.0, 161).unwrap();
        assert!(matches!(inverse(&tv, &eig, &SpectralMeasure::cosine(&other)), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn parseval_examples() {
        let (gx, gk) = grids(200.0, 1025);
        let eig = eigen_reference(&gx, &gk);
        let m = SpectralMeasure::cosine(&gk);
        let f = CorpusFunction::SmoothedIndicator { start: 0.0, end: 1.0, ramp: 0.05 }.sample(&gx);
        let r = parseval_check(&f, &f, &eig, &m).unwrap();
        assert!((r.lhs - 1.0).abs() < 0.05);
        assert!(r.rel_err <= 1e-2, "{r:?}");

        let zero = vec![0.0; gx.len()];
        let r = parseval_check(&zero, &zero, &eig, &m).unwrap();
        assert_eq!((r.lhs, r.rhs), (0.0, 0.0));

        let a = CorpusFunction::bump(1.0, 0.5, 4).sample(&gx);
        let b = CorpusFunction::bump(3.0, 0.5, 4).sample(&gx);
        let r = parseval_check(&a, &b, &eig, &m).unwrap();
        let na = l2_norm(&a, gx.weights());
        let nb = l2_norm(&b, gx.weights());
        assert_eq!(r.lhs, 0.0);
        assert!(r.rhs.abs() <= 1e-2 * na * nb);
    }

    #[test]
    fn eigen_shift_identity() {
        let (gx, gk) = grids(20.0, 81);
        let q = PotentialSpec::constant(1.0);
        let eig = eigen_solve(&q, &gx, &gk).unwrap();
        let f = CorpusFunction::bump(2.0, 1.0, 6).sample(&gx);
        let qf = apply_operator(&q, &gx, &f).unwrap();
        assert!(reliable_range(gx.len()).start > 0);
        let lhs = forward(&qf, &eig).unwrap();
        let rhs = forward(&f, &eig).unwrap();
        for (j, &k) in gk.nodes().iter().enumerate() {
            let want = k * k * rhs.values()[j];
            assert!((lhs.values()[j] - want).abs() < 5e-3 * (1.0 + k * k), "k={k}");
        }
    }

    proptest! {
        #[test]
        fn forward_and_inverse_are_linear(a in -2.0..2.0f64, b in -2.0..2.0f64, i in 0usize..10, j in 0usize..10) {
            let (gx, gk) = grids(30.0, 61);
            let eig = eigen_reference(&gx, &gk);
            let m = SpectralMeasure::cosine(&gk);
            let c = corpus::standard(8.0);
            let (u, v) = (c[i].sample(&gx), c[j].sample(&gx));
            let w: Vec<f64> = u.iter().zip(&v).map(|(x, y)| a * x + b * y).collect();
            let (fu, fv, fw) = (forward(&u, &eig).unwrap(), forward(&v, &eig).unwrap(), forward(&w, &eig).unwrap());
            for t in 0..gk.len() {
                let want = a * fu.values()[t] + b * fv.values()[t];
                prop_assert!((fw.values()[t] - want).abs() <= 1e-12 * (1.0 + want.abs()));
            }
            let (iu, iw) = (inverse(&fu, &eig, &m).unwrap(), inverse(&fw, &eig, &m).unwrap());
            let iv = inverse(&fv, &eig, &m).unwrap();
            for t in 0..gx.len() {
                let want = a * iu[t] + b * iv[t];
                prop_assert!((iw[t] - want).abs() <= 1e-11 * (1.0 + want.abs()));
            }
        }
    }
}
