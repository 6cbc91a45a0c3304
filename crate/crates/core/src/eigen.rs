//! Generalized eigenfunctions `-psi'' + q psi = k^2 psi`, `psi(0) = 1`, `psi'(0) = 0`.

use ndarray::Array2;
use rayon::prelude::*;
use std::io::Write;

use crate::error::{Error, Result};
use crate::grids::{SpaceGrid, SpectralGrid};
use crate::potential::PotentialSpec;

/// Magnitude beyond which an integrated column is declared overflowed.
pub const OVERFLOW_LIMIT: f64 = 1e150;

/// Largest `k * h` allowed in one RK4 substep; coarser grid intervals are
/// split into equal substeps, fixed per column.
pub const MAX_PHASE_STEP: f64 = 0.05;

/// Number of nodes at each end where [`apply_operator`] uses one-sided stencils.
pub const BOUNDARY_LAYERS: usize = 2;

/// `psi[i][j] = psi(x_i, k_j)` together with `psi_x`.
#[derive(Clone, Debug)]
pub struct EigenTable {
    operator: String,
    space: SpaceGrid,
    spectral: SpectralGrid,
    psi: Array2<f64>,
    psi_x: Array2<f64>,
    valid: Vec<bool>,
}

impl EigenTable {
    pub fn operator(&self) -> &str {
        &self.operator
    }

    pub fn space(&self) -> &SpaceGrid {
        &self.space
    }

    pub fn spectral(&self) -> &SpectralGrid {
        &self.spectral
    }

    /// `(n_x, n_k)` matrix of eigenfunction values.
    pub fn psi(&self) -> &Array2<f64> {
        &self.psi
    }

    pub fn psi_x(&self) -> &Array2<f64> {
        &self.psi_x
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.psi[[i, j]]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.psi.column(j).to_vec()
    }

    pub fn is_valid(&self, j: usize) -> bool {
        self.valid[j]
    }

    /// Columns whose integration overflowed; their values are NaN past the overflow point.
    pub fn invalid_columns(&self) -> Vec<usize> {
        (0..self.valid.len()).filter(|&j| !self.valid[j]).collect()
    }

    /// Fails with the first invalid column, if any.
    pub fn require_valid(&self) -> Result<()> {
        match self.invalid_columns().first() {
            Some(&column) => Err(Error::InvalidColumn { column }),
            None => Ok(()),
        }
    }

    /// CSV with header `x,k,psi,psi_x`, one row per grid pair.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "k", "psi", "psi_x"])?;
        for (i, x) in self.space.nodes().iter().enumerate() {
            for (j, k) in self.spectral.nodes().iter().enumerate() {
                w.write_record([
                    x.to_string(),
                    k.to_string(),
                    self.psi[[i, j]].to_string(),
                    self.psi_x[[i, j]].to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// `phi(x, k) = cos(kx)` in closed form.
pub fn eigen_reference(grid_x: &SpaceGrid, grid_k: &SpectralGrid) -> EigenTable {
    let (n_x, n_k) = (grid_x.len(), grid_k.len());
    let mut psi = Array2::zeros((n_x, n_k));
    let mut psi_x = Array2::zeros((n_x, n_k));
    for (i, &x) in grid_x.nodes().iter().enumerate() {
        for (j, &k) in grid_k.nodes().iter().enumerate() {
            let (s, c) = (k * x).sin_cos();
            psi[[i, j]] = c;
            psi_x[[i, j]] = -k * s;
        }
    }
    EigenTable {
        operator: "P".into(),
        space: grid_x.clone(),
        spectral: grid_k.clone(),
        psi,
        psi_x,
        valid: vec![true; n_k],
    }
}

/// Integrates each column with classical RK4 on the space grid, substepping
/// oscillatory columns (see [`MAX_PHASE_STEP`]).
pub fn eigen_solve(q: &PotentialSpec, grid_x: &SpaceGrid, grid_k: &SpectralGrid) -> Result<EigenTable> {
    eigen_solve_with_boundary(q, grid_x, grid_k, 0.0)
}

/// Boundary condition `h psi(0) - psi'(0) = 0`; only `h = 0` is implemented.
pub fn eigen_solve_with_boundary(
    q: &PotentialSpec,
    grid_x: &SpaceGrid,
    grid_k: &SpectralGrid,
    h: f64,
) -> Result<EigenTable> {
    if h != 0.0 {
        return Err(Error::Unsupported(format!("boundary parameter h = {h}; only h = 0 is implemented")));
    }
    q.check_covers(grid_x)?;
    let n_x = grid_x.len();
    let step = grid_x.step();
    let columns: Vec<(Vec<f64>, Vec<f64>, bool)> =
        grid_k.nodes().par_iter().map(|&k| integrate_column(q, n_x, step, k)).collect();

    let n_k = grid_k.len();
    let mut psi = Array2::zeros((n_x, n_k));
    let mut psi_x = Array2::zeros((n_x, n_k));
    let mut valid = Vec::with_capacity(n_k);
    for (j, (v, d, ok)) in columns.into_iter().enumerate() {
        for i in 0..n_x {
            psi[[i, j]] = v[i];
            psi_x[[i, j]] = d[i];
        }
        valid.push(ok);
    }
    Ok(EigenTable {
        operator: format!("Q[{}]", q.label()),
        space: grid_x.clone(),
        spectral: grid_k.clone(),
        psi,
        psi_x,
        valid,
    })
}

/// `psi(., k)` on `grid_x` for a single, not necessarily tabulated, `k`.
pub fn eigen_column(q: &PotentialSpec, grid_x: &SpaceGrid, k: f64) -> Result<Vec<f64>> {
    q.check_covers(grid_x)?;
    let (v, _, ok) = integrate_column(q, grid_x.len(), grid_x.step(), k);
    if ok {
        Ok(v)
    } else {
        Err(Error::InvalidColumn { column: 0 })
    }
}

/// As [`eigen_column`] with a fixed number of RK4 substeps per grid interval
/// instead of the phase-based rule; `substeps = 1` steps exactly on the grid.
pub fn eigen_column_fixed(q: &PotentialSpec, grid_x: &SpaceGrid, k: f64, substeps: usize) -> Result<Vec<f64>> {
    q.check_covers(grid_x)?;
    let (v, _, ok) = integrate_column_with(q, grid_x.len(), grid_x.step(), k, substeps.max(1));
    if ok {
        Ok(v)
    } else {
        Err(Error::InvalidColumn { column: 0 })
    }
}

/// Substeps per grid interval so that `k * h_sub <= MAX_PHASE_STEP`.
fn substeps(k: f64, h: f64) -> usize {
    ((k * h / MAX_PHASE_STEP).ceil() as usize).max(1)
}

fn integrate_column(q: &PotentialSpec, n: usize, h: f64, k: f64) -> (Vec<f64>, Vec<f64>, bool) {
    integrate_column_with(q, n, h, k, substeps(k, h))
}

fn integrate_column_with(q: &PotentialSpec, n: usize, h: f64, k: f64, m: usize) -> (Vec<f64>, Vec<f64>, bool) {
    let lambda = k * k;
    let hs = h / m as f64;
    let mut v = vec![f64::NAN; n];
    let mut d = vec![f64::NAN; n];
    let (mut y, mut yp) = (1.0, 0.0);
    v[0] = y;
    d[0] = yp;
    let f = |qv: f64, y: f64| (qv - lambda) * y;
    for i in 0..n - 1 {
        for s in 0..m {
            let x0 = i as f64 * h + s as f64 * hs;
            let (q0, qm, q1) = (q.eval(x0), q.eval(x0 + 0.5 * hs), q.eval(x0 + hs));
            let k1y = yp;
            let k1p = f(q0, y);
            let k2y = yp + 0.5 * hs * k1p;
            let k2p = f(qm, y + 0.5 * hs * k1y);
            let k3y = yp + 0.5 * hs * k2p;
            let k3p = f(qm, y + 0.5 * hs * k2y);
            let k4y = yp + hs * k3p;
            let k4p = f(q1, y + hs * k3y);
            y += hs / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
            yp += hs / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
        }
        if !(y.is_finite() && yp.is_finite()) || y.abs() > OVERFLOW_LIMIT || yp.abs() > OVERFLOW_LIMIT {
            return (v, d, false);
        }
        v[i + 1] = y;
        d[i + 1] = yp;
    }
    (v, d, true)
}

/// `psi(x, k)` for `q = c` in closed form (cos, 1, or cosh branch).
pub fn constant_family_psi(c: f64, k: f64, x: f64) -> f64 {
    let d = k * k - c;
    if d > 0.0 {
        (d.sqrt() * x).cos()
    } else if d < 0.0 {
        ((-d).sqrt() * x).cosh()
    } else {
        1.0
    }
}

/// `(-f'' + q f)` by second-order differences. The two outermost nodes at each
/// end use one-sided stencils and are less accurate.
pub fn apply_operator(q: &PotentialSpec, grid: &SpaceGrid, f: &[f64]) -> Result<Vec<f64>> {
    let n = grid.len();
    if f.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: f.len() });
    }
    if n < 5 {
        return Err(Error::GridTooSmall { min: 5, got: n });
    }
    let h2 = grid.step() * grid.step();
    let mut out = vec![0.0; n];
    for i in 1..n - 1 {
        out[i] = -(f[i - 1] - 2.0 * f[i] + f[i + 1]) / h2;
    }
    out[0] = -(2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / h2;
    out[n - 1] = -(2.0 * f[n - 1] - 5.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4]) / h2;
    for (o, (&v, &x)) in out.iter_mut().zip(f.iter().zip(grid.nodes())) {
        *o += q.eval(x) * v;
    }
    Ok(out)
}

/// Index range where [`apply_operator`] is second-order accurate.
pub fn reliable_range(n: usize) -> std::ops::Range<usize> {
    BOUNDARY_LAYERS.min(n)..n.saturating_sub(BOUNDARY_LAYERS)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn reference_examples() {
        let gx = SpaceGrid::new(2.0 * PI, 201).unwrap();
        let gk = SpectralGrid::new(4.0, 5).unwrap();
        let e = eigen_reference(&gx, &gk);
        assert!((0..5).all(|j| e.value(0, j) == 1.0 && e.psi_x()[[0, j]] == 0.0));
        assert!((0..201).all(|i| e.value(i, 0) == 1.0));
        let i = gx.nearest_index(PI);
        assert_abs_diff_eq!(e.value(i, 1), -1.0, epsilon = 1e-15);
    }

    #[test]
    fn zero_potential_matches_cosine() {
        let gx = SpaceGrid::new(8.0, 512).unwrap();
        let gk = SpectralGrid::new(5.0, 11).unwrap();
        let e = eigen_solve(&PotentialSpec::Zero, &gx, &gk).unwrap();
        let r = eigen_reference(&gx, &gk);
        let err = (&e.psi - &r.psi).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(err < 5e-5, "{err}");
        for j in 0..11 {
            assert_eq!(e.value(0, j), 1.0);
            assert_eq!(e.psi_x()[[0, j]], 0.0);
        }
    }

    #[test]
    fn constant_potential_closed_form_and_threshold() {
        let gx = SpaceGrid::new(8.0, 512).unwrap();
        let gk = SpectralGrid::new(5.0, 6).unwrap();
        let e = eigen_solve(&PotentialSpec::constant(1.0), &gx, &gk).unwrap();
        for j in 0..6 {
            let k = gk.nodes()[j];
            for (i, &x) in gx.nodes().iter().enumerate() {
                let exact = constant_family_psi(1.0, k, x);
                assert!((e.value(i, j) - exact).abs() <= 5e-5 * exact.abs().max(1.0));
            }
        }
        // k = 1 is the threshold lambda = c, psi = 1
        assert!(e.column(1).iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn fourth_order_convergence() {
        let gk = SpectralGrid::new(5.0, 11).unwrap();
        let err = |n| {
            let gx = SpaceGrid::new(8.0, n).unwrap();
            let e = eigen_solve(&PotentialSpec::constant(1.0), &gx, &gk).unwrap();
            let mut m = 0.0f64;
            for (j, &k) in gk.nodes().iter().enumerate() {
                for (i, &x) in gx.nodes().iter().enumerate() {
                    m = m.max((e.value(i, j) - constant_family_psi(1.0, k, x)).abs());
                }
            }
            m
        };
        let (e1, e2) = (err(129), err(257));
        assert!(e1 / e2 > 12.0, "{e1} {e2}");
    }

    #[test]
    fn wronskian_for_zero_potential() {
        let gx = SpaceGrid::new(8.0, 1024).unwrap();
        let gk = SpectralGrid::new(5.0, 11).unwrap();
        let e = eigen_solve(&PotentialSpec::Zero, &gx, &gk).unwrap();
        for j in 1..11 {
            let k = gk.nodes()[j];
            for i in 0..gx.len() {
                let w = e.value(i, j).powi(2) + (e.psi_x()[[i, j]] / k).powi(2);
                assert_abs_diff_eq!(w, 1.0, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn overflow_marks_column_invalid() {
        let gx = SpaceGrid::new(8.0, 64).unwrap();
        let gk = SpectralGrid::new(1.0, 2).unwrap();
        let e = eigen_solve(&PotentialSpec::constant(1e4), &gx, &gk).unwrap();
        assert_eq!(e.invalid_columns(), vec![0, 1]);
        assert!(matches!(e.require_valid(), Err(Error::InvalidColumn { column: 0 })));
    }

    #[test]
    fn rejects_robin_boundary() {
        let gx = SpaceGrid::new(1.0, 16).unwrap();
        let gk = SpectralGrid::new(1.0, 2).unwrap();
        assert!(matches!(eigen_solve_with_boundary(&PotentialSpec::Zero, &gx, &gk, 0.5), Err(Error::Unsupported(_))));
    }

    #[test]
    fn apply_operator_examples() {
        let g = SpaceGrid::new(4.0, 401).unwrap();
        let k = 3.0;
        let f = g.sample(|x| (k * x).cos());
        let out = apply_operator(&PotentialSpec::Zero, &g, &f).unwrap();
        for i in reliable_range(g.len()) {
            assert!((out[i] - k * k * f[i]).abs() < 1e-2);
        }
        let ones = vec![1.0; g.len()];
        let out = apply_operator(&PotentialSpec::constant(1.0), &g, &ones).unwrap();
        assert!(out.iter().all(|v| (v - 1.0).abs() < 1e-9));
        let sq = g.sample(|x| x * x);
        let out = apply_operator(&PotentialSpec::Zero, &g, &sq).unwrap();
        assert!(out.iter().all(|v| (v + 2.0).abs() < 1e-8));
    }

    #[test]
    fn eigen_relation_residual_is_second_order() {
        let gk = SpectralGrid::new(4.0, 5).unwrap();
        let q = PotentialSpec::constant(0.5);
        let resid = |n| {
            let gx = SpaceGrid::new(4.0, n).unwrap();
            let e = eigen_solve(&q, &gx, &gk).unwrap();
            let mut m = 0.0f64;
            for (j, &k) in gk.nodes().iter().enumerate() {
                let col = e.column(j);
                let out = apply_operator(&q, &gx, &col).unwrap();
                for i in reliable_range(gx.len()) {
                    m = m.max((out[i] - k * k * col[i]).abs());
                }
            }
            m
        };
        assert!(resid(101) / resid(201) >= 3.0);
    }

    proptest! {
        #[test]
        fn apply_operator_is_linear(a in -3.0..3.0f64, b in -3.0..3.0f64, s in 0.1..4.0f64) {
            let g = SpaceGrid::new(2.0, 33).unwrap();
            let q = PotentialSpec::constant(1.5);
            let f = g.sample(|x| (s * x).sin());
            let h = g.sample(|x| (x - s).powi(2));
            let comb: Vec<f64> = f.iter().zip(&h).map(|(u, v)| a * u + b * v).collect();
            let lhs = apply_operator(&q, &g, &comb).unwrap();
            let (of, oh) = (apply_operator(&q, &g, &f).unwrap(), apply_operator(&q, &g, &h).unwrap());
            for i in 0..g.len() {
                let rhs = a * of[i] + b * oh[i];
                prop_assert!((lhs[i] - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()) * 1e3);
            }
        }
    }
}
