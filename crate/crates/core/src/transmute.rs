//! Transmutation operators as kernel applicators and as dense discrete operators
//! composed from spectral transforms.

use ndarray::{Array1, Array2};
use serde::Serialize;
use std::io::{Read, Write};

use crate::corpus::CorpusFunction;
use crate::eigen::{apply_operator, eigen_reference, eigen_solve, reliable_range, EigenTable};
use crate::error::{Error, Result};
use crate::grids::{SpaceGrid, SpectralGrid};
use crate::kernels::{invert_kernel, row_weight, KernelKind, KernelMatrix};
use crate::measure::{Multiplier, SpectralMeasure};
use crate::potential::PotentialSpec;
use crate::transforms::{
    cross_inverse, forward, forward_matrix, inverse, inverse_matrix, l2_norm, rel_sup, TransformVector, REL_FLOOR,
};

/// Magic bytes of the binary operator format.
pub const BINARY_MAGIC: &[u8; 4] = b"TMUT";

/// Two operators `Q_1 = -D^2 + q_1`, `Q_2 = -D^2 + q_2` on shared grids.
#[derive(Clone, Debug)]
pub struct OperatorPair {
    pub q1: PotentialSpec,
    pub q2: PotentialSpec,
    pub eig1: EigenTable,
    pub eig2: EigenTable,
    pub gamma1: SpectralMeasure,
    pub gamma2: SpectralMeasure,
}

impl OperatorPair {
    /// Eigen tables from the closed form (zero potential) or the ODE solver, and
    /// analytic measures for closed-form families.
    pub fn new(q1: PotentialSpec, q2: PotentialSpec, space: &SpaceGrid, spectral: &SpectralGrid) -> Result<Self> {
        let eig1 = table_for(&q1, space, spectral)?;
        let eig2 = table_for(&q2, space, spectral)?;
        let gamma1 = SpectralMeasure::for_potential(&q1, spectral)?;
        let gamma2 = SpectralMeasure::for_potential(&q2, spectral)?;
        Self::with_parts(q1, q2, eig1, eig2, gamma1, gamma2)
    }

    pub fn with_parts(
        q1: PotentialSpec,
        q2: PotentialSpec,
        eig1: EigenTable,
        eig2: EigenTable,
        gamma1: SpectralMeasure,
        gamma2: SpectralMeasure,
    ) -> Result<Self> {
        if !eig1.space().same_as(eig2.space()) {
            return Err(Error::GridMismatch("eigen tables use different space grids".into()));
        }
        for g in [eig2.spectral(), gamma1.grid(), gamma2.grid()] {
            if !eig1.spectral().same_as(g) {
                return Err(Error::GridMismatch("pair members use different spectral grids".into()));
            }
        }
        eig1.require_valid()?;
        eig2.require_valid()?;
        Ok(Self { q1, q2, eig1, eig2, gamma1, gamma2 })
    }

    pub fn space(&self) -> &SpaceGrid {
        self.eig1.space()
    }

    pub fn spectral(&self) -> &SpectralGrid {
        self.eig1.spectral()
    }

    pub fn is_identity_pair(&self) -> bool {
        self.q1 == self.q2 || (self.q1.is_zero() && self.q2.is_zero())
    }
}

fn table_for(q: &PotentialSpec, space: &SpaceGrid, spectral: &SpectralGrid) -> Result<EigenTable> {
    if q.is_zero() {
        Ok(eigen_reference(space, spectral))
    } else {
        eigen_solve(q, space, spectral)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Recipe {
    Identity,
    V,
    B,
    BStar,
    Bcal,
    BcalStar,
    BcalSqrt,
    VStar,
    BcalSqrtStar,
}

impl Recipe {
    /// Identifier stored in the binary header.
    pub fn id(self) -> u32 {
        match self {
            Self::Identity => 0,
            Self::V => 1,
            Self::B => 2,
            Self::BStar => 3,
            Self::Bcal => 4,
            Self::BcalStar => 5,
            Self::BcalSqrt => 6,
            Self::VStar => 7,
            Self::BcalSqrtStar => 8,
        }
    }

    pub fn from_id(id: u32) -> Option<Self> {
        [
            Self::Identity,
            Self::V,
            Self::B,
            Self::BStar,
            Self::Bcal,
            Self::BcalStar,
            Self::BcalSqrt,
            Self::VStar,
            Self::BcalSqrtStar,
        ]
        .into_iter()
        .find(|r| r.id() == id)
    }

    pub fn adjoint(self) -> Self {
        match self {
            Self::Identity => Self::Identity,
            Self::V => Self::VStar,
            Self::VStar => Self::V,
            Self::B => Self::BStar,
            Self::BStar => Self::B,
            Self::Bcal => Self::BcalStar,
            Self::BcalStar => Self::Bcal,
            Self::BcalSqrt => Self::BcalSqrtStar,
            Self::BcalSqrtStar => Self::BcalSqrt,
        }
    }
}

/// Dense `n_x x n_x` action on sampled functions.
#[derive(Clone, Debug)]
pub struct DiscreteOperator {
    grid: SpaceGrid,
    matrix: Array2<f64>,
    recipe: Recipe,
}

impl DiscreteOperator {
    pub fn new(grid: &SpaceGrid, matrix: Array2<f64>, recipe: Recipe) -> Result<Self> {
        let n = grid.len();
        if matrix.dim() != (n, n) {
            return Err(Error::LengthMismatch { expected: n * n, got: matrix.len() });
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::Evaluation(format!("{recipe:?} has non-finite entries")));
        }
        Ok(Self { grid: grid.clone(), matrix, recipe })
    }

    pub fn identity(grid: &SpaceGrid) -> Self {
        Self { grid: grid.clone(), matrix: Array2::eye(grid.len()), recipe: Recipe::Identity }
    }

    /// `I + K` (or its trapezoid adjoint) as a dense matrix.
    pub fn from_kernel(k: &KernelMatrix, adjoint: bool) -> Self {
        let grid = k.grid();
        let n = grid.len();
        let h = grid.step();
        let mut m = Array2::eye(n);
        for i in 0..n {
            for j in 0..=i {
                m[[i, j]] += row_weight(i, j, h) * k.get(i, j);
            }
        }
        let recipe = match k.kind() {
            KernelKind::Inverse => Recipe::Bcal,
            _ => Recipe::B,
        };
        let op = Self { grid: grid.clone(), matrix: m, recipe };
        if adjoint {
            op.adjoint()
        } else {
            op
        }
    }

    pub fn grid(&self) -> &SpaceGrid {
        &self.grid
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub fn recipe(&self) -> Recipe {
        self.recipe
    }

    pub fn apply(&self, f: &[f64]) -> Result<Vec<f64>> {
        if f.len() != self.grid.len() {
            return Err(Error::LengthMismatch { expected: self.grid.len(), got: f.len() });
        }
        Ok(self.matrix.dot(&Array1::from(f.to_vec())).to_vec())
    }

    /// Adjoint in the trapezoid inner product, `W^{-1} M^T W`.
    pub fn adjoint(&self) -> Self {
        let w = self.grid.weights();
        let n = w.len();
        let mut m = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                m[[i, j]] = self.matrix[[j, i]] * w[j] / w[i];
            }
        }
        Self { grid: self.grid.clone(), matrix: m, recipe: self.recipe.adjoint() }
    }

    /// Column `j` divided by the quadrature weight, i.e. the kernel `V(., y_j)`.
    pub fn kernel_column(&self, j: usize) -> Vec<f64> {
        let w = self.grid.weights()[j];
        self.matrix.column(j).iter().map(|v| v / w).collect()
    }

    /// Header `TMUT`, u32 n, u32 recipe id, u32 reserved (zero); then row-major f64, all little-endian.
    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        let n = self.grid.len() as u32;
        out.write_all(BINARY_MAGIC)?;
        out.write_all(&n.to_le_bytes())?;
        out.write_all(&self.recipe.id().to_le_bytes())?;
        out.write_all(&0u32.to_le_bytes())?;
        for v in self.matrix.iter() {
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    /// Reads the binary format back onto `grid`.
    pub fn read_binary<R: Read>(grid: &SpaceGrid, mut input: R) -> Result<Self> {
        let mut header = [0u8; 16];
        input.read_exact(&mut header)?;
        if &header[..4] != BINARY_MAGIC {
            return Err(Error::Evaluation("not a TMUT operator file".into()));
        }
        let word = |k: usize| u32::from_le_bytes(header[4 * k..4 * k + 4].try_into().unwrap_or([0; 4]));
        let n = word(1) as usize;
        let recipe =
            Recipe::from_id(word(2)).ok_or_else(|| Error::Evaluation(format!("unknown recipe id {}", word(2))))?;
        if n != grid.len() {
            return Err(Error::LengthMismatch { expected: grid.len(), got: n });
        }
        let mut buf = vec![0u8; n * n * 8];
        input.read_exact(&mut buf)?;
        let vals: Vec<f64> = buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap_or([0; 8]))).collect();
        let matrix = Array2::from_shape_vec((n, n), vals).map_err(|e| Error::Evaluation(e.to_string()))?;
        Self::new(grid, matrix, recipe)
    }

    /// Dense CSV, one matrix row per line.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        for row in self.matrix.rows() {
            w.write_record(row.iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `Bf(x) = f(x) + int_0^x K(x,t) f(t) dt`.
pub fn apply_b(k: &KernelMatrix, f: &[f64]) -> Result<Vec<f64>> {
    k.apply(f)
}

/// `B*f(t) = f(t) + int_t^{x_max} K(x,t) f(x) dx`; `f` must vanish at `x_max`.
pub fn apply_b_star(k: &KernelMatrix, f: &[f64]) -> Result<Vec<f64>> {
    let sup = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let last = f.last().map_or(0.0, |v| v.abs());
    let tol = crate::transforms::SUPPORT_TOL * sup;
    if last > tol {
        return Err(Error::SupportViolation { value: last, tol });
    }
    k.apply_adjoint(f)
}

fn compose(pair: &OperatorPair, synth_measure: &SpectralMeasure, recipe: Recipe) -> Result<DiscreteOperator> {
    let inv = inverse_matrix(&pair.eig1, synth_measure)?;
    let fwd = forward_matrix(&pair.eig2);
    DiscreteOperator::new(pair.space(), inv.dot(&fwd), recipe)
}

fn check_gamma1_covers(pair: &OperatorPair) -> Result<()> {
    let (g1, g2) = (pair.gamma1.density(), pair.gamma2.density());
    if let Some(j) = g1.iter().zip(g2).position(|(&a, &b)| a <= 0.0 && b > 0.0) {
        return Err(Error::DegenerateMeasure(format!(
            "gamma_1 vanishes at k = {} where gamma_2 has mass",
            pair.spectral().nodes()[j]
        )));
    }
    Ok(())
}

/// `V = Q_1^{-1} Q_2`: forward with `psi_2`, synthesis with `(psi_1, Gamma_1)`.
pub fn build_v(pair: &OperatorPair) -> Result<DiscreteOperator> {
    check_gamma1_covers(pair)?;
    compose(pair, &pair.gamma1, Recipe::V)
}

/// `Q_1^{-1} M_P Q_2` with `P = gamma_2 / gamma_1`.
pub fn build_bcal(pair: &OperatorPair) -> Result<DiscreteOperator> {
    let m = SpectralMeasure::multiplied(&pair.gamma1, &pair.gamma2, Multiplier::Ratio)?;
    compose(pair, &m, Recipe::Bcal)
}

/// `Q_1^{-1} M_P Q_2` with `P = sqrt(gamma_2 / gamma_1)`.
pub fn build_bcal_sqrt(pair: &OperatorPair) -> Result<DiscreteOperator> {
    let m = SpectralMeasure::multiplied(&pair.gamma1, &pair.gamma2, Multiplier::SqrtRatio)?;
    compose(pair, &m, Recipe::BcalSqrt)
}

/// `||op(Q_right f) - Q_left(op f)||_2 / ||f||_2`, the norm taken over nodes
/// where the finite-difference operator is reliable.
pub fn intertwining_residual(
    op: &DiscreteOperator,
    q_left: &PotentialSpec,
    q_right: &PotentialSpec,
    f: &[f64],
) -> Result<f64> {
    let grid = op.grid();
    let lhs = op.apply(&apply_operator(q_right, grid, f)?)?;
    let rhs = apply_operator(q_left, grid, &op.apply(f)?)?;
    let range = reliable_range(grid.len());
    let w = &grid.weights()[range.clone()];
    let diff: Vec<f64> = lhs[range.clone()].iter().zip(&rhs[range]).map(|(a, b)| a - b).collect();
    Ok(l2_norm(&diff, w) / l2_norm(f, grid.weights()).max(REL_FLOOR))
}

/// `||a - b||_2 / ||f||_2` in the trapezoid norm.
pub fn rel_l2(a: &[f64], b: &[f64], f: &[f64], weights: &[f64]) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    l2_norm(&diff, weights) / l2_norm(f, weights).max(REL_FLOOR)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FactorizationRow {
    pub function: String,
    /// `P(B* f)` against `Q f`, relative to `max |Q f|`.
    pub p_bstar_vs_q: f64,
    /// `Q(Bcal* f)` against `P f`, with `Bcal* = (I + L)*`.
    pub q_bcalstar_vs_p: f64,
    /// Kernel `B f` against `Q~ P f` (synthesis with `psi_2` and `Gamma_1`).
    pub b_kernel_vs_spectral: f64,
    /// Kernel `B* f` against `P^{-1} Q f`.
    pub bstar_kernel_vs_spectral: f64,
    /// `(I + L) f` against `P~ Q f` (synthesis with `phi` and `Gamma_2`).
    pub bcal_kernel_vs_spectral: f64,
    /// `(I + L)* f` against `Q^{-1} P f`.
    pub bcalstar_kernel_vs_spectral: f64,
}

impl FactorizationRow {
    pub fn worst(&self) -> f64 {
        [
            self.p_bstar_vs_q,
            self.q_bcalstar_vs_p,
            self.b_kernel_vs_spectral,
            self.bstar_kernel_vs_spectral,
            self.bcal_kernel_vs_spectral,
            self.bcalstar_kernel_vs_spectral,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FactorizationReport {
    pub rows: Vec<FactorizationRow>,
    pub worst: f64,
}

/// Both sides of `P B* = Q`, `Q Bcal* = P`, `B = Q~ P`, `B* = P^{-1} Q`,
/// `Bcal = P~ Q`, `Bcal* = Q^{-1} P` for each corpus member, where `P` is the
/// transform of `q_1` (taken as the reference operator) and `Q` that of `q_2`.
pub fn factorization_check(
    pair: &OperatorPair,
    k: &KernelMatrix,
    corpus: &[CorpusFunction],
) -> Result<FactorizationReport> {
    let grid = pair.space();
    let l = invert_kernel(k)?;
    let mut rows = Vec::with_capacity(corpus.len());
    for f in corpus {
        let v = f.sample(grid);
        let pf = forward(&v, &pair.eig1)?;
        let qf = forward(&v, &pair.eig2)?;

        let bstar = apply_b_star(k, &v)?;
        let p_bstar = forward(&bstar, &pair.eig1)?;
        let bcalstar = l.apply_adjoint(&v)?;
        let q_bcalstar = forward(&bcalstar, &pair.eig2)?;

        let b = apply_b(k, &v)?;
        let b_spec = cross_inverse(&pf, &pair.eig2, &pair.gamma1)?;
        let bstar_spec = inverse(&qf, &pair.eig1, &pair.gamma1)?;
        let bcal = l.apply(&v)?;
        let bcal_spec = cross_inverse(&qf, &pair.eig1, &pair.gamma2)?;
        let bcalstar_spec = inverse(&pf, &pair.eig2, &pair.gamma2)?;

        rows.push(FactorizationRow {
            function: f.label(),
            p_bstar_vs_q: rel_sup(p_bstar.values(), qf.values()),
            q_bcalstar_vs_p: rel_sup(q_bcalstar.values(), pf.values()),
            b_kernel_vs_spectral: rel_sup(&b_spec, &b),
            bstar_kernel_vs_spectral: rel_sup(&bstar_spec, &bstar),
            bcal_kernel_vs_spectral: rel_sup(&bcal_spec, &bcal),
            bcalstar_kernel_vs_spectral: rel_sup(&bcalstar_spec, &bcalstar),
        });
    }
    let worst = rows.iter().map(FactorizationRow::worst).fold(0.0, f64::max);
    Ok(FactorizationReport { rows, worst })
}

/// Spectral transfer `Q_2 Q_1^{-1}` as an `(n_k, n_k)` matrix.
pub fn spectral_transfer(pair: &OperatorPair) -> Result<Array2<f64>> {
    let inv = inverse_matrix(&pair.eig1, &pair.gamma1)?;
    Ok(forward_matrix(&pair.eig2).dot(&inv))
}

/// `L^2(dGamma)` norm of transform values.
pub fn spectral_norm(values: &[f64], measure: &SpectralMeasure) -> f64 {
    l2_norm(values, &measure.weights())
}

/// Largest `||Q_2 f||_{Gamma_2} / ||P f||_{Gamma_1}` over the corpus, i.e. the
/// norm of the spectral transfer restricted to corpus transforms.
pub fn transfer_norm_ratio(pair: &OperatorPair, corpus: &[CorpusFunction]) -> Result<f64> {
    let mut worst = 0.0f64;
    for f in corpus {
        let v = f.sample(pair.space());
        let a = spectral_norm(forward(&v, &pair.eig2)?.values(), &pair.gamma2);
        let b = spectral_norm(forward(&v, &pair.eig1)?.values(), &pair.gamma1);
        worst = worst.max(a / b.max(REL_FLOOR));
    }
    Ok(worst)
}

/// `||Q(FG) - (QF)(QG)|| / ||(QF)(QG)||` in `L^2(dGamma_2)` for `F = P f`, `G = P g`.
pub fn non_multiplicativity(pair: &OperatorPair, f: &[f64], g: &[f64]) -> Result<f64> {
    let pf = forward(f, &pair.eig1)?;
    let pg = forward(g, &pair.eig1)?;
    let prod: Vec<f64> = pf.values().iter().zip(pg.values()).map(|(a, b)| a * b).collect();
    let prod = TransformVector::new(pair.spectral(), prod, "P f * P g")?;
    let h = inverse(&prod, &pair.eig1, &pair.gamma1)?;
    let q_prod = forward(&h, &pair.eig2)?;
    let qf = forward(f, &pair.eig2)?;
    let qg = forward(g, &pair.eig2)?;
    let split: Vec<f64> = qf.values().iter().zip(qg.values()).map(|(a, b)| a * b).collect();
    let diff: Vec<f64> = q_prod.values().iter().zip(&split).map(|(a, b)| a - b).collect();
    Ok(spectral_norm(&diff, &pair.gamma2) / spectral_norm(&split, &pair.gamma2).max(REL_FLOOR))
}

/// `sup gamma_1 / gamma_2` over the grid; infinite when `gamma_1` has mass where
/// `gamma_2` has none.
pub fn measure_ratio_bound(pair: &OperatorPair) -> f64 {
    pair.gamma1
        .density()
        .iter()
        .zip(pair.gamma2.density())
        .filter(|(a, _)| **a > 0.0)
        .map(|(a, b)| if *b > 0.0 { a / b } else { f64::INFINITY })
        .fold(0.0, f64::max)
}

/// Norm in the trapezoid `L^2` by power iteration on `A* A`.
pub fn operator_norm(op: &DiscreteOperator, iterations: usize) -> f64 {
    let w = op.grid().weights();
    let gram = op.adjoint().matrix().dot(op.matrix());
    let mut v = Array1::from_elem(w.len(), 1.0);
    let mut est = 0.0;
    for _ in 0..iterations {
        let norm = l2_norm(v.as_slice().unwrap_or(&[]), w);
        if norm == 0.0 {
            return 0.0;
        }
        v /= norm;
        let next = gram.dot(&v);
        est = l2_norm(next.as_slice().unwrap_or(&[]), w);
        v = next;
    }
    est.sqrt()
}
