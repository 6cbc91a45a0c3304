use std::cell::OnceCell;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::artifacts::{write_atomic, write_operator, write_table, Format};
use super::catalogue::{catalogue, Bound, CheckGroup, CheckInfo};
use super::config::Scenario;
use crate::corpus::{self, CorpusFunction};
use crate::eigen::{constant_family_psi, eigen_column, eigen_column_fixed};
use crate::error::{Error, Result};
use crate::grids::{SpaceGrid, SpectralGrid};
use crate::kernels::{
    goursat_solve, inversion_kernel_check, invert_kernel, kernel_cross_deviation, spectral_kernel_extrapolated,
    transmutation_identity_check, KernelMatrix,
};
use crate::levitan::{
    self, cosine_transform_fn, eigenfunction_expansion_check, expansion_apply, levitan_coefficients,
    ConstantPairTransfer, ContourSpec, Derivative, Multiplication, Shift, DEFAULT_J_MAX,
};
use crate::paleywiener::{
    complex_extend, eigenfunction_transfer_check, estimate_type, geometric, pwp_check, support_estimate,
    triangularity_probe, PwTolerances,
};
use crate::transforms::{forward, inverse, l2_norm, parseval_check, rel_sup};
use crate::transmute::{
    apply_b_star, build_bcal, build_bcal_sqrt, build_v, factorization_check, intertwining_residual,
    measure_ratio_bound, operator_norm, rel_l2, transfer_norm_ratio, DiscreteOperator, FactorizationReport,
    OperatorPair,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub group: CheckGroup,
    pub identity: String,
    pub inputs_digest: String,
    pub tolerance: f64,
    pub bound: Bound,
    pub value: f64,
    pub pass: bool,
    pub metrics: Value,
    /// Wall time; printed, never serialized, so reports stay reproducible.
    #[serde(skip)]
    pub runtime: Duration,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: String,
    pub seed: u64,
    pub verdict: Verdict,
    pub checks: Vec<CheckRecord>,
    pub artifacts: Vec<String>,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

struct Outcome {
    value: f64,
    metrics: Value,
    /// Side conditions beyond the headline bound.
    extra_ok: bool,
}

impl Outcome {
    fn new(value: f64, metrics: Value) -> Self {
        Self { value, metrics, extra_ok: true }
    }
}

fn cached<T>(cell: &OnceCell<T>, make: impl FnOnce() -> Result<T>) -> Result<&T> {
    if let Some(v) = cell.get() {
        return Ok(v);
    }
    let v = make()?;
    Ok(cell.get_or_init(|| v))
}

/// Lazily built shared state of one run.
pub struct Context<'s> {
    s: &'s Scenario,
    space: SpaceGrid,
    spectral: SpectralGrid,
    corpus: Vec<CorpusFunction>,
    interior: Vec<CorpusFunction>,
    pw: Vec<CorpusFunction>,
    pair: OnceCell<OperatorPair>,
    fine: OnceCell<OperatorPair>,
    parseval: OnceCell<OperatorPair>,
    matched: OnceCell<OperatorPair>,
    kernel: OnceCell<KernelMatrix>,
    inverse: OnceCell<KernelMatrix>,
    v: OnceCell<DiscreteOperator>,
    v_matched: OnceCell<DiscreteOperator>,
    factorization: OnceCell<FactorizationReport>,
}

impl<'s> Context<'s> {
    pub fn new(s: &'s Scenario) -> Result<Self> {
        s.validate()?;
        let space = s.space_grid()?;
        let x_max = space.x_max();
        Ok(Self {
            space,
            spectral: s.spectral_grid()?,
            corpus: s.corpus.build(x_max),
            interior: corpus::interior(x_max),
            pw: corpus::paley_wiener(&s.corpus.supports),
            s,
            pair: OnceCell::new(),
            fine: OnceCell::new(),
            parseval: OnceCell::new(),
            matched: OnceCell::new(),
            kernel: OnceCell::new(),
            inverse: OnceCell::new(),
            v: OnceCell::new(),
            v_matched: OnceCell::new(),
            factorization: OnceCell::new(),
        })
    }

    fn make_pair(&self, spectral: &SpectralGrid) -> Result<OperatorPair> {
        OperatorPair::new(self.s.q1.clone(), self.s.q2.clone(), &self.space, spectral)
    }

    pub fn pair(&self) -> Result<&OperatorPair> {
        cached(&self.pair, || self.make_pair(&self.spectral))
    }

    /// Same cutoff, `fine_n_k` nodes.
    pub fn fine_pair(&self) -> Result<&OperatorPair> {
        cached(&self.fine, || self.make_pair(&SpectralGrid::new(self.s.grid.k_max, self.s.resolution.fine_n_k)?))
    }

    pub fn parseval_pair(&self) -> Result<&OperatorPair> {
        cached(&self.parseval, || {
            self.make_pair(&SpectralGrid::new(self.s.resolution.parseval_k_max, self.s.resolution.fine_n_k)?)
        })
    }

    /// `k_max = pi / h`, `n_k = n_x`.
    pub fn matched_pair(&self) -> Result<&OperatorPair> {
        cached(&self.matched, || self.make_pair(&SpectralGrid::matched(&self.space)?))
    }

    pub fn kernel(&self) -> Result<&KernelMatrix> {
        cached(&self.kernel, || goursat_solve(&self.s.q2, &self.space))
    }

    pub fn inverse_kernel(&self) -> Result<&KernelMatrix> {
        cached(&self.inverse, || invert_kernel(self.kernel()?))
    }

    pub fn v(&self) -> Result<&DiscreteOperator> {
        cached(&self.v, || build_v(self.pair()?))
    }

    pub fn v_matched(&self) -> Result<&DiscreteOperator> {
        cached(&self.v_matched, || build_v(self.matched_pair()?))
    }

    fn factorization(&self) -> Result<&FactorizationReport> {
        cached(&self.factorization, || factorization_check(self.fine_pair()?, self.kernel()?, &self.corpus))
    }

    fn c2(&self) -> f64 {
        self.s.q2.closed_form_constant().unwrap_or(0.0)
    }

    fn tau(&self) -> Vec<f64> {
        let r = &self.s.resolution;
        geometric(r.tau_min, r.tau_max, r.tau_nodes)
    }

    fn digest(&self, info: &CheckInfo, tol: f64) -> Result<String> {
        let payload = json!({
            "check": info.name,
            "q1": self.s.q1,
            "q2": self.s.q2,
            "grid": self.s.grid,
            "resolution": self.s.resolution,
            "corpus": self.s.corpus,
            "tolerance": tol,
            "seed": self.s.seed,
        });
        Ok(hex::encode(Sha256::digest(serde_json::to_vec(&payload)?)))
    }

    fn evaluate(&self, name: &str, tol: f64) -> Result<Outcome> {
        match name {
            "eigen-closed-form" => self.eigen_closed_form(),
            "eigen-order" => self.eigen_order(),
            "transform-linearity" => self.transform_linearity(),
            "parseval-cosine" => {
                let p = self.parseval_pair()?;
                self.parseval(&p.eig1, &p.gamma1)
            }
            "parseval-q2" => {
                let p = self.parseval_pair()?;
                self.parseval(&p.eig2, &p.gamma2)
            }
            "round-trip-q2" => {
                let p = self.fine_pair()?;
                let mut worst = 0.0f64;
                for f in &self.corpus {
                    let v = f.sample(&self.space);
                    let back = inverse(&forward(&v, &p.eig2)?, &p.eig2, &p.gamma2)?;
                    worst = worst.max(rel_sup(&back, &v));
                }
                Ok(Outcome::new(worst, json!({ "n_k": p.spectral().len(), "k_max": p.spectral().k_max() })))
            }
            "transmutation-identity" => {
                let rows = transmutation_identity_check(self.kernel()?, &self.s.q2, &[1.0, 2.0, 3.0, 5.0])?;
                let worst = rows.iter().map(|r| r.1).fold(0.0, f64::max);
                Ok(Outcome::new(worst, json!({ "rows": rows })))
            }
            "kernel-cross-method" => {
                let p = self.pair()?;
                let eps = self.s.resolution.kernel_eps;
                let ks = spectral_kernel_extrapolated(&p.eig1, &p.eig2, &p.gamma1, eps)?;
                let dev = kernel_cross_deviation(&ks, self.kernel()?, self.s.resolution.kernel_band)?;
                Ok(Outcome::new(dev, json!({ "eps": eps, "band": self.s.resolution.kernel_band })))
            }
            "kernel-inversion" => {
                let rep = inversion_kernel_check(self.kernel()?, self.inverse_kernel()?, &self.corpus)?;
                Ok(Outcome::new(rep.worst, json!({ "rows": rep.rows })))
            }
            "intertwining-v" => self.intertwining(self.v()?),
            "intertwining-bcal-sqrt" => self.intertwining(&build_bcal_sqrt(self.pair()?)?),
            "v-vs-kernel" => {
                let v = self.v()?;
                let mut worst = 0.0f64;
                for f in &self.corpus {
                    let x = f.sample(&self.space);
                    let a = v.apply(&x)?;
                    let b = apply_b_star(self.kernel()?, &x)?;
                    worst = worst.max(rel_l2(&a, &b, &x, self.space.weights()));
                }
                Ok(Outcome::new(worst, json!({})))
            }
            "factorization" => {
                let rep = self.factorization()?;
                Ok(Outcome::new(rep.worst, json!({ "n_k": self.s.resolution.fine_n_k, "rows": rep.rows })))
            }
            "bcal-inverts-b" => {
                let rep = self.factorization()?;
                let worst = rep.rows.iter().map(|r| r.bcal_kernel_vs_spectral).fold(0.0, f64::max);
                Ok(Outcome::new(worst, json!({ "n_k": self.s.resolution.fine_n_k })))
            }
            "transfer-isometry" => {
                let ratio = transfer_norm_ratio(self.fine_pair()?, &self.corpus)?;
                Ok(Outcome::new(ratio - 1.0, json!({ "ratio": ratio })))
            }
            "v-boundedness" => {
                let m = measure_ratio_bound(self.pair()?);
                let norm = operator_norm(self.v()?, 50);
                let (value, vacuous) = if m.is_finite() { (norm / m.sqrt() - 1.0, false) } else { (-1.0, true) };
                Ok(Outcome::new(
                    value,
                    json!({ "norm": norm, "ratio_bound": m.is_finite().then_some(m), "vacuous": vacuous }),
                ))
            }
            "pw-transfer" => {
                let pair = self.matched_pair()?;
                let tols = PwTolerances { type_tol: tol, ..PwTolerances::default() };
                let rep = pwp_check(pair, self.v_matched()?, &self.pw, &self.tau(), tols)?;
                let worst = rep.rows.iter().map(|r| (r.sigma_type - r.sigma_supp_in).abs()).fold(0.0, f64::max);
                Ok(Outcome { value: worst, extra_ok: rep.pass, metrics: json!({ "rows": rep.rows }) })
            }
            "pw-triangularity" => {
                let h = self.space.step();
                let y0 = 0.25 * self.space.x_max();
                let rep = triangularity_probe(self.v_matched()?, y0, &[16.0 * h, 8.0 * h, 4.0 * h], 0.1)?;
                let last = rep.rows.last().map_or(0.0, |r| r.ratio);
                Ok(Outcome {
                    value: last,
                    extra_ok: rep.monotone,
                    metrics: json!({
                        "y0": rep.y0,
                        "eps": rep.eps,
                        "rows": rep.rows,
                        "monotone": rep.monotone,
                        "extrapolated_ratio": rep.extrapolated_ratio,
                    }),
                })
            }
            "pw-eigenfunction-transfer" => {
                let rows = eigenfunction_transfer_check(self.pair()?, self.v()?, &[1.0, 2.0, 3.0])?;
                let worst = rows.iter().map(|r| r.deviation).fold(0.0, f64::max);
                Ok(Outcome::new(worst, json!({ "rows": rows })))
            }
            "pw-classical-baseline" => {
                let tau = self.tau();
                let mut worst = 0.0f64;
                let mut rows = Vec::new();
                for f in &self.pw {
                    let x = f.sample(&self.space);
                    let s = support_estimate(&x, &self.space).sigma_supp;
                    if s < 0.5 {
                        continue;
                    }
                    let t =
                        estimate_type(&complex_extend(&x, &crate::potential::PotentialSpec::Zero, &self.space, &tau)?)?;
                    let rel = (t.sigma_type - s).abs() / s;
                    worst = worst.max(rel);
                    rows.push(json!({ "function": f.label(), "sigma_supp": s, "sigma_type": t.sigma_type, "residual": t.residual }));
                }
                Ok(Outcome::new(worst, json!({ "rows": rows })))
            }
            "levitan-oracles" => self.levitan_oracles(),
            "levitan-transfer-expansion" => {
                let op = ConstantPairTransfer::for_pair(&self.s.q1, &self.s.q2)?;
                let (coeffs, _) = self.transfer_coeffs(9.0)?;
                let mut worst = 0.0f64;
                for f in &self.pw {
                    let x = f.sample(&self.space);
                    let big_f = cosine_transform_fn(&x, &self.space);
                    let res = expansion_apply(&coeffs, &op, &big_f, 8)?;
                    worst = worst.max(res.relative[8]);
                }
                Ok(Outcome::new(worst, json!({ "j": 8, "lambda": [9.0, 9.5] })))
            }
            "levitan-eigenfunction-expansion" => {
                let (coeffs, _) = self.transfer_coeffs(4.0)?;
                let rows = eigenfunction_expansion_check(self.pair()?, &coeffs, &[0.5, 1.0, 1.5, 2.0])?;
                let r = &rows[0].residuals;
                let decreasing = (r[2] >= r[4] && r[4] >= r[8]) || r[2] <= 1e-6;
                Ok(Outcome {
                    value: r[8],
                    extra_ok: decreasing,
                    metrics: json!({ "rows": rows, "decreasing": decreasing }),
                })
            }
            "carleman-identity" => {
                let rep = levitan::carleman_residual_check(self.pair()?, &self.corpus, 5.0)?;
                Ok(Outcome {
                    value: rep.worst,
                    extra_ok: rep.g_finite && rep.hypothesis_b,
                    metrics: json!({
                        "rows": rep.rows,
                        "k_compact": rep.k_compact,
                        "g_norm": rep.g_norm,
                        "g_norm_half": rep.g_norm_half,
                        "g_finite": rep.g_finite,
                        "p": rep.p,
                        "m": rep.m,
                        "hypothesis_b": rep.hypothesis_b,
                    }),
                })
            }
            other => Err(Error::Config(format!("unknown check {other:?}"))),
        }
    }

    fn eigen_closed_form(&self) -> Result<Outcome> {
        let c = self.c2();
        let mut worst = 0.0f64;
        let mut columns = 0;
        for &k in self.spectral.nodes().iter().filter(|k| **k <= 5.0) {
            let psi = eigen_column(&self.s.q2, &self.space, k)?;
            for (v, &x) in psi.iter().zip(self.space.nodes()) {
                worst = worst.max((v - constant_family_psi(c, k, x)).abs());
            }
            columns += 1;
        }
        Ok(Outcome::new(worst, json!({ "columns": columns, "c": c })))
    }

    fn eigen_order(&self) -> Result<Outcome> {
        let c = self.c2();
        let x_max = self.space.x_max();
        let mut errors = Vec::new();
        for n in [129usize, 257, 513] {
            let g = SpaceGrid::new(x_max, n)?;
            let mut e = 0.0f64;
            for k in [1.0, 2.0, 3.0, 4.0, 5.0] {
                let psi = eigen_column_fixed(&self.s.q2, &g, k, 1)?;
                for (v, &x) in psi.iter().zip(g.nodes()) {
                    e = e.max((v - constant_family_psi(c, k, x)).abs());
                }
            }
            errors.push(e);
        }
        Ok(Outcome::new(errors[0] / errors[2], json!({ "n_x": [129, 257, 513], "errors": errors })))
    }

    fn transform_linearity(&self) -> Result<Outcome> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.s.seed);
        let eig = &self.pair()?.eig2;
        let mut worst = 0.0f64;
        let n = self.corpus.len();
        for i in 0..n {
            let (a, b): (f64, f64) = (rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0));
            let f = self.corpus[i].sample(&self.space);
            let g = self.corpus[(i + 1) % n].sample(&self.space);
            let mix: Vec<f64> = f.iter().zip(&g).map(|(x, y)| a * x + b * y).collect();
            let lhs = forward(&mix, eig)?;
            let (ff, gg) = (forward(&f, eig)?, forward(&g, eig)?);
            let rhs: Vec<f64> = ff.values().iter().zip(gg.values()).map(|(x, y)| a * x + b * y).collect();
            worst = worst.max(rel_sup(lhs.values(), &rhs));
        }
        Ok(Outcome::new(worst, json!({ "seed": self.s.seed })))
    }

    fn parseval(&self, eig: &crate::eigen::EigenTable, measure: &crate::measure::SpectralMeasure) -> Result<Outcome> {
        let w = self.space.weights();
        let n = self.corpus.len();
        let mut worst = 0.0f64;
        for i in 0..n {
            let f = self.corpus[i].sample(&self.space);
            let g = self.corpus[(i + 1) % n].sample(&self.space);
            worst = worst.max(parseval_check(&f, &f, eig, measure)?.rel_err);
            let mixed = parseval_check(&f, &g, eig, measure)?;
            worst = worst.max((mixed.lhs - mixed.rhs).abs() / (l2_norm(&f, w) * l2_norm(&g, w)));
        }
        Ok(Outcome::new(worst, json!({ "k_max": measure.grid().k_max(), "n_k": measure.grid().len() })))
    }

    fn intertwining(&self, op: &DiscreteOperator) -> Result<Outcome> {
        let mut worst = 0.0f64;
        for f in &self.interior {
            let x = f.sample(&self.space);
            worst = worst.max(intertwining_residual(op, &self.s.q1, &self.s.q2, &x)?);
        }
        Ok(Outcome::new(worst, json!({ "corpus": "interior", "recipe": op.recipe() })))
    }

    fn levitan_oracles(&self) -> Result<Outcome> {
        let n = self.s.resolution.contour_nodes;
        let k = ContourSpec::new(Complex64::new(0.0, 0.0), 0.5, n)?;
        let z = [Complex64::new(0.0, 0.0), Complex64::new(0.1, -0.05), Complex64::new(-0.2, 0.1)];
        let h0 = 0.1;
        let mut worst = 0.0f64;
        let mult = levitan_coefficients(&Multiplication, &k, 6, &z)?;
        let deriv = levitan_coefficients(&Derivative::default(), &k, 6, &z)?;
        let shift = levitan_coefficients(&Shift { h: h0 }, &k, 6, &z)?;
        for (p, zp) in z.iter().enumerate() {
            let mut fact = 1.0;
            for j in 0..=6 {
                if j > 0 {
                    fact *= j as f64;
                }
                let m_want = if j == 0 { *zp } else { Complex64::new(0.0, 0.0) };
                let d_want = if j == 1 { 1.0 } else { 0.0 };
                worst = worst
                    .max((mult.a[p][j] - m_want).norm())
                    .max((deriv.a[p][j] - d_want).norm())
                    .max((shift.a[p][j] - h0.powi(j as i32) / fact).norm());
            }
        }
        let doubled = levitan_coefficients(&Shift { h: h0 }, &k.doubled(), 6, &z)?.max_difference(&shift);
        let pts = [Complex64::new(0.0, 0.0), Complex64::new(0.02, 0.01)];
        let big = levitan_coefficients(&Shift { h: h0 }, &k, 6, &pts)?;
        let small = levitan_coefficients(&Shift { h: h0 }, &ContourSpec::new(k.center, 0.25, n)?, 6, &pts)?;
        let radius = big.max_difference(&small);
        Ok(Outcome::new(
            worst.max(radius).max(doubled),
            json!({ "oracle_error": worst, "radius_independence": radius, "node_doubling": doubled, "n_nodes": n }),
        ))
    }

    /// Coefficients of the closed-form transfer at `lambda0` on a circle wide
    /// enough to contain the shifted pole.
    fn transfer_coeffs(&self, lambda0: f64) -> Result<(levitan::ExpansionCoeffs, ContourSpec)> {
        let op = ConstantPairTransfer::for_pair(&self.s.q1, &self.s.q2)?;
        let r = (2.0f64).max(2.0 * op.c.abs());
        let contour = ContourSpec::new(Complex64::new(lambda0, 0.0), r, self.s.resolution.contour_nodes)?;
        let z = [Complex64::new(lambda0, 0.0), Complex64::new(lambda0 + 0.5, 0.0)];
        let z: &[Complex64] = if lambda0 == 4.0 { &z[..1] } else { &z };
        Ok((levitan_coefficients(&op, &contour, DEFAULT_J_MAX, z)?, contour))
    }

    fn write_artifacts(&self, dir: &Path, format: Format) -> Result<Vec<PathBuf>> {
        let mut out = Vec::new();
        if self.s.enabled(CheckGroup::Eigen) {
            let p = self.pair()?;
            out.push(write_table(dir, "eigen_q2", format, |b| p.eig2.write_csv(b))?);
        }
        if self.s.enabled(CheckGroup::Parseval) {
            let p = self.pair()?;
            let t = forward(&self.corpus[0].sample(&self.space), &p.eig2)?;
            out.push(write_table(dir, "transform_q2", format, |b| t.write_csv(b))?);
        }
        if self.s.enabled(CheckGroup::Kernel) {
            let k = self.kernel()?;
            out.push(write_table(dir, "kernel_goursat", format, |b| k.write_csv(b))?);
        }
        if self.s.enabled(CheckGroup::Transmute) {
            out.push(write_operator(dir, "operator_v", format, self.v()?)?);
        }
        if self.s.enabled(CheckGroup::Pw) {
            let x = self.pw[0].sample(&self.space);
            let ext = complex_extend(&x, &self.s.q2, &self.space, &self.tau())?;
            out.push(write_table(dir, "pw_type", format, |b| ext.write_csv(b))?);
        }
        if self.s.enabled(CheckGroup::Levitan) {
            let (coeffs, _) = self.transfer_coeffs(9.0)?;
            out.push(write_table(dir, "levitan_coeffs", format, |b| coeffs.write_csv(b))?);
        }
        Ok(out)
    }
}

/// Output directory: explicit override, then the scenario's, then `out/<name>`.
pub fn output_dir(s: &Scenario, override_dir: Option<&Path>) -> PathBuf {
    override_dir
        .map(Path::to_path_buf)
        .or_else(|| s.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(&s.name))
}

/// Runs every enabled check in catalogue order, writes artifacts and
/// `report.json` into `dir`.
pub fn run(s: &Scenario, dir: &Path, format: Format) -> Result<RunReport> {
    let ctx = Context::new(s)?;
    let mut checks = Vec::new();
    for info in catalogue().into_iter().filter(|c| s.enabled(c.group)) {
        let tol = s.tolerance(&info.name);
        let start = Instant::now();
        let outcome = ctx.evaluate(&info.name, tol)?;
        let pass = outcome.value.is_finite() && info.bound.holds(outcome.value, tol) && outcome.extra_ok;
        checks.push(CheckRecord {
            inputs_digest: ctx.digest(&info, tol)?,
            name: info.name,
            group: info.group,
            identity: info.identity,
            tolerance: tol,
            bound: info.bound,
            value: outcome.value,
            pass,
            metrics: outcome.metrics,
            runtime: start.elapsed(),
        });
    }
    let files = ctx.write_artifacts(dir, format)?;
    let mut artifacts: Vec<String> =
        files.iter().filter_map(|p| p.file_name().and_then(|n| n.to_str()).map(String::from)).collect();
    artifacts.push("report.json".into());
    let verdict = if checks.iter().all(|c| c.pass) { Verdict::Pass } else { Verdict::Fail };
    let report = RunReport { scenario: s.name.clone(), seed: s.seed, verdict, checks, artifacts };
    let mut text = serde_json::to_vec_pretty(&report)?;
    text.push(b'\n');
    write_atomic(&dir.join("report.json"), &text)?;
    Ok(report)
}

/// Names accepted by [`export`].
pub const EXPORTABLE: &[&str] = &[
    "eigen-q1",
    "eigen-q2",
    "transform-q2",
    "kernel-goursat",
    "kernel-inverse",
    "kernel-spectral",
    "operator-v",
    "operator-b",
    "operator-bstar",
    "operator-bcal",
    "operator-bcal-sqrt",
    "pw-type",
    "levitan-coeffs",
    "carleman-g",
];

/// Computes and writes a single artifact.
pub fn export(s: &Scenario, artifact: &str, dir: &Path, format: Format) -> Result<PathBuf> {
    let ctx = Context::new(s)?;
    let stem = artifact.replace('-', "_");
    match artifact {
        "eigen-q1" => write_table(dir, &stem, format, |b| ctx.pair()?.eig1.write_csv(b)),
        "eigen-q2" => write_table(dir, &stem, format, |b| ctx.pair()?.eig2.write_csv(b)),
        "transform-q2" => {
            let t = forward(&ctx.corpus[0].sample(&ctx.space), &ctx.pair()?.eig2)?;
            write_table(dir, &stem, format, |b| t.write_csv(b))
        }
        "kernel-goursat" => write_table(dir, &stem, format, |b| ctx.kernel()?.write_csv(b)),
        "kernel-inverse" => write_table(dir, &stem, format, |b| ctx.inverse_kernel()?.write_csv(b)),
        "kernel-spectral" => {
            let p = ctx.pair()?;
            let k = spectral_kernel_extrapolated(&p.eig1, &p.eig2, &p.gamma1, s.resolution.kernel_eps)?;
            write_table(dir, &stem, format, |b| k.write_csv(b))
        }
        "operator-v" => write_operator(dir, &stem, format, ctx.v()?),
        "operator-b" => write_operator(dir, &stem, format, &DiscreteOperator::from_kernel(ctx.kernel()?, false)),
        "operator-bstar" => write_operator(dir, &stem, format, &DiscreteOperator::from_kernel(ctx.kernel()?, true)),
        "operator-bcal" => write_operator(dir, &stem, format, &build_bcal(ctx.fine_pair()?)?),
        "operator-bcal-sqrt" => write_operator(dir, &stem, format, &build_bcal_sqrt(ctx.pair()?)?),
        "pw-type" => {
            let x = ctx.pw[0].sample(&ctx.space);
            let ext = complex_extend(&x, &s.q2, &ctx.space, &ctx.tau())?;
            write_table(dir, &stem, format, |b| ext.write_csv(b))
        }
        "levitan-coeffs" => {
            let (coeffs, _) = ctx.transfer_coeffs(9.0)?;
            write_table(dir, &stem, format, |b| coeffs.write_csv(b))
        }
        "carleman-g" => {
            let p = ctx.pair()?;
            let rep = levitan::carleman_residual_check(p, &ctx.corpus, 5.0)?;
            write_table(dir, &stem, format, |b| {
                let mut w = csv::Writer::from_writer(b);
                w.write_record(["nu", "g"])?;
                for (nu, g) in p.spectral().nodes().iter().zip(&rep.g_profile) {
                    w.write_record([nu.to_string(), g.to_string()])?;
                }
                w.flush()?;
                Ok(())
            })
        }
        other => Err(Error::Config(format!("unknown artifact {other:?}; expected one of {}", EXPORTABLE.join(", ")))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"
name = "small"
seed = 3
checks = ["eigen", "kernel", "levitan"]
[q1]
family = "zero"
[q2]
family = "constant"
c = 1.0
[grid]
x_max = 8.0
n_x = 256
k_max = 50.0
n_k = 256
"#;

    #[test]
    fn small_run_is_deterministic_and_complete() {
        let s = Scenario::parse(SMALL).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let a = run(&s, &dir.path().join("a"), Format::Csv).unwrap();
        let b = run(&s, &dir.path().join("b"), Format::Csv).unwrap();
        let expected = catalogue().iter().filter(|c| s.enabled(c.group)).count();
        assert_eq!(a.checks.len(), expected);
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        for name in &a.artifacts {
            let x = std::fs::read(dir.path().join("a").join(name)).unwrap();
            assert_eq!(x, std::fs::read(dir.path().join("b").join(name)).unwrap(), "{name}");
        }
        assert!(a.checks.iter().all(|c| c.inputs_digest.len() == 64));
    }

    #[test]
    fn tolerance_override_flips_verdict() {
        let mut s = Scenario::parse(SMALL).unwrap();
        s.checks = vec![CheckGroup::Eigen];
        s.tolerances.insert("eigen-closed-form".into(), 1e-15);
        let dir = tempfile::tempdir().unwrap();
        let r = run(&s, dir.path(), Format::Json).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        let text = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
        let back: RunReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back.checks[0].name, "eigen-closed-form");
        assert!(!back.checks[0].pass);
        assert!(dir.path().join("eigen_q2.json").exists());
    }

    #[test]
    fn export_rejects_unknown_artifact() {
        let s = Scenario::parse(SMALL).unwrap();
        let dir = tempfile::tempdir().unwrap();
        assert!(export(&s, "nope", dir.path(), Format::Csv).is_err());
        let p = export(&s, "kernel-goursat", dir.path(), Format::Csv).unwrap();
        assert!(p.ends_with("kernel_goursat.csv"));
    }
}
