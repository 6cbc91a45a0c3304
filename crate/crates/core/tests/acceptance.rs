//! Acceptance battery. Runs without the libtest harness so every criterion
//! prints one PASS/FAIL line; exits non-zero if any criterion fails.

use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64;
use transmute_lab::corpus::{self, CorpusFunction};
use transmute_lab::eigen::eigen_column_fixed;
use transmute_lab::grids::{SpaceGrid, SpectralGrid};
use transmute_lab::kernels::{
    goursat_solve, inversion_kernel_check, invert_kernel, kernel_cross_deviation, spectral_kernel_extrapolated,
};
use transmute_lab::levitan::{self, levitan_coefficients, ContourSpec, Derivative, Multiplication, Shift};
use transmute_lab::paleywiener::{default_tau_grid, pwp_check, triangularity_probe, PwTolerances};
use transmute_lab::potential::PotentialSpec;
use transmute_lab::scenario::{self, Format, Scenario};
use transmute_lab::transforms::forward;
use transmute_lab::transmute::{build_bcal_sqrt, build_v, factorization_check, DiscreteOperator, OperatorPair};

type Outcome = Result<(bool, String), String>;
type Criterion = (&'static str, fn() -> Outcome);

const X_MAX: f64 = 8.0;
const N_X: usize = 512;
const K_MAX: f64 = 100.0;
const N_K: usize = 512;

fn space() -> SpaceGrid {
    SpaceGrid::new(X_MAX, N_X).unwrap()
}

fn pair(c: f64, k_max: f64, n_k: usize) -> OperatorPair {
    let q2 = if c == 0.0 { PotentialSpec::Zero } else { PotentialSpec::constant(c) };
    OperatorPair::new(PotentialSpec::Zero, q2, &space(), &SpectralGrid::new(k_max, n_k).unwrap()).unwrap()
}

fn e<T: std::fmt::Display>(v: T) -> String {
    v.to_string()
}

/// Solution of `-psi'' + c psi = k^2 psi`, `psi(0) = 1`, `psi'(0) = 0`.
fn psi_const(c: f64, k: f64, x: f64) -> f64 {
    let l = k * k - c;
    if l >= 0.0 {
        (l.sqrt() * x).cos()
    } else {
        ((-l).sqrt() * x).cosh()
    }
}

/// Kernel of `cos(sqrt(k^2 - c) x) = cos(kx) + int_0^x K(x,t) cos(kt) dt`:
/// `K = c x I_1(sqrt(c) s) / (sqrt(c) s)` with `s^2 = x^2 - t^2`, summed as a series.
fn kernel_const(c: f64, x: f64, t: f64) -> f64 {
    let z = 0.25 * c * (x * x - t * t);
    let (mut term, mut sum, mut m) = (0.5f64, 0.0f64, 0.0f64);
    while term.abs() > 1e-17 * sum.abs().max(1e-300) || m < 2.0 {
        sum += term;
        m += 1.0;
        term *= z / (m * (m + 1.0));
    }
    c * x * sum
}

fn trapz(v: &[f64], h: f64) -> f64 {
    let n = v.len();
    h * (v.iter().sum::<f64>() - 0.5 * (v[0] + v[n - 1]))
}

fn rel_l2_plain(a: &[f64], b: &[f64], h: f64) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).collect();
    let n: Vec<f64> = b.iter().map(|y| y * y).collect();
    (trapz(&d, h) / trapz(&n, h)).sqrt()
}

/// `(-D^2 + c) f` by central differences at interior nodes.
fn schrodinger(c: f64, f: &[f64], h: f64) -> Vec<f64> {
    let mut out = vec![0.0; f.len()];
    for i in 1..f.len() - 1 {
        out[i] = -(f[i + 1] - 2.0 * f[i] + f[i - 1]) / (h * h) + c * f[i];
    }
    out
}

fn intertwining(op: &DiscreteOperator, c: f64, corpus: &[CorpusFunction]) -> f64 {
    let g = op.grid();
    let h = g.step();
    let n = g.len();
    let mut worst = 0.0f64;
    for f in corpus {
        let x = f.sample(g);
        let lhs = op.apply(&schrodinger(c, &x, h)).unwrap();
        let rhs = schrodinger(0.0, &op.apply(&x).unwrap(), h);
        let d: Vec<f64> = (4..n - 4).map(|i| (lhs[i] - rhs[i]).powi(2)).collect();
        let norm: Vec<f64> = x.iter().map(|v| v * v).collect();
        worst = worst.max((trapz(&d, h) / trapz(&norm, h)).sqrt());
    }
    worst
}

fn c1_identity_pair() -> Outcome {
    let g = space();
    let k = goursat_solve(&PotentialSpec::Zero, &g).map_err(e)?;
    let k_zero = k.values().iter().all(|v| *v == 0.0);
    let p = pair(0.0, K_MAX, N_K);
    let v = build_v(&p).map_err(e)?;
    let mut v_err = 0.0f64;
    for f in corpus::standard(X_MAX) {
        let x = f.sample(&g);
        v_err = v_err.max(rel_l2_plain(&v.apply(&x).map_err(e)?, &x, g.step()));
    }
    let fact = factorization_check(&p, &k, &corpus::standard(X_MAX)).map_err(e)?.worst;
    Ok((
        k_zero && v_err <= 1e-3 && fact <= 1e-3,
        format!("K==0 {k_zero}, V vs I {v_err:.3e}, factorizations {fact:.3e} (tol 1e-3)"),
    ))
}

fn c2_eigen_order() -> Outcome {
    let mut errs = Vec::new();
    for n in [129usize, 257, 513] {
        let g = SpaceGrid::new(X_MAX, n).map_err(e)?;
        let mut worst = 0.0f64;
        for k in [1.0, 2.0, 3.0, 4.0, 5.0] {
            let psi = eigen_column_fixed(&PotentialSpec::constant(1.0), &g, k, 1).map_err(e)?;
            for (v, &x) in psi.iter().zip(g.nodes()) {
                worst = worst.max((v - psi_const(1.0, k, x)).abs());
            }
        }
        errs.push(worst);
    }
    let ratio = errs[0] / errs[2];
    Ok((
        ratio >= 12.0,
        format!("errors {:.2e} {:.2e} {:.2e}, ratio {ratio:.1} (need >= 12)", errs[0], errs[1], errs[2]),
    ))
}

fn c3_transmutation_identity() -> Outcome {
    let g = space();
    let k = goursat_solve(&PotentialSpec::constant(1.0), &g).map_err(e)?;
    let mut worst = 0.0f64;
    for kk in [1.0, 2.0, 3.0, 5.0] {
        let phi: Vec<f64> = g.nodes().iter().map(|x| (kk * x).cos()).collect();
        let lhs = k.apply(&phi).map_err(e)?;
        for (v, &x) in lhs.iter().zip(g.nodes()) {
            worst = worst.max((v - psi_const(1.0, kk, x)).abs());
        }
    }
    Ok((worst <= 1e-3, format!("sup |(I+K)phi - psi_2| = {worst:.3e} (tol 1e-3)")))
}

fn c4_kernel_cross_method() -> Outcome {
    let g = space();
    let mut ok = true;
    let mut parts = Vec::new();
    for c in [0.5, 1.0] {
        let p = pair(c, K_MAX, N_K);
        let goursat = goursat_solve(&PotentialSpec::constant(c), &g).map_err(e)?;
        let spectral = spectral_kernel_extrapolated(&p.eig1, &p.eig2, &p.gamma1, 0.004).map_err(e)?;
        let cross = kernel_cross_deviation(&spectral, &goursat, 0.2).map_err(e)?;
        let (mut diff, mut scale) = (0.0f64, 0.0f64);
        for (i, &x) in g.nodes().iter().enumerate() {
            for (j, &t) in g.nodes()[..=i].iter().enumerate() {
                let want = kernel_const(c, x, t);
                diff = diff.max((goursat.get(i, j) - want).abs());
                scale = scale.max(want.abs());
            }
        }
        let oracle = diff / scale;
        ok &= cross <= 0.05 && oracle <= 1e-3;
        parts.push(format!("c={c}: cross {cross:.3e}, Goursat vs closed form {oracle:.2e} rel"));
    }
    Ok((ok, format!("{} (tol 0.05)", parts.join("; "))))
}

/// Worst relative Parseval defect over the corpus, left side by direct quadrature.
fn parseval_worst(p: &OperatorPair, shifted: bool) -> Result<f64, String> {
    let g = space();
    let (eig, measure) = if shifted { (&p.eig2, &p.gamma2) } else { (&p.eig1, &p.gamma1) };
    let w = measure.weights();
    let mut worst = 0.0f64;
    for f in corpus::standard(X_MAX) {
        let x = f.sample(&g);
        let sq: Vec<f64> = x.iter().map(|v| v * v).collect();
        let lhs = trapz(&sq, g.step());
        let t = forward(&x, eig).map_err(e)?;
        let rhs: f64 = t.values().iter().zip(&w).map(|(v, w)| v * v * w).sum();
        worst = worst.max((lhs - rhs).abs() / lhs);
    }
    Ok(worst)
}

fn c5_parseval() -> Outcome {
    let cosine = parseval_worst(&pair(0.0, 200.0, N_K), false)?;
    let shifted = parseval_worst(&pair(1.0, 200.0, 8193), true)?;
    Ok((
        cosine <= 1e-2 && shifted <= 2e-2,
        format!("10 members, k_max 200: q=0 {cosine:.3e} (tol 1e-2), q=1 {shifted:.3e} (tol 2e-2, n_k 8193)"),
    ))
}

fn c6_intertwining() -> Outcome {
    let v = build_v(&pair(1.0, K_MAX, N_K)).map_err(e)?;
    let r = intertwining(&v, 1.0, &corpus::interior(X_MAX));
    Ok((r <= 1e-2, format!("||V Q2 f - Q1 V f|| / ||f|| = {r:.3e} (tol 1e-2)")))
}

fn matched_v() -> Result<(OperatorPair, DiscreteOperator), String> {
    let g = space();
    let p = OperatorPair::new(
        PotentialSpec::Zero,
        PotentialSpec::constant(1.0),
        &g,
        &SpectralGrid::matched(&g).map_err(e)?,
    )
    .map_err(e)?;
    let v = build_v(&p).map_err(e)?;
    Ok((p, v))
}

fn c7_triangularity() -> Outcome {
    let (_, v) = matched_v()?;
    let h = v.grid().step();
    let rep = triangularity_probe(&v, 2.0, &[16.0 * h, 8.0 * h, 4.0 * h], 0.1).map_err(e)?;
    let ratios: Vec<String> = rep.rows.iter().map(|r| format!("{:.2e}", r.ratio)).collect();
    let last = rep.rows.last().map_or(f64::NAN, |r| r.ratio);
    Ok((rep.monotone && last <= 0.02, format!("mass ratios {} monotone {} (tol 2%)", ratios.join(" > "), rep.monotone)))
}

fn c8_pwp() -> Outcome {
    let (p, v) = matched_v()?;
    let rep = pwp_check(&p, &v, &corpus::paley_wiener(&[1.0, 2.0, 4.0]), &default_tau_grid(), PwTolerances::default())
        .map_err(e)?;
    let supp = rep.rows.iter().all(|r| r.support_ok);
    let ty = rep.rows.iter().all(|r| r.type_ok);
    let conv = rep.rows.iter().all(|r| r.converse_ok);
    let worst = rep.rows.iter().map(|r| (r.sigma_type - r.sigma_supp_in).abs()).fold(0.0, f64::max);
    Ok((
        rep.pass,
        format!(
            "{} members: support {supp}, type {ty} (worst |type - sigma| {worst:.3}), converse {conv}",
            rep.rows.len()
        ),
    ))
}

fn c9_kernel_inversion() -> Outcome {
    let g = space();
    let k = goursat_solve(&PotentialSpec::constant(1.0), &g).map_err(e)?;
    let l = invert_kernel(&k).map_err(e)?;
    let volterra = inversion_kernel_check(&k, &l, &corpus::standard(X_MAX)).map_err(e)?.worst;
    let rep = factorization_check(&pair(1.0, K_MAX, 4097), &k, &corpus::interior(X_MAX)).map_err(e)?;
    let spectral = rep.rows.iter().map(|r| r.bcal_kernel_vs_spectral).fold(0.0, f64::max);
    Ok((
        volterra <= 1e-6 && spectral <= 1e-2,
        format!("(I+L)(I+K) - I: {volterra:.2e} (tol 1e-6); Bcal vs I+L at n_k 4097: {spectral:.3e} (tol 1e-2)"),
    ))
}

fn c10_bcal_sqrt() -> Outcome {
    let b = build_bcal_sqrt(&pair(1.0, K_MAX, N_K)).map_err(e)?;
    let r = intertwining(&b, 1.0, &corpus::interior(X_MAX));
    Ok((r <= 1e-2, format!("||Q1 Bcal f - Bcal Q2 f|| / ||f|| = {r:.3e} (tol 1e-2)")))
}

fn c11_levitan() -> Outcome {
    let zero = Complex64::new(0.0, 0.0);
    let z = [zero, Complex64::new(0.1, -0.05), Complex64::new(-0.2, 0.1)];
    let contour = ContourSpec::new(zero, 0.5, 64).map_err(e)?;
    let h = 0.1;
    let mult = levitan_coefficients(&Multiplication, &contour, 6, &z).map_err(e)?;
    let deriv = levitan_coefficients(&Derivative::default(), &contour, 6, &z).map_err(e)?;
    let shift = levitan_coefficients(&Shift { h }, &contour, 6, &z).map_err(e)?;
    let mut oracle = 0.0f64;
    for (p, zp) in z.iter().enumerate() {
        for j in 0..=6usize {
            let fact: f64 = (1..=j).map(|i| i as f64).product();
            let m_want = if j == 0 { *zp } else { zero };
            let d_want = Complex64::new(if j == 1 { 1.0 } else { 0.0 }, 0.0);
            oracle = oracle
                .max((mult.a[p][j] - m_want).norm())
                .max((deriv.a[p][j] - d_want).norm())
                .max((shift.a[p][j] - h.powi(j as i32) / fact).norm());
        }
    }
    let pts = [zero, Complex64::new(0.02, 0.01)];
    let big = levitan_coefficients(&Shift { h }, &contour, 6, &pts).map_err(e)?;
    let small =
        levitan_coefficients(&Shift { h }, &ContourSpec::new(zero, 0.25, 64).map_err(e)?, 6, &pts).map_err(e)?;
    let radius = big.max_difference(&small);
    Ok((
        oracle <= 1e-8 && radius <= 1e-8,
        format!("oracle error {oracle:.2e}, radius dependence {radius:.2e} (tol 1e-8)"),
    ))
}

fn c12_carleman() -> Outcome {
    let rep = levitan::carleman_residual_check(&pair(1.0, K_MAX, N_K), &corpus::standard(X_MAX), 5.0).map_err(e)?;
    Ok((
        rep.worst <= 1e-2 && rep.g_finite,
        format!("worst {:.3e} (tol 1e-2), ||g|| {:.3e} finite {}", rep.worst, rep.g_norm, rep.g_finite),
    ))
}

fn c13_determinism() -> Outcome {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/const-shift.toml");
    let s = Scenario::load(&root).map_err(e)?;
    let tmp = tempfile::tempdir().map_err(e)?;
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    scenario::run(&s, &a, Format::Csv).map_err(e)?;
    scenario::run(&s, &b, Format::Csv).map_err(e)?;
    let mut names: Vec<_> = std::fs::read_dir(&a).map_err(e)?.map(|d| d.unwrap().file_name()).collect();
    names.sort();
    let mut same = !names.is_empty();
    for n in &names {
        same &= std::fs::read(a.join(n)).map_err(e)? == std::fs::read(b.join(n)).map_err(e)?;
    }
    Ok((same, format!("{} files compared across two runs of {}", names.len(), s.name)))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 13] = [
        ("identity pair", c1_identity_pair),
        ("eigen solver order", c2_eigen_order),
        ("transmutation identity", c3_transmutation_identity),
        ("kernel cross-method", c4_kernel_cross_method),
        ("parseval", c5_parseval),
        ("intertwining V", c6_intertwining),
        ("triangularity probe", c7_triangularity),
        ("paley-wiener transfer", c8_pwp),
        ("kernel inversion", c9_kernel_inversion),
        ("intertwining Bcal sqrt", c10_bcal_sqrt),
        ("levitan coefficients", c11_levitan),
        ("carleman identity", c12_carleman),
        ("determinism", c13_determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = match run() {
            Ok(r) => r,
            Err(msg) => (false, format!("error: {msg}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {:<24} {} {detail} [{:.1?}]",
            i + 1,
            name,
            if pass { "PASS" } else { "FAIL" },
            start.elapsed()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
