// Exponential type of transforms along the imaginary axis, support transfer
// through `V`, and the delta-probe triangularity test.

use transmute_lab::corpus;
use transmute_lab::grids::{SpaceGrid, SpectralGrid};
use transmute_lab::paleywiener::{classical_baseline, default_tau_grid, pwp_check, triangularity_probe, PwTolerances};
use transmute_lab::potential::PotentialSpec;
use transmute_lab::transmute::{build_v, OperatorPair};

pub fn run_example() -> transmute_lab::Result<()> {
    let space = SpaceGrid::new(8.0, 512)?;
    let tau = default_tau_grid();
    for f in corpus::paley_wiener(&[1.0, 2.0, 4.0]) {
        let (s, t) = classical_baseline(&f.sample(&space), &space, &tau)?;
        println!("{:<40} support {:.3} type {:.3}", f.label(), s.sigma_supp, t.sigma_type);
    }
    let pair =
        OperatorPair::new(PotentialSpec::Zero, PotentialSpec::constant(1.0), &space, &SpectralGrid::matched(&space)?)?;
    let v = build_v(&pair)?;
    let rep = pwp_check(&pair, &v, &corpus::paley_wiener(&[1.0, 2.0, 4.0]), &tau, PwTolerances::default())?;
    for r in &rep.rows {
        println!("{:<40} supp(Vf) {:.3} type(Q2 f) {:.3} ok {}", r.function, r.sigma_supp_out, r.sigma_type, r.pass);
    }
    let h = space.step();
    let probe = triangularity_probe(&v, 2.0, &[16.0 * h, 8.0 * h, 4.0 * h], 0.1)?;
    for r in &probe.rows {
        println!("probe radius {:.4}: mass beyond {:.3e}", r.radius, r.ratio);
    }
    Ok(())
}

fn main() -> transmute_lab::Result<()> {
    run_example()
}
