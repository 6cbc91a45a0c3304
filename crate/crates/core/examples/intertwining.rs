// The operator `V = Q_1^{-1} Q_2`: intertwining residuals and agreement with
// the adjoint kernel operator.

use transmute_lab::corpus;
use transmute_lab::grids::{SpaceGrid, SpectralGrid};
use transmute_lab::kernels::goursat_solve;
use transmute_lab::potential::PotentialSpec;
use transmute_lab::transmute::{apply_b_star, build_v, intertwining_residual, rel_l2, OperatorPair};

pub fn run_example() -> transmute_lab::Result<()> {
    let space = SpaceGrid::new(8.0, 512)?;
    let spectral = SpectralGrid::new(100.0, 512)?;
    let q2 = PotentialSpec::constant(1.0);
    let pair = OperatorPair::new(PotentialSpec::Zero, q2.clone(), &space, &spectral)?;
    let v = build_v(&pair)?;
    let k = goursat_solve(&q2, &space)?;
    println!("{:<40} {:>12} {:>12}", "function", "intertwine", "V vs B*");
    for f in corpus::interior(8.0) {
        let x = f.sample(&space);
        let r = intertwining_residual(&v, &pair.q1, &pair.q2, &x)?;
        let d = rel_l2(&v.apply(&x)?, &apply_b_star(&k, &x)?, &x, space.weights());
        println!("{:<40} {r:>12.3e} {d:>12.3e}", f.label());
    }
    Ok(())
}

fn main() -> transmute_lab::Result<()> {
    run_example()
}
