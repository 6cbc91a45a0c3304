// Transmutations built from a measure multiplier: with `gamma_2 / gamma_1` the
// result inverts `B`, with its square root it still intertwines.

use transmute_lab::corpus;
use transmute_lab::grids::{SpaceGrid, SpectralGrid};
use transmute_lab::kernels::goursat_solve;
use transmute_lab::potential::PotentialSpec;
use transmute_lab::transmute::{build_bcal_sqrt, factorization_check, intertwining_residual, OperatorPair};

pub fn run_example() -> transmute_lab::Result<()> {
    let space = SpaceGrid::new(8.0, 512)?;
    let q2 = PotentialSpec::constant(1.0);
    let k = goursat_solve(&q2, &space)?;
    let fine = OperatorPair::new(PotentialSpec::Zero, q2.clone(), &space, &SpectralGrid::new(100.0, 4097)?)?;
    let rep = factorization_check(&fine, &k, &corpus::interior(8.0))?;
    for r in &rep.rows {
        println!("{:<40} Bcal vs I+L {:.3e}", r.function, r.bcal_kernel_vs_spectral);
    }
    let pair = OperatorPair::new(PotentialSpec::Zero, q2, &space, &SpectralGrid::new(100.0, 512)?)?;
    let b = build_bcal_sqrt(&pair)?;
    for f in corpus::interior(8.0) {
        let r = intertwining_residual(&b, &pair.q1, &pair.q2, &f.sample(&space))?;
        println!("{:<40} sqrt multiplier intertwining {r:.3e}", f.label());
    }
    Ok(())
}

fn main() -> transmute_lab::Result<()> {
    run_example()
}
