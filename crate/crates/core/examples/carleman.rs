// Transform of `q_2` from the transform of `q_1` through the eigenfunction
// residual kernel.

use transmute_lab::corpus;
use transmute_lab::grids::{SpaceGrid, SpectralGrid};
use transmute_lab::levitan::carleman_residual_check;
use transmute_lab::potential::PotentialSpec;
use transmute_lab::transmute::OperatorPair;

pub fn run_example() -> transmute_lab::Result<()> {
    let space = SpaceGrid::new(8.0, 512)?;
    let pair =
        OperatorPair::new(PotentialSpec::Zero, PotentialSpec::constant(1.0), &space, &SpectralGrid::new(100.0, 512)?)?;
    let rep = carleman_residual_check(&pair, &corpus::standard(8.0), 5.0)?;
    for r in &rep.rows {
        println!("{:<40} {:.3e}", r.function, r.deviation);
    }
    println!("||g|| = {:.3e} (half band {:.3e}), finite {}", rep.g_norm, rep.g_norm_half, rep.g_finite);
    Ok(())
}

fn main() -> transmute_lab::Result<()> {
    run_example()
}
