// Spectral construction of the kernel with a mollifier ladder, compared with
// the Goursat kernel away from the diagonal.

use transmute_lab::grids::{SpaceGrid, SpectralGrid};
use transmute_lab::kernels::{goursat_solve, kernel_cross_deviation, spectral_kernel, spectral_kernel_extrapolated};
use transmute_lab::potential::PotentialSpec;
use transmute_lab::transmute::OperatorPair;

pub fn run_example() -> transmute_lab::Result<()> {
    let space = SpaceGrid::new(8.0, 512)?;
    let spectral = SpectralGrid::new(100.0, 512)?;
    for c in [0.5, 1.0] {
        let q = PotentialSpec::constant(c);
        let pair = OperatorPair::new(PotentialSpec::Zero, q.clone(), &space, &spectral)?;
        let goursat = goursat_solve(&q, &space)?;
        for eps in [0.016, 0.008, 0.004] {
            let raw = spectral_kernel(&pair.eig1, &pair.eig2, &pair.gamma1, eps)?;
            println!("c = {c} eps = {eps}: {:.3e}", kernel_cross_deviation(&raw, &goursat, 0.2)?);
        }
        let ext = spectral_kernel_extrapolated(&pair.eig1, &pair.eig2, &pair.gamma1, 0.004)?;
        println!("c = {c} extrapolated: {:.3e}", kernel_cross_deviation(&ext, &goursat, 0.2)?);
    }
    Ok(())
}

fn main() -> transmute_lab::Result<()> {
    run_example()
}
