// Generalized eigenfunctions of `-D^2 + c` against the closed form.

use transmute_lab::eigen::{constant_family_psi, eigen_solve};
use transmute_lab::grids::{SpaceGrid, SpectralGrid};
use transmute_lab::potential::PotentialSpec;

pub fn run_example() -> transmute_lab::Result<()> {
    let space = SpaceGrid::new(8.0, 512)?;
    let spectral = SpectralGrid::new(20.0, 81)?;
    let c = 1.0;
    let table = eigen_solve(&PotentialSpec::constant(c), &space, &spectral)?;
    println!("{:>6} {:>12}", "k", "max error");
    for j in (0..spectral.len()).step_by(10) {
        let k = spectral.nodes()[j];
        let err = table
            .column(j)
            .iter()
            .zip(space.nodes())
            .map(|(v, &x)| (v - constant_family_psi(c, k, x)).abs())
            .fold(0.0, f64::max);
        println!("{k:>6.2} {err:>12.3e}");
    }
    Ok(())
}

fn main() -> transmute_lab::Result<()> {
    run_example()
}
