// Parseval identity for the cosine transform and the shifted transform.

use transmute_lab::corpus;
use transmute_lab::grids::{SpaceGrid, SpectralGrid};
use transmute_lab::potential::PotentialSpec;
use transmute_lab::transforms::{forward, inverse, parseval_check, rel_sup};
use transmute_lab::transmute::OperatorPair;

pub fn run_example() -> transmute_lab::Result<()> {
    let space = SpaceGrid::new(8.0, 512)?;
    let spectral = SpectralGrid::new(200.0, 4097)?;
    let pair = OperatorPair::new(PotentialSpec::Zero, PotentialSpec::constant(1.0), &space, &spectral)?;
    println!("{:<40} {:>10} {:>10} {:>10}", "function", "cosine", "shifted", "roundtrip");
    for f in corpus::standard(8.0) {
        let x = f.sample(&space);
        let p = parseval_check(&x, &x, &pair.eig1, &pair.gamma1)?;
        let q = parseval_check(&x, &x, &pair.eig2, &pair.gamma2)?;
        let back = inverse(&forward(&x, &pair.eig2)?, &pair.eig2, &pair.gamma2)?;
        println!("{:<40} {:>10.2e} {:>10.2e} {:>10.2e}", f.label(), p.rel_err, q.rel_err, rel_sup(&back, &x));
    }
    Ok(())
}

fn main() -> transmute_lab::Result<()> {
    run_example()
}
