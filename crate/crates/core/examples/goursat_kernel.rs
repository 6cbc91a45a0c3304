// Kernel `K(x,t)` by characteristic marching, its Volterra inverse, and the
// identity `(I + K) cos(k .) = psi(., k)`.

use transmute_lab::corpus;
use transmute_lab::grids::SpaceGrid;
use transmute_lab::kernels::{goursat_solve, inversion_kernel_check, invert_kernel, transmutation_identity_check};
use transmute_lab::potential::PotentialSpec;

pub fn run_example() -> transmute_lab::Result<()> {
    let space = SpaceGrid::new(8.0, 512)?;
    let q = PotentialSpec::constant(1.0);
    let k = goursat_solve(&q, &space)?;
    let i = space.nearest_index(2.0);
    let x = space.nodes()[i];
    println!("K(x, x) - x/2 at x = {x:.3}: {:.2e}", k.get(i, i) - 0.5 * x);
    for (kk, dev) in transmutation_identity_check(&k, &q, &[1.0, 2.0, 3.0, 5.0])? {
        println!("k = {kk}: sup |(I+K)phi - psi| = {dev:.2e}");
    }
    let l = invert_kernel(&k)?;
    let rep = inversion_kernel_check(&k, &l, &corpus::standard(8.0))?;
    println!("(I+L)(I+K) - I on the corpus: {:.2e}", rep.worst);
    Ok(())
}

fn main() -> transmute_lab::Result<()> {
    run_example()
}
