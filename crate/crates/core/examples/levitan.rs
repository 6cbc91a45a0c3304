// Local expansion coefficients of operators on analytic functions, and the
// expansion of `psi_2` in spectral derivatives of `psi_1`.

use num_complex::Complex64;
use transmute_lab::grids::{SpaceGrid, SpectralGrid};
use transmute_lab::levitan::{
    eigenfunction_expansion_check, levitan_coefficients, ConstantPairTransfer, ContourSpec, Shift, DEFAULT_J_MAX,
};
use transmute_lab::potential::PotentialSpec;
use transmute_lab::transmute::OperatorPair;

pub fn run_example() -> transmute_lab::Result<()> {
    let z = [Complex64::new(0.0, 0.0)];
    let contour = ContourSpec::new(z[0], 0.5, 64)?;
    let shift = levitan_coefficients(&Shift { h: 0.1 }, &contour, 5, &z)?;
    for (j, a) in shift.a[0].iter().enumerate() {
        println!("shift a_{j} = {:.6e}", a.re);
    }
    let q2 = PotentialSpec::constant(1.0);
    let op = ConstantPairTransfer::for_pair(&PotentialSpec::Zero, &q2)?;
    let contour = ContourSpec::new(Complex64::new(4.0, 0.0), 2.0, 64)?;
    let coeffs = levitan_coefficients(&op, &contour, DEFAULT_J_MAX, &[Complex64::new(4.0, 0.0)])?;
    let space = SpaceGrid::new(8.0, 512)?;
    let pair = OperatorPair::new(PotentialSpec::Zero, q2, &space, &SpectralGrid::new(100.0, 512)?)?;
    for row in eigenfunction_expansion_check(&pair, &coeffs, &[0.5, 1.0, 1.5, 2.0])? {
        let shown: Vec<String> = row.residuals.iter().map(|r| format!("{r:.1e}")).collect();
        println!("k = {}: residual by order {}", row.k, shown.join(" "));
    }
    Ok(())
}

fn main() -> transmute_lab::Result<()> {
    run_example()
}
