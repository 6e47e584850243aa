//! Eigenvalues of the constitutive matrix and of the Schur complement,
//! with and without the A1 preconditioner.
//!
//! cargo run --release --example spectrum

use helmsaddle::verify::{constitutive_spectrum, schur_spectrum};
use helmsaddle::{c64, BoundaryData, CoefficientField, CoefficientModel, Grid, ProblemSpec, Rect, RotationPolicy};

fn main() -> helmsaddle::Result<()> {
    // One element with L = 3+4i, M = 5+12i: eigenvalues ±|L| (twice) and ±|M|.
    let grid = Grid::square(Rect::unit(), 2)?;
    let field = CoefficientField::constant(&grid, c64(3.0, 4.0), c64(5.0, 12.0));
    println!("constitutive: {:?}", constitutive_spectrum(&field, 0));

    let grid = Grid::square(Rect::unit(), 8)?;
    let field = CoefficientModel::Random { seed: 7, lo: 0.0, hi: 10.0 }.sample(&grid)?;
    let spec = ProblemSpec::new(grid, field, BoundaryData::dirichlet(|_, _| c64(1.0, 0.0))).with_rotation(RotationPolicy::Off);
    let (_, _, sys) = spec.assemble()?;
    let s = schur_spectrum(&sys)?;
    println!("raw S:      [{:.4}, {:.4}]  spread {:.3}", s.raw[0], s.raw[s.raw.len() - 1], s.raw_spread());
    println!(
        "A1^-1 S:    [{:.4}, {:.4}]  spread {:.3}",
        s.preconditioned[0],
        s.preconditioned[s.preconditioned.len() - 1],
        s.preconditioned_spread()
    );
    Ok(())
}
