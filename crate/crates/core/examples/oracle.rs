//! The real block solve against an independent complex Galerkin solve.
//!
//! cargo run --release --example oracle

use helmsaddle::verify::galerkin_oracle;
use helmsaddle::{c64, solve, BoundaryData, CoefficientModel, Grid, ProblemSpec, Rect, SolutionField};

fn main() -> helmsaddle::Result<()> {
    let grid = Grid::square(Rect::unit(), 12)?;
    let field = CoefficientModel::Random { seed: 3, lo: 0.5, hi: 4.0 }.sample(&grid)?;
    let cases = [
        ("dirichlet", BoundaryData::dirichlet(|x, y| c64(x * y, x - y))),
        ("neumann", BoundaryData::neumann(|x, y| c64(1.0 + x, y))),
        ("robin", BoundaryData::robin(c64(-1.0, 0.5), |x, _| c64(x, 1.0))),
    ];
    for (name, bc) in cases {
        let sol = solve(&ProblemSpec::new(grid.clone(), field.clone(), bc.clone()))?;
        let oracle = SolutionField::from_nodal(grid.clone(), galerkin_oracle(&grid, &field, &bc)?)?;
        println!("{name:10} relative nodal difference {:.2e}", sol.max_rel_diff(&oracle));
    }
    Ok(())
}
