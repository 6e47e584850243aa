//! Manufactured Dirichlet problem: u = e^{x+y} with L = 1+i, M = 2+2i.
//!
//! cargo run --release --example solve_dirichlet

use helmsaddle::verify::{v_norm_error, Analytic};
use helmsaddle::{c64, solve, BoundaryData, CoefficientField, Grid, ProblemSpec, Rect};

fn main() -> helmsaddle::Result<()> {
    let grid = Grid::square(Rect::unit(), 33)?;
    let field = CoefficientField::constant(&grid, c64(1.0, 1.0), c64(2.0, 2.0));
    let bc = BoundaryData::dirichlet(|x, y| c64((x + y).exp(), 0.0));
    let sol = solve(&ProblemSpec::new(grid, field, bc))?;

    let err = v_norm_error(&sol, &Analytic::exp_sum(), 3);
    println!("theta applied     {:.6}", sol.theta_applied);
    println!("outer iterations  {}", sol.stats.outer_iterations);
    println!("block residual    {:.3e}", sol.stats.block_residual);
    println!("V-norm error^2    {:.6e}", err.v2);
    println!("u(0.5, 0.5)       {:.10}  (exact {:.10})", sol.value_at(0.5, 0.5)?, 1f64.exp());
    Ok(())
}
