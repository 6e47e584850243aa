//! Outer PCG iterations stay flat as the grid is refined.
//!
//! cargo run --release --example pcg_sweep

use helmsaddle::verify::pcg_iteration_sweep;
use helmsaddle::{c64, BoundaryData, CoefficientModel, ProblemTemplate, Rect};

fn main() {
    let template = ProblemTemplate::new(
        Rect::unit(),
        CoefficientModel::constant(c64(2.0, 0.003), c64(-3.0, 0.0004)),
        BoundaryData::dirichlet(|x, y| c64((std::f64::consts::PI * x).sin() + y, x * y)),
    );
    let sweep = pcg_iteration_sweep(&template, &[20, 40, 80], &[1e-4, 1e-8]);
    print!("{}", sweep.to_csv());
}
