//! Solutions for rotations e^{iθ} across the admissible arc agree with the
//! unrotated one.
//!
//! cargo run --release --example rotation_sweep

use helmsaddle::verify::rotation_sweep;
use helmsaddle::{c64, BoundaryData, CoefficientModel, ProblemTemplate, Rect};

fn main() -> helmsaddle::Result<()> {
    let template = ProblemTemplate::new(
        Rect::unit(),
        CoefficientModel::constant(c64(3.0, 2.0), c64(1.0, 4.0)),
        BoundaryData::dirichlet(|x, y| c64((1.5 * x).cos() * (1.5 * y).cos(), x.sin() * y.sin())),
    );
    let (lo, hi) = template.square(17)?.field.admissible_arc()?;
    let thetas: Vec<f64> = (1..12).map(|k| lo + (hi - lo) * k as f64 / 12.0).collect();
    let sweep = rotation_sweep(&template, 17, &thetas)?;
    print!("{}", sweep.to_csv());
    println!("max difference from θ = 0: {:.2e}", sweep.max_diff());
    Ok(())
}
