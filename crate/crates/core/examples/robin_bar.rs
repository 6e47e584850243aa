//! Two-phase material with Robin data: a diagonal bar where Re L < 0.
//!
//! cargo run --release --example robin_bar

use helmsaddle::coeff::LCoeff;
use helmsaddle::{c64, solve, BoundaryData, CoefficientModel, ProblemTemplate, Rect};

fn main() -> helmsaddle::Result<()> {
    let m = c64(63.9923, 0.7039);
    let model = CoefficientModel::Bar {
        from: [0.0, 1.0],
        to: [1.0, 0.0],
        width: 0.25,
        inside: (LCoeff::scalar(c64(-0.5, 0.0027)), m),
        outside: (LCoeff::scalar(c64(1.0, 0.0027)), m),
    };
    let bc = BoundaryData::robin(c64(-1.0, 1.0 / 3.0), |_, _| c64(0.0, 3.333));
    let template = ProblemTemplate::new(Rect::unit(), model, bc);

    let sol = solve(&template.square(33)?)?;
    print!("{}", sol.metadata());
    for y in [0.25, 0.5, 0.75] {
        println!("u(0.5, {y}) = {:.6}", sol.value_at(0.5, y)?);
    }
    Ok(())
}
