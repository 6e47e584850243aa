//! V-norm errors on nested grids and the fitted log-log slope (about 2).
//!
//! cargo run --release --example convergence

use helmsaddle::verify::{convergence_study, Analytic};
use helmsaddle::{c64, BoundaryData, CoefficientModel, ProblemTemplate, Rect};

fn main() -> helmsaddle::Result<()> {
    let template = ProblemTemplate::new(
        Rect::unit(),
        CoefficientModel::constant(c64(1.0, 1.0), c64(2.0, 2.0)),
        BoundaryData::dirichlet(|x, y| c64((x + y).exp(), 0.0)),
    );
    let study = convergence_study(&template, &[17, 33, 65], Some(&Analytic::exp_sum()))?;
    print!("{}", study.to_csv());
    Ok(())
}
