//! Acoustic plane waves at increasing frequency with ωh held near 1.
//!
//! cargo run --release --example omega_sweep

use helmsaddle::verify::omega_sweep;
use helmsaddle::{c64, Rect};

fn main() -> helmsaddle::Result<()> {
    let sweep = omega_sweep(Rect::unit(), c64(2.0, 2.0), c64(1.0, -3.0), &[1.0, 5.0, 10.0, 20.0, 30.0], 6.0)?;
    print!("{}", sweep.to_csv());
    Ok(())
}
