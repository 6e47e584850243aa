//! Problem description from a TOML string, as read by the command-line tool.
//!
//! cargo run --release --example config_file

use helmsaddle::config::parse_config;
use helmsaddle::solve;

const PROBLEM: &str = r#"
[domain]
n = 41

[coefficients]
model = "layered"
axis = "y"
interface = 0.5
lower = { L = "3+2i", M = "1+4i" }
upper = { L = "0.5+0.001i", M = "3+7i" }

[boundary]
kind = "dirichlet"
f = "cos(1.5x)cos(1.5y) + i sin(x)sin(y)"

[solver]
mode = "direct"
"#;

fn main() {
    let cfg = match parse_config(PROBLEM) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(2);
        }
    };
    let sol = solve(&cfg.template.instantiate(cfg.nx, cfg.ny).expect("valid grid")).expect("solve");
    print!("{}", sol.metadata());

    let typo = PROBLEM.replace("interface", "interfac");
    println!("with a typo: {}", parse_config(&typo).unwrap_err());
}
