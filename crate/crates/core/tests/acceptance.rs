//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines are always printed; exits nonzero if any fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use helmsaddle::assemble::BoundaryData;
use helmsaddle::coeff::{CoefficientField, CoefficientModel, LCoeff};
use helmsaddle::solve::{saddle_functional, solve, ProblemSpec, ProblemTemplate, RotationPolicy, SolutionField};
use helmsaddle::verify::{
    constitutive_moduli, constitutive_spectrum, convergence_study, galerkin_oracle, omega_sweep, pcg_iteration_sweep,
    rotation_sweep, schur_spectrum, Analytic, RotationStatus,
};
use helmsaddle::{Complex64, Grid, Rect};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Outcome of one criterion: pass flag and a one-line summary.
type Outcome = Result<(bool, String), String>;

// Block residuals of every solve made by the criteria, for criterion 3.
struct Residuals(Vec<(String, f64)>);

impl Residuals {
    fn record(&mut self, label: impl Into<String>, sol: &SolutionField) {
        self.0.push((label.into(), sol.stats.block_residual));
    }
}

fn manufactured() -> ProblemTemplate {
    ProblemTemplate::new(
        Rect::unit(),
        CoefficientModel::constant(c(1.0, 1.0), c(2.0, 2.0)),
        BoundaryData::dirichlet(|x, y| c((x + y).exp(), 0.0)),
    )
}

fn criterion_1(res: &mut Residuals) -> Outcome {
    let t0 = Instant::now();
    let study = convergence_study(&manufactured(), &[17, 33, 65], Some(&Analytic::exp_sum())).map_err(|e| e.to_string())?;
    let elapsed = t0.elapsed();
    for n in [17, 33, 65] {
        let sol = solve(&manufactured().square(n).unwrap()).map_err(|e| e.to_string())?;
        res.record(format!("manufactured N={n}"), &sol);
    }
    let slope = study.slope.ok_or("slope undefined")?;
    // Published errors at N = 30 and N = 100.
    let table = ((99.0f64 / 29.0).ln(), (1.0402e-4f64 / 9.0364e-6).ln());
    let table_slope = table.1 / table.0;
    let ok = (1.8..=2.2).contains(&slope) && elapsed < Duration::from_secs(30);
    let errs: Vec<String> = study.rows.iter().map(|r| format!("{:.3e}", r.report.v2)).collect();
    Ok((
        ok,
        format!(
            "slope {slope:.4} (V² errors {}), reference endpoint slope {table_slope:.3}, {:.2}s",
            errs.join(", "),
            elapsed.as_secs_f64()
        ),
    ))
}

fn criterion_2(res: &mut Residuals) -> Outcome {
    let t0 = Instant::now();
    let bcs = [
        ("dirichlet", BoundaryData::dirichlet(|x, y| c((1.5 * x).cos() * (1.5 * y).cos(), x.sin() * y.sin()))),
        ("neumann", BoundaryData::neumann(|x, y| c(x - y, 1.0 + x * y))),
        ("robin", BoundaryData::robin(c(-1.0, 1.0 / 3.0), |_, _| c(0.0, 3.333))),
    ];
    let grid = Grid::square(Rect::unit(), 12).unwrap();
    let mut worst: f64 = 0.0;
    for (name, bc) in &bcs {
        for seed in 0..5 {
            let field = CoefficientModel::Random { seed: 100 + seed, lo: 0.0, hi: 10.0 }
                .sample(&grid)
                .map_err(|e| e.to_string())?;
            let spec = ProblemSpec::new(grid.clone(), field.clone(), bc.clone()).with_rotation(RotationPolicy::Off);
            let sol = solve(&spec).map_err(|e| format!("{name} seed {seed}: {e}"))?;
            res.record(format!("oracle {name} seed {seed}"), &sol);
            let oracle = galerkin_oracle(&grid, &field, bc).map_err(|e| e.to_string())?;
            let diff = sol.max_rel_diff(&SolutionField::from_nodal(grid.clone(), oracle).unwrap());
            worst = worst.max(diff);
        }
    }
    let elapsed = t0.elapsed();
    Ok((
        worst <= 1e-8 && elapsed < Duration::from_secs(60),
        format!("worst relative nodal difference {worst:.3e} over 15 solves, {:.2}s", elapsed.as_secs_f64()),
    ))
}

fn criterion_3(res: &Residuals) -> Outcome {
    let (label, worst) = res
        .0
        .iter()
        .cloned()
        .fold((String::new(), 0.0), |acc, (l, r)| if r > acc.1 { (l, r) } else { acc });
    Ok((
        worst <= 1e-9 && !res.0.is_empty(),
        format!("worst block residual {worst:.3e} ({label}) over {} solves", res.0.len()),
    ))
}

fn criterion_4() -> Outcome {
    let grid = Grid::square(Rect::unit(), 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let mut draw = || c(rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0));
        let field = CoefficientField::from_elements(vec![LCoeff::diagonal(draw(), draw())], vec![draw()])
            .map_err(|e| e.to_string())?;
        let ev = constitutive_spectrum(&field, 0);
        for (a, b) in ev.iter().zip(constitutive_moduli(&field, 0)) {
            worst = worst.max((a - b).abs());
        }
    }
    let field = CoefficientField::constant(&grid, c(3.0, 4.0), c(5.0, 12.0));
    let ev = constitutive_spectrum(&field, 0);
    let expected = [-13.0, -5.0, -5.0, 5.0, 5.0, 13.0];
    let case_err = ev.iter().zip(expected).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok((
        worst <= 1e-12 && case_err <= 1e-12,
        format!("max |λ − (±|c_j|)| = {worst:.2e} over 100 draws; L=3+4i, M=5+12i gives {ev:.6?}"),
    ))
}

fn criterion_5(res: &mut Residuals) -> Outcome {
    let t0 = Instant::now();
    let grid = Grid::square(Rect::unit(), 8).unwrap();
    let field = CoefficientModel::Random { seed: 7, lo: 0.0, hi: 10.0 }.sample(&grid).map_err(|e| e.to_string())?;
    let spec = ProblemSpec::new(grid, field, BoundaryData::dirichlet(|_, _| c(1.0, 0.0)));
    let (_, _, sys) = spec.assemble().map_err(|e| e.to_string())?;
    let sp = schur_spectrum(&sys).map_err(|e| e.to_string())?;
    let pre_ok = sp.preconditioned[0] >= 1.0 - 1e-8 && sp.preconditioned.iter().all(|v| v.is_finite());
    let narrower = sp.preconditioned_spread() < sp.raw_spread();

    let template = ProblemTemplate::new(
        Rect::unit(),
        CoefficientModel::constant(c(2.0, 0.003), c(-3.0, 0.0004)),
        BoundaryData::dirichlet(|x, y| c((PI * x).sin() + y, x * y)),
    );
    let sweep = pcg_iteration_sweep(&template, &[20, 40, 80], &[1e-8]);
    let flat = sweep.flatness(1e-8);
    let its: Vec<String> = sweep
        .cells
        .iter()
        .map(|c| match &c.iterations {
            Ok(k) => format!("N={}: {k}", c.n),
            Err(e) => format!("N={}: failed ({e})", c.n),
        })
        .collect();
    // Residual bookkeeping for criterion 3 uses default-tolerance solves.
    for n in [20, 40, 80] {
        let sol = solve(&template.square(n).unwrap()).map_err(|e| e.to_string())?;
        res.record(format!("pcg coefficients N={n}"), &sol);
    }
    let elapsed = t0.elapsed();
    let ok = pre_ok && narrower && flat.is_some_and(|f| f <= 5) && elapsed < Duration::from_secs(120);
    Ok((
        ok,
        format!(
            "preconditioned λmin {:.6}, spread {:.3} vs raw {:.1}; outer iterations at tol 1e-8 [{}], spread {:?}; {:.2}s",
            sp.preconditioned[0],
            sp.preconditioned_spread(),
            sp.raw_spread(),
            its.join(", "),
            flat,
            elapsed.as_secs_f64()
        ),
    ))
}

fn criterion_6(res: &mut Residuals) -> Outcome {
    let template = ProblemTemplate::new(
        Rect::unit(),
        CoefficientModel::constant(c(3.0, 2.0), c(1.0, 4.0)),
        BoundaryData::dirichlet(|x, y| c((1.5 * x).cos() * (1.5 * y).cos(), x.sin() * y.sin())),
    );
    let n = 17;
    let spec = template.square(n).unwrap();
    let (lo, hi) = spec.field.admissible_arc().map_err(|e| e.to_string())?;
    let steps = 40;
    let mut thetas: Vec<f64> = (1..steps).map(|k| lo + (hi - lo) * k as f64 / steps as f64).collect();
    thetas.extend([lo + 0.01, lo + 0.03, hi - 0.03, hi - 0.01]);
    let sweep = rotation_sweep(&template, n, &thetas).map_err(|e| e.to_string())?;
    let failures: Vec<String> = sweep
        .rows
        .iter()
        .filter_map(|r| match &r.status {
            RotationStatus::Solved { .. } => None,
            other => Some(format!("θ={:.3}: {other:?}", r.theta)),
        })
        .collect();
    for &theta in &[lo + 0.1, 0.0, hi - 0.1] {
        let sol = solve(&spec.clone().with_rotation(RotationPolicy::Explicit(theta))).map_err(|e| e.to_string())?;
        res.record(format!("rotation θ={theta:.3}"), &sol);
    }
    let diff = sweep.max_diff();
    let ratio = sweep.max_error_ratio(0.05);
    Ok((
        failures.is_empty() && diff <= 1e-8 && ratio <= 2.0,
        format!(
            "arc ({lo:.4}, {hi:.4}), {} angles: max nodal difference {diff:.2e}, max error ratio {ratio:.4} \
             (θ=0 error {:.4e}){}",
            thetas.len(),
            sweep.unrotated_error,
            if failures.is_empty() { String::new() } else { format!("; failures: {}", failures.join("; ")) }
        ),
    ))
}

fn criterion_7(res: &mut Residuals) -> Outcome {
    let grid = Grid::square(Rect::unit(), 15).unwrap();
    let field = CoefficientField::from_fn(&grid, |_, y| {
        if y < 0.5 {
            (c(3.0, 2.0).into(), c(1.0, 4.0))
        } else {
            (c(0.5, 0.001).into(), c(3.0, 7.0))
        }
    });
    let bc = BoundaryData::dirichlet(|x, y| c((1.5 * x).cos() * (1.5 * x).cos(), x.sin() * y.sin()));
    let sol = solve(&ProblemSpec::new(grid.clone(), field.clone(), bc).with_rotation(RotationPolicy::Off))
        .map_err(|e| e.to_string())?;
    res.record("saddle", &sol);
    let (ur, ui) = (sol.nodal_re(), sol.nodal_im());
    let y0 = saddle_functional(&grid, &field, &ur, &ui);
    let zero = vec![0.0; grid.num_nodes()];
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let s: Vec<f64> =
            (0..grid.num_nodes()).map(|k| if grid.is_boundary(k) { 0.0 } else { rng.gen_range(-1.0..1.0) }).collect();
        let quad = saddle_functional(&grid, &field, &s, &zero);
        let plus: Vec<f64> = ur.iter().zip(&s).map(|(a, b)| a + b).collect();
        let d1 = saddle_functional(&grid, &field, &plus, &ui) - y0;
        let plus: Vec<f64> = ui.iter().zip(&s).map(|(a, b)| a + b).collect();
        let d2 = saddle_functional(&grid, &field, &ur, &plus) - y0;
        worst = worst.max(((d1 - quad) / quad).abs()).max(((d2 + quad) / quad).abs());
    }
    Ok((worst <= 1e-6, format!("worst relative discrepancy {worst:.2e} over 20 perturbations in each direction")))
}

fn criterion_8(res: &mut Residuals) -> Outcome {
    let rho = c(2.0, 2.0);
    let kappa = c(1.0, -3.0);
    let sweep = omega_sweep(Rect::unit(), rho, kappa, &[1.0, 10.0, 30.0], 6.0).map_err(|e| e.to_string())?;
    let err = |k: usize| sweep.rows[k].error.clone();
    let (e1, e30) = (err(0)?, err(2)?);
    for row in &sweep.rows {
        let (t, _) = helmsaddle::verify::acoustic_template(Rect::unit(), rho, kappa, row.omega).unwrap();
        let sol = solve(&t.square(row.n).unwrap()).map_err(|e| e.to_string())?;
        res.record(format!("acoustic ω={}", row.omega), &sol);
    }
    let rows: Vec<String> = sweep
        .rows
        .iter()
        .map(|r| format!("ω={} N={} ωh={:.3} err={:.3e}", r.omega, r.n, r.omega * r.h, r.error.clone().unwrap_or(f64::NAN)))
        .collect();
    Ok((e30 > e1, rows.join("; ")))
}

fn main() {
    // `cargo test -- <filter>` passes arguments; this target has no filters.
    let mut res = Residuals(Vec::new());
    let mut results: Vec<(&str, Outcome)> = vec![
        ("1 convergence rate", criterion_1(&mut res)),
        ("2 oracle equivalence", criterion_2(&mut res)),
        ("4 constitutive spectrum", criterion_4()),
        ("5 preconditioner effectiveness", criterion_5(&mut res)),
        ("6 rotation invariance", criterion_6(&mut res)),
        ("7 saddle property", criterion_7(&mut res)),
        ("8 frequency degradation", criterion_8(&mut res)),
    ];
    results.insert(2, ("3 block-system consistency", criterion_3(&res)));

    let mut failed = 0;
    for (name, outcome) in &results {
        let (ok, msg) = match outcome {
            Ok((ok, msg)) => (*ok, msg.clone()),
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        println!("{} criterion {name}: {msg}", if ok { "PASS" } else { "FAIL" });
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
