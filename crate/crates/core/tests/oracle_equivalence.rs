use helmsaddle::verify::galerkin_oracle;
use helmsaddle::{c64, solve, BoundaryData, CoefficientModel, Grid, ProblemSpec, Rect, RotationPolicy, SolutionField};
use proptest::prelude::*;

fn bc(kind: u8, p: [f64; 4]) -> BoundaryData {
    match kind {
        0 => BoundaryData::dirichlet(move |x, y| c64(p[0] * x + y * y, p[1] * x * y)),
        1 => BoundaryData::neumann(move |x, y| c64(p[0] + x, p[1] * y)),
        _ => BoundaryData::robin(c64(-0.5 - p[2].abs(), p[3]), move |x, y| c64(p[0] * x, 1.0 + y)),
    }
}

fn check(n: usize, seed: u64, kind: u8, p: [f64; 4]) -> Result<(), TestCaseError> {
    let grid = Grid::square(Rect::unit(), n).unwrap();
    let field = CoefficientModel::Random { seed, lo: 0.2, hi: 5.0 }.sample(&grid).unwrap();
    let bc = bc(kind, p);
    let spec = ProblemSpec::new(grid.clone(), field.clone(), bc.clone()).with_rotation(RotationPolicy::Off);
    let sol = solve(&spec).unwrap();
    let oracle = SolutionField::from_nodal(grid.clone(), galerkin_oracle(&grid, &field, &bc).unwrap()).unwrap();
    let d = sol.max_rel_diff(&oracle);
    prop_assert!(d <= 1e-8, "kind {kind}, n {n}: difference {d:e}");
    prop_assert!(sol.stats.block_residual <= 1e-9);
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn block_solve_matches_complex_galerkin(
        n in 3usize..11,
        seed in 0u64..1000,
        kind in 0u8..3,
        p in prop::array::uniform4(-2.0f64..2.0),
    ) {
        check(n, seed, kind, p)?;
    }
}

#[test]
fn rectangular_grid_with_all_boundary_kinds() {
    let grid = Grid::new(Rect::new(-1.0, 2.0, 0.0, 1.5), 9, 6).unwrap();
    let field = CoefficientModel::constant(c64(2.0, 1.0), c64(1.0, 3.0)).sample(&grid).unwrap();
    for kind in 0..3 {
        let bc = bc(kind, [1.0, -0.5, 0.3, 0.2]);
        let sol = solve(&ProblemSpec::new(grid.clone(), field.clone(), bc.clone())).unwrap();
        let oracle = SolutionField::from_nodal(grid.clone(), galerkin_oracle(&grid, &field, &bc).unwrap()).unwrap();
        assert!(sol.max_rel_diff(&oracle) <= 1e-8, "kind {kind}");
    }
}
