use minilp::{ComparisonOp, OptimizationDirection, Problem};
use pooling_core::cuts::Cut;
use pooling_core::lpcore::{solve, solve_with, ColId, LinearProgram, LpStatus, Sense, SolveOptions};
use proptest::prelude::*;

fn one_var(lower: f64, upper: f64, cost: f64) -> (LinearProgram, ColId) {
    let mut lp = LinearProgram::new();
    let x = lp.add_column("x", lower, upper, cost).unwrap();
    (lp, x)
}

/// `sum_r y_r rhs_r + sum_j d_j x_j`, equal to the primal objective when the
/// duals are optimal and complementary.
fn dual_objective(lp: &LinearProgram, sol: &pooling_core::lpcore::LpSolution) -> f64 {
    let rows: f64 = lp.rows().iter().zip(&sol.duals).map(|(r, y)| r.rhs * y).sum();
    let cols: f64 = sol.reduced_costs.iter().zip(&sol.primal).map(|(d, x)| d * x).sum();
    rows + cols + lp.objective_offset()
}

fn dual_signs_ok(lp: &LinearProgram, sol: &pooling_core::lpcore::LpSolution) -> bool {
    let rows_ok = lp.rows().iter().zip(&sol.duals).all(|(r, &y)| match r.sense {
        Sense::Le => y <= 1e-9,
        Sense::Ge => y >= -1e-9,
        Sense::Eq => true,
    });
    let cols_ok = lp.columns().iter().zip(&sol.reduced_costs).zip(&sol.primal).all(|((c, &d), &x)| {
        let at_lower = (x - c.lower).abs() <= 1e-9;
        let at_upper = (x - c.upper).abs() <= 1e-9;
        (at_lower && d >= -1e-9) || (at_upper && d <= 1e-9) || d.abs() <= 1e-9
    });
    rows_ok && cols_ok
}

#[test]
fn minimize_negative_x_on_unit_interval() {
    let (lp, x) = one_var(0.0, 1.0, -1.0);
    let sol = solve(&lp);
    assert_eq!(sol.status, LpStatus::Optimal);
    assert_eq!(sol.objective, -1.0);
    assert_eq!(sol.primal[x.0], 1.0);
}

#[test]
fn degenerate_optimal_face() {
    let mut lp = LinearProgram::new();
    let x = lp.add_column("x", 0.0, f64::INFINITY, -1.0).unwrap();
    let y = lp.add_column("y", 0.0, f64::INFINITY, -1.0).unwrap();
    lp.add_row("cap", Sense::Le, 1.0, &[(x, 1.0), (y, 1.0)]).unwrap();
    let sol = solve(&lp);
    assert_eq!(sol.status, LpStatus::Optimal);
    assert!((sol.objective + 1.0).abs() < 1e-12);
    assert!((sol.primal[0] + sol.primal[1] - 1.0).abs() < 1e-12);
    assert!((dual_objective(&lp, &sol) - sol.objective).abs() < 1e-7);
}

#[test]
fn detects_infeasible_and_unbounded() {
    let mut lp = LinearProgram::new();
    let x = lp.add_column("x", 0.0, 1.0, 0.0).unwrap();
    lp.add_row("r", Sense::Ge, 2.0, &[(x, 1.0)]).unwrap();
    assert_eq!(solve(&lp).status, LpStatus::Infeasible);

    let mut lp = LinearProgram::new();
    let x = lp.add_column("x", 0.0, f64::INFINITY, -1.0).unwrap();
    let y = lp.add_column("y", 0.0, f64::INFINITY, 0.0).unwrap();
    lp.add_row("r", Sense::Le, 1.0, &[(x, 1.0), (y, -1.0)]).unwrap();
    assert_eq!(solve(&lp).status, LpStatus::Unbounded);
}

#[test]
fn free_variables_and_equalities() {
    // min x + 2y  s.t. x + y = 3, x - y >= -1, x free, y <= 10
    let mut lp = LinearProgram::new();
    let x = lp.add_column("x", f64::NEG_INFINITY, f64::INFINITY, 1.0).unwrap();
    let y = lp.add_column("y", f64::NEG_INFINITY, 10.0, 2.0).unwrap();
    lp.add_row("sum", Sense::Eq, 3.0, &[(x, 1.0), (y, 1.0)]).unwrap();
    lp.add_row("diff", Sense::Ge, -1.0, &[(x, 1.0), (y, -1.0)]).unwrap();
    let sol = solve(&lp);
    // y as small as possible: x + y = 3 -> objective 3 + y, unbounded below? y >= ? x - y >= -1 -> 3 - 2y >= -1 -> y <= 2.
    // y is free below, so the LP is unbounded.
    assert_eq!(sol.status, LpStatus::Unbounded);

    lp.set_col_bounds(y, 0.5, 10.0).unwrap();
    let sol = solve(&lp);
    assert_eq!(sol.status, LpStatus::Optimal);
    assert!((sol.objective - 3.5).abs() < 1e-12);
    assert!(dual_signs_ok(&lp, &sol));
    assert!((dual_objective(&lp, &sol) - sol.objective).abs() < 1e-7);
}

#[test]
fn add_cut_shrinks_optimum_and_ignores_duplicates() {
    let (mut lp, x) = one_var(0.0, 1.0, -1.0);
    let cut = Cut::new(vec![(x, 1.0)], 0.5);
    assert!(lp.add_cut(&cut).unwrap().is_some());
    let sol = solve(&lp);
    assert!((sol.objective + 0.5).abs() < 1e-12);
    assert!(lp.add_cut(&cut).unwrap().is_none());
    assert_eq!(lp.num_rows(), 1);
    let bad = Cut::new(vec![(ColId(7), 1.0)], 0.0);
    assert!(lp.add_cut(&bad).is_err());
}

#[test]
fn warm_start_after_cut_reaches_same_optimum_as_cold() {
    let mut lp = LinearProgram::new();
    let x = lp.add_column("x", 0.0, 4.0, -1.0).unwrap();
    let y = lp.add_column("y", 0.0, 4.0, -2.0).unwrap();
    lp.add_row("a", Sense::Le, 5.0, &[(x, 1.0), (y, 1.0)]).unwrap();
    let first = solve(&lp);
    lp.add_cut(&Cut::new(vec![(x, 1.0), (y, 3.0)], 9.0)).unwrap();
    let warm = solve_with(
        &lp,
        &SolveOptions {
            warm_start: Some(first.basis.clone()),
            ..Default::default()
        },
    );
    let cold = solve(&lp);
    assert_eq!(warm.status, LpStatus::Optimal);
    assert!((warm.objective - cold.objective).abs() < 1e-12);
    assert!(warm.objective >= first.objective - 1e-12);
}

#[test]
fn iteration_limit_is_reported() {
    let mut lp = LinearProgram::new();
    let cols: Vec<ColId> = (0..5)
        .map(|i| lp.add_column(format!("x{i}"), 0.0, f64::INFINITY, -1.0 - i as f64).unwrap())
        .collect();
    let coeffs: Vec<(ColId, f64)> = cols.iter().map(|&c| (c, 1.0)).collect();
    lp.add_row("r", Sense::Le, 1.0, &coeffs).unwrap();
    let sol = solve_with(
        &lp,
        &SolveOptions {
            max_pivots: 0,
            ..Default::default()
        },
    );
    assert_eq!(sol.status, LpStatus::IterationLimit);
}

/// Random LP with mixed senses and bounds, plus the same LP in minilp.
fn random_lp(seed_rows: Vec<(Vec<f64>, u8, f64)>, cols: Vec<(f64, f64, f64)>) -> (LinearProgram, Problem) {
    let mut lp = LinearProgram::new();
    let mut other = Problem::new(OptimizationDirection::Minimize);
    let mut ids = Vec::new();
    let mut vars = Vec::new();
    for (j, &(lo, width, cost)) in cols.iter().enumerate() {
        ids.push(lp.add_column(format!("x{j}"), lo, lo + width, cost).unwrap());
        vars.push(other.add_var(cost, (lo, lo + width)));
    }
    for (i, (coef, sense, rhs)) in seed_rows.iter().enumerate() {
        let entries: Vec<(ColId, f64)> = ids.iter().zip(coef).filter(|(_, v)| **v != 0.0).map(|(&c, &v)| (c, v)).collect();
        let (s, op) = match sense % 3 {
            0 => (Sense::Le, ComparisonOp::Le),
            1 => (Sense::Ge, ComparisonOp::Ge),
            _ => (Sense::Eq, ComparisonOp::Eq),
        };
        lp.add_row(format!("r{i}"), s, *rhs, &entries).unwrap();
        let expr: Vec<(minilp::Variable, f64)> = vars.iter().zip(coef).filter(|(_, v)| **v != 0.0).map(|(&x, &v)| (x, v)).collect();
        other.add_constraint(expr.as_slice(), op, *rhs);
    }
    (lp, other)
}

fn small_int() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), Just(0.0), (-4i32..=4).prop_map(f64::from)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn agrees_with_external_solver(
        cols in prop::collection::vec(((-3i32..=3).prop_map(f64::from), (0i32..=5).prop_map(f64::from), (-5i32..=5).prop_map(f64::from)), 2..7),
        rows in prop::collection::vec((prop::collection::vec(small_int(), 7), 0u8..3, (-6i32..=10).prop_map(f64::from)), 0..7),
    ) {
        let rows: Vec<_> = rows.into_iter().map(|(c, s, r)| (c[..cols.len()].to_vec(), s, r)).collect();
        let (lp, other) = random_lp(rows, cols);
        let sol = solve(&lp);
        let again = solve(&lp);
        prop_assert_eq!(&sol.primal, &again.primal);
        match other.solve() {
            Ok(reference) => {
                prop_assert_eq!(sol.status, LpStatus::Optimal);
                prop_assert!((sol.objective - reference.objective()).abs() <= 1e-9 * (1.0 + reference.objective().abs()));
                prop_assert!(lp.max_violation(&sol.primal) <= 1e-7);
                prop_assert!((dual_objective(&lp, &sol) - sol.objective).abs() <= 1e-7);
                prop_assert!(dual_signs_ok(&lp, &sol));
            }
            Err(minilp::Error::Infeasible) => prop_assert_eq!(sol.status, LpStatus::Infeasible),
            Err(minilp::Error::Unbounded) => prop_assert_eq!(sol.status, LpStatus::Unbounded),
        }
    }
}
