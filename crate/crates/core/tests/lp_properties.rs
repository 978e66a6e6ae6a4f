use abduce_core::constraint::{LinearConstraint, Relation};
use abduce_core::generate::{apply_lp_change, LpGen};
use abduce_core::lp::{
    resolve_after_cut, solve, solve_with, LpChange, LpConfig, LpProblem, LpResult, LpSession,
    LpStatus,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-6;

/// Checks primal feasibility, dual sign conditions and complementary
/// slackness of an optimal result, with `d_j = c_j - Σ_i y_i a_ij`.
fn certifies_optimality(p: &LpProblem, r: &LpResult) -> Result<(), String> {
    let x = &r.values;
    let viol = p.max_violation(x);
    if viol > 1e-7 {
        return Err(format!("primal violation {viol}"));
    }
    let y = &r.duals;
    let mut d = p.cost().to_vec();
    for (row, &yi) in p.rows().iter().zip(y) {
        for &(c, v) in &row.terms {
            d[v] -= yi * c;
        }
    }
    for (j, &dj) in d.iter().enumerate() {
        if x[j] > p.lower()[j] + 1e-7 && dj > TOL {
            return Err(format!("x{j} above lower with reduced cost {dj}"));
        }
        if x[j] < p.upper()[j] - 1e-7 && dj < -TOL {
            return Err(format!("x{j} below upper with reduced cost {dj}"));
        }
    }
    for (i, (row, &yi)) in p.rows().iter().zip(y).enumerate() {
        let s = row.rhs - row.lhs(x);
        let ok = match row.relation {
            Relation::Le => yi <= TOL && (s <= 1e-7 || yi >= -TOL),
            Relation::Ge => yi >= -TOL && (s >= -1e-7 || yi <= TOL),
            Relation::Eq => true,
        };
        if !ok {
            return Err(format!("row {i} dual {yi} with slack {s}"));
        }
    }
    let obj = p.objective_at(x);
    if (obj - r.objective).abs() > 1e-9 {
        return Err(format!("objective {} vs recomputed {obj}", r.objective));
    }
    Ok(())
}

fn check(p: &LpProblem, r: &LpResult) {
    match r.status {
        LpStatus::Optimal => certifies_optimality(p, r).unwrap(),
        LpStatus::Infeasible => assert!(p.is_farkas_certificate(r.farkas.as_ref().unwrap(), 1e-9)),
    }
}

#[test]
fn warm_resolve_matches_cold_solve() {
    let mut gen = LpGen::new(7);
    let mut compared = 0;
    let mut infeasible = 0;
    while compared < 1000 {
        let (mut p, anchor) = gen.problem();
        let mut r = solve(&p).unwrap();
        check(&p, &r);
        for _ in 0..gen.rng().gen_range(1..=4) {
            if r.status != LpStatus::Optimal {
                break;
            }
            let change = gen.change(&p, &anchor);
            apply_lp_change(&mut p, &change);
            let warm = resolve_after_cut(&r, change).unwrap();
            let cold = solve(&p).unwrap();
            assert_eq!(warm.status, cold.status, "trial {compared}");
            if warm.status == LpStatus::Optimal {
                assert!(
                    (warm.objective - cold.objective).abs() <= 1e-9 * (1.0 + cold.objective.abs()),
                    "trial {compared}: warm {} cold {}",
                    warm.objective,
                    cold.objective
                );
            } else {
                infeasible += 1;
            }
            check(&p, &warm);
            check(&p, &cold);
            compared += 1;
            r = warm;
        }
    }
    assert!(infeasible > 20, "only {infeasible} infeasible trials");
}

#[test]
fn identical_input_gives_identical_pivots() {
    let mut gen = LpGen::new(11);
    let cfg = LpConfig {
        record_pivots: true,
        ..LpConfig::default()
    };
    for _ in 0..50 {
        let (p, anchor) = gen.problem();
        let change = gen.change(&p, &anchor);
        let run = || {
            let mut s = LpSession::new(p.clone(), cfg);
            s.solve().unwrap();
            if s.status() == Some(LpStatus::Optimal) {
                match change.clone() {
                    LpChange::Row(row) => s.add_row(row).unwrap(),
                    LpChange::Bounds { var, lower, upper } => {
                        s.set_bounds(var, lower, upper).unwrap()
                    }
                }
                s.solve().unwrap();
            }
            (s.pivot_log().to_vec(), s.values(), s.status())
        };
        assert_eq!(run(), run());
    }
}

/// Beale's cycling example with the variables boxed into [0, 1].
#[test]
fn beale_instance_terminates() {
    let mut p = LpProblem::new(vec![-0.75, 20.0, -0.5, 6.0], 0.0).unwrap();
    p.add_row(LinearConstraint::new(
        vec![(0.25, 0), (-8.0, 1), (-1.0, 2), (9.0, 3)],
        Relation::Le,
        0.0,
    ))
    .unwrap();
    p.add_row(LinearConstraint::new(
        vec![(0.5, 0), (-12.0, 1), (-0.5, 2), (3.0, 3)],
        Relation::Le,
        0.0,
    ))
    .unwrap();
    p.add_row(LinearConstraint::new(vec![(1.0, 2)], Relation::Le, 1.0))
        .unwrap();
    let r = solve(&p).unwrap();
    assert_eq!(r.status, LpStatus::Optimal);
    check(&p, &r);
    assert!((r.objective - (-1.25)).abs() < 1e-9, "{}", r.objective);
}

/// Many redundant rows through one vertex, with a streak threshold low
/// enough that Bland's rule engages.
#[test]
fn degenerate_vertex_terminates_with_bland() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for streak in [1, 2, 100] {
        for _ in 0..30 {
            let n = rng.gen_range(3..=12);
            let cost: Vec<f64> = (0..n).map(|_| rng.gen_range(-3..=3) as f64).collect();
            let mut p = LpProblem::new(cost, 0.0).unwrap();
            for _ in 0..3 * n {
                let terms: Vec<(f64, usize)> =
                    (0..n).map(|v| (rng.gen_range(-2..=2) as f64, v)).collect();
                let rel = if rng.gen_bool(0.5) {
                    Relation::Le
                } else {
                    Relation::Ge
                };
                p.add_row(LinearConstraint::new(terms, rel, 0.0)).unwrap();
            }
            let cfg = LpConfig {
                degeneracy_streak: streak,
                ..LpConfig::default()
            };
            let r = solve_with(&p, cfg).unwrap();
            check(&p, &r);
            let reference = solve(&p).unwrap();
            assert_eq!(r.status, reference.status);
            assert!((r.objective - reference.objective).abs() < 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn every_solve_carries_a_certificate(seed in any::<u64>()) {
        let (p, _) = LpGen::new(seed).problem();
        let r = solve(&p).unwrap();
        check(&p, &r);
    }

    #[test]
    fn relaxation_bounds_every_integral_point(seed in any::<u64>()) {
        let mut gen = LpGen::new(seed);
        let n = gen.rng().gen_range(1..=10);
        let cost = (0..n).map(|_| gen.rng().gen_range(-5.0..5.0)).collect();
        let mut p = LpProblem::new(cost, 0.0).unwrap();
        let anchor: Vec<f64> = (0..n).map(|_| gen.rng().gen_range(0..=1) as f64).collect();
        for _ in 0..gen.rng().gen_range(0..=n) {
            let row = gen.row(n, &anchor);
            p.add_row(row).unwrap();
        }
        let r = solve(&p).unwrap();
        for mask in 0u32..(1 << n) {
            let x: Vec<f64> = (0..n).map(|i| (mask >> i & 1) as f64).collect();
            if p.max_violation(&x) <= 1e-9 {
                prop_assert_eq!(r.status, LpStatus::Optimal);
                prop_assert!(r.objective <= p.objective_at(&x) + 1e-9);
            }
        }
    }
}
