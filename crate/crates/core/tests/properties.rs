use proptest::prelude::*;

use regcon::analysis::{
    attainability_halfspaces, multiplier_interval, multiplier_region_feasible, sensitivity_curve, LambdaRange,
};
use regcon::instances::InstanceName;
use regcon::par;
use regcon::search::{pr4pc, LambdaStrategy, Solver};
use regcon::solvers::{solve_pc_grid, solve_pr_descent, solve_pr_grid, DescentConfig, GridSpec, PcOutcome};
use regcon::{make_instance, Assignment, InstanceSpec, Multipliers, ParamSpace, Problem, Threshold};

/// Rows of a single-constraint table on a coarse lattice, so ties are common.
fn table_rows() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-20i32..=20, 0i32..=12), 1..8)
        .prop_map(|rows| rows.into_iter().map(|(l, c)| (l as f64 * 0.25, c as f64 * 0.25)).collect())
}

fn table(rows: &[(f64, f64)]) -> Problem {
    let names: Vec<String> = (0..rows.len()).map(|i| format!("r{i}")).collect();
    let spec: Vec<(&str, f64, f64)> = rows.iter().zip(&names).map(|(&(l, c), n)| (n.as_str(), l, c)).collect();
    make_instance(&InstanceSpec::table(&spec)).unwrap()
}

fn lambda() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), (-3.0f64..3.0).prop_map(|e| 10f64.powf(e))]
}

fn box_instances() -> Vec<Problem> {
    [
        InstanceName::Plateau,
        InstanceName::LogUnbounded,
        InstanceName::VanishingGradient,
        InstanceName::OrderedRegression,
        InstanceName::BalancedClassification,
    ]
    .into_iter()
    .map(|n| make_instance(&InstanceSpec::new(n)).unwrap())
    .collect()
}

/// Map unit-cube coordinates into a box space.
fn place(p: &Problem, u: &[f64]) -> Vec<f64> {
    let ParamSpace::Box { lo, hi } = p.space() else { unreachable!() };
    lo.iter().zip(hi).zip(u).map(|((a, b), t)| a + (b - a) * t).collect()
}

fn reg(rows: &[(f64, f64)], i: usize, l: f64) -> f64 {
    rows[i].0 + l * rows[i].1
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn violations_are_non_negative(u in prop::collection::vec(0.0f64..=1.0, 2)) {
        for p in box_instances() {
            let w = place(&p, &u[..p.dim()]);
            let e = p.evaluate_raw(&w).unwrap();
            prop_assert!(e.violation.iter().all(|c| *c >= 0.0), "{}: {:?}", p.name(), e);
        }
    }

    #[test]
    fn regularized_objective_is_affine_in_lambda(
        u in prop::collection::vec(0.0f64..=1.0, 2),
        l1 in lambda(),
        l2 in lambda(),
        a in 0.0f64..=1.0,
    ) {
        for p in box_instances() {
            let w = place(&p, &u[..p.dim()]);
            let e = p.evaluate_raw(&w).unwrap();
            let mix = Multipliers::scalar(a * l1 + (1.0 - a) * l2).unwrap();
            let lhs = e.regularized(&mix);
            let rhs = a * e.regularized(&Multipliers::scalar(l1).unwrap())
                + (1.0 - a) * e.regularized(&Multipliers::scalar(l2).unwrap());
            let scale = e.loss.abs().max(1.0) + (l1.max(l2)) * e.violation[0];
            prop_assert!((lhs - rhs).abs() <= 1e-10 * scale, "{}: {lhs} vs {rhs}", p.name());
        }
    }

    #[test]
    fn zero_multiplier_minimizes_loss_alone(rows in table_rows()) {
        let p = table(&rows);
        let r = solve_pr_grid(&p, &Multipliers::zeros(1), &GridSpec::default()).unwrap();
        let best = rows.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
        prop_assert_eq!(r.loss, best);
    }

    #[test]
    fn grid_optimum_dominates_every_row(rows in table_rows(), l in lambda()) {
        let p = table(&rows);
        let r = solve_pr_grid(&p, &Multipliers::scalar(l).unwrap(), &GridSpec::default()).unwrap();
        for i in 0..rows.len() {
            prop_assert!(r.reg_objective <= reg(&rows, i, l));
        }
        // Ties go to the smaller violation.
        let tied_min_c = (0..rows.len())
            .filter(|&i| reg(&rows, i, l) == r.reg_objective)
            .map(|i| rows[i].1)
            .fold(f64::INFINITY, f64::min);
        prop_assert_eq!(r.violation[0], tied_min_c);
    }

    #[test]
    fn parallel_and_sequential_agree(rows in table_rows(), l in lambda(), theta in 0.0f64..3.0) {
        let p = table(&rows);
        let lam = Multipliers::scalar(l).unwrap();
        let par_r = solve_pr_grid(&p, &lam, &GridSpec::default()).unwrap();
        let seq_r = par::sequential(|| solve_pr_grid(&p, &lam, &GridSpec::default())).unwrap();
        prop_assert_eq!(par_r, seq_r);
        let strategy = LambdaStrategy::LogGrid { lo: 1e-2, hi: 1e2, count: 9 };
        let th = Threshold::scalar(theta).unwrap();
        let solver = Solver::Grid(GridSpec::default());
        let a = pr4pc(&p, &th, &strategy, &solver).unwrap();
        let b = par::sequential(|| pr4pc(&p, &th, &strategy, &solver)).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn pc_oracle_is_sound(rows in table_rows(), theta in 0.0f64..3.0) {
        let p = table(&rows);
        let feasible: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].1 <= theta).collect();
        match solve_pc_grid(&p, &Threshold::scalar(theta).unwrap(), &GridSpec::default()).unwrap() {
            PcOutcome::Optimal(r) => {
                prop_assert!(r.violation[0] <= theta);
                let best = feasible.iter().map(|&i| rows[i].0).fold(f64::INFINITY, f64::min);
                prop_assert_eq!(r.loss, best);
            }
            PcOutcome::Infeasible { .. } => prop_assert!(feasible.is_empty()),
        }
    }

    #[test]
    fn interval_agrees_with_enumeration(rows in table_rows(), star in 0usize..8, probes in prop::collection::vec(0.0f64..10.0, 16)) {
        let star = star % rows.len();
        let p = table(&rows);
        let w_star = Assignment::new(vec![star as f64]).unwrap();
        let att = attainability_halfspaces(&p, &w_star, &GridSpec::default()).unwrap();
        let interval = multiplier_interval(&att.halfspaces, 0, &[]).unwrap();
        let candidates: Vec<Multipliers> = probes.iter().map(|&l| Multipliers::scalar(l).unwrap()).collect();
        let region = multiplier_region_feasible(&att.halfspaces, &candidates).unwrap();
        prop_assert_eq!(region.any, interval.feasible);
        // Directly: w* minimizes the regularized objective exactly on [lower, upper].
        let optimal_at = |l: f64| (0..rows.len()).all(|i| reg(&rows, star, l) <= reg(&rows, i, l) + 1e-9);
        for &l in &probes {
            if att.not_pc_optimal.is_empty() {
                let inside = interval.feasible && interval.lower - 1e-9 <= l && l <= interval.upper + 1e-9;
                prop_assert_eq!(inside, optimal_at(l), "λ = {}", l);
            } else {
                // A twin with equal violation and lower loss beats w* for every λ.
                prop_assert!(!optimal_at(l));
            }
        }
        if att.not_pc_optimal.is_empty() && interval.feasible && interval.upper.is_finite() {
            let mid = 0.5 * (interval.lower + interval.upper);
            prop_assert!(optimal_at(mid));
        }
    }

    #[test]
    fn optimum_certifies_its_own_multiplier(rows in table_rows(), l in lambda()) {
        let p = table(&rows);
        let r = solve_pr_grid(&p, &Multipliers::scalar(l).unwrap(), &GridSpec::default()).unwrap();
        let att = attainability_halfspaces(&p, &r.w, &GridSpec::default()).unwrap();
        prop_assert!(att.halfspaces.iter().all(|h| h.admits(&[l], 1e-9)));
        let interval = multiplier_interval(&att.halfspaces, 0, &[]).unwrap();
        prop_assert!(interval.feasible);
        prop_assert!(interval.lower - 1e-9 <= l && l <= interval.upper + 1e-9);
    }

    #[test]
    fn stored_entries_are_exactly_the_feasible_ones(
        rows in table_rows(),
        lambdas in prop::collection::vec(lambda(), 1..10),
        theta in 0.0f64..3.0,
    ) {
        let p = table(&rows);
        let list: Vec<Multipliers> = lambdas.iter().map(|&l| Multipliers::scalar(l).unwrap()).collect();
        let strategy = LambdaStrategy::ExplicitList { lambdas: list };
        let out = pr4pc(&p, &Threshold::scalar(theta).unwrap(), &strategy, &Solver::Grid(GridSpec::default())).unwrap();
        prop_assert_eq!(out.trace.len(), lambdas.len());
        for e in &out.trace {
            let c = e.result.as_ref().unwrap().violation[0];
            prop_assert_eq!(e.stored, c <= theta);
        }
        let stored: Vec<(usize, f64)> = out
            .trace
            .iter()
            .enumerate()
            .filter(|(_, e)| e.stored)
            .map(|(i, e)| (i, e.result.as_ref().unwrap().loss))
            .collect();
        match out.winner {
            None => prop_assert!(stored.is_empty()),
            Some(w) => {
                let min = stored.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
                let first = stored.iter().find(|s| s.1 == min).unwrap().0;
                prop_assert_eq!(w, first);
            }
        }
    }

    #[test]
    fn violation_is_monotone_in_lambda_on_tables(rows in table_rows(), mut ls in prop::collection::vec(lambda(), 2..8)) {
        let p = table(&rows);
        ls.sort_by(f64::total_cmp);
        let cs: Vec<f64> = ls
            .iter()
            .map(|&l| solve_pr_grid(&p, &Multipliers::scalar(l).unwrap(), &GridSpec::default()).unwrap().violation[0])
            .collect();
        prop_assert!(cs.windows(2).all(|w| w[1] <= w[0] + 1e-9), "{:?} at {:?}", cs, ls);
    }

    #[test]
    fn negative_or_non_finite_multipliers_are_rejected(l in prop_oneof![-1e6f64..-1e-12, Just(f64::NAN), Just(f64::INFINITY)]) {
        prop_assert!(Multipliers::scalar(l).is_err());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn sensitivity_lambda_is_non_increasing_in_theta(mut thetas in prop::collection::vec(1e-3f64..0.9, 2..6)) {
        let p = make_instance(&InstanceSpec::new(InstanceName::VanishingGradient)).unwrap();
        thetas.sort_by(f64::total_cmp);
        let range = LambdaRange { lo: 0.5, hi: 2e3, count: 41 };
        let curve = sensitivity_curve(&p, &thetas, range, &GridSpec::with_points(20_001)).unwrap();
        let ls: Vec<f64> = curve.rows.iter().map(|r| r.lambda.unwrap_or(f64::INFINITY)).collect();
        prop_assert!(ls.windows(2).all(|w| w[1] <= w[0]), "{:?} for θ {:?}", ls, thetas);
    }

    #[test]
    fn descent_never_beats_grid_by_more_than_resolution(l in 0.05f64..50.0, seed in 0u64..1000) {
        let p = make_instance(&InstanceSpec::new(InstanceName::VanishingGradient)).unwrap();
        let lam = Multipliers::scalar(l).unwrap();
        let n = 2001;
        let grid = solve_pr_grid(&p, &lam, &GridSpec::with_points(n)).unwrap();
        let descent = solve_pr_descent(&p, &lam, &DescentConfig { seed, restarts: 2, ..DescentConfig::default() }).unwrap();
        let lip = p.model().lipschitz().unwrap().regularized(&lam);
        let half_step = 0.5 * 10.0 / (n - 1) as f64;
        prop_assert!(descent.reg_objective >= grid.reg_objective - lip * half_step - 1e-12);
    }
}

#[test]
fn config_round_trips_through_json() {
    use regcon::cli::ExperimentConfig;
    let text = r#"{
        "instance": {"name": "finite_table", "params": {"rows": 1, "l0": 0, "c0": 0}, "labels": ["x"]},
        "command": "pr4pc",
        "params": {"theta": [0.5], "strategy": {"kind": "dual_ascent", "lambda0": [0.0], "eta": 0.5, "iters": 4}},
        "output_dir": "out",
        "seed": 9
    }"#;
    let c = ExperimentConfig::from_json(text).unwrap();
    let again = ExperimentConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
    assert_eq!(c, again);
    assert_eq!(c.job(None).unwrap(), again.job(None).unwrap());
}
