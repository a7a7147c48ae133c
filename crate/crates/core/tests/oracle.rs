mod common;

use searchplan::eval::{f_conditional, f_markov};
use searchplan::model::{line_example, RateFactors, Trajectory};
use searchplan::oracle::{
    brute_force_optimum, brute_force_with, monte_carlo_eval, optimal_efforts, OracleBudget,
    OracleObjective,
};
use searchplan::{check_plan_feasibility, derive_effort, grid_instance, Error, GridOptions, SearchPlan};

fn budget() -> OracleBudget {
    OracleBudget::default()
}

#[test]
fn no_detection_means_certain_survival() {
    let mut inst = grid_instance(&GridOptions::new(3, 1, 3)).unwrap();
    inst.classes[0].beta = RateFactors::uniform(0);
    let r = brute_force_optimum(&inst, &budget()).unwrap();
    assert!((r.value - 1.0).abs() < 1e-12);
    assert_eq!(r.optimal_count, r.feasible_plans);
}

#[test]
fn line_example_optimum() {
    // Three mission periods, the first spent in state 1 on the way in, so
    // at most two looks at the stationary target: survival 2^-2.
    let inst = line_example();
    let r = brute_force_optimum(&inst, &budget()).unwrap();
    assert!((r.value - 0.25).abs() < 1e-15);
    for plan in &r.optimal_plans {
        assert!(check_plan_feasibility(plan, &inst).feasible());
        let z = derive_effort(plan, &inst).unwrap();
        let looks: u32 = (1..=6).map(|t| z.get(0, 2, t)).sum();
        assert_eq!(looks, 2);
    }
}

#[test]
fn optimal_plans_evaluate_to_the_optimum() {
    for (name, inst) in common::tiny_suite().into_iter().take(8) {
        let r = brute_force_optimum(&inst, &budget()).unwrap();
        assert_eq!(r.objective, OracleObjective::Markov);
        let markov = inst.target.markov.as_ref().unwrap();
        for z in optimal_efforts(&inst, &r).unwrap() {
            assert!((f_markov(&z, markov, inst.detection.alpha, 1) - r.value).abs() < 1e-12, "{name}");
        }
        let c = brute_force_with(&inst, &budget(), OracleObjective::Conditional).unwrap();
        assert!((c.value - r.value).abs() < 1e-12, "{name}");
        let cond = inst.target.conditional.as_ref().unwrap();
        for plan in &c.optimal_plans {
            let z = derive_effort(plan, &inst).unwrap();
            assert!((f_conditional(&z, cond, inst.detection.alpha) - c.value).abs() < 1e-12);
        }
    }
}

fn transpose_plan(inst: &searchplan::SearchInstance, plan: &SearchPlan) -> SearchPlan {
    let side = 3;
    let flip = |s: usize| if s < side * side { (s % side) * side + s / side } else { s };
    let trs: Vec<Trajectory> = plan
        .trajectories(inst)
        .unwrap()
        .into_iter()
        .map(|tr| Trajectory {
            class: tr.class,
            positions: tr
                .positions
                .into_iter()
                .map(|o| match o {
                    searchplan::model::Occupancy::At(s) => searchplan::model::Occupancy::At(flip(s)),
                    other => other,
                })
                .collect(),
        })
        .collect();
    SearchPlan::from_trajectories(inst, &trs).unwrap()
}

#[test]
fn mirror_images_of_optima_are_optimal() {
    // Entry cells and the centred target are symmetric under transposition.
    for (name, inst) in common::tiny_suite().into_iter().filter(|(n, _)| ["t3-j1", "t4-j1-camo", "t3-j2"].contains(&n.as_str())) {
        let r = brute_force_optimum(&inst, &budget()).unwrap();
        let markov = inst.target.markov.as_ref().unwrap();
        for plan in r.optimal_plans.iter().take(20) {
            let mirrored = transpose_plan(&inst, plan);
            let z = derive_effort(&mirrored, &inst).unwrap();
            assert!((f_markov(&z, markov, inst.detection.alpha, 1) - r.value).abs() < 1e-12, "{name}");
        }
    }
}

#[test]
fn budget_is_enforced() {
    let (_, inst) = common::tiny_suite().into_iter().find(|(n, _)| n == "t4-j2").unwrap();
    let tiny = OracleBudget { max_joint: 10, ..budget() };
    assert!(matches!(brute_force_optimum(&inst, &tiny), Err(Error::BudgetExceeded { .. })));
}

fn line_plan() -> (searchplan::SearchInstance, SearchPlan) {
    let inst = line_example();
    let plan = SearchPlan::from_trajectories(&inst, &[Trajectory::at(0, &[0, 0, 0, 0, 1, 2, 2])]).unwrap();
    (inst, plan)
}

#[test]
fn monte_carlo_zero_effort_is_exact() {
    let inst = line_example();
    let plan = SearchPlan::from_trajectories(&inst, &[Trajectory::at(0, &[0; 7])]).unwrap();
    let est = monte_carlo_eval(&plan, &inst, inst.target.markov.as_ref().unwrap(), 1000, 1).unwrap();
    assert_eq!((est.estimate, est.std_error, est.ci_low, est.ci_high), (0.0, 0.0, 0.0, 0.0));
}

#[test]
fn monte_carlo_matches_closed_form() {
    // Two glimpses at the stationary target with rate ln 2: detection 3/4.
    let (inst, plan) = line_plan();
    let markov = inst.target.markov.as_ref().unwrap();
    let exact = 1.0 - f_markov(&derive_effort(&plan, &inst).unwrap(), markov, inst.detection.alpha, 1);
    assert!((exact - 0.75).abs() < 1e-15);
    let est = monte_carlo_eval(&plan, &inst, markov, 40_000, 9).unwrap();
    assert!((est.estimate - exact).abs() <= 4.0 * est.std_error, "{est:?}");
    assert!(est.ci_low <= exact && exact <= est.ci_high);
}

#[test]
fn monte_carlo_within_four_sigma_on_grid() {
    for (name, inst) in common::tiny_suite().into_iter().filter(|(n, _)| ["t4-j1-camo", "t4-two-class-beta", "t3-j2-beta2-camo"].contains(&n.as_str())) {
        let markov = inst.target.markov.as_ref().unwrap();
        let plan = common::random_feasible_plan(&inst, 2).unwrap();
        let exact = 1.0 - f_markov(&derive_effort(&plan, &inst).unwrap(), markov, inst.detection.alpha, 1);
        let est = monte_carlo_eval(&plan, &inst, markov, 50_000, 4).unwrap();
        assert!((est.estimate - exact).abs() <= 4.0 * est.std_error.max(1e-9), "{name}: {est:?} vs {exact}");
    }
}

#[test]
fn monte_carlo_error_shrinks_like_root_n() {
    let (inst, plan) = line_plan();
    let markov = inst.target.markov.as_ref().unwrap();
    let small = monte_carlo_eval(&plan, &inst, markov, 2_500, 3).unwrap();
    let large = monte_carlo_eval(&plan, &inst, markov, 40_000, 3).unwrap();
    let ratio = small.std_error / large.std_error;
    assert!((ratio - 4.0).abs() < 0.4, "ratio {ratio}");
}

#[test]
fn monte_carlo_rejects_bad_input() {
    let (inst, plan) = line_plan();
    let markov = inst.target.markov.as_ref().unwrap();
    assert!(monte_carlo_eval(&plan, &inst, markov, 0, 1).is_err());
    let bad = SearchPlan::from_trajectories(&inst, &[Trajectory::at(0, &[0, 0, 1, 1, 2, 3, 4])]).unwrap();
    assert!(monte_carlo_eval(&bad, &inst, markov, 10, 1).is_err());
}
