mod common;

use searchplan::formulation::CspOptions;
use searchplan::milp::SolveControls;
use searchplan::oa::{run_oa, select_lazy_band, LazyConfig};
use searchplan::oracle::{brute_force_optimum, OracleBudget};
use searchplan::{effort_bounds, grid_instance, solve_method, GridOptions, Method, RunOptions};

fn exact() -> SolveControls {
    SolveControls::default().with_gap(1e-9)
}

fn suite(names: &[&str]) -> Vec<(String, searchplan::SearchInstance)> {
    common::tiny_suite().into_iter().filter(|(n, _)| names.contains(&n.as_str())).collect()
}

fn largest_violation(notes: &[String]) -> f64 {
    notes
        .iter()
        .find_map(|n| n.strip_prefix("largest secant violation at the incumbent: "))
        .expect("violation note")
        .parse()
        .unwrap()
}

#[test]
fn disabled_band_matches_full_preprocessed_model() {
    let inst = common::with_paths(grid_instance(&GridOptions::new(3, 1, 2).with_camouflage(true)).unwrap());
    assert_eq!(effort_bounds(&inst).total_cap(), 2);
    assert!(select_lazy_band(&inst, None).unwrap().is_none());
    let cond = inst.target.conditional.clone().unwrap();
    let oa = run_oa(&inst, &cond, &exact(), None).unwrap();
    assert!(oa.notes.iter().any(|n| n.starts_with("lazy band disabled")));
    let opts = RunOptions::default().with_gap(1e-9);
    let full = solve_method(&inst, Method::CspLPre, &opts).unwrap();
    assert!((oa.min_value.unwrap() - full.min_value.unwrap()).abs() < 1e-9);
    assert_eq!(oa.stats, full.stats);
}

#[test]
fn band_override_is_checked() {
    let (_, inst) = suite(&["t4-j1"]).pop().unwrap();
    let n = effort_bounds(&inst).total_cap();
    assert!(select_lazy_band(&inst, Some((0, 2))).is_err());
    assert!(select_lazy_band(&inst, Some((2, 2))).is_err());
    assert!(select_lazy_band(&inst, Some((1, n))).is_err());
    let c = select_lazy_band(&inst, Some((1, n - 1))).unwrap().unwrap();
    assert_eq!((c.b1, c.b2), (1, n - 1));
    assert_eq!(select_lazy_band(&inst, None).unwrap(), LazyConfig::default_for(n));
}

#[test]
fn incumbents_respect_every_secant_row() {
    for (name, inst) in suite(&["t3-j1-camo", "t4-j1", "t4-j1-camo", "t3-j2", "t3-beta2", "t4-endurance2"]) {
        let cond = inst.target.conditional.clone().unwrap();
        let oracle = brute_force_optimum(&inst, &OracleBudget::default()).unwrap().value;
        let r = run_oa(&inst, &cond, &exact(), None).unwrap();
        assert!(largest_violation(&r.notes) <= 1e-6, "{name}");
        assert!((r.min_value.unwrap() - oracle).abs() <= 1e-6, "{name}");
        assert!((r.model_objective.unwrap() - r.min_value.unwrap()).abs() <= 1e-6, "{name}");
    }
}

#[test]
fn adversarial_band_is_still_exact() {
    for (name, inst) in suite(&["t4-j1-camo", "t3-j2-camo"]) {
        let n = effort_bounds(&inst).total_cap();
        let cond = inst.target.conditional.clone().unwrap();
        let oracle = brute_force_optimum(&inst, &OracleBudget::default()).unwrap().value;
        let r = run_oa(&inst, &cond, &exact(), Some((n - 2, n - 1))).unwrap();
        assert!((r.min_value.unwrap() - oracle).abs() <= 1e-6, "{name}");
        assert!(largest_violation(&r.notes) <= 1e-6, "{name}");
    }
}

#[test]
fn pending_rows_never_grow() {
    for (name, inst) in suite(&["t4-j1-camo", "t4-j2", "t3-j2-beta2-camo"]) {
        let cond = inst.target.conditional.clone().unwrap();
        let r = run_oa(&inst, &cond, &exact(), None).unwrap();
        let pending: Vec<usize> = r.trace.iter().map(|row| row.lazy_pending).collect();
        assert!(pending.windows(2).all(|w| w[1] <= w[0]), "{name}: {pending:?}");
        let reinstated: Vec<usize> = r.trace.iter().map(|row| row.reinstated).collect();
        assert!(reinstated.windows(2).all(|w| w[1] >= w[0]), "{name}: {reinstated:?}");
        assert_eq!(r.trace.last().unwrap().event, "final");
    }
}

#[test]
fn oa_agrees_with_full_secant_models() {
    let opts = RunOptions::default().with_gap(1e-9);
    for (name, inst) in suite(&["t3-j1", "t4-j1-camo", "t4-two-class-beta", "t4-j2-cap1"]) {
        let l = solve_method(&inst, Method::CspL, &opts).unwrap().min_value.unwrap();
        let lp = solve_method(&inst, Method::CspLPre, &opts).unwrap().min_value.unwrap();
        let oa = solve_method(&inst, Method::Oa, &opts).unwrap().min_value.unwrap();
        for v in [lp, oa] {
            assert!((v - l).abs() <= 2e-4 * l, "{name}: {l} {lp} {oa}");
        }
    }
    let _ = CspOptions::default();
}
