mod common;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use searchplan::cutting::{
    build_detectability, build_master, default_upsilon, next_delta, run_cutting, Cut, LoopOptions,
    MasterKind,
};
use searchplan::eval::f_markov_totals;
use searchplan::milp::{solve, SolveControls};
use searchplan::model::{line_example, RateFactors};
use searchplan::oracle::{brute_force_optimum, OracleBudget};
use searchplan::{effort_bounds, grid_instance, GridOptions, RunStatus, SearchInstance};

fn exact() -> SolveControls {
    SolveControls::default().with_gap(1e-9)
}

fn tight() -> LoopOptions {
    LoopOptions { tolerance: 1e-9, ..LoopOptions::default() }
}

fn suite(names: &[&str]) -> Vec<(String, SearchInstance)> {
    common::tiny_suite().into_iter().filter(|(n, _)| names.contains(&n.as_str())).collect()
}

#[test]
fn step_schedule() {
    assert!((next_delta(0.3, 0.0, false) - 0.03).abs() < 1e-15);
    assert!((next_delta(0.06, 0.03, false) - 0.02).abs() < 1e-15);
    assert!((next_delta(0.06, 0.03, true) - 0.015).abs() < 1e-15);
    assert!((next_delta(0.3, 0.01, true) - 0.005).abs() < 1e-15);
    assert_eq!(next_delta(f64::INFINITY, 0.0, false), 0.03);
}

#[test]
fn cuts_under_estimate_at_random_efforts() {
    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(17);
    for seed in 0..4 {
        let inst = common::random_markov_instance(seed, seed % 2 == 0);
        let markov = inst.target.markov.as_ref().unwrap();
        let (a, t) = (inst.detection.alpha, inst.horizon);
        let cells = inst.state_count() * t;
        let random_totals = |rng: &mut rand_chacha::ChaCha20Rng| -> Vec<u32> {
            (0..cells).map(|k| if k % inst.state_count() < 9 && rng.gen_bool(0.3) { rng.gen_range(1..4) } else { 0 }).collect()
        };
        let cuts: Vec<Cut> = (0..5).map(|_| Cut::at(random_totals(&mut rng), markov, a, t, None)).collect();
        for _ in 0..50 {
            let z = random_totals(&mut rng);
            let f = f_markov_totals(&z, markov, a, t);
            let zf: Vec<f64> = z.iter().map(|&v| v as f64).collect();
            for c in &cuts {
                assert!(c.evaluate(&zf) <= f + 1e-12, "seed {seed}: cut {} > f {f}", c.evaluate(&zf));
            }
        }
        // Tight at the anchor.
        for c in &cuts {
            let zf: Vec<f64> = c.point.iter().map(|&v| v as f64).collect();
            assert!((c.evaluate(&zf) - c.value).abs() < 1e-12);
        }
    }
}

#[test]
fn bounds_sandwich_the_optimum() {
    for (name, inst) in suite(&["t3-j1-camo", "t4-j1", "t4-endurance2", "t3-beta2", "t4-two-class-beta"]) {
        let opt = brute_force_optimum(&inst, &OracleBudget::default()).unwrap().value;
        let markov = inst.target.markov.as_ref().unwrap();
        for kind in [MasterKind::Sca, MasterKind::Bsca, MasterKind::OaBsca { upsilon: 0 }] {
            let opts = LoopOptions::default();
            let run = run_cutting(&inst, markov, kind, &exact(), &opts).unwrap();
            assert_eq!(run.report.status, RunStatus::Optimal, "{name} {kind:?}");
            for row in run.report.trace.iter().filter(|r| r.event == "iteration") {
                assert!(row.lower <= opt + 1e-9 && opt <= row.upper + 1e-9, "{name} {kind:?} it {}", row.iteration);
            }
            let r = &run.report;
            assert!(r.min_value.unwrap() - r.lower_bound <= opts.tolerance * r.lower_bound + 1e-15);
        }
    }
}

#[test]
fn no_detection_stops_after_one_iteration() {
    let mut inst = grid_instance(&GridOptions::new(3, 1, 4)).unwrap();
    inst.classes[0].beta = RateFactors::uniform(0);
    let markov = inst.target.markov.clone().unwrap();
    let run = run_cutting(&inst, &markov, MasterKind::Sca, &exact(), &tight()).unwrap();
    assert_eq!(run.report.iterations, 1);
    assert_eq!(run.report.min_value, Some(1.0));
    assert!((run.report.lower_bound - 1.0).abs() < 1e-12);
}

#[test]
fn reduced_master_matches_plain_loop() {
    for (name, inst) in suite(&["t4-j1-camo", "t3-j2", "t4-single-entry"]) {
        let markov = inst.target.markov.as_ref().unwrap();
        let sca = run_cutting(&inst, markov, MasterKind::Sca, &exact(), &tight()).unwrap().report;
        let bsca = run_cutting(&inst, markov, MasterKind::Bsca, &exact(), &tight()).unwrap().report;
        assert!((sca.min_value.unwrap() - bsca.min_value.unwrap()).abs() < 1e-9, "{name}");
        assert!(bsca.stats.integer_vars <= sca.stats.integer_vars, "{name}");
    }
}

#[test]
fn master_sizes() {
    let (_, inst) = suite(&["t4-j1-camo"]).pop().unwrap();
    let markov = inst.target.markov.as_ref().unwrap();
    let ix = build_detectability(&inst, markov);
    let none = BTreeMap::new();
    let sca = build_master(&inst, &ix, MasterKind::Sca, &[], &none);
    let bsca = build_master(&inst, &ix, MasterKind::Bsca, &[], &none);
    assert_eq!(bsca.block.effort.len(), ix.detectable_count());
    assert!(sca.block.effort.len() > bsca.block.effort.len());
    let relaxed = build_master(&inst, &ix, MasterKind::OaBsca { upsilon: 1 }, &[], &none);
    assert!(relaxed.relaxed_cells > 0);
    assert!(relaxed.model.num_integer() < bsca.model.num_integer());
    let wide = build_master(&inst, &ix, MasterKind::OaBsca { upsilon: inst.state_count() }, &[], &none);
    assert_eq!(wide.relaxed_cells, 0);
    assert_eq!(wide.model.num_integer(), bsca.model.num_integer());
    assert_eq!(default_upsilon(&ix), 5);
}

#[test]
fn wide_upsilon_behaves_like_reduced_loop() {
    for (name, inst) in suite(&["t4-j1-camo", "t3-beta2"]) {
        let markov = inst.target.markov.as_ref().unwrap();
        let wide = LoopOptions { upsilon: Some(inst.state_count()), ..tight() };
        let a = run_cutting(&inst, markov, MasterKind::OaBsca { upsilon: 0 }, &exact(), &wide).unwrap().report;
        let b = run_cutting(&inst, markov, MasterKind::Bsca, &exact(), &tight()).unwrap().report;
        assert!((a.min_value.unwrap() - b.min_value.unwrap()).abs() < 1e-9, "{name}");
        assert_eq!(a.iterations, b.iterations, "{name}");
    }
}

#[test]
fn relaxed_masters_bound_integer_masters() {
    for (name, inst) in suite(&["t4-j1-camo", "t3-j2-camo", "t4-two-class-beta"]) {
        let markov = inst.target.markov.as_ref().unwrap();
        let cuts = run_cutting(&inst, markov, MasterKind::Sca, &exact(), &tight()).unwrap().cuts;
        let ix = build_detectability(&inst, markov);
        let none = BTreeMap::new();
        let value = |kind| solve(&build_master(&inst, &ix, kind, &cuts, &none).model, &exact()).unwrap().objective.unwrap();
        let sca = value(MasterKind::Sca);
        let bsca = value(MasterKind::Bsca);
        let relaxed = value(MasterKind::OaBsca { upsilon: 1 });
        assert!((sca - bsca).abs() < 1e-9, "{name}");
        assert!(relaxed <= bsca + 1e-9, "{name}");
    }
}

#[test]
fn detectability_on_the_line() {
    let inst = line_example();
    let ix = build_detectability(&inst, inst.target.markov.as_ref().unwrap());
    assert_eq!(ix.blind_periods(), vec![1]);
    assert_eq!(ix.detection_periods(), vec![2, 3, 4, 5, 6]);
    for t in 2..=6 {
        assert_eq!(ix.detectable_states(t), vec![2]);
    }
    assert!(ix.reachable(1, 1) && !ix.detectable(1, 1));
}

#[test]
fn detectability_on_the_grid() {
    let inst = grid_instance(&GridOptions::new(3, 1, 3).with_camouflage(true)).unwrap();
    let ix = build_detectability(&inst, inst.target.markov.as_ref().unwrap());
    // The target starts in the centre, searchers enter at the corner.
    assert_eq!(ix.detectable_states(1), Vec::<usize>::new());
    assert_eq!(ix.detectable_states(2), vec![1, 3, 4]);
    // Cell 8 is three moves from the nearest entry cell.
    assert_eq!(ix.detectable_states(3), vec![0, 1, 2, 3, 4, 5, 6, 7]);
    assert_eq!(ix.top_states(3, 1), vec![4]);
    let _ = effort_bounds(&inst);
}
