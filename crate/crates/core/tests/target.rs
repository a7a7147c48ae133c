use proptest::prelude::*;
use searchplan::eval::f_conditional;
use searchplan::model::Trajectory;
use searchplan::target::{
    enumerate_paths, merge_equivalent, occupancy, sample_paths, MarkovTargetModel, TargetState,
};
use searchplan::{derive_effort, grid_instance, Error, GridOptions, SearchPlan};

fn grid_markov(camo: bool, horizon: usize) -> (searchplan::SearchInstance, MarkovTargetModel) {
    let inst = grid_instance(&GridOptions::new(3, 1, horizon).with_camouflage(camo)).unwrap();
    let m = inst.target.markov.clone().unwrap();
    (inst, m)
}

#[test]
fn occupancy_conserves_mass() {
    for camo in [false, true] {
        let (_, m) = grid_markov(camo, 6);
        let q = occupancy(&m, 6);
        for t in 1..=6 {
            let mass: f64 = q.slice(t).iter().sum();
            assert!((mass - 1.0).abs() < 1e-12, "t={t} mass={mass}");
        }
    }
}

#[test]
fn grid_target_law() {
    let (_, m) = grid_markov(true, 3);
    // Centre of a 3x3 grid is cell 4 with four neighbours.
    let vis = TargetState::visible(4).index();
    let hid = TargetState::hidden(4).index();
    assert_eq!(m.initial()[vis], 1.0);
    assert_eq!(m.step(1).get(vis, vis), 0.5);
    assert_eq!(m.step(1).get(vis, hid), 0.1);
    assert_eq!(m.step(1).get(vis, TargetState::visible(1).index()), 0.1);
    assert!((m.step(1).get(hid, hid) - 1.0 / 6.0).abs() < 1e-15);
    assert!((m.step(1).get(hid, vis) - 5.0 / 6.0).abs() < 1e-15);
    // Corner cell has two neighbours.
    assert_eq!(m.step(1).get(0, TargetState::visible(1).index()), 0.2);
    let (_, plain) = grid_markov(false, 3);
    assert_eq!(plain.step(1).get(vis, vis), 0.6);
    assert_eq!(plain.step(1).get(vis, hid), 0.0);
}

#[test]
fn enumerated_paths_match_occupancy() {
    let (_, m) = grid_markov(true, 4);
    let cond = enumerate_paths(&m, 4, 0.0, 1_000_000).unwrap();
    assert!((cond.total_weight() - 1.0).abs() < 1e-12);
    let q = occupancy(&m, 4);
    for t in 1..=4 {
        let mut marg = vec![0.0; m.pair_count()];
        for p in &cond.paths {
            marg[p.cells[t - 1].index()] += p.weight;
        }
        for (i, &v) in marg.iter().enumerate() {
            assert!((v - q.pair(i, t)).abs() < 1e-12, "t={t} pair={i}");
        }
    }
}

#[test]
fn enumeration_respects_cap() {
    let (_, m) = grid_markov(true, 6);
    assert!(matches!(enumerate_paths(&m, 6, 0.0, 10), Err(Error::PathExplosion { cap: 10 })));
}

#[test]
fn sampling_is_deterministic_per_seed() {
    let (_, m) = grid_markov(true, 5);
    let a = sample_paths(&m, 5, 50, 7).unwrap();
    let b = sample_paths(&m, 5, 50, 7).unwrap();
    let c = sample_paths(&m, 5, 50, 8).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert!((a.total_weight() - 1.0).abs() < 1e-12);
    assert!(a.paths.iter().all(|p| p.cells.len() == 5));
    assert!(sample_paths(&m, 5, 0, 7).is_err());
}

#[test]
fn sampled_marginals_approach_occupancy() {
    let (_, m) = grid_markov(true, 4);
    let n = 20_000;
    let cond = sample_paths(&m, 4, n, 11).unwrap();
    let q = occupancy(&m, 4);
    for t in 1..=4 {
        let mut marg = vec![0.0; m.pair_count()];
        for p in &cond.paths {
            marg[p.cells[t - 1].index()] += p.weight;
        }
        for (i, &v) in marg.iter().enumerate() {
            let p = q.pair(i, t);
            let sd = (p * (1.0 - p) / n as f64).sqrt();
            assert!((v - p).abs() <= 5.0 * sd + 1e-12, "t={t} pair={i} {v} vs {p}");
        }
    }
}

fn walk_plan(inst: &searchplan::SearchInstance, picks: &[usize]) -> SearchPlan {
    let mut states = vec![inst.motion.s_plus()];
    for &p in picks.iter().take(inst.horizon) {
        let arcs = inst.motion.forward(0, *states.last().unwrap());
        states.push(arcs[p % arcs.len()].to);
    }
    SearchPlan::from_trajectories(inst, &[Trajectory::at(0, &states)]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn merging_keeps_every_objective(picks in prop::collection::vec(0usize..8, 4), camo in any::<bool>()) {
        let (inst, m) = grid_markov(camo, 4);
        let cond = enumerate_paths(&m, 4, 0.0, 1_000_000).unwrap();
        let merged = merge_equivalent(&cond);
        prop_assert!(merged.len() <= cond.len());
        let z = derive_effort(&walk_plan(&inst, &picks), &inst).unwrap();
        let a = f_conditional(&z, &cond, inst.detection.alpha);
        let b = f_conditional(&z, &merged, inst.detection.alpha);
        prop_assert!((a - b).abs() < 1e-12);
    }
}
