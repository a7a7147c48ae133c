#![allow(dead_code)]

use searchplan::model::{ClassSpec, EntryMode, Reach};
use searchplan::target::{enumerate_paths, merge_equivalent, DEFAULT_PATH_CAP};
use searchplan::{grid_instance, GridOptions, SearchInstance};

/// Attaches the exact path list of the Markov target, with paths that
/// expose the target in the same cells merged.
pub fn with_paths(mut inst: SearchInstance) -> SearchInstance {
    let markov = inst.target.markov.as_ref().expect("markov target");
    let paths = enumerate_paths(markov, inst.horizon, 0.0, DEFAULT_PATH_CAP).expect("enumerable");
    inst.target.conditional = Some(merge_equivalent(&paths));
    inst
}

fn class(name: &str, count: u32, endurance: Option<usize>, beta: u32) -> ClassSpec {
    ClassSpec { name: name.into(), count, endurance, reach: Reach::Unit, beta }
}

fn opts(horizon: usize, classes: Vec<ClassSpec>) -> GridOptions {
    GridOptions { classes, ..GridOptions::new(3, 1, horizon) }
}

/// Small 3x3 instances covering camouflage, endurance, rate factors,
/// several classes, caps, longer moves and a single entry cell.
pub fn tiny_suite() -> Vec<(String, SearchInstance)> {
    let mut v: Vec<(String, GridOptions, Option<u32>)> = Vec::new();
    for t in [3, 4, 5] {
        for camo in [false, true] {
            v.push((format!("t{t}-j1{}", if camo { "-camo" } else { "" }), opts(t, vec![class("1", 1, None, 1)]).with_camouflage(camo), None));
        }
    }
    for t in [3, 4] {
        for camo in [false, true] {
            v.push((format!("t{t}-j2{}", if camo { "-camo" } else { "" }), opts(t, vec![class("1", 2, None, 1)]).with_camouflage(camo), None));
        }
    }
    v.push(("t4-endurance2".into(), opts(4, vec![class("1", 1, Some(2), 1)]).with_terminal_row(true), None));
    v.push(("t5-endurance3".into(), opts(5, vec![class("1", 1, Some(3), 1)]).with_terminal_row(true), None));
    v.push((
        "t4-j2-endurance2-camo".into(),
        opts(4, vec![class("1", 2, Some(2), 1)]).with_terminal_row(true).with_camouflage(true),
        None,
    ));
    v.push(("t3-beta2".into(), opts(3, vec![class("1", 1, None, 2)]).with_alpha(0.4), None));
    v.push(("t4-beta2-camo".into(), opts(4, vec![class("1", 1, None, 2)]).with_alpha(0.4).with_camouflage(true), None));
    v.push((
        "t4-two-class-beta".into(),
        opts(4, vec![class("1", 1, None, 2), class("2", 1, None, 1)]).with_alpha(0.4),
        None,
    ));
    v.push(("t4-j2-cap1".into(), opts(4, vec![class("1", 2, None, 1)]), Some(1)));
    let mut long = class("1", 1, None, 1);
    long.reach = Reach::Extended { long_travel: 2 };
    v.push(("t5-long-moves".into(), opts(5, vec![long]), None));
    v.push((
        "t4-single-entry".into(),
        opts(4, vec![class("1", 1, None, 1)]).with_entry(EntryMode::SingleCell { row: 2, col: 1 }),
        None,
    ));
    v.push((
        "t4-two-class-endurance".into(),
        opts(4, vec![class("1", 1, Some(3), 1), class("2", 1, Some(2), 1)]).with_terminal_row(true),
        None,
    ));
    v.push((
        "t3-j2-beta2-camo".into(),
        opts(3, vec![class("1", 2, None, 2)]).with_alpha(0.3).with_camouflage(true),
        None,
    ));
    v.into_iter()
        .map(|(name, o, cap)| {
            let mut inst = grid_instance(&o).expect("valid grid options");
            if let Some(cap) = cap {
                for t in 0..=inst.horizon {
                    for s in 0..9 {
                        inst.limits.caps.insert((s, t), cap);
                    }
                }
            }
            (name, with_paths(inst))
        })
        .collect()
}

/// 3x3 grid with a random, time-varying Markov target law over the grid
/// moves (plus camouflage when `camo`), horizon 3..=5.
pub fn random_markov_instance(seed: u64, camo: bool) -> SearchInstance {
    use rand::{Rng, SeedableRng};
    use searchplan::target::{MarkovTargetModel, TargetModel, TargetState, Transition};

    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
    let horizon = rng.gen_range(3..=5);
    let mut inst = grid_instance(&GridOptions::new(3, 1, horizon).with_alpha(rng.gen_range(0.2..1.5))).unwrap();
    let states = inst.state_count();
    let mut initial = vec![0.0; 2 * states];
    for _ in 0..3 {
        initial[TargetState::visible(rng.gen_range(0..9)).index()] += rng.gen_range(0.1..1.0);
    }
    let mass: f64 = initial.iter().sum();
    initial.iter_mut().for_each(|v| *v /= mass);
    let mut steps = Vec::new();
    for _ in 1..horizon {
        let mut rows = vec![Vec::new(); 2 * states];
        for s in 0..9 {
            for hidden in [false, true] {
                let from = TargetState { state: s, camouflaged: hidden }.index();
                let mut row: Vec<(usize, f64)> = Vec::new();
                for a in inst.motion.forward(0, s) {
                    row.push((TargetState::visible(a.to).index(), rng.gen_range(0.05..1.0)));
                }
                if camo {
                    row.push((TargetState::hidden(s).index(), rng.gen_range(0.05..1.0)));
                }
                let m: f64 = row.iter().map(|e| e.1).sum();
                row.iter_mut().for_each(|e| e.1 /= m);
                rows[from] = row;
            }
        }
        steps.push(Transition::from_rows(rows));
    }
    inst.target = TargetModel::from_markov(MarkovTargetModel::new(states, initial, steps));
    inst
}

/// Random per-class effort in `0..=max` on the grid cells.
pub fn random_effort(inst: &SearchInstance, seed: u64, max: u32) -> searchplan::EffortMap {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
    let mut z = searchplan::EffortMap::for_instance(inst);
    for l in 0..inst.class_count() {
        for t in 1..=inst.horizon {
            for s in 0..inst.state_count() {
                if !inst.motion.is_base(s) && rng.gen_bool(0.4) {
                    z.set(l, s, t, rng.gen_range(1..=max));
                }
            }
        }
    }
    z
}

/// A feasible plan built from random walks, retrying up to 200 times.
pub fn random_feasible_plan(inst: &SearchInstance, seed: u64) -> Option<searchplan::SearchPlan> {
    use rand::{Rng, SeedableRng};
    use searchplan::model::{Occupancy, Trajectory};
    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
    for _ in 0..200 {
        let mut trs = Vec::new();
        for (l, c) in inst.classes.iter().enumerate() {
            for _ in 0..c.count {
                let mut states = vec![inst.motion.s_plus()];
                let mut t = 0;
                while t < inst.horizon {
                    let cur = *states.last().unwrap();
                    let arcs = inst.motion.forward(l, cur);
                    let a = arcs[rng.gen_range(0..arcs.len())];
                    let travel = a.travel as usize;
                    if t + travel > inst.horizon {
                        if arcs.iter().all(|b| t + b.travel as usize > inst.horizon) {
                            break;
                        }
                        continue;
                    }
                    for _ in 1..travel {
                        states.push(usize::MAX);
                    }
                    states.push(a.to);
                    t += travel;
                }
                if states.len() != inst.horizon + 1 {
                    continue;
                }
                let positions = states
                    .iter()
                    .map(|&s| if s == usize::MAX { Occupancy::Transit } else { Occupancy::At(s) })
                    .collect();
                trs.push(Trajectory { class: l, positions });
            }
        }
        if trs.len() != inst.classes.iter().map(|c| c.count as usize).sum::<usize>() {
            continue;
        }
        let Ok(plan) = searchplan::SearchPlan::from_trajectories(inst, &trs) else { continue };
        if searchplan::check_plan_feasibility(&plan, inst).feasible() {
            return Some(plan);
        }
    }
    None
}
