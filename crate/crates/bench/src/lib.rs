//! Instances shared by the criterion benches.

use searchplan::model::EffortMap;
use searchplan::target::{merge_equivalent, sample_paths};
use searchplan::{derive_effort, grid_instance, solve_method, GridOptions, Method, RunOptions, SearchInstance};

/// Grid instance with `paths` sampled target paths attached (merged).
pub fn grid_with_paths(side: usize, searchers: u32, horizon: usize, camouflage: bool, paths: usize) -> SearchInstance {
    let mut inst =
        grid_instance(&GridOptions::new(side, searchers, horizon).with_camouflage(camouflage)).expect("valid grid");
    let markov = inst.target.markov.as_ref().expect("grid target");
    let sampled = sample_paths(markov, horizon, paths, 1).expect("sampling");
    inst.target.conditional = Some(merge_equivalent(&sampled));
    inst
}

/// Effort of a near-optimal plan, for timing the evaluators on realistic input.
pub fn solved_effort(inst: &SearchInstance) -> EffortMap {
    let report = solve_method(inst, Method::Msp, &RunOptions::default().with_gap(1e-3)).expect("msp solves");
    derive_effort(report.plan.as_ref().expect("msp plan"), inst).expect("effort")
}
