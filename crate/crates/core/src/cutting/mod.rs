//! Secant cutting-plane methods over the Markov target model: the plain
//! loop, the loop restricted to detectable cells, and the loop that also
//! relaxes effort integrality outside the most likely target states.

mod detect;
mod loops;

pub use detect::{build_detectability, DetectabilityIndex};
pub use loops::{
    build_master, build_master_sca, default_upsilon, next_delta, run_bsca, run_cutting, run_oabsca,
    run_sca, Cut, CuttingRun, LoopOptions, LoopState, Master, MasterKind,
};
