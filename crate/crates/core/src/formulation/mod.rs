//! Linearized MILP formulations: the shared search-plan block, the path
//! formulations (step and secant variants) and the Markov formulation.

mod csp;
mod extract;
mod msp;
mod sp;

pub use csp::{
    build_csp_l, build_csp_l_rows, build_csp_u, detectable_pairs, secant_coefficients, secant_row,
    CspHandles, CspOptions, DEFAULT_MAX_EFFORT,
};
pub use extract::{effort_targets, extract_plan, repair_plan, ExtractError, RepairMode};
pub use msp::{build_msp, MspHandles};
pub use sp::{add_search_constraints, EffortDomain, SpBlock, SpRelax};
