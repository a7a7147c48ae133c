//! Search planning for teams of searchers looking for a moving target that
//! may hide in camouflage.
//!
//! The crate contains the problem model ([`model`]), target motion models
//! ([`target`]), exact objective evaluation ([`eval`]), a MILP layer over
//! HiGHS ([`milp`]), the linearized formulations ([`formulation`]), the lazy
//! outer-approximation method ([`oa`]), the secant cutting-plane methods
//! ([`cutting`]), ground-truth engines ([`oracle`]) and run reporting
//! ([`report`]).

pub mod cutting;
pub mod error;
pub mod eval;
pub mod formulation;
pub mod methods;
pub mod milp;
pub mod model;
pub mod oa;
pub mod oracle;
pub mod report;
pub mod target;

pub use error::{Error, Result};
pub use model::{
    check_plan_feasibility, derive_effort, effort_bounds, grid_instance, validate_instance,
    EffortBounds, EffortMap, GridOptions, SearchInstance, SearchPlan,
};
pub use methods::{solve_method, RunOptions};
pub use report::{Method, RunStatus, SolveReport};
pub use target::{ConditionalTargetModel, MarkovTargetModel, TargetModel, TargetState};
