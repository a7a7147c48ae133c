use std::collections::BTreeMap;
use std::fmt;

use super::sp::{add_search_constraints, SpBlock, SpRelax};
use crate::error::{Error, Result};
use crate::milp::{self, MilpModel, Sense, SolveControls, VarKind, INT_TOL};
use crate::model::{
    check_plan_feasibility, derive_effort, effort_bounds, EffortMap, FlowKey, SearchInstance,
    SearchPlan, StateId, Violation,
};

/// Why a solver point could not be read back as a plan.
#[derive(Clone, Debug, PartialEq)]
pub enum ExtractError {
    /// A flow variable is not within `INT_TOL` of an integer.
    Fractional { key: FlowKey, value: f64 },
    /// The effort read from the model disagrees with the effort the flows
    /// induce.
    EffortMismatch { class: usize, state: StateId, t: usize, model: f64, derived: u32 },
    /// The rounded plan violates a constraint family.
    Infeasible(Vec<Violation>),
}

impl fmt::Display for ExtractError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtractError::Fractional { key, value } => write!(f, "fractional flow {key:?} = {value}"),
            ExtractError::EffortMismatch { class, state, t, model, derived } => write!(
                f,
                "effort of class {class} at ({state}, {t}) is {model} in the model but {derived} from the flows"
            ),
            ExtractError::Infeasible(v) => {
                write!(f, "plan infeasible: ")?;
                for (i, x) in v.iter().enumerate() {
                    if i > 0 {
                        write!(f, "; ")?;
                    }
                    write!(f, "{x}")?;
                }
                Ok(())
            }
        }
    }
}

impl From<ExtractError> for Error {
    fn from(e: ExtractError) -> Self {
        Error::Extraction(e.to_string())
    }
}

/// Reads flows from a solver point, checks integrality, recomputes effort
/// and checks it against the model's effort variables when `check_effort`
/// is set.
pub fn extract_plan(
    inst: &SearchInstance,
    block: &SpBlock,
    values: &[f64],
    check_effort: bool,
) -> std::result::Result<(SearchPlan, EffortMap), ExtractError> {
    let mut flows = BTreeMap::new();
    for &(key, v) in &block.flows {
        let x = values[v.0];
        let r = x.round();
        if (x - r).abs() > INT_TOL {
            return Err(ExtractError::Fractional { key, value: x });
        }
        if r >= 0.5 {
            flows.insert(key, r as u32);
        }
    }
    let plan = SearchPlan::from_flows(inst, flows);
    let effort = derive_effort(&plan, inst).expect("flows come from defined arcs");
    if check_effort {
        for (&(l, s, t), &v) in &block.effort {
            let model = values[v.0];
            let derived = effort.get(l, s, t);
            if (model - derived as f64).abs() > INT_TOL {
                return Err(ExtractError::EffortMismatch { class: l, state: s, t, model, derived });
            }
        }
    }
    let report = check_plan_feasibility(&plan, inst);
    if !report.feasible() {
        return Err(ExtractError::Infeasible(report.violations));
    }
    Ok((plan, effort))
}

/// Target used when rebuilding a plan from effort values.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RepairMode {
    /// Effort must equal the (integral) target exactly.
    Exact,
    /// Effort minimizes the L1 distance to the target.
    Nearest,
}

/// Finds an integral plan whose effort matches `target` (keyed by
/// `(class, state, t)`, missing cells mean zero). Returns `None` when
/// `Exact` is impossible.
pub fn repair_plan(
    inst: &SearchInstance,
    target: &BTreeMap<(usize, StateId, usize), f64>,
    mode: RepairMode,
    controls: &SolveControls,
) -> Result<Option<(SearchPlan, EffortMap)>> {
    let bounds = effort_bounds(inst);
    let mut model = MilpModel::new();
    let block = add_search_constraints(&mut model, inst, &bounds, SpRelax::NONE, &|_, _| Some(VarKind::Integer));
    for (&key, &z) in &block.effort {
        let goal = target.get(&key).copied().unwrap_or(0.0);
        match mode {
            RepairMode::Exact => {
                let r = goal.round();
                if (goal - r).abs() > INT_TOL || r > model.var(z).upper + INT_TOL {
                    return Ok(None);
                }
                model.fix(z, r);
            }
            RepairMode::Nearest => {
                let up = model.add_var(format!("dev+[{key:?}]"), VarKind::Continuous, 0.0, f64::INFINITY);
                let down = model.add_var(format!("dev-[{key:?}]"), VarKind::Continuous, 0.0, f64::INFINITY);
                model.set_cost(up, 1.0);
                model.set_cost(down, 1.0);
                model.add_constraint(
                    format!("dev[{key:?}]"),
                    vec![(z, 1.0), (up, -1.0), (down, 1.0)],
                    Sense::Eq,
                    goal,
                );
            }
        }
    }
    if mode == RepairMode::Exact {
        for key in target.keys() {
            if !block.effort.contains_key(key) && target[key].abs() > INT_TOL {
                return Ok(None);
            }
        }
    }
    let controls = SolveControls { rel_gap: 0.0, abs_gap: 1e-9, ..controls.clone() };
    let out = milp::solve(&model, &controls)?;
    let Some(values) = out.values.as_deref() else {
        return Ok(None);
    };
    match extract_plan(inst, &block, values, true) {
        Ok(found) => Ok(Some(found)),
        Err(e) => Err(e.into()),
    }
}

/// Effort map as repair targets.
pub fn effort_targets(z: &EffortMap) -> BTreeMap<(usize, StateId, usize), f64> {
    z.nonzero().map(|(l, s, t, v)| ((l, s, t), v as f64)).collect()
}
