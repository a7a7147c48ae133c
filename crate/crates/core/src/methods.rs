//! One entry point for every solution method.

use std::time::Instant;

use crate::cutting::{run_cutting, LoopOptions, MasterKind};
use crate::error::{Error, Result};
use crate::eval::{f_conditional, f_markov_totals};
use crate::formulation::{
    build_csp_l, build_csp_u, build_msp, effort_targets, extract_plan, repair_plan, CspHandles,
    CspOptions, ExtractError, RepairMode, SpBlock, DEFAULT_MAX_EFFORT,
};
use crate::milp::{self, MilpModel, SolveControls, SolveOutcome};
use crate::model::{EffortMap, SearchInstance, SearchPlan};
use crate::oa::run_oa;
use crate::oracle::{brute_force_optimum, OracleBudget};
use crate::report::{Method, ModelStats, RunStatus, SolveReport, TraceRow};
use crate::target::{enumerate_paths, ConditionalTargetModel, DEFAULT_PATH_CAP};

/// Everything a method run may need beyond the instance.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOptions {
    pub controls: SolveControls,
    /// Lazy band override for `oa`.
    pub band: Option<(u64, u64)>,
    pub loop_options: LoopOptions,
    pub oracle: OracleBudget,
    /// Largest per-path effort cap accepted by the path formulations.
    pub max_effort: u64,
}

impl Default for RunOptions {
    fn default() -> Self {
        let controls = SolveControls::default();
        let loop_options = LoopOptions { tolerance: controls.rel_gap, ..LoopOptions::default() };
        RunOptions {
            controls,
            band: None,
            loop_options,
            oracle: OracleBudget::default(),
            max_effort: DEFAULT_MAX_EFFORT,
        }
    }
}

impl RunOptions {
    /// Same gap for the MILP solves and the cutting-plane stopping test.
    pub fn with_gap(mut self, gap: f64) -> Self {
        self.controls.rel_gap = gap;
        self.loop_options.tolerance = gap;
        self
    }
}

/// Path list of the instance, enumerated from the Markov law when only that
/// is present.
pub fn conditional_model(inst: &SearchInstance) -> Result<(ConditionalTargetModel, bool)> {
    if let Some(c) = &inst.target.conditional {
        return Ok((c.clone(), false));
    }
    let markov = inst.target.markov.as_ref().ok_or(Error::MissingTarget("conditional"))?;
    Ok((enumerate_paths(markov, inst.horizon, 0.0, DEFAULT_PATH_CAP)?, true))
}

/// Runs `method` on `inst`.
pub fn solve_method(inst: &SearchInstance, method: Method, opts: &RunOptions) -> Result<SolveReport> {
    let started = Instant::now();
    let mut report = match method {
        Method::CspU | Method::CspL | Method::CspUPre | Method::CspLPre | Method::Oa => {
            let (cond, enumerated) = conditional_model(inst)?;
            let mut r = if method == Method::Oa {
                run_oa(inst, &cond, &opts.controls, opts.band)?
            } else {
                run_path_formulation(inst, &cond, method, opts)?
            };
            if enumerated {
                r.note(format!("{} target paths enumerated from the Markov law", cond.len()));
            }
            r
        }
        Method::Msp => {
            let markov = inst.target.markov.as_ref().ok_or(Error::MissingTarget("markov"))?;
            let (model, h) = build_msp(inst, markov)?;
            let mut r = SolveReport::new(Method::Msp);
            let out = solve_logged(&model, &opts.controls, &mut r)?;
            conclude(inst, &h.sp, &out, &opts.controls, &mut r)?;
            if let Some(z) = &r.effort {
                r.min_value = Some(f_markov_totals(&z.totals(), markov, inst.detection.alpha, inst.horizon));
            }
            r
        }
        Method::Sca | Method::Bsca | Method::OaBsca => {
            let markov = inst.target.markov.as_ref().ok_or(Error::MissingTarget("markov"))?;
            let kind = match method {
                Method::Sca => MasterKind::Sca,
                Method::Bsca => MasterKind::Bsca,
                _ => MasterKind::OaBsca { upsilon: 0 },
            };
            run_cutting(inst, markov, kind, &opts.controls, &opts.loop_options)?.report
        }
        Method::Oracle => {
            let res = brute_force_optimum(inst, &opts.oracle)?;
            let mut r = SolveReport::new(Method::Oracle);
            let plan = res.optimal_plans[0].clone();
            r.effort = Some(crate::model::derive_effort(&plan, inst)?);
            r.plan = Some(plan);
            r.min_value = Some(res.value);
            r.model_objective = Some(res.value);
            r.lower_bound = res.value;
            r.status = RunStatus::Optimal;
            r.note(format!(
                "{:?} objective, {} joint plans, {} optimal",
                res.objective, res.joint_plans, res.optimal_count
            ));
            r
        }
    };
    report.seconds = started.elapsed().as_secs_f64();
    Ok(report)
}

fn run_path_formulation(
    inst: &SearchInstance,
    cond: &ConditionalTargetModel,
    method: Method,
    opts: &RunOptions,
) -> Result<SolveReport> {
    let copts = CspOptions {
        preprocess: matches!(method, Method::CspUPre | Method::CspLPre),
        max_effort: opts.max_effort,
        ..CspOptions::default()
    };
    let (model, handles): (MilpModel, CspHandles) = match method {
        Method::CspU | Method::CspUPre => build_csp_u(inst, cond, &copts)?,
        _ => build_csp_l(inst, cond, &copts)?,
    };
    let mut r = SolveReport::new(method);
    r.note(format!("N={}, {} paths", handles.n_cap, cond.len()));
    let out = solve_logged(&model, &opts.controls, &mut r)?;
    conclude_path_solve(inst, cond, &handles, &out, &opts.controls, &mut r)?;
    Ok(r)
}

fn solve_logged(model: &MilpModel, controls: &SolveControls, r: &mut SolveReport) -> Result<SolveOutcome> {
    r.stats = ModelStats { vars: model.num_vars(), integer_vars: model.num_integer(), rows: model.num_rows() };
    let out = milp::solve(model, controls)?;
    r.trace.push(TraceRow {
        event: "solve".into(),
        iteration: 1,
        upper: out.objective.unwrap_or(f64::INFINITY),
        lower: out.bound,
        gap: out.gap,
        seconds: out.seconds,
        ..TraceRow::default()
    });
    r.iterations = 1;
    Ok(out)
}

pub(crate) fn conclude_path_solve(
    inst: &SearchInstance,
    cond: &ConditionalTargetModel,
    handles: &CspHandles,
    out: &SolveOutcome,
    controls: &SolveControls,
    r: &mut SolveReport,
) -> Result<()> {
    conclude(inst, &handles.sp, out, controls, r)?;
    if let Some(z) = &r.effort {
        r.min_value = Some(f_conditional(z, cond, inst.detection.alpha));
    }
    Ok(())
}

/// Fills status, bound, plan and effort from a single MILP solve. Flows
/// that came back fractional from a relaxed model are rebuilt from the
/// effort values.
fn conclude(
    inst: &SearchInstance,
    block: &SpBlock,
    out: &SolveOutcome,
    controls: &SolveControls,
    r: &mut SolveReport,
) -> Result<()> {
    r.status = out.status.into();
    r.model_objective = out.objective;
    r.lower_bound = out.bound;
    if let Some(d) = &out.diagnostic {
        r.note(d.clone());
    }
    let Some(values) = out.values.as_deref() else {
        return Ok(());
    };
    let (plan, effort) = match extract_plan(inst, block, values, true) {
        Ok(found) => found,
        Err(ExtractError::Fractional { .. }) if block.relaxed_flows => {
            let targets = block.effort.iter().map(|(&k, &v)| (k, values[v.0])).collect();
            match repair_plan(inst, &targets, RepairMode::Exact, controls)? {
                Some(found) => {
                    r.note("fractional flows rebuilt from the effort values");
                    found
                }
                None => {
                    r.note("fractional flows, nearest integral plan used");
                    repair_plan(inst, &targets, RepairMode::Nearest, controls)?
                        .ok_or_else(|| Error::Extraction("no integral plan near the solution".into()))?
                }
            }
        }
        Err(e) => return Err(e.into()),
    };
    set_plan(r, plan, effort);
    Ok(())
}

fn set_plan(r: &mut SolveReport, plan: SearchPlan, effort: EffortMap) {
    r.plan = Some(plan);
    r.effort = Some(effort);
}

/// Rebuilds a plan from an effort map; exposed for callers that only keep
/// effort.
pub fn plan_for_effort(
    inst: &SearchInstance,
    effort: &EffortMap,
    controls: &SolveControls,
) -> Result<Option<(SearchPlan, EffortMap)>> {
    repair_plan(inst, &effort_targets(effort), RepairMode::Exact, controls)
}
