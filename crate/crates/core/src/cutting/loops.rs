use std::collections::{BTreeMap, HashSet};
use std::time::Instant;

use super::detect::{build_detectability, DetectabilityIndex};
use crate::error::{Error, Result};
use crate::eval::{f_markov_totals, CutData};
use crate::formulation::{
    add_search_constraints, extract_plan, repair_plan, RepairMode, SpBlock, SpRelax,
};
use crate::milp::{self, relative_gap, MilpModel, Row, Sense, SolveControls, VarId, VarKind, INT_TOL};
use crate::model::{effort_bounds, EffortMap, SearchInstance, SearchPlan, StateId};
use crate::report::{Method, ModelStats, RunStatus, SolveReport, TraceRow};
use crate::target::MarkovTargetModel;

/// A secant cut `xi >= f(Z^k) + sum_{s,t} delta_{s,t} (Z_{s,t} - Z^k_{s,t})`
/// in the total effort per cell.
#[derive(Clone, Debug, PartialEq)]
pub struct Cut {
    /// Effort totals `[(t-1) * S + s]` at the anchor point.
    pub point: Vec<u32>,
    /// `f` at the anchor point.
    pub value: f64,
    pub deltas: Vec<f64>,
}

impl Cut {
    /// Cut at the given totals; the reduced recursions are used when an
    /// index is supplied.
    pub fn at(
        totals: Vec<u32>,
        markov: &MarkovTargetModel,
        alpha: f64,
        horizon: usize,
        index: Option<&DetectabilityIndex>,
    ) -> Self {
        let data = CutData::from_totals(totals.clone(), markov, alpha, horizon, index);
        let value = data.value_at(1);
        let deltas = data.deltas();
        Cut { point: totals, value, deltas }
    }

    /// Constant of the cut row: `f(Z^k) - sum delta Z^k`.
    pub fn constant(&self) -> f64 {
        self.value - self.deltas.iter().zip(&self.point).map(|(d, &z)| d * z as f64).sum::<f64>()
    }

    /// Right side of the cut at arbitrary totals.
    pub fn evaluate(&self, totals: &[f64]) -> f64 {
        self.constant() + self.deltas.iter().zip(totals).map(|(d, z)| d * z).sum::<f64>()
    }

    fn row(&self, name: String, xi: VarId, block: &SpBlock, states: usize) -> Row {
        let mut terms = vec![(xi, 1.0)];
        for (&(_, s, t), &z) in &block.effort {
            let d = self.deltas[(t - 1) * states + s];
            if d != 0.0 {
                terms.push((z, -d));
            }
        }
        Row::new(name, terms, Sense::Ge, self.constant())
    }
}

/// Which master problem to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MasterKind {
    /// Effort on every mission cell, all integer.
    Sca,
    /// Effort only on detectable cells.
    Bsca,
    /// Effort on detectable cells, integer only on the `upsilon` most likely
    /// states per period.
    OaBsca { upsilon: usize },
}

/// A master problem: minimize `xi` over the search-plan constraints and
/// the cuts.
#[derive(Clone, Debug)]
pub struct Master {
    pub model: MilpModel,
    pub block: SpBlock,
    pub xi: VarId,
    /// Effort variables declared continuous.
    pub relaxed_cells: usize,
}

/// Builds a master of the given kind over `cuts`. `fixed` pins effort
/// variables to values (used by integrality restoration).
pub fn build_master(
    inst: &SearchInstance,
    index: &DetectabilityIndex,
    kind: MasterKind,
    cuts: &[Cut],
    fixed: &BTreeMap<(usize, StateId, usize), f64>,
) -> Master {
    let bounds = effort_bounds(inst);
    let mut model = MilpModel::new();
    let top: Vec<Vec<StateId>> = match kind {
        MasterKind::OaBsca { upsilon } => {
            std::iter::once(Vec::new()).chain((1..=inst.horizon).map(|t| index.top_states(t, upsilon))).collect()
        }
        _ => Vec::new(),
    };
    let domain = |s: StateId, t: usize| -> Option<VarKind> {
        match kind {
            MasterKind::Sca => Some(VarKind::Integer),
            MasterKind::Bsca => index.detectable(s, t).then_some(VarKind::Integer),
            MasterKind::OaBsca { .. } => index.detectable(s, t).then(|| {
                if top[t].binary_search(&s).is_ok() {
                    VarKind::Integer
                } else {
                    VarKind::Continuous
                }
            }),
        }
    };
    let relaxed_cells = match kind {
        MasterKind::OaBsca { .. } => (1..=inst.horizon)
            .map(|t| index.detectable_states(t).len() - top[t].len())
            .sum::<usize>(),
        _ => 0,
    };
    let relax = if relaxed_cells > 0 { SpRelax::ALL } else { SpRelax::NONE };
    let block = add_search_constraints(&mut model, inst, &bounds, relax, &domain);
    for (key, &v) in fixed {
        if let Some(z) = block.effort.get(key) {
            model.fix(*z, v);
        }
    }
    let xi = model.add_var("xi", VarKind::Continuous, 0.0, f64::INFINITY);
    model.set_cost(xi, 1.0);
    let states = inst.state_count();
    for (k, cut) in cuts.iter().enumerate() {
        model.add_row(cut.row(format!("cut[{k}]"), xi, &block, states));
    }
    Master { model, block, xi, relaxed_cells: relaxed_cells * inst.class_count() }
}

/// The plain secant-cut master over all mission cells.
pub fn build_master_sca(inst: &SearchInstance, index: &DetectabilityIndex, cuts: &[Cut]) -> Master {
    build_master(inst, index, MasterKind::Sca, cuts, &BTreeMap::new())
}

/// Controls of the cutting-plane loops beyond the MILP controls.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LoopOptions {
    /// Stop once `upper - lower <= tolerance * lower`.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Top-state count for the relaxed masters; `None` picks the default.
    pub upsilon: Option<usize>,
}

impl Default for LoopOptions {
    fn default() -> Self {
        LoopOptions { tolerance: 1e-4, max_iterations: 1000, upsilon: None }
    }
}

/// Bounds and bookkeeping of a cutting-plane run.
#[derive(Clone, Debug, PartialEq)]
pub struct LoopState {
    pub iteration: usize,
    pub upper: f64,
    pub lower: f64,
    pub delta: f64,
    pub gap: f64,
    pub seen: HashSet<EffortMap>,
}

/// Subproblem tolerance for the next iteration: `min(0.03, g/3)`, further
/// capped at half the previous tolerance when the last point repeated.
pub fn next_delta(gap: f64, previous: f64, repeated: bool) -> f64 {
    let d = (gap / 3.0).min(0.03);
    if repeated {
        d.min(previous / 2.0)
    } else {
        d
    }
}

/// `max(5, ceil(0.2 * max_t |detectable states at t|))`.
pub fn default_upsilon(index: &DetectabilityIndex) -> usize {
    let widest = (1..=index.horizon()).map(|t| index.detectable_states(t).len()).max().unwrap_or(0);
    ((widest as f64 * 0.2).ceil() as usize).max(5)
}

/// Result of a cutting-plane run together with the cuts it generated.
#[derive(Clone, Debug)]
pub struct CuttingRun {
    pub report: SolveReport,
    pub cuts: Vec<Cut>,
}

pub fn run_sca(
    inst: &SearchInstance,
    markov: &MarkovTargetModel,
    controls: &SolveControls,
    opts: &LoopOptions,
) -> Result<SolveReport> {
    Ok(run_cutting(inst, markov, MasterKind::Sca, controls, opts)?.report)
}

pub fn run_bsca(
    inst: &SearchInstance,
    markov: &MarkovTargetModel,
    controls: &SolveControls,
    opts: &LoopOptions,
) -> Result<SolveReport> {
    Ok(run_cutting(inst, markov, MasterKind::Bsca, controls, opts)?.report)
}

pub fn run_oabsca(
    inst: &SearchInstance,
    markov: &MarkovTargetModel,
    controls: &SolveControls,
    opts: &LoopOptions,
) -> Result<SolveReport> {
    Ok(run_cutting(inst, markov, MasterKind::OaBsca { upsilon: 0 }, controls, opts)?.report)
}

fn effort_values(block: &SpBlock, values: &[f64]) -> BTreeMap<(usize, StateId, usize), f64> {
    block.effort.iter().map(|(&k, &v)| (k, values[v.0])).collect()
}

/// Runs one of the cutting-plane loops. For `OaBsca` the `upsilon` in
/// `kind` is ignored in favour of `opts.upsilon` or the default.
pub fn run_cutting(
    inst: &SearchInstance,
    markov: &MarkovTargetModel,
    kind: MasterKind,
    controls: &SolveControls,
    opts: &LoopOptions,
) -> Result<CuttingRun> {
    controls.check()?;
    let started = Instant::now();
    let method = match kind {
        MasterKind::Sca => Method::Sca,
        MasterKind::Bsca => Method::Bsca,
        MasterKind::OaBsca { .. } => Method::OaBsca,
    };
    let mut report = SolveReport::new(method);
    let horizon = inst.horizon;
    let alpha = inst.detection.alpha;
    let index = build_detectability(inst, markov);
    let reduced = kind != MasterKind::Sca;
    let cut_at = |totals: Vec<u32>| Cut::at(totals, markov, alpha, horizon, reduced.then_some(&index));

    let mut kind = kind;
    if let MasterKind::OaBsca { .. } = kind {
        let upsilon = opts.upsilon.unwrap_or_else(|| default_upsilon(&index));
        kind = MasterKind::OaBsca { upsilon };
        report.note(format!("upsilon={upsilon}"));
    }
    if reduced {
        report.note(format!(
            "{} detectable cells, {} blind periods",
            index.detectable_count(),
            index.blind_periods().len()
        ));
    }

    let zero = EffortMap::for_instance(inst);
    let mut cuts = vec![cut_at(zero.totals())];
    let mut state = LoopState {
        iteration: 0,
        upper: 1.0,
        lower: 0.0,
        delta: 0.0,
        gap: f64::INFINITY,
        seen: HashSet::from([zero]),
    };
    let mut incumbent: Option<(SearchPlan, EffortMap, f64)> = None;
    let mut restorations = RestoreCounts::default();
    let mut start: Option<Vec<f64>> = None;
    report.status = RunStatus::Limit;

    loop {
        if state.iteration >= opts.max_iterations {
            report.note("iteration limit reached");
            break;
        }
        let left = milp::remaining(controls, started);
        if left.is_zero() {
            report.note("time limit reached");
            break;
        }
        state.iteration += 1;
        let master = build_master(inst, &index, kind, &cuts, &BTreeMap::new());
        report.stats = ModelStats {
            vars: master.model.num_vars(),
            integer_vars: master.model.num_integer(),
            rows: master.model.num_rows(),
        };
        let sub = SolveControls { rel_gap: state.delta, time_limit: left, ..controls.clone() };
        let out = milp::solve_with(&master.model, &sub, None, start.as_deref())?;
        let Some(values) = out.values.clone() else {
            if out.status == milp::SolveStatus::NoIncumbent {
                report.note("master stopped without an incumbent");
                break;
            }
            return Err(Error::Solver(format!("master problem ended with {:?}", out.status)));
        };
        let master_seconds = out.seconds;
        let bound = out.bound.min(out.objective.unwrap_or(f64::INFINITY));
        if bound.is_finite() {
            state.lower = state.lower.max(bound);
        }

        let master_z = effort_values(&master.block, &values);
        let fractional = master_z.values().any(|z| (z - z.round()).abs() > INT_TOL);
        let (plan, effort) = match kind {
            MasterKind::OaBsca { .. } if master.relaxed_cells > 0 => {
                restore(inst, &index, &cuts, &master_z, fractional, controls, &mut restorations)?
            }
            _ => extract_plan(inst, &master.block, &values, true)?,
        };

        let f = f_markov_totals(&effort.totals(), markov, alpha, horizon);
        if incumbent.as_ref().is_none_or(|(_, _, best)| f < *best) {
            incumbent = Some((plan, effort.clone(), f));
        }
        state.upper = state.upper.min(f);
        state.gap = if state.lower > 0.0 { relative_gap(state.upper, state.lower) } else { f64::INFINITY };
        report.trace.push(TraceRow {
            event: "iteration".into(),
            iteration: state.iteration,
            upper: state.upper,
            lower: state.lower,
            gap: state.gap,
            delta: state.delta,
            seconds: master_seconds,
            cuts: cuts.len(),
            ..TraceRow::default()
        });
        if state.lower > 0.0 && state.upper - state.lower <= opts.tolerance * state.lower {
            report.status = RunStatus::Optimal;
            break;
        }
        let repeated = !state.seen.insert(effort.clone());
        if repeated {
            if let MasterKind::OaBsca { upsilon } = kind {
                if master.relaxed_cells > 0 {
                    let widened = (upsilon * 2).max(1);
                    kind = MasterKind::OaBsca { upsilon: widened };
                    report.note(format!("iteration {}: repeated point, upsilon raised to {widened}", state.iteration));
                }
            }
        } else {
            cuts.push(cut_at(effort.totals()));
        }
        state.delta = next_delta(state.gap, state.delta, repeated);
        start = Some(values);
    }

    report.iterations = state.iteration;
    report.lower_bound = state.lower;
    if restorations != RestoreCounts::default() {
        report.note(format!(
            "restoration: {} solved, {} skipped on integral masters, {} fell back to the nearest plan",
            restorations.solved, restorations.skipped, restorations.fallback
        ));
    }
    if let Some((plan, effort, f)) = incumbent {
        report.plan = Some(plan);
        report.effort = Some(effort);
        report.min_value = Some(f);
        report.model_objective = Some(state.upper);
    } else {
        report.status = RunStatus::Failed;
    }
    report.seconds = started.elapsed().as_secs_f64();
    Ok(CuttingRun { report, cuts })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
struct RestoreCounts {
    solved: usize,
    skipped: usize,
    fallback: usize,
}

/// Turns a relaxed master point into a plan. Integral effort is realized
/// exactly; otherwise integral coordinates are fixed and the fractional
/// ones re-solved as integers under the current cuts. When that fails the
/// effort is rounded down and the nearest plan is taken.
fn restore(
    inst: &SearchInstance,
    index: &DetectabilityIndex,
    cuts: &[Cut],
    master_z: &BTreeMap<(usize, StateId, usize), f64>,
    fractional: bool,
    controls: &SolveControls,
    counts: &mut RestoreCounts,
) -> Result<(SearchPlan, EffortMap)> {
    let fixed: BTreeMap<_, _> = master_z
        .iter()
        .filter(|(_, z)| (*z - z.round()).abs() <= INT_TOL)
        .map(|(&k, z)| (k, z.round()))
        .collect();
    let ir = build_master(inst, index, MasterKind::OaBsca { upsilon: index.states() }, cuts, &fixed);
    let sub = SolveControls { rel_gap: 0.0, ..controls.clone() };
    let out = milp::solve(&ir.model, &sub)?;
    if let Some(values) = out.values.as_deref() {
        if fractional {
            counts.solved += 1;
        } else {
            counts.skipped += 1;
        }
        return Ok(extract_plan(inst, &ir.block, values, true)?);
    }
    let floor: BTreeMap<_, _> = master_z.iter().map(|(&k, z)| (k, (z + INT_TOL).floor())).collect();
    log::info!("restoration infeasible, using the nearest plan to the rounded-down effort");
    counts.fallback += 1;
    repair_plan(inst, &floor, RepairMode::Nearest, controls)?
        .ok_or_else(|| Error::Solver("no plan near the rounded effort".into()))
}
