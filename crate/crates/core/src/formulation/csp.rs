use std::collections::BTreeSet;

use super::sp::{add_search_constraints, SpBlock, SpRelax};
use crate::error::{Error, Result};
use crate::milp::{MilpModel, Row, Sense, VarId, VarKind};
use crate::model::{effort_bounds, SearchInstance, StateId};
use crate::target::ConditionalTargetModel;

/// Largest per-path effort cap `N` the path formulations accept.
pub const DEFAULT_MAX_EFFORT: u64 = 100_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CspOptions {
    /// Declare effort only where some path is exposed.
    pub preprocess: bool,
    /// Declare the level selectors of the step formulation binary.
    pub binary_levels: bool,
    pub max_effort: u64,
}

impl Default for CspOptions {
    fn default() -> Self {
        CspOptions { preprocess: false, binary_levels: true, max_effort: DEFAULT_MAX_EFFORT }
    }
}

impl CspOptions {
    pub fn preprocessed() -> Self {
        CspOptions { preprocess: true, ..Self::default() }
    }
}

/// Variables of a path formulation.
#[derive(Clone, Debug)]
pub struct CspHandles {
    pub sp: SpBlock,
    /// `N`, the per-path effort cap.
    pub n_cap: u64,
    /// Effort variables summed along each path.
    pub path_terms: Vec<Vec<VarId>>,
    /// Level selectors `W_{omega,i}`, step formulation only.
    pub levels: Vec<Vec<VarId>>,
    /// Path survival variables `Y_omega`, secant formulation only.
    pub survival: Vec<VarId>,
}

impl CspHandles {
    /// Effort that falls on path `omega` at a solver point.
    pub fn path_effort(&self, omega: usize, values: &[f64]) -> f64 {
        self.path_terms[omega].iter().map(|v| values[v.0]).sum()
    }
}

/// State-periods where at least one path is exposed.
pub fn detectable_pairs(cond: &ConditionalTargetModel) -> BTreeSet<(StateId, usize)> {
    let mut out = BTreeSet::new();
    for p in &cond.paths {
        for (k, cell) in p.cells.iter().enumerate() {
            if !cell.camouflaged {
                out.insert((cell.state, k + 1));
            }
        }
    }
    out
}

/// Secant of `e^{-alpha y}` between `i` and `i + 1` written as
/// `a_i - b_i y`.
pub fn secant_coefficients(alpha: f64, i: u64) -> (f64, f64) {
    let i = i as f64;
    let decay = (-i * alpha).exp();
    let step = (-alpha).exp();
    (decay * (1.0 + i - i * step), decay * (1.0 - step))
}

/// The secant row `Y_omega + b_i * sum Z >= a_i`.
pub fn secant_row(handles: &CspHandles, alpha: f64, omega: usize, i: u64) -> Row {
    let (a, b) = secant_coefficients(alpha, i);
    let mut terms = vec![(handles.survival[omega], 1.0)];
    terms.extend(handles.path_terms[omega].iter().map(|&v| (v, b)));
    Row::new(format!("secant[{omega},{i}]"), terms, Sense::Ge, a)
}

fn prepare(
    model: &mut MilpModel,
    inst: &SearchInstance,
    cond: &ConditionalTargetModel,
    opts: &CspOptions,
) -> Result<CspHandles> {
    if cond.horizon() != inst.horizon && !cond.is_empty() {
        return Err(Error::Dimension(format!(
            "paths cover {} periods, horizon is {}",
            cond.horizon(),
            inst.horizon
        )));
    }
    let bounds = effort_bounds(inst);
    let n_cap = bounds.total_cap();
    if n_cap > opts.max_effort {
        return Err(Error::EffortOverflow { n: n_cap, cap: opts.max_effort });
    }
    let detectable = detectable_pairs(cond);
    let domain = |s: StateId, t: usize| {
        (!opts.preprocess || detectable.contains(&(s, t))).then_some(VarKind::Integer)
    };
    let sp = add_search_constraints(model, inst, &bounds, SpRelax { flows: inst.all_unit_rates(), missions: false }, &domain);
    let classes = inst.class_count();
    let path_terms = cond
        .paths
        .iter()
        .map(|p| {
            p.cells
                .iter()
                .enumerate()
                .filter(|(_, c)| !c.camouflaged && !inst.motion.is_base(c.state))
                .flat_map(|(k, c)| sp.effort_vars_at(c.state, k + 1, classes))
                .collect()
        })
        .collect();
    Ok(CspHandles { sp, n_cap, path_terms, levels: Vec::new(), survival: Vec::new() })
}

/// Step formulation: `W_{omega,i}` selects the effort level on each path.
pub fn build_csp_u(
    inst: &SearchInstance,
    cond: &ConditionalTargetModel,
    opts: &CspOptions,
) -> Result<(MilpModel, CspHandles)> {
    let mut model = MilpModel::new();
    let mut h = prepare(&mut model, inst, cond, opts)?;
    let alpha = inst.detection.alpha;
    let kind = if opts.binary_levels { VarKind::Binary } else { VarKind::Continuous };
    for (omega, path) in cond.paths.iter().enumerate() {
        let mut pick = Vec::new();
        let mut level = Vec::new();
        let mut ws = Vec::with_capacity(h.n_cap as usize + 1);
        for i in 0..=h.n_cap {
            let w = model.add_var(format!("w[{omega},{i}]"), kind, 0.0, 1.0);
            model.set_cost(w, path.weight * (-(i as f64) * alpha).exp());
            pick.push((w, 1.0));
            if i > 0 {
                level.push((w, i as f64));
            }
            ws.push(w);
        }
        model.add_constraint(format!("pick[{omega}]"), pick, Sense::Eq, 1.0);
        level.extend(h.path_terms[omega].iter().map(|&z| (z, -1.0)));
        model.add_constraint(format!("level[{omega}]"), level, Sense::Eq, 0.0);
        h.levels.push(ws);
    }
    Ok((model, h))
}

/// Secant formulation with every secant row.
pub fn build_csp_l(
    inst: &SearchInstance,
    cond: &ConditionalTargetModel,
    opts: &CspOptions,
) -> Result<(MilpModel, CspHandles)> {
    build_csp_l_rows(inst, cond, opts, &|_| true)
}

/// Secant formulation keeping only the secant indices accepted by `keep`.
/// With `N = 0` the single row `Y_omega >= 1` is always present.
pub fn build_csp_l_rows(
    inst: &SearchInstance,
    cond: &ConditionalTargetModel,
    opts: &CspOptions,
    keep: &dyn Fn(u64) -> bool,
) -> Result<(MilpModel, CspHandles)> {
    let mut model = MilpModel::new();
    let mut h = prepare(&mut model, inst, cond, opts)?;
    let alpha = inst.detection.alpha;
    for (omega, path) in cond.paths.iter().enumerate() {
        let y = model.add_var(format!("y[{omega}]"), VarKind::Continuous, f64::NEG_INFINITY, f64::INFINITY);
        model.set_cost(y, path.weight);
        h.survival.push(y);
    }
    for omega in 0..cond.len() {
        if h.n_cap == 0 {
            model.add_constraint(format!("secant[{omega},0]"), vec![(h.survival[omega], 1.0)], Sense::Ge, 1.0);
            continue;
        }
        for i in (0..h.n_cap).filter(|&i| keep(i)) {
            model.add_row(secant_row(&h, alpha, omega, i));
        }
    }
    Ok((model, h))
}
