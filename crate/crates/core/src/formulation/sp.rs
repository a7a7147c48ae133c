use std::collections::BTreeMap;

use crate::milp::{MilpModel, Sense, VarId, VarKind};
use crate::model::{EffortBounds, FlowKey, SearchInstance, StateId};

/// `(class, state, t)`
type SlotKey = (usize, StateId, usize);

/// Variables of the search-plan block shared by every formulation.
#[derive(Clone, Debug, Default)]
pub struct SpBlock {
    /// Flow variables `X`, only for state-periods a searcher can occupy.
    pub flows: Vec<(FlowKey, VarId)>,
    /// Mission starts `M_{l,t}` for classes whose endurance binds.
    pub mission: BTreeMap<(usize, usize), VarId>,
    /// Effort variables `Z_{l,s,t}` on the requested domain.
    pub effort: BTreeMap<(usize, StateId, usize), VarId>,
    /// Flow variables were declared continuous.
    pub relaxed_flows: bool,
}

/// Integrality of the flow and mission-start variables.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SpRelax {
    pub flows: bool,
    pub missions: bool,
}

impl SpRelax {
    pub const NONE: SpRelax = SpRelax { flows: false, missions: false };
    pub const FLOWS: SpRelax = SpRelax { flows: true, missions: false };
    pub const ALL: SpRelax = SpRelax { flows: true, missions: true };
}

impl SpBlock {
    pub fn effort_var(&self, class: usize, s: StateId, t: usize) -> Option<VarId> {
        self.effort.get(&(class, s, t)).copied()
    }

    /// Effort variables of every class in `(s, t)`.
    pub fn effort_vars_at(&self, s: StateId, t: usize, classes: usize) -> Vec<VarId> {
        (0..classes).filter_map(|l| self.effort_var(l, s, t)).collect()
    }
}

/// How effort variables are declared in a state-period, or `None` to omit
/// them there.
pub type EffortDomain<'a> = &'a dyn Fn(StateId, usize) -> Option<VarKind>;

/// Adds flow balance, initial departures, mission starts, endurance,
/// deconfliction and the effort definition rows.
///
/// Flow variables are created only where a searcher can actually be, which
/// also rules out departures at period 0 from anywhere but `s+`.
pub fn add_search_constraints(
    model: &mut MilpModel,
    inst: &SearchInstance,
    bounds: &EffortBounds,
    relax: SpRelax,
    domain: EffortDomain<'_>,
) -> SpBlock {
    let g = &inst.motion;
    let horizon = inst.horizon;
    let sp = g.s_plus();
    let flow_kind = if relax.flows { VarKind::Continuous } else { VarKind::Integer };
    let mission_kind = if relax.missions { VarKind::Continuous } else { VarKind::Integer };
    let mut block = SpBlock { relaxed_flows: relax.flows, ..SpBlock::default() };

    // (class, state, t) -> incoming (var, beta, from) / outgoing vars
    let mut arrivals: BTreeMap<SlotKey, Vec<(VarId, u32, StateId)>> = BTreeMap::new();
    let mut departures: BTreeMap<SlotKey, Vec<VarId>> = BTreeMap::new();

    for (l, class) in inst.classes.iter().enumerate() {
        let reach = g.reachable(l, horizon);
        for (t, row) in reach.iter().enumerate() {
            for (s, &reached) in row.iter().enumerate() {
                if !reached || (t == 0 && s != sp) {
                    continue;
                }
                for a in g.forward(l, s) {
                    let key = FlowKey { class: l, from: s, to: a.to, t };
                    let cap = class.count.min(inst.cap(s, t)) as f64;
                    let v = model.add_var(format!("x[{l},{s},{},{t}]", a.to), flow_kind, 0.0, cap);
                    block.flows.push((key, v));
                    departures.entry((l, s, t)).or_default().push(v);
                    let u = t + a.travel as usize;
                    if u <= horizon {
                        let beta = inst.beta(l, s, a.to, u);
                        arrivals.entry((l, a.to, u)).or_default().push((v, beta, s));
                    }
                }
            }
        }

        // Flow balance for t = 1..=T.
        for t in 1..=horizon {
            for s in 0..g.state_count() {
                let ins = arrivals.get(&(l, s, t));
                let outs = departures.get(&(l, s, t));
                if ins.is_none() && outs.is_none() {
                    continue;
                }
                let mut terms: Vec<(VarId, f64)> = Vec::new();
                if let Some(ins) = ins {
                    terms.extend(ins.iter().map(|&(v, _, _)| (v, 1.0)));
                }
                if let Some(outs) = outs {
                    terms.extend(outs.iter().map(|&v| (v, -1.0)));
                }
                model.add_constraint(format!("flow[{l},{s},{t}]"), terms, Sense::Eq, 0.0);
            }
        }

        let initial: Vec<(VarId, f64)> =
            departures.get(&(l, sp, 0)).map(|v| v.iter().map(|&x| (x, 1.0)).collect()).unwrap_or_default();
        model.add_constraint(format!("init[{l}]"), initial, Sense::Eq, class.count as f64);

        if inst.endurance_binds(l) {
            for t in 1..=horizon {
                let cap = class.count.min(inst.cap(sp, t)) as f64;
                let m = model.add_var(format!("m[{l},{t}]"), mission_kind, 0.0, cap);
                block.mission.insert((l, t), m);
                let mut terms = vec![(m, 1.0)];
                for s in g.mission_states() {
                    if let Some(ins) = arrivals.get(&(l, s, t)) {
                        terms.extend(ins.iter().filter(|(_, _, from)| *from == sp).map(|&(v, _, _)| (v, -1.0)));
                    }
                }
                model.add_constraint(format!("start[{l},{t}]"), terms, Sense::Eq, 0.0);
            }
            let tau = class.endurance;
            for t in 1..=horizon {
                let mut terms: Vec<(VarId, f64)> = Vec::new();
                for s in g.mission_states() {
                    if let Some(outs) = departures.get(&(l, s, t)) {
                        terms.extend(outs.iter().map(|&v| (v, 1.0)));
                    }
                }
                if terms.is_empty() {
                    continue;
                }
                let lo = (t + 1).saturating_sub(tau).max(1);
                for u in lo..=t {
                    terms.push((block.mission[&(l, u)], -1.0));
                }
                model.add_constraint(format!("endurance[{l},{t}]"), terms, Sense::Le, 0.0);
            }
        }
    }

    let total = inst.total_searchers();
    for (&(s, t), &cap) in &inst.limits.caps {
        if cap >= total || t == 0 || t > horizon {
            continue;
        }
        let terms: Vec<(VarId, f64)> = (0..inst.class_count())
            .filter_map(|l| arrivals.get(&(l, s, t)))
            .flatten()
            .map(|&(v, _, _)| (v, 1.0))
            .collect();
        if !terms.is_empty() {
            model.add_constraint(format!("cap[{s},{t}]"), terms, Sense::Le, cap as f64);
        }
    }

    for l in 0..inst.class_count() {
        for t in 1..=horizon {
            for s in g.mission_states() {
                let Some(kind) = domain(s, t) else { continue };
                let ins = arrivals.get(&(l, s, t));
                let ub = if ins.is_some() { bounds.class_cap(l, s, t) as f64 } else { 0.0 };
                let z = model.add_var(format!("z[{l},{s},{t}]"), kind, 0.0, ub);
                block.effort.insert((l, s, t), z);
                let mut terms = vec![(z, 1.0)];
                if let Some(ins) = ins {
                    terms.extend(ins.iter().filter(|(_, b, _)| *b > 0).map(|&(v, b, _)| (v, -(b as f64))));
                }
                model.add_constraint(format!("effort[{l},{s},{t}]"), terms, Sense::Eq, 0.0);
            }
        }
    }
    block
}
