use std::collections::BTreeMap;
use std::fmt;

use super::{FlowKey, SearchInstance, SearchPlan};

/// Constraint families of the search-plan feasible set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ConstraintFamily {
    /// Arrivals equal departures in every state and period.
    FlowBalance,
    /// Every searcher leaves `s+` at period 0.
    InitialDeparture,
    /// Mission starts match the flows out of `s+`.
    MissionStart,
    /// Searchers on mission never exceed recent mission starts.
    Endurance,
    /// Searchers per state and period stay within the cap.
    Deconfliction,
    /// Flow values are defined arcs within their bounds.
    FlowBound,
    /// Mission starts within their bounds.
    MissionBound,
}

impl ConstraintFamily {
    pub fn name(self) -> &'static str {
        match self {
            ConstraintFamily::FlowBalance => "flow-balance",
            ConstraintFamily::InitialDeparture => "initial-departure",
            ConstraintFamily::MissionStart => "mission-start",
            ConstraintFamily::Endurance => "endurance",
            ConstraintFamily::Deconfliction => "deconfliction",
            ConstraintFamily::FlowBound => "flow-bound",
            ConstraintFamily::MissionBound => "mission-bound",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub family: ConstraintFamily,
    pub location: String,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}: {}", self.family.name(), self.location, self.detail)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FeasibilityReport {
    pub violations: Vec<Violation>,
}

impl FeasibilityReport {
    pub fn feasible(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn cites(&self, family: ConstraintFamily) -> bool {
        self.violations.iter().any(|v| v.family == family)
    }
}

/// Checks every constraint of the plan feasible set, one entry per violated
/// constraint.
pub fn check_plan_feasibility(plan: &SearchPlan, inst: &SearchInstance) -> FeasibilityReport {
    let g = &inst.motion;
    let horizon = inst.horizon;
    let sp = g.s_plus();
    let mut out = Vec::new();
    let mut push = |family, location: String, detail: String| {
        out.push(Violation { family, location, detail })
    };

    // inflow[(l, s, t)] and outflow[(l, s, t)]
    let mut inflow: BTreeMap<(usize, usize, usize), u64> = BTreeMap::new();
    let mut outflow: BTreeMap<(usize, usize, usize), u64> = BTreeMap::new();
    let mut occupancy: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    let mut on_mission: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    let mut derived_starts: BTreeMap<(usize, usize), u64> = BTreeMap::new();

    for (key, &x) in &plan.flows {
        if x == 0 {
            continue;
        }
        let FlowKey { class: l, from, to, t } = *key;
        let loc = format!("class {l}, {} -> {}, t={t}", label(inst, from), label(inst, to));
        if l >= inst.class_count() || from >= inst.state_count() || to >= inst.state_count() {
            push(ConstraintFamily::FlowBound, loc, "outside the instance".into());
            continue;
        }
        let Some(d) = g.travel(l, from, to) else {
            push(ConstraintFamily::FlowBound, loc, "arc not in the forward star".into());
            continue;
        };
        if t > horizon {
            push(ConstraintFamily::FlowBound, loc, "departure after the horizon".into());
            continue;
        }
        if t == 0 && from != sp {
            push(ConstraintFamily::FlowBound, loc, "departure at period 0 away from s+".into());
            continue;
        }
        let cap = inst.flow_cap(l, from, t);
        if x > cap {
            push(ConstraintFamily::FlowBound, loc, format!("{x} > {cap}"));
        }
        if t >= 1 {
            *outflow.entry((l, from, t)).or_default() += x as u64;
            if !g.is_base(from) {
                *on_mission.entry((l, t)).or_default() += x as u64;
            }
        }
        let arrive = t + d as usize;
        if arrive <= horizon {
            *inflow.entry((l, to, arrive)).or_default() += x as u64;
            *occupancy.entry((to, arrive)).or_default() += x as u64;
            if from == sp && !g.is_base(to) {
                *derived_starts.entry((l, arrive)).or_default() += x as u64;
            }
        }
    }

    // Flow balance.
    let mut keys: Vec<_> = inflow.keys().chain(outflow.keys()).copied().collect();
    keys.sort();
    keys.dedup();
    for k in keys {
        let a = inflow.get(&k).copied().unwrap_or(0);
        let b = outflow.get(&k).copied().unwrap_or(0);
        if a != b {
            push(
                ConstraintFamily::FlowBalance,
                format!("class {}, {}, t={}", k.0, label(inst, k.1), k.2),
                format!("{a} arrive, {b} depart"),
            );
        }
    }

    for (l, class) in inst.classes.iter().enumerate() {
        let initial: u64 = plan
            .flows
            .range(FlowKey { class: l, from: sp, to: 0, t: 0 }..=FlowKey { class: l, from: sp, to: usize::MAX, t: 0 })
            .filter(|(k, _)| k.t == 0)
            .map(|(_, &x)| x as u64)
            .sum();
        if initial != class.count as u64 {
            push(
                ConstraintFamily::InitialDeparture,
                format!("class {l}"),
                format!("{initial} leave s+ at period 0, expected {}", class.count),
            );
        }
    }

    // Mission starts recorded in the plan must match the flows.
    let mut start_keys: Vec<_> =
        derived_starts.keys().copied().chain(plan.mission_starts.keys().copied()).collect();
    start_keys.sort();
    start_keys.dedup();
    for (l, t) in start_keys {
        let want = derived_starts.get(&(l, t)).copied().unwrap_or(0);
        let have = plan.mission_start(l, t) as u64;
        if l >= inst.class_count() || t == 0 || t > horizon {
            push(ConstraintFamily::MissionBound, format!("class {l}, t={t}"), "outside the instance".into());
            continue;
        }
        if want != have {
            push(
                ConstraintFamily::MissionStart,
                format!("class {l}, t={t}"),
                format!("plan records {have}, flows give {want}"),
            );
        }
        let cap = inst.flow_cap(l, sp, t) as u64;
        if have > cap {
            push(ConstraintFamily::MissionBound, format!("class {l}, t={t}"), format!("{have} > {cap}"));
        }
    }

    // Endurance: searchers on mission at t started within the last tau periods.
    for (l, class) in inst.classes.iter().enumerate() {
        for t in 1..=horizon {
            let busy = on_mission.get(&(l, t)).copied().unwrap_or(0);
            if busy == 0 {
                continue;
            }
            let lo = (t + 1).saturating_sub(class.endurance).max(1);
            let started: u64 = (lo..=t).map(|u| plan.mission_start(l, u) as u64).sum();
            if busy > started {
                push(
                    ConstraintFamily::Endurance,
                    format!("class {l}, t={t}"),
                    format!("{busy} on mission, {started} started in periods {lo}..={t}"),
                );
            }
        }
    }

    for (&(s, t), &n) in &occupancy {
        let cap = inst.cap(s, t) as u64;
        if n > cap {
            push(ConstraintFamily::Deconfliction, format!("{}, t={t}", label(inst, s)), format!("{n} > {cap}"));
        }
    }

    FeasibilityReport { violations: out }
}

fn label(inst: &SearchInstance, s: usize) -> String {
    if s < inst.state_count() {
        inst.motion.label(s)
    } else {
        format!("#{s}")
    }
}
