use std::collections::BTreeMap;

use super::{SearchInstance, StateId};
use crate::error::{Error, Result};

/// Identifies one flow variable `X_{class,from,to,t}`: searchers of `class`
/// leaving `from` at period `t` towards `to`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FlowKey {
    pub class: usize,
    pub from: StateId,
    pub to: StateId,
    pub t: usize,
}

/// A search plan: integer flows for `t = 0..=T` and mission starts.
///
/// Mission starts `M_{l,t}` count searchers of class `l` that reach their
/// first mission state (anything but `s+`/`s-`) at period `t`, `t = 1..=T`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct SearchPlan {
    pub flows: BTreeMap<FlowKey, u32>,
    pub mission_starts: BTreeMap<(usize, usize), u32>,
}

impl SearchPlan {
    /// Builds a plan from flows, deriving mission starts. Zero flows are
    /// dropped.
    pub fn from_flows(inst: &SearchInstance, flows: BTreeMap<FlowKey, u32>) -> Self {
        let flows: BTreeMap<_, _> = flows.into_iter().filter(|(_, v)| *v > 0).collect();
        let mission_starts = mission_starts_of(inst, &flows);
        SearchPlan { flows, mission_starts }
    }

    pub fn flow(&self, key: &FlowKey) -> u32 {
        self.flows.get(key).copied().unwrap_or(0)
    }

    pub fn mission_start(&self, class: usize, t: usize) -> u32 {
        self.mission_starts.get(&(class, t)).copied().unwrap_or(0)
    }

    /// Builds a plan from one position sequence per searcher.
    pub fn from_trajectories(inst: &SearchInstance, trajectories: &[Trajectory]) -> Result<Self> {
        let horizon = inst.horizon;
        let mut flows: BTreeMap<FlowKey, u32> = BTreeMap::new();
        for (k, tr) in trajectories.iter().enumerate() {
            if tr.class >= inst.class_count() {
                return Err(Error::Dimension(format!("trajectory {k}: unknown class {}", tr.class)));
            }
            if tr.positions.len() != horizon + 1 {
                return Err(Error::Dimension(format!(
                    "trajectory {k}: {} positions, expected {}",
                    tr.positions.len(),
                    horizon + 1
                )));
            }
            let mut last: Option<(StateId, usize)> = None;
            for (t, occ) in tr.positions.iter().enumerate() {
                let Occupancy::At(s) = *occ else {
                    if last.is_none() {
                        return Err(Error::InvalidArgument(format!(
                            "trajectory {k}: in transit before the first position"
                        )));
                    }
                    continue;
                };
                if s >= inst.state_count() {
                    return Err(Error::Dimension(format!("trajectory {k}: unknown state {s}")));
                }
                if let Some((from, t0)) = last {
                    let d = inst.motion.travel(tr.class, from, s).ok_or_else(|| {
                        Error::InvalidArgument(format!(
                            "trajectory {k}: no arc {} -> {}",
                            inst.motion.label(from),
                            inst.motion.label(s)
                        ))
                    })?;
                    if t0 + d as usize != t {
                        return Err(Error::InvalidArgument(format!(
                            "trajectory {k}: move {} -> {} takes {d} periods, not {}",
                            inst.motion.label(from),
                            inst.motion.label(s),
                            t - t0
                        )));
                    }
                    *flows.entry(FlowKey { class: tr.class, from, to: s, t: t0 }).or_default() += 1;
                } else if t != 0 {
                    return Err(Error::InvalidArgument(format!(
                        "trajectory {k}: must have a position at period 0"
                    )));
                }
                last = Some((s, t));
            }
            // Final departure: stay if possible at T, otherwise any arc that
            // leaves the horizon.
            let (from, t0) = last.expect("position at period 0");
            let arcs = inst.motion.forward(tr.class, from);
            let arc = if t0 == horizon {
                arcs.iter().find(|a| a.to == from).or_else(|| arcs.first())
            } else {
                arcs.iter().find(|a| t0 + a.travel as usize > horizon)
            }
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "trajectory {k}: no way to leave {} at period {t0}",
                    inst.motion.label(from)
                ))
            })?;
            *flows.entry(FlowKey { class: tr.class, from, to: arc.to, t: t0 }).or_default() += 1;
        }
        Ok(SearchPlan::from_flows(inst, flows))
    }

    /// Splits the plan into individual searcher trajectories, class by class.
    pub fn trajectories(&self, inst: &SearchInstance) -> Result<Vec<Trajectory>> {
        let horizon = inst.horizon;
        let mut remaining = self.flows.clone();
        let mut out = Vec::new();
        for (l, class) in inst.classes.iter().enumerate() {
            for k in 0..class.count {
                let mut positions = vec![Occupancy::Transit; horizon + 1];
                let (mut s, mut t) = (inst.motion.s_plus(), 0usize);
                loop {
                    positions[t] = Occupancy::At(s);
                    let next = remaining
                        .range(
                            FlowKey { class: l, from: s, to: 0, t }
                                ..=FlowKey { class: l, from: s, to: usize::MAX, t },
                        )
                        .find(|(key, v)| key.t == t && **v > 0)
                        .map(|(key, _)| *key);
                    let Some(key) = next else {
                        return Err(Error::InvalidArgument(format!(
                            "class {l} searcher {k}: flow ends at {} in period {t}",
                            inst.motion.label(s)
                        )));
                    };
                    *remaining.get_mut(&key).expect("present") -= 1;
                    let d = inst.motion.travel(l, key.from, key.to).ok_or_else(|| {
                        Error::InvalidArgument(format!("undefined arc in flow {key:?}"))
                    })? as usize;
                    if t + d > horizon {
                        break;
                    }
                    s = key.to;
                    t += d;
                }
                out.push(Trajectory { class: l, positions });
            }
        }
        Ok(out)
    }
}

fn mission_starts_of(
    inst: &SearchInstance,
    flows: &BTreeMap<FlowKey, u32>,
) -> BTreeMap<(usize, usize), u32> {
    let sp = inst.motion.s_plus();
    let mut out = BTreeMap::new();
    for (key, &x) in flows {
        if key.from != sp || inst.motion.is_base(key.to) || x == 0 {
            continue;
        }
        if let Some(d) = inst.motion.travel(key.class, key.from, key.to) {
            let arrive = key.t + d as usize;
            if (1..=inst.horizon).contains(&arrive) {
                *out.entry((key.class, arrive)).or_insert(0) += x;
            }
        }
    }
    out
}

/// Where one searcher is in one period.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Occupancy {
    At(StateId),
    Transit,
}

/// Position sequence of a single searcher for periods `0..=T`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Trajectory {
    pub class: usize,
    pub positions: Vec<Occupancy>,
}

impl Trajectory {
    /// Trajectory that is at the given states in periods `0..=T`.
    pub fn at(class: usize, states: &[StateId]) -> Self {
        Trajectory { class, positions: states.iter().map(|&s| Occupancy::At(s)).collect() }
    }
}

/// Integer search effort `Z_{l,s,t}` for `t = 1..=T`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EffortMap {
    classes: usize,
    states: usize,
    horizon: usize,
    values: Vec<u32>,
}

impl EffortMap {
    pub fn zeros(classes: usize, states: usize, horizon: usize) -> Self {
        EffortMap { classes, states, horizon, values: vec![0; classes * states * horizon] }
    }

    pub fn for_instance(inst: &SearchInstance) -> Self {
        Self::zeros(inst.class_count(), inst.state_count(), inst.horizon)
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    fn index(&self, class: usize, s: StateId, t: usize) -> usize {
        debug_assert!(class < self.classes && s < self.states && (1..=self.horizon).contains(&t));
        (class * self.horizon + (t - 1)) * self.states + s
    }

    pub fn get(&self, class: usize, s: StateId, t: usize) -> u32 {
        self.values[self.index(class, s, t)]
    }

    pub fn set(&mut self, class: usize, s: StateId, t: usize, z: u32) {
        let i = self.index(class, s, t);
        self.values[i] = z;
    }

    pub fn add(&mut self, class: usize, s: StateId, t: usize, z: u32) {
        let i = self.index(class, s, t);
        self.values[i] += z;
    }

    /// Total effort over classes in `(s, t)`.
    pub fn total(&self, s: StateId, t: usize) -> u32 {
        (0..self.classes).map(|l| self.get(l, s, t)).sum()
    }

    /// Totals laid out as `[(t-1) * S + s]`.
    pub fn totals(&self) -> Vec<u32> {
        let mut out = vec![0; self.states * self.horizon];
        for l in 0..self.classes {
            let base = l * self.horizon * self.states;
            for (o, v) in out.iter_mut().zip(&self.values[base..base + self.horizon * self.states]) {
                *o += v;
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0)
    }

    /// Nonzero entries as `(class, state, period, value)`.
    pub fn nonzero(&self) -> impl Iterator<Item = (usize, StateId, usize, u32)> + '_ {
        self.values.iter().enumerate().filter(|(_, v)| **v > 0).map(move |(i, &v)| {
            let s = i % self.states;
            let rest = i / self.states;
            (rest / self.horizon, s, rest % self.horizon + 1, v)
        })
    }
}

/// Effort induced by a plan: each arrival at `s` in period `t` contributes
/// its rate factor.
pub fn derive_effort(plan: &SearchPlan, inst: &SearchInstance) -> Result<EffortMap> {
    let mut z = EffortMap::for_instance(inst);
    for (key, &x) in &plan.flows {
        if key.class >= inst.class_count()
            || key.from >= inst.state_count()
            || key.to >= inst.state_count()
            || key.t > inst.horizon
        {
            return Err(Error::Dimension(format!("flow {key:?} outside the instance")));
        }
        let d = inst.motion.travel(key.class, key.from, key.to).ok_or_else(|| {
            Error::Dimension(format!("flow {key:?} uses an arc that is not in the forward star"))
        })? as usize;
        let t = key.t + d;
        if x == 0 || t > inst.horizon {
            continue;
        }
        let beta = inst.beta(key.class, key.from, key.to, t);
        z.add(key.class, key.to, t, beta * x);
    }
    Ok(z)
}
