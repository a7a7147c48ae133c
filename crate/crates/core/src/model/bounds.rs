use super::{EffortMap, SearchInstance, StateId};

/// Upper bounds on search effort.
#[derive(Clone, Debug, PartialEq)]
pub struct EffortBounds {
    per_class: EffortMap,
    total_cap: u64,
}

impl EffortBounds {
    /// `m_{l,s,t}`: most effort class `l` can put into `(s, t)`.
    pub fn class_cap(&self, class: usize, s: StateId, t: usize) -> u32 {
        self.per_class.get(class, s, t)
    }

    /// `m_{s,t}`: sum of the class caps.
    pub fn state_cap(&self, s: StateId, t: usize) -> u32 {
        self.per_class.total(s, t)
    }

    /// `N`: most effort that can fall on a single target path.
    pub fn total_cap(&self) -> u64 {
        self.total_cap
    }

    pub fn as_map(&self) -> &EffortMap {
        &self.per_class
    }
}

/// Computes `m_{l,s,t} = max_{s' in R_l(s), t-d >= 0} beta * min(J_l, n_{s,t})`
/// and `N = sum_l sum_t max_{s not s+/s-} m_{l,s,t}`.
pub fn effort_bounds(inst: &SearchInstance) -> EffortBounds {
    let g = &inst.motion;
    let mut m = EffortMap::for_instance(inst);
    let mut total_cap = 0u64;
    for (l, class) in inst.classes.iter().enumerate() {
        for t in 1..=inst.horizon {
            let mut best_mission = 0u32;
            for s in 0..g.state_count() {
                let cap = class.count.min(inst.cap(s, t));
                let beta_max = g
                    .reverse(l, s)
                    .iter()
                    .filter(|a| a.travel as usize <= t)
                    .map(|a| inst.beta(l, a.from, s, t))
                    .max()
                    .unwrap_or(0);
                let v = beta_max * cap;
                m.set(l, s, t, v);
                if !g.is_base(s) {
                    best_mission = best_mission.max(v);
                }
            }
            total_cap += best_mission as u64;
        }
    }
    EffortBounds { per_class: m, total_cap }
}
