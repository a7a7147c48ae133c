use crate::model::{effort_bounds, SearchInstance, StateId};
use crate::target::{occupancy, MarkovTargetModel, OccupancyTable};

/// Which state-periods can produce a detection.
///
/// A cell `(s, t)` is detectable when the target can be there uncamouflaged
/// (`q_{s,0,t} > 0`) and some searcher class can put positive effort there.
#[derive(Clone, Debug)]
pub struct DetectabilityIndex {
    states: usize,
    horizon: usize,
    reachable: Vec<bool>,
    detectable: Vec<bool>,
    occupied: Vec<bool>,
    visible_q: Vec<f64>,
}

impl DetectabilityIndex {
    pub fn states(&self) -> usize {
        self.states
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Some searcher can put effort into `s` at `t`.
    pub fn reachable(&self, s: StateId, t: usize) -> bool {
        self.reachable[(t - 1) * self.states + s]
    }

    pub fn detectable(&self, s: StateId, t: usize) -> bool {
        self.detectable[(t - 1) * self.states + s]
    }

    /// The target can be in `pair` (see `TargetState::index`) at `t`.
    pub fn occupied(&self, pair: usize, t: usize) -> bool {
        self.occupied[(t - 1) * 2 * self.states + pair]
    }

    pub fn visible_probability(&self, s: StateId, t: usize) -> f64 {
        self.visible_q[(t - 1) * self.states + s]
    }

    /// Periods in which some cell is detectable.
    pub fn detection_periods(&self) -> Vec<usize> {
        (1..=self.horizon).filter(|&t| (0..self.states).any(|s| self.detectable(s, t))).collect()
    }

    /// Periods in which no detection can occur.
    pub fn blind_periods(&self) -> Vec<usize> {
        (1..=self.horizon).filter(|&t| (0..self.states).all(|s| !self.detectable(s, t))).collect()
    }

    pub fn detectable_states(&self, t: usize) -> Vec<StateId> {
        (0..self.states).filter(|&s| self.detectable(s, t)).collect()
    }

    pub fn detectable_count(&self) -> usize {
        self.detectable.iter().filter(|&&d| d).count()
    }

    /// The `upsilon` detectable states with the largest visible-target
    /// probability at `t`, ties broken by lower index.
    pub fn top_states(&self, t: usize, upsilon: usize) -> Vec<StateId> {
        let mut v = self.detectable_states(t);
        v.sort_by(|&a, &b| {
            self.visible_probability(b, t)
                .partial_cmp(&self.visible_probability(a, t))
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        v.truncate(upsilon);
        v.sort_unstable();
        v
    }
}

pub fn build_detectability(inst: &SearchInstance, markov: &MarkovTargetModel) -> DetectabilityIndex {
    let q = occupancy(markov, inst.horizon);
    build_with_occupancy(inst, &q)
}

pub(crate) fn build_with_occupancy(inst: &SearchInstance, q: &OccupancyTable) -> DetectabilityIndex {
    let states = inst.state_count();
    let horizon = inst.horizon;
    let bounds = effort_bounds(inst);
    let mut reachable = vec![false; states * horizon];
    for l in 0..inst.class_count() {
        let reach = inst.motion.reachable(l, horizon);
        for t in 1..=horizon {
            for s in 0..states {
                if reach[t][s] && bounds.class_cap(l, s, t) > 0 && !inst.motion.is_base(s) {
                    reachable[(t - 1) * states + s] = true;
                }
            }
        }
    }
    let mut detectable = vec![false; states * horizon];
    let mut visible_q = vec![0.0; states * horizon];
    let mut occupied = vec![false; 2 * states * horizon];
    for t in 1..=horizon {
        for s in 0..states {
            let qv = q.visible(s, t);
            visible_q[(t - 1) * states + s] = qv;
            detectable[(t - 1) * states + s] = qv > 0.0 && reachable[(t - 1) * states + s];
        }
        for (pair, &v) in q.slice(t).iter().enumerate() {
            occupied[(t - 1) * 2 * states + pair] = v > 0.0;
        }
    }
    DetectabilityIndex { states, horizon, reachable, detectable, occupied, visible_q }
}
