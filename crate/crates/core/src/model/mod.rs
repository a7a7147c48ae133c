//! Problem instance: motion graph, searcher classes, detection model,
//! operational limits and the target model.

mod bounds;
mod feasibility;
mod grid;
pub(crate) mod io;
mod plan;
mod validate;

use std::collections::BTreeMap;

pub use bounds::{effort_bounds, EffortBounds};
pub use feasibility::{check_plan_feasibility, ConstraintFamily, FeasibilityReport, Violation};
pub use grid::{grid_instance, line_example, ClassSpec, EntryMode, GridOptions, Reach};
pub use plan::{derive_effort, EffortMap, FlowKey, Occupancy, SearchPlan, Trajectory};
pub use validate::{validate_instance, InstanceViolation};

use crate::target::TargetModel;

/// Index of a state in the motion graph.
pub type StateId = usize;

/// A directed move `from -> to` that takes `travel` periods.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Arc {
    pub to: StateId,
    pub travel: u32,
}

/// Reverse-star entry: the searcher came from `from`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct InArc {
    pub from: StateId,
    pub travel: u32,
}

/// Row-major cell layout used to print states as `(row,col)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GridLayout {
    pub rows: usize,
    pub cols: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MotionGraph {
    state_count: usize,
    s_plus: StateId,
    s_minus: Option<StateId>,
    grid: Option<GridLayout>,
    forward: Vec<Vec<Vec<Arc>>>,
    reverse: Vec<Vec<Vec<InArc>>>,
}

impl MotionGraph {
    /// Builds a graph from per-class forward stars (`forward[class][state]`).
    /// Reverse stars are derived. No invariant is enforced here; see
    /// [`validate_instance`].
    pub fn new(
        state_count: usize,
        s_plus: StateId,
        s_minus: Option<StateId>,
        mut forward: Vec<Vec<Vec<Arc>>>,
    ) -> Self {
        let mut reverse = Vec::with_capacity(forward.len());
        for star in forward.iter_mut() {
            star.resize(state_count, Vec::new());
            let mut rev = vec![Vec::new(); state_count];
            for (s, arcs) in star.iter_mut().enumerate() {
                arcs.sort();
                arcs.dedup_by_key(|a| a.to);
                for a in arcs.iter() {
                    if a.to < state_count {
                        rev[a.to].push(InArc { from: s, travel: a.travel });
                    }
                }
            }
            reverse.push(rev);
        }
        MotionGraph { state_count, s_plus, s_minus, grid: None, forward, reverse }
    }

    pub fn with_grid(mut self, grid: GridLayout) -> Self {
        self.grid = Some(grid);
        self
    }

    pub fn state_count(&self) -> usize {
        self.state_count
    }

    pub fn s_plus(&self) -> StateId {
        self.s_plus
    }

    pub fn s_minus(&self) -> Option<StateId> {
        self.s_minus
    }

    pub fn grid(&self) -> Option<GridLayout> {
        self.grid
    }

    pub fn class_count(&self) -> usize {
        self.forward.len()
    }

    pub fn forward(&self, class: usize, s: StateId) -> &[Arc] {
        &self.forward[class][s]
    }

    pub fn reverse(&self, class: usize, s: StateId) -> &[InArc] {
        &self.reverse[class][s]
    }

    pub fn travel(&self, class: usize, from: StateId, to: StateId) -> Option<u32> {
        self.forward
            .get(class)?
            .get(from)?
            .iter()
            .find(|a| a.to == to)
            .map(|a| a.travel)
    }

    /// True for the initial and terminal states.
    pub fn is_base(&self, s: StateId) -> bool {
        s == self.s_plus || Some(s) == self.s_minus
    }

    /// States where a searcher is on mission (everything but `s+`/`s-`).
    pub fn mission_states(&self) -> impl Iterator<Item = StateId> + '_ {
        (0..self.state_count).filter(move |&s| !self.is_base(s))
    }

    /// Earliest period at which a class-`class` searcher leaving `s+` at
    /// time 0 can occupy each state.
    pub fn earliest_arrival(&self, class: usize) -> Vec<Option<usize>> {
        use std::cmp::Reverse;
        use std::collections::BinaryHeap;
        let mut best: Vec<Option<usize>> = vec![None; self.state_count];
        let mut heap = BinaryHeap::new();
        best[self.s_plus] = Some(0);
        heap.push(Reverse((0usize, self.s_plus)));
        while let Some(Reverse((t, s))) = heap.pop() {
            if best[s] != Some(t) {
                continue;
            }
            for a in &self.forward[class][s] {
                if a.to >= self.state_count {
                    continue;
                }
                let nt = t + a.travel as usize;
                if best[a.to].is_none_or(|b| nt < b) {
                    best[a.to] = Some(nt);
                    heap.push(Reverse((nt, a.to)));
                }
            }
        }
        best
    }

    /// `reach[t][s]`: a class-`class` searcher leaving `s+` at period 0 can
    /// be in `s` at period `t`, for `t = 0..=horizon`.
    pub fn reachable(&self, class: usize, horizon: usize) -> Vec<Vec<bool>> {
        let n = self.state_count;
        let mut reach = vec![vec![false; n]; horizon + 1];
        reach[0][self.s_plus] = true;
        for t in 0..horizon {
            for s in 0..n {
                if !reach[t][s] {
                    continue;
                }
                for a in &self.forward[class][s] {
                    let u = t + a.travel as usize;
                    if a.to < n && a.travel > 0 && u <= horizon {
                        reach[u][a.to] = true;
                    }
                }
            }
        }
        reach
    }

    /// Human-readable state name: `s+`, `s-`, `(row,col)` on grids, else
    /// the index.
    pub fn label(&self, s: StateId) -> String {
        if s == self.s_plus {
            return "s+".into();
        }
        if Some(s) == self.s_minus {
            return "s-".into();
        }
        match self.grid {
            Some(g) if s < g.rows * g.cols => format!("({},{})", s / g.cols + 1, s % g.cols + 1),
            _ => s.to_string(),
        }
    }

    /// Inverse of [`MotionGraph::label`]; `(r,c)` and `r,c` are both accepted.
    pub fn parse_label(&self, token: &str) -> Option<StateId> {
        let token = token.trim();
        match token {
            "s+" => return Some(self.s_plus),
            "s-" | "s−" => return self.s_minus,
            _ => {}
        }
        let inner = token.trim_start_matches('(').trim_end_matches(')');
        if let (Some(g), Some((r, c))) = (self.grid, inner.split_once(',')) {
            let r: usize = r.trim().parse().ok()?;
            let c: usize = c.trim().parse().ok()?;
            if r == 0 || c == 0 || r > g.rows || c > g.cols {
                return None;
            }
            return Some((r - 1) * g.cols + (c - 1));
        }
        let s: usize = inner.parse().ok()?;
        (s < self.state_count).then_some(s)
    }
}

/// Integer rate factors `beta[l][from][to][t]`, stored as a default plus
/// sparse overrides.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct RateFactors {
    pub default: u32,
    pub overrides: BTreeMap<(StateId, StateId, usize), u32>,
}

impl RateFactors {
    pub fn uniform(beta: u32) -> Self {
        RateFactors { default: beta, overrides: BTreeMap::new() }
    }

    pub fn get(&self, from: StateId, to: StateId, t: usize) -> u32 {
        *self.overrides.get(&(from, to, t)).unwrap_or(&self.default)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearcherClass {
    pub name: String,
    pub count: u32,
    /// Maximum number of periods spent outside `s+`/`s-`.
    pub endurance: usize,
    pub beta: RateFactors,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetectionModel {
    pub alpha: f64,
}

impl DetectionModel {
    /// Probability that one look with rate factor `beta` detects a
    /// co-located, uncamouflaged target.
    pub fn glimpse(&self, beta: u32) -> f64 {
        -(-self.alpha * beta as f64).exp_m1()
    }
}

/// Caps on searchers per state and period. Missing entries are inactive.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct OperationalLimits {
    pub caps: BTreeMap<(StateId, usize), u32>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchInstance {
    pub motion: MotionGraph,
    pub classes: Vec<SearcherClass>,
    pub detection: DetectionModel,
    pub limits: OperationalLimits,
    pub horizon: usize,
    pub target: TargetModel,
}

impl SearchInstance {
    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    pub fn state_count(&self) -> usize {
        self.motion.state_count()
    }

    pub fn total_searchers(&self) -> u32 {
        self.classes.iter().map(|c| c.count).sum()
    }

    /// Searcher cap `n_{s,t}`; defaults to the total number of searchers.
    pub fn cap(&self, s: StateId, t: usize) -> u32 {
        self.limits.caps.get(&(s, t)).copied().unwrap_or_else(|| self.total_searchers())
    }

    pub fn has_active_caps(&self) -> bool {
        let total = self.total_searchers();
        self.limits.caps.values().any(|&c| c < total)
    }

    pub fn beta(&self, class: usize, from: StateId, to: StateId, t: usize) -> u32 {
        self.classes[class].beta.get(from, to, t)
    }

    /// True when every rate factor equals one.
    pub fn all_unit_rates(&self) -> bool {
        self.classes
            .iter()
            .all(|c| c.beta.default == 1 && c.beta.overrides.values().all(|&b| b == 1))
    }

    /// Endurance only constrains a class when it is shorter than the horizon.
    pub fn endurance_binds(&self, class: usize) -> bool {
        self.classes[class].endurance < self.horizon
    }

    /// Upper bound on a single flow variable `X_{l,s,·,t}`.
    pub fn flow_cap(&self, class: usize, s: StateId, t: usize) -> u32 {
        self.classes[class].count.min(self.cap(s, t))
    }
}
