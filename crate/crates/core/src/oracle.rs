//! Ground truth for small instances: exhaustive enumeration of search plans
//! and Monte Carlo simulation of a plan against a Markov target.

use std::collections::{BTreeMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::eval::{f_conditional_totals, f_markov_totals};
use crate::model::{
    check_plan_feasibility, derive_effort, EffortMap, FlowKey, SearchInstance, SearchPlan, StateId,
};
use crate::target::{paths::draw, MarkovTargetModel, TargetState};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleBudget {
    /// Most joint plans (products of per-class trajectory multisets).
    pub max_joint: u64,
    /// Most optimal plans kept in the result.
    pub max_kept: usize,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget { max_joint: 10_000_000, max_kept: 10_000 }
    }
}

/// Target law the enumeration minimizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleObjective {
    Markov,
    Conditional,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleResult {
    pub value: f64,
    pub objective: OracleObjective,
    /// Distinct optimal plans, at most `max_kept`.
    pub optimal_plans: Vec<SearchPlan>,
    /// Joint plans (counted per multiset) within 1e-12 of the optimum.
    pub optimal_count: u64,
    pub joint_plans: u64,
    pub feasible_plans: u64,
}

const TIE: f64 = 1e-12;

/// One searcher's moves: the flows it uses and the effort it produces.
#[derive(Clone, Debug)]
struct Route {
    flows: Vec<FlowKey>,
    /// `(cell, beta)` with cell `(t-1) * S + s`.
    looks: Vec<(usize, u32)>,
}

fn routes_for_class(inst: &SearchInstance, l: usize, limit: u64) -> Result<Vec<Route>> {
    let g = &inst.motion;
    let horizon = inst.horizon;
    let states = inst.state_count();
    let mut out = Vec::new();
    let mut flows = Vec::new();
    let mut looks = Vec::new();

    #[allow(clippy::too_many_arguments)]
    fn rec(
        inst: &SearchInstance,
        l: usize,
        s: StateId,
        t: usize,
        states: usize,
        horizon: usize,
        limit: u64,
        flows: &mut Vec<FlowKey>,
        looks: &mut Vec<(usize, u32)>,
        out: &mut Vec<Route>,
    ) -> Result<()> {
        let g = &inst.motion;
        if inst.flow_cap(l, s, t) == 0 {
            return Ok(());
        }
        let mut left = false;
        for a in g.forward(l, s) {
            let u = t + a.travel as usize;
            flows.push(FlowKey { class: l, from: s, to: a.to, t });
            if u > horizon {
                // Every departure past the horizon yields the same plan
                // effort; keep only the first.
                if !left {
                    left = true;
                    if out.len() as u64 >= limit {
                        return Err(Error::BudgetExceeded { needed: limit as u128 + 1, budget: limit });
                    }
                    out.push(Route { flows: flows.clone(), looks: looks.clone() });
                }
            } else if inst.cap(a.to, u) > 0 {
                let pushed = !g.is_base(a.to);
                if pushed {
                    looks.push(((u - 1) * states + a.to, inst.beta(l, s, a.to, u)));
                }
                rec(inst, l, a.to, u, states, horizon, limit, flows, looks, out)?;
                if pushed {
                    looks.pop();
                }
            }
            flows.pop();
        }
        Ok(())
    }

    let _ = g;
    rec(inst, l, inst.motion.s_plus(), 0, states, horizon, limit, &mut flows, &mut looks, &mut out)?;
    Ok(out)
}

fn multisets(n: u64, k: u64) -> u128 {
    // C(n + k - 1, k), saturating.
    if k == 0 {
        return 1;
    }
    if n == 0 {
        return 0;
    }
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n + i) as u128) / (i as u128 + 1);
    }
    acc
}

/// Routes kept in memory per class, whatever the joint budget.
const MAX_ROUTES: u64 = 1_000_000;

/// Largest route count `n` with `multisets(n, k) <= joint`.
fn route_limit(k: u64, joint: u128) -> u64 {
    let (mut lo, mut hi) = (0u64, u64::MAX / 2);
    while lo < hi {
        let mid = lo + (hi - lo).div_ceil(2);
        if multisets(mid, k) <= joint {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    lo
}

struct Search<'a> {
    inst: &'a SearchInstance,
    routes: Vec<Vec<Route>>,
    objective: OracleObjective,
    totals: Vec<u32>,
    chosen: Vec<(usize, usize)>,
    best: f64,
    optima: Vec<SearchPlan>,
    seen: HashSet<SearchPlan>,
    optimal_count: u64,
    joint: u64,
    feasible: u64,
    max_kept: usize,
    needs_check: bool,
}

impl Search<'_> {
    fn value(&self) -> f64 {
        let inst = self.inst;
        match self.objective {
            OracleObjective::Markov => f_markov_totals(
                &self.totals,
                inst.target.markov.as_ref().expect("checked"),
                inst.detection.alpha,
                inst.horizon,
            ),
            OracleObjective::Conditional => f_conditional_totals(
                &self.totals,
                inst.state_count(),
                inst.target.conditional.as_ref().expect("checked"),
                inst.detection.alpha,
            ),
        }
    }

    fn plan(&self) -> SearchPlan {
        let mut flows: BTreeMap<FlowKey, u32> = BTreeMap::new();
        for &(l, r) in &self.chosen {
            for key in &self.routes[l][r].flows {
                *flows.entry(*key).or_default() += 1;
            }
        }
        SearchPlan::from_flows(self.inst, flows)
    }

    fn leaf(&mut self) {
        self.joint += 1;
        let v = self.value();
        if v > self.best + TIE {
            if !self.needs_check {
                self.feasible += 1;
            }
            return;
        }
        let plan = self.plan();
        if self.needs_check && !check_plan_feasibility(&plan, self.inst).feasible() {
            return;
        }
        self.feasible += 1;
        if v < self.best - TIE {
            self.best = v;
            self.optima.clear();
            self.seen.clear();
            self.optimal_count = 0;
        }
        self.optimal_count += 1;
        if self.optima.len() < self.max_kept && self.seen.insert(plan.clone()) {
            self.optima.push(plan);
        }
    }

    /// Picks `left` more searchers of class `l`, route indices at least `from`.
    fn rec(&mut self, l: usize, left: u32, from: usize) {
        if left == 0 {
            if l + 1 == self.routes.len() {
                self.leaf();
            } else {
                let next = self.inst.classes[l + 1].count;
                self.rec(l + 1, next, 0);
            }
            return;
        }
        for r in from..self.routes[l].len() {
            for &(cell, beta) in &self.routes[l][r].looks {
                self.totals[cell] += beta;
            }
            self.chosen.push((l, r));
            self.rec(l, left - 1, r);
            self.chosen.pop();
            for &(cell, beta) in &self.routes[l][r].looks {
                self.totals[cell] -= beta;
            }
        }
    }
}

/// Exact minimum over every feasible plan, using the Markov law when the
/// instance has one and the path list otherwise.
pub fn brute_force_optimum(inst: &SearchInstance, budget: &OracleBudget) -> Result<OracleResult> {
    let objective = if inst.target.markov.is_some() {
        OracleObjective::Markov
    } else if inst.target.conditional.is_some() {
        OracleObjective::Conditional
    } else {
        return Err(Error::MissingTarget("markov or conditional"));
    };
    brute_force_with(inst, budget, objective)
}

/// As [`brute_force_optimum`] with an explicit objective.
pub fn brute_force_with(
    inst: &SearchInstance,
    budget: &OracleBudget,
    objective: OracleObjective,
) -> Result<OracleResult> {
    match objective {
        OracleObjective::Markov if inst.target.markov.is_none() => return Err(Error::MissingTarget("markov")),
        OracleObjective::Conditional if inst.target.conditional.is_none() => {
            return Err(Error::MissingTarget("conditional"))
        }
        _ => {}
    }
    if inst.classes.is_empty() {
        return Err(Error::InvalidInstance("no searcher classes".into()));
    }
    let mut routes = Vec::new();
    let mut needed: u128 = 1;
    for (l, class) in inst.classes.iter().enumerate() {
        let limit = route_limit(class.count as u64, budget.max_joint as u128 / needed.max(1)).min(MAX_ROUTES);
        let r = match routes_for_class(inst, l, limit) {
            Ok(r) => r,
            // Counting stopped early; the true total is unknown.
            Err(Error::BudgetExceeded { .. }) => {
                return Err(Error::BudgetExceeded { needed: u128::MAX, budget: budget.max_joint })
            }
            Err(e) => return Err(e),
        };
        needed = needed.saturating_mul(multisets(r.len() as u64, class.count as u64));
        routes.push(r);
    }
    if needed > budget.max_joint as u128 {
        return Err(Error::BudgetExceeded { needed, budget: budget.max_joint });
    }
    let needs_check =
        inst.has_active_caps() || (0..inst.class_count()).any(|l| inst.endurance_binds(l));
    let mut search = Search {
        inst,
        routes,
        objective,
        totals: vec![0; inst.state_count() * inst.horizon],
        chosen: Vec::new(),
        best: f64::INFINITY,
        optima: Vec::new(),
        seen: HashSet::new(),
        optimal_count: 0,
        joint: 0,
        feasible: 0,
        max_kept: budget.max_kept,
        needs_check,
    };
    let first = inst.classes[0].count;
    search.rec(0, first, 0);
    if search.optima.is_empty() {
        return Err(Error::InvalidInstance("no feasible search plan".into()));
    }
    Ok(OracleResult {
        value: search.best,
        objective,
        optimal_plans: search.optima,
        optimal_count: search.optimal_count,
        joint_plans: search.joint,
        feasible_plans: search.feasible,
    })
}

/// Detection estimate with a normal-approximation 95% interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonteCarloEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub samples: u64,
}

/// Simulates `n` target trajectories and independent glimpses: every
/// arrival of a class-`l` searcher at `(s, t)` with rate factor `beta` is
/// one glimpse that detects a visible co-located target with probability
/// `1 - exp(-alpha * beta)`.
pub fn monte_carlo_eval(
    plan: &SearchPlan,
    inst: &SearchInstance,
    markov: &MarkovTargetModel,
    n: u64,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample count must be positive".into()));
    }
    let report = check_plan_feasibility(plan, inst);
    if !report.feasible() {
        return Err(Error::InvalidArgument(format!(
            "plan is infeasible: {}",
            report.violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
        )));
    }
    let horizon = inst.horizon;
    let states = inst.state_count();
    let alpha = inst.detection.alpha;
    // Glimpse probabilities per cell, one entry per searcher arrival.
    let mut looks: Vec<Vec<f64>> = vec![Vec::new(); states * horizon];
    for (key, &x) in &plan.flows {
        let d = inst.motion.travel(key.class, key.from, key.to).expect("feasible plan") as usize;
        let u = key.t + d;
        if u > horizon || inst.motion.is_base(key.to) {
            continue;
        }
        let beta = inst.beta(key.class, key.from, key.to, u);
        let g = -(-alpha * beta as f64).exp_m1();
        for _ in 0..x {
            looks[(u - 1) * states + key.to].push(g);
        }
    }
    let effort = derive_effort(plan, inst)?;
    if effort.is_zero() {
        return Ok(MonteCarloEstimate { estimate: 0.0, std_error: 0.0, ci_low: 0.0, ci_high: 0.0, samples: n });
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let initial: Vec<(usize, f64)> = markov.initial().iter().copied().enumerate().collect();
    let mut hits = 0u64;
    for _ in 0..n {
        let mut cur = draw(&mut rng, &initial)
            .ok_or_else(|| Error::InvalidInstance("initial target law has no mass".into()))?;
        let mut detected = false;
        for t in 1..=horizon {
            if t > 1 {
                cur = draw(&mut rng, markov.step(t - 1).row(cur))
                    .ok_or_else(|| Error::InvalidInstance(format!("transition row {cur} has no mass")))?;
            }
            let ts = TargetState::from_index(cur);
            if detected || ts.camouflaged {
                continue;
            }
            for &g in &looks[(t - 1) * states + ts.state] {
                if rng.gen::<f64>() < g {
                    detected = true;
                    break;
                }
            }
        }
        hits += detected as u64;
    }
    let p = hits as f64 / n as f64;
    let se = (p * (1.0 - p) / n as f64).sqrt();
    Ok(MonteCarloEstimate {
        estimate: p,
        std_error: se,
        ci_low: (p - 1.96 * se).max(0.0),
        ci_high: (p + 1.96 * se).min(1.0),
        samples: n,
    })
}

/// Effort of every optimal plan, handy for comparisons.
pub fn optimal_efforts(inst: &SearchInstance, result: &OracleResult) -> Result<Vec<EffortMap>> {
    result.optimal_plans.iter().map(|p| derive_effort(p, inst)).collect()
}
