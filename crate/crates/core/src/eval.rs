//! Exact objective evaluation and secant-cut data.
//!
//! Effort enters only through the per-cell totals `sum_l Z_{l,s,t}`; the
//! `*_totals` functions take them directly, laid out as `[(t-1) * S + s]`.

use crate::cutting::DetectabilityIndex;
use crate::model::EffortMap;
use crate::target::{ConditionalTargetModel, MarkovTargetModel};

const COMPENSATE_ABOVE: usize = 10_000;

/// Neumaier-compensated sum.
#[derive(Default)]
pub(crate) struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Probability of not detecting a target that follows the weighted paths.
pub fn f_conditional(z: &EffortMap, cond: &ConditionalTargetModel, alpha: f64) -> f64 {
    f_conditional_totals(&z.totals(), z.states(), cond, alpha)
}

pub fn f_conditional_totals(
    totals: &[u32],
    states: usize,
    cond: &ConditionalTargetModel,
    alpha: f64,
) -> f64 {
    let term = |path: &crate::target::TargetPath| {
        let mut effort = 0u64;
        for (k, cell) in path.cells.iter().enumerate() {
            if !cell.camouflaged {
                effort += totals[k * states + cell.state] as u64;
            }
        }
        path.weight * (-alpha * effort as f64).exp()
    };
    if cond.paths.len() > COMPENSATE_ABOVE {
        let mut acc = KahanSum::default();
        for p in &cond.paths {
            acc.add(term(p));
        }
        acc.value()
    } else {
        cond.paths.iter().map(term).sum()
    }
}

/// Forward/backward survival probabilities for one effort allocation.
///
/// `r(s,c,t)`: target in `(s,c)` at `t` and undetected before `t`;
/// `rbar(s,c,t)`: undetected after `t` given `(s,c)` at `t`.
#[derive(Clone, Debug)]
pub struct CutData {
    pairs: usize,
    horizon: usize,
    alpha: f64,
    totals: Vec<u32>,
    r: Vec<f64>,
    rbar: Vec<f64>,
}

impl CutData {
    pub fn new(z: &EffortMap, markov: &MarkovTargetModel, alpha: f64) -> Self {
        Self::from_totals(z.totals(), markov, alpha, z.horizon(), None)
    }

    /// As [`CutData::new`], using the reduced recursions when an index of
    /// detectable cells is supplied.
    pub fn with_index(
        z: &EffortMap,
        markov: &MarkovTargetModel,
        alpha: f64,
        index: &DetectabilityIndex,
    ) -> Self {
        Self::from_totals(z.totals(), markov, alpha, z.horizon(), Some(index))
    }

    pub fn from_totals(
        totals: Vec<u32>,
        markov: &MarkovTargetModel,
        alpha: f64,
        horizon: usize,
        index: Option<&DetectabilityIndex>,
    ) -> Self {
        let pairs = markov.pair_count();
        let states = markov.state_count();
        let mut r = vec![0.0; pairs * horizon];
        let mut rbar = vec![0.0; pairs * horizon];
        if horizon == 0 {
            return CutData { pairs, horizon, alpha, totals, r, rbar };
        }
        // Survival factor for a target in `pair` at `t`.
        let survive = |pair: usize, t: usize| -> f64 {
            if pair % 2 == 1 {
                return 1.0;
            }
            let s = pair / 2;
            if let Some(ix) = index {
                if !ix.detectable(s, t) {
                    return 1.0;
                }
            }
            let z = totals[(t - 1) * states + s];
            if z == 0 {
                1.0
            } else {
                (-alpha * z as f64).exp()
            }
        };
        let live = |pair: usize, t: usize| index.is_none_or(|ix| ix.occupied(pair, t));

        r[..pairs].copy_from_slice(markov.initial());
        for t in 2..=horizon {
            let (done, rest) = r.split_at_mut((t - 1) * pairs);
            let prev = &done[(t - 2) * pairs..];
            let next = &mut rest[..pairs];
            let step = markov.step(t - 1);
            for (i, &ri) in prev.iter().enumerate() {
                if ri == 0.0 {
                    continue;
                }
                let w = ri * survive(i, t - 1);
                for &(j, p) in step.row(i) {
                    next[j] += w * p;
                }
            }
            if index.is_some() {
                for (j, v) in next.iter_mut().enumerate() {
                    if !live(j, t) {
                        *v = 0.0;
                    }
                }
            }
        }

        for v in &mut rbar[(horizon - 1) * pairs..] {
            *v = 1.0;
        }
        for t in (1..horizon).rev() {
            let step = markov.step(t);
            for i in 0..pairs {
                if !live(i, t) {
                    continue;
                }
                let mut acc = 0.0;
                for &(j, p) in step.row(i) {
                    acc += p * rbar[t * pairs + j] * survive(j, t + 1);
                }
                rbar[(t - 1) * pairs + i] = acc;
            }
        }
        CutData { pairs, horizon, alpha, totals, r, rbar }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn r(&self, pair: usize, t: usize) -> f64 {
        self.r[(t - 1) * self.pairs + pair]
    }

    pub fn rbar(&self, pair: usize, t: usize) -> f64 {
        self.rbar[(t - 1) * self.pairs + pair]
    }

    fn total(&self, s: usize, t: usize) -> u32 {
        self.totals[(t - 1) * (self.pairs / 2) + s]
    }

    /// Objective through the product identity at period `anchor`.
    pub fn value_at(&self, anchor: usize) -> f64 {
        if self.horizon == 0 {
            return 1.0;
        }
        let mut acc = 0.0;
        for i in 0..self.pairs {
            let r = self.r(i, anchor);
            if r == 0.0 {
                continue;
            }
            let surv = if i % 2 == 1 { 1.0 } else { (-self.alpha * self.total(i / 2, anchor) as f64).exp() };
            acc += r * surv * self.rbar(i, anchor);
        }
        acc
    }

    /// Change in the objective when one unit of effort is added to `(s, t)`
    /// for any class.
    pub fn secant_delta(&self, s: usize, t: usize) -> f64 {
        let pair = 2 * s;
        let r = self.r(pair, t);
        if r == 0.0 {
            return 0.0;
        }
        let z = self.total(s, t) as f64;
        r * (-self.alpha * z).exp() * (-self.alpha).exp_m1() * self.rbar(pair, t)
    }

    /// Secant deltas for every cell, laid out as `[(t-1) * S + s]`.
    pub fn deltas(&self) -> Vec<f64> {
        let states = self.pairs / 2;
        let mut out = vec![0.0; states * self.horizon];
        for t in 1..=self.horizon {
            for s in 0..states {
                out[(t - 1) * states + s] = self.secant_delta(s, t);
            }
        }
        out
    }
}

/// Non-detection probability under a Markov target, computed through the
/// product identity at period `anchor_t`.
pub fn f_markov(z: &EffortMap, markov: &MarkovTargetModel, alpha: f64, anchor_t: usize) -> f64 {
    CutData::new(z, markov, alpha).value_at(anchor_t.clamp(1, z.horizon().max(1)))
}

/// Forward-only non-detection probability from effort totals.
pub fn f_markov_totals(
    totals: &[u32],
    markov: &MarkovTargetModel,
    alpha: f64,
    horizon: usize,
) -> f64 {
    let pairs = markov.pair_count();
    let states = markov.state_count();
    let mut cur = markov.initial().to_vec();
    let mut next = vec![0.0; pairs];
    let decay: Vec<f64> = (0..=64).map(|k| (-alpha * k as f64).exp()).collect();
    let survive = |s: usize, t: usize| -> f64 {
        let z = totals[(t - 1) * states + s] as usize;
        if z < decay.len() {
            decay[z]
        } else {
            (-alpha * z as f64).exp()
        }
    };
    for t in 1..=horizon {
        for i in (0..pairs).step_by(2) {
            if cur[i] != 0.0 {
                cur[i] *= survive(i / 2, t);
            }
        }
        if t == horizon {
            break;
        }
        next.iter_mut().for_each(|v| *v = 0.0);
        let step = markov.step(t);
        for (i, &v) in cur.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            for &(j, p) in step.row(i) {
                next[j] += v * p;
            }
        }
        std::mem::swap(&mut cur, &mut next);
    }
    cur.iter().sum()
}

/// Detection probability accumulated period by period:
/// `sum_t sum_{s,c} P_{s,c,t} (1 - exp(-alpha_c Z_{s,t}))` with the
/// information state `P` propagated forward.
pub fn detection_prob_forward(z: &EffortMap, markov: &MarkovTargetModel, alpha: f64) -> f64 {
    let horizon = z.horizon();
    let pairs = markov.pair_count();
    let mut p = markov.initial().to_vec();
    let mut detected = 0.0;
    for t in 1..=horizon {
        let mut w = vec![0.0; pairs];
        for (i, &pi) in p.iter().enumerate() {
            let alpha_c = if i % 2 == 0 { alpha } else { 0.0 };
            let effort = z.total(i / 2, t) as f64;
            detected += pi * -(-alpha_c * effort).exp_m1();
            w[i] = pi * (-alpha_c * effort).exp();
        }
        if t == horizon {
            break;
        }
        let mut next = vec![0.0; pairs];
        let step = markov.step(t);
        for (i, &wi) in w.iter().enumerate() {
            for &(j, g) in step.row(i) {
                next[j] += g * wi;
            }
        }
        p = next;
    }
    detected
}
