use std::collections::BTreeMap;

use super::sp::{add_search_constraints, SpBlock, SpRelax};
use crate::error::{Error, Result};
use crate::milp::{MilpModel, Sense, VarId, VarKind};
use crate::model::{effort_bounds, SearchInstance, StateId};
use crate::target::{occupancy, MarkovTargetModel};

/// Variables of the Markov formulation. Pair indices follow
/// `TargetState::index`.
#[derive(Clone, Debug)]
pub struct MspHandles {
    pub sp: SpBlock,
    /// `P_{pair,t}`: target in the pair at `t`, undetected before.
    pub reach: BTreeMap<(usize, usize), VarId>,
    /// `W_{pair,t}`: target in the pair at `t`, undetected through `t`.
    pub survive: BTreeMap<(usize, usize), VarId>,
    /// `V_{s,t,j}`: total effort in `(s, t)` equals `j`.
    pub level: BTreeMap<(StateId, usize, u32), VarId>,
    /// `Q_{s,t,j}`: detection probability in `(s, t)` at level `j >= 1`.
    pub detect: BTreeMap<(StateId, usize, u32), VarId>,
}

/// Builds the Markov formulation minimizing `1 - sum Q`.
///
/// Level selectors include `j = 0`, and detection/survival variables exist
/// only where the target can be (`q > 0`).
pub fn build_msp(inst: &SearchInstance, markov: &MarkovTargetModel) -> Result<(MilpModel, MspHandles)> {
    if markov.state_count() != inst.state_count() {
        return Err(Error::Dimension(format!(
            "target has {} states, graph has {}",
            markov.state_count(),
            inst.state_count()
        )));
    }
    let horizon = inst.horizon;
    let alpha = inst.detection.alpha;
    let bounds = effort_bounds(inst);
    let q = occupancy(markov, horizon);
    let pairs = markov.pair_count();
    let mut model = MilpModel::new();
    let sp = add_search_constraints(&mut model, inst, &bounds, SpRelax::NONE, &|_, _| Some(VarKind::Integer));
    model.set_offset(1.0);

    let mut h = MspHandles {
        sp,
        reach: BTreeMap::new(),
        survive: BTreeMap::new(),
        level: BTreeMap::new(),
        detect: BTreeMap::new(),
    };

    for t in 1..=horizon {
        for pair in 0..pairs {
            let qv = q.pair(pair, t);
            if qv <= 0.0 {
                continue;
            }
            let p = model.add_var(format!("p[{pair},{t}]"), VarKind::Continuous, 0.0, qv);
            if t == 1 {
                model.fix(p, markov.initial()[pair]);
            }
            h.reach.insert((pair, t), p);
            if t < horizon {
                let w = model.add_var(format!("w[{pair},{t}]"), VarKind::Continuous, 0.0, qv);
                h.survive.insert((pair, t), w);
            }
        }
    }

    // Propagation P_{j,t+1} = sum_i gamma_t(i, j) W_{i,t}.
    for t in 1..horizon {
        let step = markov.step(t);
        let mut inflow: BTreeMap<usize, Vec<(VarId, f64)>> = BTreeMap::new();
        for (&(i, _), &w) in h.survive.iter().filter(|((_, u), _)| *u == t) {
            for &(j, p) in step.row(i) {
                if p > 0.0 {
                    inflow.entry(j).or_default().push((w, -p));
                }
            }
        }
        for j in 0..pairs {
            let Some(&p) = h.reach.get(&(j, t + 1)) else { continue };
            let mut terms = vec![(p, 1.0)];
            terms.extend(inflow.remove(&j).unwrap_or_default());
            model.add_constraint(format!("move[{j},{}]", t + 1), terms, Sense::Eq, 0.0);
        }
    }

    for t in 1..horizon.max(1) {
        for pair in (1..pairs).step_by(2) {
            if let (Some(&w), Some(&p)) = (h.survive.get(&(pair, t)), h.reach.get(&(pair, t))) {
                model.add_constraint(format!("hide[{pair},{t}]"), vec![(w, 1.0), (p, -1.0)], Sense::Le, 0.0);
            }
        }
    }

    let classes = inst.class_count();
    for t in 1..=horizon {
        for s in inst.motion.mission_states() {
            let pair = 2 * s;
            let qv = q.pair(pair, t);
            let Some(&p) = h.reach.get(&(pair, t)) else { continue };
            let w = h.survive.get(&(pair, t)).copied();
            let cap = bounds.state_cap(s, t);
            if cap == 0 {
                if let Some(w) = w {
                    model.add_constraint(format!("open[{s},{t}]"), vec![(w, 1.0), (p, -1.0)], Sense::Le, 0.0);
                }
                continue;
            }
            let mut pick = Vec::new();
            let mut total: Vec<(VarId, f64)> =
                h.sp.effort_vars_at(s, t, classes).into_iter().map(|z| (z, 1.0)).collect();
            for j in 0..=cap {
                let v = model.add_var(format!("v[{s},{t},{j}]"), VarKind::Binary, 0.0, 1.0);
                h.level.insert((s, t, j), v);
                pick.push((v, 1.0));
                if j > 0 {
                    total.push((v, -(j as f64)));
                }
                let hit = -(-(j as f64) * alpha).exp_m1();
                let keep = 1.0 - hit;
                if j == 0 {
                    if let Some(w) = w {
                        // No effort: survival equals reach.
                        model.add_constraint(
                            format!("open[{s},{t}]"),
                            vec![(w, 1.0), (p, -1.0), (v, qv)],
                            Sense::Le,
                            qv,
                        );
                    }
                    continue;
                }
                let d = model.add_var(format!("q[{s},{t},{j}]"), VarKind::Continuous, 0.0, f64::INFINITY);
                model.set_cost(d, -1.0);
                h.detect.insert((s, t, j), d);
                model.add_constraint(format!("qv[{s},{t},{j}]"), vec![(d, 1.0), (v, -qv * hit)], Sense::Le, 0.0);
                model.add_constraint(format!("qp[{s},{t},{j}]"), vec![(d, 1.0), (p, -hit)], Sense::Le, 0.0);
                if let Some(w) = w {
                    model.add_constraint(
                        format!("wv[{s},{t},{j}]"),
                        vec![(w, 1.0), (p, -keep), (v, qv * hit)],
                        Sense::Le,
                        qv * hit,
                    );
                }
            }
            model.add_constraint(format!("pick[{s},{t}]"), pick, Sense::Eq, 1.0);
            model.add_constraint(format!("total[{s},{t}]"), total, Sense::Eq, 0.0);
        }
    }
    Ok((model, h))
}
