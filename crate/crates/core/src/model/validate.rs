use std::fmt;

use super::SearchInstance;
use crate::target::{occupancy, TargetState};

const MASS_TOL: f64 = 1e-9;

/// One broken instance invariant.
#[derive(Clone, Debug, PartialEq)]
pub struct InstanceViolation {
    pub location: String,
    pub message: String,
}

impl fmt::Display for InstanceViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

/// Lists every violated instance invariant; empty means valid.
pub fn validate_instance(inst: &SearchInstance) -> Vec<InstanceViolation> {
    let mut out = Vec::new();
    macro_rules! bad {
        ($loc:expr, $msg:expr $(,)?) => {
            out.push(InstanceViolation { location: $loc, message: $msg })
        };
    }
    let g = &inst.motion;
    let n = g.state_count();

    if n == 0 {
        bad!("motion".into(), "no states".into());
        return out;
    }
    if inst.horizon == 0 {
        bad!("horizon".into(), "must be positive".into());
    }
    if g.s_plus() >= n {
        bad!("motion.s_plus".into(), format!("state {} out of range", g.s_plus()));
        return out;
    }
    if let Some(sm) = g.s_minus() {
        if sm >= n {
            bad!("motion.s_minus".into(), format!("state {sm} out of range"));
            return out;
        }
        if sm == g.s_plus() {
            bad!("motion.s_minus".into(), "equals s_plus".into());
        }
    }
    if g.class_count() != inst.classes.len() {
        bad!(
            "motion.arcs".into(),
            format!("{} classes of arcs for {} searcher classes", g.class_count(), inst.classes.len()),
        );
        return out;
    }
    for l in 0..g.class_count() {
        for s in 0..n {
            for a in g.forward(l, s) {
                if a.to >= n {
                    bad!(format!("class {l} arc {s} -> {}", a.to), "target state out of range".into());
                } else if a.travel == 0 {
                    bad!(
                        format!("class {l} arc {} -> {}", g.label(s), g.label(a.to)),
                        "travel time must be at least 1".into(),
                    );
                }
            }
        }
        let into_plus: Vec<_> = g.reverse(l, g.s_plus()).iter().map(|a| a.from).collect();
        if into_plus != [g.s_plus()] {
            bad!(format!("class {l} reverse star of s+"), format!("must be {{s+}}, found {into_plus:?}"));
        }
        if let Some(sm) = g.s_minus() {
            let out_minus: Vec<_> = g.forward(l, sm).iter().map(|a| a.to).collect();
            if out_minus != [sm] {
                bad!(format!("class {l} forward star of s-"), format!("must be {{s-}}, found {out_minus:?}"));
            }
        }
    }

    for (l, c) in inst.classes.iter().enumerate() {
        if c.count == 0 {
            bad!(format!("class {l}"), "searcher count must be positive".into());
        }
        if c.endurance == 0 {
            bad!(format!("class {l}"), "endurance must be at least 1".into());
        }
        for &(from, to, t) in c.beta.overrides.keys() {
            if from >= n || to >= n || t == 0 || t > inst.horizon {
                bad!(format!("class {l} rate factor ({from},{to},{t})"), "outside the instance".into());
            }
        }
    }

    let alpha = inst.detection.alpha;
    if !(alpha.is_finite() && alpha > 0.0) {
        bad!("detection.alpha".into(), format!("must be positive and finite, got {alpha}"));
    }

    for &(s, t) in inst.limits.caps.keys() {
        if s >= n || t > inst.horizon {
            bad!(format!("limits ({s},{t})"), "outside the instance".into());
        }
    }

    let target = &inst.target;
    if target.markov.is_none() && target.conditional.is_none() {
        bad!("target".into(), "no target model".into());
    }
    if let Some(m) = &target.markov {
        if m.state_count() != n {
            bad!("target.markov".into(), format!("{} states, motion has {n}", m.state_count()));
        } else {
            let p = m.initial();
            let mass: f64 = p.iter().sum();
            if (mass - 1.0).abs() > MASS_TOL {
                bad!("target.markov.initial".into(), format!("p mass {mass} != 1"));
            }
            for (i, &v) in p.iter().enumerate() {
                let ts = TargetState::from_index(i);
                if v < 0.0 || !v.is_finite() {
                    bad!(format!("target.markov.initial {ts:?}"), format!("invalid probability {v}"));
                } else if v > 0.0 && g.is_base(ts.state) {
                    bad!(format!("target.markov.initial {ts:?}"), "target may not start in s+/s-".into());
                }
            }
            let steps = m.transitions().len();
            let expect_ok = steps == 1 || steps + 1 == inst.horizon || (inst.horizon <= 1 && steps == 0);
            if !expect_ok {
                bad!(
                    "target.markov.transitions".into(),
                    format!("{steps} steps; need 1 (homogeneous) or T-1 = {}", inst.horizon.saturating_sub(1)),
                );
            } else {
                for (k, step) in m.transitions().iter().enumerate() {
                    for (i, row) in step.rows().iter().enumerate() {
                        let from = TargetState::from_index(i);
                        if row.is_empty() {
                            continue;
                        }
                        let sum: f64 = row.iter().map(|(_, p)| p).sum();
                        if (sum - 1.0).abs() > MASS_TOL {
                            bad!(format!("target.markov step {k} row {from:?}"), format!("row mass {sum} != 1"));
                        }
                        for &(j, v) in row {
                            let to = TargetState::from_index(j);
                            if j >= m.pair_count() {
                                bad!(format!("target.markov step {k} row {from:?}"), format!("pair {j} out of range"));
                            } else if v < 0.0 || !v.is_finite() {
                                bad!(format!("target.markov step {k} {from:?} -> {to:?}"), format!("invalid probability {v}"));
                            } else if v > 0.0 && g.is_base(to.state) {
                                bad!(format!("target.markov step {k} {from:?} -> {to:?}"), "target may not enter s+/s-".into());
                            }
                        }
                    }
                }
                if out.is_empty() {
                    let q = occupancy(m, inst.horizon);
                    for t in 1..inst.horizon {
                        for (i, &v) in q.slice(t).iter().enumerate() {
                            if v > 0.0 && m.step(t).row(i).is_empty() {
                                let ts = TargetState::from_index(i);
                                bad!(format!("target.markov period {t} {ts:?}"), "reachable pair without a transition row".into());
                            }
                        }
                    }
                }
            }
        }
    }
    if let Some(c) = &target.conditional {
        if c.is_empty() {
            bad!("target.conditional".into(), "no paths".into());
        }
        let mut mass = 0.0;
        for (k, path) in c.paths.iter().enumerate() {
            mass += path.weight;
            if !(path.weight > 0.0 && path.weight.is_finite()) {
                bad!(format!("target.conditional path {k}"), format!("weight {} must be positive", path.weight));
            }
            if path.cells.len() != inst.horizon {
                bad!(
                    format!("target.conditional path {k}"),
                    format!("{} periods, horizon is {}", path.cells.len(), inst.horizon),
                );
            }
            for (t, cell) in path.cells.iter().enumerate() {
                if cell.state >= n {
                    bad!(format!("target.conditional path {k} period {}", t + 1), "state out of range".into());
                } else if g.is_base(cell.state) {
                    bad!(format!("target.conditional path {k} period {}", t + 1), "target in s+/s-".into());
                }
            }
        }
        if !c.is_empty() && (mass - 1.0).abs() > MASS_TOL {
            bad!("target.conditional".into(), format!("q mass {mass} != 1"));
        }
    }
    out
}
