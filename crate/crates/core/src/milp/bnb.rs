use std::time::Instant;

use highs_sys::HighsInt;

use super::highs::{Highs, LpStatus};
use super::{
    is_integral, relative_gap, remaining, round_integers, LazyConstraints, MilpModel, Row,
    SolveControls, SolveOutcome, SolveStatus, INT_TOL,
};
use crate::error::Result;

struct Node {
    lower: Vec<f64>,
    upper: Vec<f64>,
    bound: f64,
    seq: u64,
}

/// Branch-and-bound over HiGHS LP relaxations.
///
/// Nodes are explored depth-first until an incumbent exists, then by best
/// bound (ties broken by creation order). Branching picks the most
/// fractional integer column, lowest index first. Every integral node is a
/// candidate incumbent and is passed to the lazy generator; rows it returns
/// are added to the shared LP, so they apply to all open nodes, and the node
/// is solved again.
pub(super) fn solve(
    model: &MilpModel,
    controls: &SolveControls,
    mut lazy: Option<&mut dyn LazyConstraints>,
    start: Option<&[f64]>,
    started: Instant,
) -> Result<SolveOutcome> {
    let mut h = Highs::new();
    h.configure(controls);
    h.set_string("presolve", "off");
    h.pass(model, true)?;

    let int_cols: Vec<usize> =
        model.vars().iter().enumerate().filter(|(_, v)| v.is_integer()).map(|(i, _)| i).collect();
    let col_index: Vec<HighsInt> = int_cols.iter().map(|&i| i as HighsInt).collect();
    let root = Node {
        lower: int_cols.iter().map(|&i| (model.vars()[i].lower - INT_TOL).ceil()).collect(),
        upper: int_cols.iter().map(|&i| (model.vars()[i].upper + INT_TOL).floor()).collect(),
        bound: f64::NEG_INFINITY,
        seq: 0,
    };

    let mut out = SolveOutcome::empty(SolveStatus::NoIncumbent, started);
    let mut added: Vec<Row> = Vec::new();
    let mut incumbent: Option<(f64, Vec<f64>)> = None;

    if let Some(x0) = start {
        if x0.len() == model.num_vars() {
            let mut x = x0.to_vec();
            round_integers(model, &mut x);
            let within = model
                .vars()
                .iter()
                .zip(&x)
                .all(|(v, &xi)| xi >= v.lower - 1e-9 && xi <= v.upper + 1e-9);
            let rows_ok = model.rows().iter().all(|r| r.violation(&x) <= 1e-7);
            if within && rows_ok && is_integral(model, &x) {
                let extra = lazy.as_deref_mut().map(|g| g.separate(&x)).unwrap_or_default();
                if extra.is_empty() {
                    incumbent = Some((model.objective_value(&x), x));
                } else {
                    h.add_rows(&extra)?;
                    added.extend(extra);
                    out.rejected_candidates += 1;
                }
            }
        }
    }

    let mut open = vec![root];
    let mut seq = 1u64;
    let mut nodes = 0u64;
    let mut timed_out = false;
    let mut failure: Option<String> = None;
    let mut unbounded = false;

    while !open.is_empty() {
        let best_open = open.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min);
        if let Some((inc, _)) = &incumbent {
            if converged(*inc, best_open, controls) {
                break;
            }
        }
        let left = remaining(controls, started);
        if left.is_zero() {
            timed_out = true;
            break;
        }
        let pick = if incumbent.is_none() {
            open.len() - 1
        } else {
            let mut k = 0;
            for (i, n) in open.iter().enumerate() {
                let b = &open[k];
                if n.bound < b.bound || (n.bound == b.bound && n.seq < b.seq) {
                    k = i;
                }
            }
            k
        };
        let node = open.swap_remove(pick);
        if let Some((inc, _)) = &incumbent {
            if prunable(node.bound, *inc, controls) {
                continue;
            }
        }
        nodes += 1;
        h.change_bounds(&col_index, &node.lower, &node.upper);
        h.set_time_limit(left);
        match h.run() {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => continue,
            LpStatus::TimeLimit => {
                open.push(node);
                timed_out = true;
                break;
            }
            LpStatus::Unbounded => {
                unbounded = true;
                break;
            }
            LpStatus::Other(code) => {
                failure = Some(format!("HiGHS LP status {code} at node {nodes}"));
                break;
            }
        }
        let obj = h.objective();
        let x = h.solution();
        if let Some((inc, _)) = &incumbent {
            if prunable(obj, *inc, controls) {
                continue;
            }
        }
        // Most fractional integer column.
        let mut branch: Option<(usize, f64)> = None;
        for (k, &c) in int_cols.iter().enumerate() {
            let f = x[c] - x[c].floor();
            let dist = f.min(1.0 - f);
            if dist > INT_TOL && branch.is_none_or(|(_, d)| dist > d + 1e-12) {
                branch = Some((k, dist));
            }
        }
        match branch {
            None => {
                let mut cand = x;
                round_integers(model, &mut cand);
                if let Some(g) = lazy.as_deref_mut() {
                    let rows = g.separate(&cand);
                    if !rows.is_empty() {
                        for r in &rows {
                            super::check_row(r, model.num_vars())?;
                        }
                        h.add_rows(&rows)?;
                        added.extend(rows);
                        out.rejected_candidates += 1;
                        open.push(Node { bound: obj, seq, ..node });
                        seq += 1;
                        continue;
                    }
                }
                let value = model.objective_value(&cand);
                if incumbent.as_ref().is_none_or(|(inc, _)| value < *inc) {
                    incumbent = Some((value, cand));
                }
            }
            Some((k, _)) => {
                let c = int_cols[k];
                let mut down = Node { lower: node.lower.clone(), upper: node.upper.clone(), bound: obj, seq };
                down.upper[k] = x[c].floor();
                let mut up = Node { lower: node.lower, upper: node.upper, bound: obj, seq: seq + 1 };
                up.lower[k] = x[c].ceil();
                seq += 2;
                open.push(down);
                open.push(up);
            }
        }
    }

    out.nodes = nodes;
    out.lazy_rows = added;
    if let Some(msg) = failure {
        out.status = SolveStatus::Failed;
        out.diagnostic = Some(msg);
        return Ok(out);
    }
    if unbounded {
        out.status = SolveStatus::Unbounded;
        return Ok(out);
    }
    let best_open = open.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min);
    match incumbent {
        Some((value, x)) => {
            let bound = best_open.min(value);
            out.objective = Some(value);
            out.values = Some(x);
            out.bound = bound;
            out.gap = relative_gap(value, bound);
            out.status = if timed_out && !converged(value, bound, controls) {
                SolveStatus::FeasibleTimeLimit
            } else {
                SolveStatus::Optimal
            };
        }
        None => {
            out.bound = if best_open.is_finite() { best_open } else { f64::NEG_INFINITY };
            out.status = if timed_out { SolveStatus::NoIncumbent } else { SolveStatus::Infeasible };
        }
    }
    Ok(out)
}

fn tolerance(inc: f64, controls: &SolveControls) -> f64 {
    controls.abs_gap.max(controls.rel_gap * inc.abs())
}

fn prunable(bound: f64, inc: f64, controls: &SolveControls) -> bool {
    bound >= inc - tolerance(inc, controls)
}

fn converged(inc: f64, bound: f64, controls: &SolveControls) -> bool {
    inc - bound <= tolerance(inc, controls)
}
