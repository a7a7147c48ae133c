use std::ffi::{c_void, CString};
use std::os::raw::c_int;
use std::time::{Duration, Instant};

use highs_sys::*;

use super::{
    is_integral, relative_gap, remaining, LazyConstraints, MilpModel, Row, SolveControls,
    SolveOutcome, SolveStatus,
};
use crate::error::{Error, Result};

/// Owned HiGHS instance.
pub(super) struct Highs {
    ptr: *mut c_void,
    num_col: usize,
    num_row: usize,
}

impl Drop for Highs {
    fn drop(&mut self) {
        unsafe { Highs_destroy(self.ptr) }
    }
}

fn cstr(s: &str) -> CString {
    CString::new(s).expect("option names contain no NUL")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(super) enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    TimeLimit,
    Other(c_int),
}

impl Highs {
    pub(super) fn new() -> Self {
        let ptr = unsafe { Highs_create() };
        assert!(!ptr.is_null(), "Highs_create returned null");
        let mut h = Highs { ptr, num_col: 0, num_row: 0 };
        h.set_bool("output_flag", log::log_enabled!(log::Level::Trace));
        h.set_int("random_seed", 0);
        h
    }

    pub(super) fn set_bool(&mut self, name: &str, v: bool) {
        let n = cstr(name);
        unsafe { Highs_setBoolOptionValue(self.ptr, n.as_ptr(), v as c_int) };
    }

    pub(super) fn set_int(&mut self, name: &str, v: i64) {
        let n = cstr(name);
        unsafe { Highs_setIntOptionValue(self.ptr, n.as_ptr(), v as c_int) };
    }

    pub(super) fn set_double(&mut self, name: &str, v: f64) {
        let n = cstr(name);
        unsafe { Highs_setDoubleOptionValue(self.ptr, n.as_ptr(), v) };
    }

    pub(super) fn set_string(&mut self, name: &str, v: &str) {
        let (n, v) = (cstr(name), cstr(v));
        unsafe { Highs_setStringOptionValue(self.ptr, n.as_ptr(), v.as_ptr()) };
    }

    pub(super) fn configure(&mut self, controls: &SolveControls) {
        self.set_int("threads", controls.threads as i64);
        self.set_double("mip_rel_gap", controls.rel_gap);
        self.set_double("mip_abs_gap", controls.abs_gap);
    }

    pub(super) fn set_time_limit(&mut self, limit: Duration) {
        self.set_double("time_limit", limit.as_secs_f64().max(1e-3));
    }

    /// Loads the model; with `relax` every column is continuous.
    pub(super) fn pass(&mut self, model: &MilpModel, relax: bool) -> Result<()> {
        let n = model.num_vars();
        let mut col_lower = Vec::with_capacity(n);
        let mut col_upper = Vec::with_capacity(n);
        let mut integrality = Vec::with_capacity(n);
        for v in model.vars() {
            col_lower.push(v.lower);
            col_upper.push(v.upper);
            integrality.push(if v.is_integer() && !relax { kHighsVarTypeInteger } else { kHighsVarTypeContinuous });
        }
        let (row_lower, row_upper, starts, index, value) = csr(model.rows());
        let status = unsafe {
            Highs_passMip(
                self.ptr,
                n as HighsInt,
                row_lower.len() as HighsInt,
                index.len() as HighsInt,
                kHighsMatrixFormatRowwise,
                kHighsObjSenseMinimize,
                model.offset(),
                model.cost().as_ptr(),
                col_lower.as_ptr(),
                col_upper.as_ptr(),
                row_lower.as_ptr(),
                row_upper.as_ptr(),
                starts.as_ptr(),
                index.as_ptr(),
                value.as_ptr(),
                integrality.as_ptr(),
            )
        };
        if status == kHighsStatusError {
            return Err(Error::Solver("HiGHS rejected the model".into()));
        }
        self.num_col = n;
        self.num_row = row_lower.len();
        Ok(())
    }

    pub(super) fn add_rows(&mut self, rows: &[Row]) -> Result<()> {
        if rows.is_empty() {
            return Ok(());
        }
        let (lower, upper, starts, index, value) = csr(rows);
        let status = unsafe {
            Highs_addRows(
                self.ptr,
                rows.len() as HighsInt,
                lower.as_ptr(),
                upper.as_ptr(),
                index.len() as HighsInt,
                starts.as_ptr(),
                index.as_ptr(),
                value.as_ptr(),
            )
        };
        if status == kHighsStatusError {
            return Err(Error::Solver("HiGHS rejected added rows".into()));
        }
        self.num_row += rows.len();
        Ok(())
    }

    pub(super) fn change_bounds(&mut self, cols: &[HighsInt], lower: &[f64], upper: &[f64]) {
        if cols.is_empty() {
            return;
        }
        unsafe {
            Highs_changeColsBoundsBySet(
                self.ptr,
                cols.len() as HighsInt,
                cols.as_ptr(),
                lower.as_ptr(),
                upper.as_ptr(),
            )
        };
    }

    pub(super) fn set_solution(&mut self, x: &[f64]) {
        if x.len() == self.num_col {
            unsafe {
                Highs_setSolution(
                    self.ptr,
                    x.as_ptr(),
                    std::ptr::null(),
                    std::ptr::null(),
                    std::ptr::null(),
                )
            };
        }
    }

    pub(super) fn run(&mut self) -> LpStatus {
        let status = unsafe { Highs_run(self.ptr) };
        let model_status = unsafe { Highs_getModelStatus(self.ptr) };
        if status == kHighsStatusError && model_status != kHighsModelStatusTimeLimit {
            return LpStatus::Other(model_status);
        }
        match model_status {
            s if s == kHighsModelStatusOptimal => LpStatus::Optimal,
            s if s == kHighsModelStatusInfeasible => LpStatus::Infeasible,
            s if s == kHighsModelStatusUnboundedOrInfeasible || s == kHighsModelStatusUnbounded => {
                LpStatus::Unbounded
            }
            s if s == kHighsModelStatusTimeLimit || s == kHighsModelStatusInterrupt => LpStatus::TimeLimit,
            s => LpStatus::Other(s),
        }
    }

    pub(super) fn objective(&self) -> f64 {
        unsafe { Highs_getObjectiveValue(self.ptr) }
    }

    pub(super) fn solution(&self) -> Vec<f64> {
        let mut col = vec![0.0; self.num_col];
        unsafe {
            Highs_getSolution(
                self.ptr,
                col.as_mut_ptr(),
                std::ptr::null_mut(),
                std::ptr::null_mut(),
                std::ptr::null_mut(),
            )
        };
        col
    }

    pub(super) fn has_primal_solution(&self) -> bool {
        let mut v: HighsInt = 0;
        let name = cstr("primal_solution_status");
        unsafe { Highs_getIntInfoValue(self.ptr, name.as_ptr(), &mut v) };
        v == kHighsSolutionStatusFeasible
    }

    pub(super) fn mip_dual_bound(&self) -> f64 {
        let mut v = f64::NEG_INFINITY;
        let name = cstr("mip_dual_bound");
        unsafe { Highs_getDoubleInfoValue(self.ptr, name.as_ptr(), &mut v) };
        v
    }

    pub(super) fn mip_nodes(&self) -> u64 {
        let mut v: i64 = 0;
        let name = cstr("mip_node_count");
        unsafe { Highs_getInt64InfoValue(self.ptr, name.as_ptr(), &mut v) };
        v.max(0) as u64
    }
}

#[allow(clippy::type_complexity)]
fn csr(rows: &[Row]) -> (Vec<f64>, Vec<f64>, Vec<HighsInt>, Vec<HighsInt>, Vec<f64>) {
    let mut lower = Vec::with_capacity(rows.len());
    let mut upper = Vec::with_capacity(rows.len());
    let mut starts = Vec::with_capacity(rows.len());
    let mut index = Vec::new();
    let mut value = Vec::new();
    for r in rows {
        let (lo, hi) = r.bounds();
        lower.push(lo);
        upper.push(hi);
        starts.push(index.len() as HighsInt);
        for &(v, a) in &r.terms {
            if a != 0.0 {
                index.push(v.0 as HighsInt);
                value.push(a);
            }
        }
    }
    (lower, upper, starts, index, value)
}

/// HiGHS branch-and-cut; lazy rows are handled by re-solving whenever an
/// optimal solution violates them.
pub(super) fn solve_with_resolve(
    model: &MilpModel,
    controls: &SolveControls,
    mut lazy: Option<&mut dyn LazyConstraints>,
    start: Option<&[f64]>,
    started: Instant,
) -> Result<SolveOutcome> {
    let mut h = Highs::new();
    h.configure(controls);
    h.pass(model, false)?;
    if let Some(x) = start {
        h.set_solution(x);
    }
    let has_integers = model.num_integer() > 0;
    let mut out = SolveOutcome::empty(SolveStatus::NoIncumbent, started);
    let mut nodes = 0;
    // Best repaired point from a rejected candidate: (objective, values).
    let mut fallback: Option<(f64, Vec<f64>)> = None;
    loop {
        let left = remaining(controls, started);
        if left.is_zero() {
            out.status = SolveStatus::NoIncumbent;
            break;
        }
        h.set_time_limit(left);
        let status = h.run();
        nodes += h.mip_nodes();
        let bound = if has_integers { h.mip_dual_bound() } else { h.objective() };
        let values = match status {
            LpStatus::Optimal => Some(h.solution()),
            LpStatus::TimeLimit if h.has_primal_solution() => Some(h.solution()),
            LpStatus::TimeLimit => None,
            LpStatus::Infeasible => {
                out.status = SolveStatus::Infeasible;
                break;
            }
            LpStatus::Unbounded => {
                out.status = SolveStatus::Unbounded;
                break;
            }
            LpStatus::Other(code) => {
                out.status = SolveStatus::Failed;
                out.diagnostic = Some(format!("HiGHS model status {code}"));
                break;
            }
        };
        out.bound = if bound.is_finite() { bound } else { out.bound };
        let Some(mut x) = values else {
            out.status = SolveStatus::NoIncumbent;
            break;
        };
        let mut rounded = x.clone();
        super::round_integers(model, &mut rounded);
        if let Some(gen) = lazy.as_deref_mut() {
            let rows = gen.separate(&rounded);
            if !rows.is_empty() {
                for r in &rows {
                    super::check_row(r, model.num_vars())?;
                }
                h.add_rows(&rows)?;
                out.lazy_rows.extend(rows);
                out.rejected_candidates += 1;
                if let Some(mut y) = gen.repair(&rounded) {
                    super::round_integers(model, &mut y);
                    let feasible = model.rows().iter().chain(&out.lazy_rows).all(|r| r.violation(&y) <= 1e-7)
                        && model.vars().iter().zip(&y).all(|(v, &yi)| yi >= v.lower - 1e-9 && yi <= v.upper + 1e-9);
                    let obj = model.objective_value(&y);
                    if feasible && fallback.as_ref().is_none_or(|(best, _)| obj < *best) {
                        h.set_solution(&y);
                        fallback = Some((obj, y));
                    }
                }
                if status == LpStatus::TimeLimit {
                    out.status = SolveStatus::NoIncumbent;
                    break;
                }
                continue;
            }
        }
        if has_integers && !is_integral(model, &x) {
            out.status = SolveStatus::Failed;
            out.diagnostic = Some("HiGHS returned a fractional solution".into());
            break;
        }
        std::mem::swap(&mut x, &mut rounded);
        let obj = model.objective_value(&x);
        out.objective = Some(obj);
        out.values = Some(x);
        if !has_integers {
            out.bound = obj;
        }
        out.bound = out.bound.min(obj);
        out.gap = relative_gap(obj, out.bound);
        out.status = if status == LpStatus::Optimal { SolveStatus::Optimal } else { SolveStatus::FeasibleTimeLimit };
        break;
    }
    if let (SolveStatus::NoIncumbent, Some((obj, y))) = (out.status, fallback) {
        out.objective = Some(obj);
        out.values = Some(y);
        out.bound = out.bound.min(obj);
        out.gap = relative_gap(obj, out.bound);
        out.status = SolveStatus::FeasibleTimeLimit;
    }
    out.nodes = nodes;
    Ok(out)
}
