//! Outer approximation with lazy secant rows: the secant formulation with
//! preprocessing is solved with only a middle band of secant indices in the
//! model, and the remaining rows are reinstated when a candidate incumbent
//! violates them.

use std::collections::BTreeSet;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::formulation::{build_csp_l_rows, secant_coefficients, secant_row, CspHandles, CspOptions};
use crate::milp::{self, LazyConstraints, Row, SolveControls};
use crate::model::{effort_bounds, SearchInstance};
use crate::report::{Method, ModelStats, SolveReport, TraceRow};
use crate::target::ConditionalTargetModel;

/// Default tolerance for calling a secant row violated.
pub const DEFAULT_VIOLATION_TOL: f64 = 1e-6;

/// Secant indices `b1 + 1 ..= b2` stay in the model; `0..=b1` and
/// `b2 + 1 .. N` start out lazy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LazyConfig {
    pub b1: u64,
    pub b2: u64,
    pub tolerance: f64,
}

impl LazyConfig {
    /// `b1 = max(1, floor(N/10))`, `b2 = ceil(2N/3)`; `None` when `N < 3`.
    pub fn default_for(n: u64) -> Option<Self> {
        if n < 3 {
            return None;
        }
        let b1 = (n / 10).max(1);
        let b2 = (2 * n).div_ceil(3);
        Some(LazyConfig { b1, b2, tolerance: DEFAULT_VIOLATION_TOL })
    }

    pub fn is_lazy(&self, i: u64) -> bool {
        i <= self.b1 || i > self.b2
    }

    /// Lazy indices for a path when the effort cap is `n`.
    pub fn lazy_indices(&self, n: u64) -> BTreeSet<u64> {
        (0..n).filter(|&i| self.is_lazy(i)).collect()
    }
}

/// Band for an instance: the override when given (checked against
/// `0 < b1 < b2 < N`), else the default. `None` disables the band.
pub fn select_lazy_band(inst: &SearchInstance, band: Option<(u64, u64)>) -> Result<Option<LazyConfig>> {
    let n = effort_bounds(inst).total_cap();
    match band {
        Some((b1, b2)) => {
            if !(0 < b1 && b1 < b2 && b2 < n) {
                return Err(Error::InvalidArgument(format!(
                    "band ({b1}, {b2}) must satisfy 0 < b1 < b2 < N = {n}"
                )));
            }
            Ok(Some(LazyConfig { b1, b2, tolerance: DEFAULT_VIOLATION_TOL }))
        }
        None => Ok(LazyConfig::default_for(n)),
    }
}

/// Lazy rows still withheld, per path.
#[derive(Clone, Debug, PartialEq)]
pub struct LazyState {
    pub pending: Vec<BTreeSet<u64>>,
    pub candidates: usize,
    pub reinstated: usize,
    /// Rows reinstated at the last candidate.
    pub last_violated: Vec<(usize, u64)>,
}

impl LazyState {
    pub fn pending_count(&self) -> usize {
        self.pending.iter().map(BTreeSet::len).sum()
    }
}

struct SecantSeparator<'a> {
    handles: &'a CspHandles,
    alpha: f64,
    tolerance: f64,
    state: LazyState,
    trace: Vec<TraceRow>,
    started: Instant,
}

impl LazyConstraints for SecantSeparator<'_> {
    fn separate(&mut self, values: &[f64]) -> Vec<Row> {
        let mut rows = Vec::new();
        self.state.candidates += 1;
        self.state.last_violated.clear();
        for omega in 0..self.state.pending.len() {
            let y = self.handles.path_effort(omega, values);
            let survival = values[self.handles.survival[omega].0];
            let violated: Vec<u64> = self.state.pending[omega]
                .iter()
                .copied()
                .filter(|&i| {
                    let (a, b) = secant_coefficients(self.alpha, i);
                    a - b * y - survival > self.tolerance
                })
                .collect();
            for i in violated {
                self.state.pending[omega].remove(&i);
                self.state.last_violated.push((omega, i));
                rows.push(secant_row(self.handles, self.alpha, omega, i));
            }
        }
        self.state.reinstated += rows.len();
        log::debug!(
            "oa candidate {}: {} rows violated, {} still withheld",
            self.state.candidates,
            rows.len(),
            self.state.pending_count()
        );
        self.trace.push(TraceRow {
            event: "candidate".into(),
            iteration: self.state.candidates,
            seconds: self.started.elapsed().as_secs_f64(),
            reinstated: self.state.reinstated,
            lazy_pending: self.state.pending_count(),
            ..TraceRow::default()
        });
        rows
    }

    fn repair(&mut self, values: &[f64]) -> Option<Vec<f64>> {
        let mut x = values.to_vec();
        for (omega, v) in self.handles.survival.iter().enumerate() {
            let y = self.handles.path_effort(omega, values);
            x[v.0] = (0..self.handles.n_cap)
                .map(|i| {
                    let (a, b) = secant_coefficients(self.alpha, i);
                    a - b * y
                })
                .fold(0.0, f64::max);
        }
        Some(x)
    }
}

/// Largest violation of any secant row at a solver point.
pub fn max_secant_violation(handles: &CspHandles, alpha: f64, values: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for omega in 0..handles.path_terms.len() {
        let y = handles.path_effort(omega, values);
        let survival = values[handles.survival[omega].0];
        for i in 0..handles.n_cap {
            let (a, b) = secant_coefficients(alpha, i);
            worst = worst.max(a - b * y - survival);
        }
    }
    worst
}

/// Runs the lazy outer approximation on the preprocessed secant
/// formulation.
pub fn run_oa(
    inst: &SearchInstance,
    cond: &ConditionalTargetModel,
    controls: &SolveControls,
    band: Option<(u64, u64)>,
) -> Result<SolveReport> {
    let started = Instant::now();
    let mut report = SolveReport::new(Method::Oa);
    let config = select_lazy_band(inst, band)?;
    let opts = CspOptions::preprocessed();
    let (model, handles) = match config {
        Some(c) => build_csp_l_rows(inst, cond, &opts, &|i| !c.is_lazy(i))?,
        None => build_csp_l_rows(inst, cond, &opts, &|_| true)?,
    };
    match config {
        Some(c) => report.note(format!("lazy band b1={} b2={} N={}", c.b1, c.b2, handles.n_cap)),
        None => report.note(format!("lazy band disabled, N={}", handles.n_cap)),
    }
    report.stats = ModelStats { vars: model.num_vars(), integer_vars: model.num_integer(), rows: model.num_rows() };
    let alpha = inst.detection.alpha;
    let pending = match config {
        Some(c) if handles.n_cap > 0 => vec![c.lazy_indices(handles.n_cap); cond.len()],
        _ => vec![BTreeSet::new(); cond.len()],
    };
    let mut sep = SecantSeparator {
        handles: &handles,
        alpha,
        tolerance: config.map_or(DEFAULT_VIOLATION_TOL, |c| c.tolerance),
        state: LazyState { pending, candidates: 0, reinstated: 0, last_violated: Vec::new() },
        trace: Vec::new(),
        started,
    };
    let initial_pending = sep.state.pending_count();
    let lazy: Option<&mut dyn LazyConstraints> = if initial_pending > 0 { Some(&mut sep) } else { None };
    let out = milp::solve_with(&model, controls, lazy, None)?;
    report.trace = std::mem::take(&mut sep.trace);
    report.note(format!(
        "{} candidates, {} of {} lazy rows reinstated",
        sep.state.candidates, sep.state.reinstated, initial_pending
    ));
    report.iterations = sep.state.candidates;
    crate::methods::conclude_path_solve(inst, cond, &handles, &out, controls, &mut report)?;
    if let Some(values) = out.values.as_deref() {
        let worst = max_secant_violation(&handles, alpha, values);
        report.note(format!("largest secant violation at the incumbent: {worst:.3e}"));
    }
    report.seconds = started.elapsed().as_secs_f64();
    report.trace.push(TraceRow {
        event: "final".into(),
        iteration: report.iterations,
        upper: report.min_value.unwrap_or(f64::INFINITY),
        lower: report.lower_bound,
        gap: report.gap(),
        seconds: report.seconds,
        reinstated: sep.state.reinstated,
        lazy_pending: sep.state.pending_count(),
        ..TraceRow::default()
    });
    Ok(report)
}
