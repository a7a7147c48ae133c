//! Thin MILP layer: a plain model representation, solve controls, and two
//! engines built on HiGHS.
//!
//! * `highs`: HiGHS' own branch-and-cut. Lazy rows are handled by
//!   re-solving after each rejected incumbent.
//! * `bnb`: a small depth-first/best-bound branch-and-bound over HiGHS LP
//!   relaxations that calls the lazy generator at every integral node.
//!
//! The engine is chosen by [`SolveControls::engine`], which defaults to the
//! `SEARCHPLAN_MILP_ENGINE` environment variable (`highs` or `bnb`).

mod bnb;
mod highs;
mod lp_format;

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use lp_format::write_lp;

/// Environment variable selecting the default engine.
pub const ENGINE_ENV: &str = "SEARCHPLAN_MILP_ENGINE";

/// Values within this distance of an integer count as integral.
pub const INT_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RowId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarKind {
    Continuous,
    Integer,
    Binary,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "=")]
    Eq,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

impl Variable {
    pub fn is_integer(&self) -> bool {
        self.kind != VarKind::Continuous
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub name: String,
    pub terms: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Row {
    pub fn new(name: impl Into<String>, terms: Vec<(VarId, f64)>, sense: Sense, rhs: f64) -> Self {
        Row { name: name.into(), terms, sense, rhs }
    }

    pub fn activity(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, a)| a * x[v.0]).sum()
    }

    /// Amount by which `x` violates the row (0 when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let a = self.activity(x);
        match self.sense {
            Sense::Le => (a - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - a).max(0.0),
            Sense::Eq => (a - self.rhs).abs(),
        }
    }

    fn bounds(&self) -> (f64, f64) {
        match self.sense {
            Sense::Le => (f64::NEG_INFINITY, self.rhs),
            Sense::Ge => (self.rhs, f64::INFINITY),
            Sense::Eq => (self.rhs, self.rhs),
        }
    }
}

/// A minimization MILP.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MilpModel {
    vars: Vec<Variable>,
    rows: Vec<Row>,
    cost: Vec<f64>,
    offset: f64,
}

impl MilpModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>, kind: VarKind, lower: f64, upper: f64) -> VarId {
        let (lower, upper) = match kind {
            VarKind::Binary => (lower.max(0.0), upper.min(1.0)),
            _ => (lower, upper),
        };
        self.vars.push(Variable { name: name.into(), kind, lower, upper });
        self.cost.push(0.0);
        VarId(self.vars.len() - 1)
    }

    pub fn add_row(&mut self, row: Row) -> RowId {
        self.rows.push(row);
        RowId(self.rows.len() - 1)
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(VarId, f64)>,
        sense: Sense,
        rhs: f64,
    ) -> RowId {
        self.add_row(Row::new(name, terms, sense, rhs))
    }

    pub fn set_cost(&mut self, v: VarId, c: f64) {
        self.cost[v.0] = c;
    }

    pub fn set_offset(&mut self, offset: f64) {
        self.offset = offset;
    }

    pub fn set_bounds(&mut self, v: VarId, lower: f64, upper: f64) {
        self.vars[v.0].lower = lower;
        self.vars[v.0].upper = upper;
    }

    pub fn set_kind(&mut self, v: VarId, kind: VarKind) {
        self.vars[v.0].kind = kind;
    }

    pub fn fix(&mut self, v: VarId, value: f64) {
        self.set_bounds(v, value, value);
    }

    pub fn var(&self, v: VarId) -> &Variable {
        &self.vars[v.0]
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn cost(&self) -> &[f64] {
        &self.cost
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_integer(&self) -> usize {
        self.vars.iter().filter(|v| v.is_integer()).count()
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.offset + self.cost.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }

    /// Rejects dangling ids, NaN or infinite coefficients and crossed bounds.
    pub fn check(&self) -> Result<()> {
        let n = self.vars.len();
        for (i, v) in self.vars.iter().enumerate() {
            if v.lower.is_nan() || v.upper.is_nan() || v.lower == f64::INFINITY || v.upper == f64::NEG_INFINITY {
                return Err(Error::Model(format!("variable {} ({i}) has invalid bounds", v.name)));
            }
            if v.lower > v.upper {
                return Err(Error::Model(format!(
                    "variable {} has lower bound {} above upper bound {}",
                    v.name, v.lower, v.upper
                )));
            }
            if !self.cost[i].is_finite() {
                return Err(Error::Model(format!("variable {} has non-finite cost", v.name)));
            }
        }
        if !self.offset.is_finite() {
            return Err(Error::Model("non-finite objective offset".into()));
        }
        for r in &self.rows {
            check_row(r, n)?;
        }
        Ok(())
    }
}

fn check_row(r: &Row, n: usize) -> Result<()> {
    if !r.rhs.is_finite() {
        return Err(Error::Model(format!("row {} has non-finite right-hand side", r.name)));
    }
    for &(v, a) in &r.terms {
        if v.0 >= n {
            return Err(Error::Model(format!("row {} references unknown variable {}", r.name, v.0)));
        }
        if !a.is_finite() {
            return Err(Error::Model(format!("row {} has a non-finite coefficient", r.name)));
        }
    }
    Ok(())
}

/// Serializable model description accepted by [`build_model`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub variables: Vec<VarSpec>,
    pub constraints: Vec<RowSpec>,
    #[serde(default)]
    pub offset: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarSpec {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
    #[serde(default)]
    pub cost: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RowSpec {
    pub name: String,
    /// `(variable index, coefficient)`
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// Transcribes a description into a model, rejecting malformed input.
pub fn build_model(spec: &ModelSpec) -> Result<MilpModel> {
    let mut m = MilpModel::new();
    for v in &spec.variables {
        let id = m.add_var(v.name.clone(), v.kind, v.lower, v.upper);
        m.set_cost(id, v.cost);
    }
    for r in &spec.constraints {
        m.add_constraint(
            r.name.clone(),
            r.terms.iter().map(|&(i, a)| (VarId(i), a)).collect(),
            r.sense,
            r.rhs,
        );
    }
    m.set_offset(spec.offset);
    m.check()?;
    Ok(m)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Highs,
    Bnb,
}

impl Engine {
    pub fn parse(name: &str) -> Option<Self> {
        match name.trim().to_ascii_lowercase().as_str() {
            "highs" => Some(Engine::Highs),
            "bnb" => Some(Engine::Bnb),
            _ => None,
        }
    }

    /// Engine named by `SEARCHPLAN_MILP_ENGINE`, `highs` when unset.
    pub fn from_env() -> Self {
        match std::env::var(ENGINE_ENV) {
            Ok(v) => Engine::parse(&v).unwrap_or_else(|| {
                log::warn!("unknown {ENGINE_ENV}={v:?}, using highs");
                Engine::Highs
            }),
            Err(_) => Engine::Highs,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Engine::Highs => "highs",
            Engine::Bnb => "bnb",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveControls {
    /// Relative optimality gap.
    pub rel_gap: f64,
    /// Absolute optimality gap.
    pub abs_gap: f64,
    pub time_limit: Duration,
    pub threads: usize,
    pub engine: Engine,
}

impl Default for SolveControls {
    fn default() -> Self {
        SolveControls {
            rel_gap: 1e-4,
            abs_gap: 1e-9,
            time_limit: Duration::from_secs(900),
            threads: 1,
            engine: Engine::from_env(),
        }
    }
}

impl SolveControls {
    pub fn with_gap(mut self, rel_gap: f64) -> Self {
        self.rel_gap = rel_gap;
        self
    }

    pub fn with_time_limit(mut self, limit: Duration) -> Self {
        self.time_limit = limit;
        self
    }

    pub fn with_engine(mut self, engine: Engine) -> Self {
        self.engine = engine;
        self
    }

    pub fn check(&self) -> Result<()> {
        if self.rel_gap.is_nan() || self.abs_gap.is_nan() || self.rel_gap < 0.0 || self.abs_gap < 0.0 {
            return Err(Error::InvalidArgument("gap tolerances must be nonnegative".into()));
        }
        if self.time_limit.is_zero() {
            return Err(Error::InvalidArgument("time limit must be positive".into()));
        }
        if self.threads == 0 {
            return Err(Error::InvalidArgument("thread count must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    FeasibleTimeLimit,
    Infeasible,
    NoIncumbent,
    Unbounded,
    Failed,
}

impl SolveStatus {
    pub fn has_incumbent(self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::FeasibleTimeLimit)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    pub values: Option<Vec<f64>>,
    pub objective: Option<f64>,
    pub bound: f64,
    pub gap: f64,
    pub nodes: u64,
    /// Candidate incumbents rejected by the lazy generator.
    pub rejected_candidates: usize,
    /// Rows appended by the lazy generator, in order.
    pub lazy_rows: Vec<Row>,
    pub seconds: f64,
    pub diagnostic: Option<String>,
}

impl SolveOutcome {
    fn empty(status: SolveStatus, started: Instant) -> Self {
        SolveOutcome {
            status,
            values: None,
            objective: None,
            bound: f64::NEG_INFINITY,
            gap: f64::INFINITY,
            nodes: 0,
            rejected_candidates: 0,
            lazy_rows: Vec::new(),
            seconds: started.elapsed().as_secs_f64(),
            diagnostic: None,
        }
    }

    pub fn value(&self, v: VarId) -> f64 {
        self.values.as_ref().map_or(0.0, |x| x[v.0])
    }
}

/// `(incumbent - bound) / bound`, infinite when the bound is not positive
/// and the values differ.
pub fn relative_gap(incumbent: f64, bound: f64) -> f64 {
    let diff = incumbent - bound;
    if diff <= 0.0 {
        0.0
    } else if bound > 0.0 {
        diff / bound
    } else {
        f64::INFINITY
    }
}

/// Supplies rows that were left out of the model. Called serially with each
/// candidate incumbent; returning no rows accepts it.
pub trait LazyConstraints {
    fn separate(&mut self, values: &[f64]) -> Vec<Row>;

    /// A point that satisfies every row, lazy ones included, built from a
    /// rejected candidate. Engines that restart after adding rows use it as
    /// the start solution and as a fallback incumbent.
    fn repair(&mut self, _values: &[f64]) -> Option<Vec<f64>> {
        None
    }
}

/// Solves without lazy rows or a start point.
pub fn solve(model: &MilpModel, controls: &SolveControls) -> Result<SolveOutcome> {
    solve_with(model, controls, None, None)
}

/// Solves with an optional lazy generator and an optional feasible start.
pub fn solve_with(
    model: &MilpModel,
    controls: &SolveControls,
    lazy: Option<&mut dyn LazyConstraints>,
    start: Option<&[f64]>,
) -> Result<SolveOutcome> {
    model.check()?;
    controls.check()?;
    let started = Instant::now();
    if model.num_vars() == 0 {
        return Ok(solve_empty(model, started));
    }
    let mut out = match controls.engine {
        Engine::Highs => highs::solve_with_resolve(model, controls, lazy, start, started)?,
        Engine::Bnb => bnb::solve(model, controls, lazy, start, started)?,
    };
    if let Some(x) = out.values.as_mut() {
        round_integers(model, x);
    }
    out.seconds = started.elapsed().as_secs_f64();
    Ok(out)
}

fn solve_empty(model: &MilpModel, started: Instant) -> SolveOutcome {
    let feasible = model.rows().iter().all(|r| r.violation(&[]) <= 1e-9);
    if !feasible {
        return SolveOutcome::empty(SolveStatus::Infeasible, started);
    }
    let obj = model.offset();
    SolveOutcome {
        values: Some(Vec::new()),
        objective: Some(obj),
        bound: obj,
        gap: 0.0,
        ..SolveOutcome::empty(SolveStatus::Optimal, started)
    }
}

fn round_integers(model: &MilpModel, x: &mut [f64]) {
    for (v, xi) in model.vars().iter().zip(x.iter_mut()) {
        if v.is_integer() {
            let r = xi.round();
            if (r - *xi).abs() <= INT_TOL {
                *xi = r;
            }
        }
    }
}

pub(crate) fn is_integral(model: &MilpModel, x: &[f64]) -> bool {
    model
        .vars()
        .iter()
        .zip(x)
        .all(|(v, xi)| !v.is_integer() || (xi - xi.round()).abs() <= INT_TOL)
}

pub(crate) fn remaining(controls: &SolveControls, started: Instant) -> Duration {
    controls.time_limit.saturating_sub(started.elapsed())
}
