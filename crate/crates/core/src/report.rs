//! Run summaries, bound traces and the plain-text plan listing.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::milp::{relative_gap, SolveStatus};
use crate::model::{EffortMap, Occupancy, SearchInstance, SearchPlan, Trajectory};

/// Solution methods exposed by the library and the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "csp-u")]
    CspU,
    #[serde(rename = "csp-l")]
    CspL,
    #[serde(rename = "csp-u-pre")]
    CspUPre,
    #[serde(rename = "csp-l-pre")]
    CspLPre,
    #[serde(rename = "oa")]
    Oa,
    #[serde(rename = "msp")]
    Msp,
    #[serde(rename = "sca")]
    Sca,
    #[serde(rename = "bsca")]
    Bsca,
    #[serde(rename = "oabsca")]
    OaBsca,
    #[serde(rename = "oracle")]
    Oracle,
}

impl Method {
    pub const ALL: [Method; 10] = [
        Method::CspU,
        Method::CspL,
        Method::CspUPre,
        Method::CspLPre,
        Method::Oa,
        Method::Msp,
        Method::Sca,
        Method::Bsca,
        Method::OaBsca,
        Method::Oracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::CspU => "csp-u",
            Method::CspL => "csp-l",
            Method::CspUPre => "csp-u-pre",
            Method::CspLPre => "csp-l-pre",
            Method::Oa => "oa",
            Method::Msp => "msp",
            Method::Sca => "sca",
            Method::Bsca => "bsca",
            Method::OaBsca => "oabsca",
            Method::Oracle => "oracle",
        }
    }

    /// Methods that work on an explicit path list.
    pub fn uses_paths(self) -> bool {
        matches!(self, Method::CspU | Method::CspL | Method::CspUPre | Method::CspLPre | Method::Oa)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method {s:?}")))
    }
}

/// How a run ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    /// Gap tolerance met.
    Optimal,
    /// Stopped by the time or iteration limit with a feasible plan.
    Limit,
    /// No feasible plan found.
    Failed,
}

impl From<SolveStatus> for RunStatus {
    fn from(s: SolveStatus) -> Self {
        match s {
            SolveStatus::Optimal => RunStatus::Optimal,
            SolveStatus::FeasibleTimeLimit => RunStatus::Limit,
            _ => RunStatus::Failed,
        }
    }
}

/// One line of a run trace. Fields that do not apply to a method are zero.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    /// `solve`, `candidate`, `iteration`, ...
    pub event: String,
    pub iteration: usize,
    pub upper: f64,
    pub lower: f64,
    pub gap: f64,
    pub delta: f64,
    pub seconds: f64,
    pub cuts: usize,
    /// Lazy rows reinstated so far.
    pub reinstated: usize,
    /// Lazy rows still withheld.
    pub lazy_pending: usize,
}

/// Sizes of the (last) model solved.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelStats {
    pub vars: usize,
    pub integer_vars: usize,
    pub rows: usize,
}

/// Outcome of one method run.
#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub method: Method,
    pub status: RunStatus,
    pub plan: Option<SearchPlan>,
    pub effort: Option<EffortMap>,
    /// Exact objective of the returned plan.
    pub min_value: Option<f64>,
    /// Objective reported by the final model solve.
    pub model_objective: Option<f64>,
    pub lower_bound: f64,
    pub seconds: f64,
    pub iterations: usize,
    pub stats: ModelStats,
    pub trace: Vec<TraceRow>,
    pub notes: Vec<String>,
}

impl SolveReport {
    pub fn new(method: Method) -> Self {
        SolveReport {
            method,
            status: RunStatus::Failed,
            plan: None,
            effort: None,
            min_value: None,
            model_objective: None,
            lower_bound: f64::NEG_INFINITY,
            seconds: 0.0,
            iterations: 0,
            stats: ModelStats::default(),
            trace: Vec::new(),
            notes: Vec::new(),
        }
    }

    /// Relative gap `(incumbent - bound) / bound`.
    pub fn gap(&self) -> f64 {
        self.min_value.map_or(f64::INFINITY, |v| relative_gap(v, self.lower_bound))
    }

    pub fn note(&mut self, msg: impl Into<String>) {
        let msg = msg.into();
        log::info!("{}: {msg}", self.method);
        self.notes.push(msg);
    }

    /// Writes the trace as CSV.
    pub fn write_trace<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.trace {
            w.serialize(row).map_err(|e| Error::Parse(e.to_string()))?;
        }
        if self.trace.is_empty() {
            w.write_record([
                "event", "iteration", "upper", "lower", "gap", "delta", "seconds", "cuts", "reinstated",
                "lazy_pending",
            ])
            .map_err(|e| Error::Parse(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

const TRANSIT: &str = "~";

/// Lists every searcher's positions for `t = 1..=T`, one line each:
/// `name: tok, tok, ...` where a token is a state label or `~` in transit.
pub fn write_plan_dump(plan: &SearchPlan, inst: &SearchInstance) -> Result<String> {
    let mut out = String::new();
    for tr in plan.trajectories(inst)? {
        let toks: Vec<String> = tr.positions[1..]
            .iter()
            .map(|o| match *o {
                Occupancy::At(s) => inst.motion.label(s),
                Occupancy::Transit => TRANSIT.to_string(),
            })
            .collect();
        out.push_str(&inst.classes[tr.class].name);
        out.push_str(": ");
        out.push_str(&toks.join(", "));
        out.push('\n');
    }
    Ok(out)
}

/// Parses a listing written by [`write_plan_dump`]. Every searcher sits in
/// `s+` at period 0; blank lines and `#` comments are ignored. A line may
/// omit the class name when the instance has a single class.
pub fn parse_plan_dump(text: &str, inst: &SearchInstance) -> Result<SearchPlan> {
    let mut trajectories = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (class, body) = match line.split_once(':') {
            Some((name, body)) => {
                let name = name.trim();
                let l = inst
                    .classes
                    .iter()
                    .position(|c| c.name == name)
                    .ok_or_else(|| Error::Parse(format!("line {}: unknown class {name:?}", n + 1)))?;
                (l, body)
            }
            None if inst.class_count() == 1 => (0, line),
            None => return Err(Error::Parse(format!("line {}: missing class name", n + 1))),
        };
        let mut positions = vec![Occupancy::At(inst.motion.s_plus())];
        for tok in split_tokens(body) {
            if tok == TRANSIT {
                positions.push(Occupancy::Transit);
                continue;
            }
            let s = inst
                .motion
                .parse_label(&tok)
                .ok_or_else(|| Error::Parse(format!("line {}: unknown state {tok:?}", n + 1)))?;
            positions.push(Occupancy::At(s));
        }
        if positions.len() != inst.horizon + 1 {
            return Err(Error::Parse(format!(
                "line {}: {} positions, expected {}",
                n + 1,
                positions.len() - 1,
                inst.horizon
            )));
        }
        trajectories.push(Trajectory { class, positions });
    }
    SearchPlan::from_trajectories(inst, &trajectories)
}

/// Splits on commas that are not inside parentheses.
fn split_tokens(body: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for ch in body.chars() {
        match ch {
            '(' => {
                depth += 1;
                cur.push(ch);
            }
            ')' => {
                depth -= 1;
                cur.push(ch);
            }
            ',' if depth == 0 => {
                out.push(cur.trim().to_string());
                cur.clear();
            }
            _ => cur.push(ch),
        }
    }
    if !cur.trim().is_empty() {
        out.push(cur.trim().to_string());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::line_example;

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("gurobi".parse::<Method>().is_err());
    }

    #[test]
    fn plan_dump_round_trips_on_line_graph() {
        let inst = line_example();
        assert!(parse_plan_dump("1: s+, 1, 2\n", &inst).is_err(), "short line accepted");
        let plan = parse_plan_dump("1: s+, 1, 2, 3, s-, s-\n", &inst).unwrap();
        let text = write_plan_dump(&plan, &inst).unwrap();
        assert_eq!(text, "1: s+, 1, 2, 3, s-, s-\n");
        assert_eq!(parse_plan_dump(&text, &inst).unwrap(), plan);
    }

    #[test]
    fn grid_tokens_keep_their_commas() {
        assert_eq!(split_tokens(" (1,2), s+ ,(3, 4)"), vec!["(1,2)", "s+", "(3, 4)"]);
    }
}
