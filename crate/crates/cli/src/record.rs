use serde::{Deserialize, Serialize};

use searchplan::milp::SolveControls;
use searchplan::{Method, RunStatus, SearchInstance, SolveReport};

/// Short description of the instance a run was made on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceInfo {
    pub source: String,
    pub states: usize,
    pub horizon: usize,
    pub searchers: Vec<(String, u32)>,
    pub alpha: f64,
    pub camouflage: bool,
    pub paths: Option<usize>,
}

impl InstanceInfo {
    pub fn describe(source: &str, inst: &SearchInstance) -> Self {
        let camouflage = inst.target.markov.as_ref().is_some_and(|m| {
            m.initial().iter().skip(1).step_by(2).any(|&p| p > 0.0)
                || m.transitions().iter().any(|step| {
                    step.rows().iter().flatten().any(|&(j, p)| j % 2 == 1 && p > 0.0)
                })
        }) || inst
            .target
            .conditional
            .as_ref()
            .is_some_and(|c| c.paths.iter().any(|p| p.cells.iter().any(|c| c.camouflaged)));
        InstanceInfo {
            source: source.to_string(),
            states: inst.state_count(),
            horizon: inst.horizon,
            searchers: inst.classes.iter().map(|c| (c.name.clone(), c.count)).collect(),
            alpha: inst.detection.alpha,
            camouflage,
            paths: inst.target.conditional.as_ref().map(|c| c.len()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlsInfo {
    pub time_limit: f64,
    pub gap: f64,
    pub engine: String,
    pub threads: usize,
    pub band: Option<(u64, u64)>,
}

impl ControlsInfo {
    pub fn new(c: &SolveControls, band: Option<(u64, u64)>) -> Self {
        ControlsInfo {
            time_limit: c.time_limit.as_secs_f64(),
            gap: c.rel_gap,
            engine: c.engine.name().to_string(),
            threads: c.threads,
            band,
        }
    }
}

/// Result of one `solve` (or one `bench` cell), written as `run.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub instance: InstanceInfo,
    pub method: Method,
    pub controls: ControlsInfo,
    pub status: RunStatus,
    pub min_value: Option<f64>,
    pub bound: f64,
    pub gap: f64,
    /// The gap as a table cell: empty when the tolerance was met, the gap in
    /// brackets when the run stopped short of it.
    pub gap_display: String,
    pub seconds: f64,
    pub iterations: usize,
    pub seed: u64,
    pub notes: Vec<String>,
}

impl RunRecord {
    pub fn new(instance: InstanceInfo, controls: ControlsInfo, report: &SolveReport, seed: u64) -> Self {
        let gap = report.gap();
        let gap_display = if report.status == RunStatus::Optimal && gap <= controls.gap.max(1e-12) {
            String::new()
        } else if gap.is_finite() {
            format!("[{gap:.4}]")
        } else {
            "[inf]".to_string()
        };
        RunRecord {
            instance,
            method: report.method,
            controls,
            status: report.status,
            min_value: report.min_value,
            bound: report.lower_bound,
            gap,
            gap_display,
            seconds: report.seconds,
            iterations: report.iterations,
            seed,
            notes: report.notes.clone(),
        }
    }
}
