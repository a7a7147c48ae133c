//! JSON instance files. See `docs/instance-format.md` for the schema.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    Arc, DetectionModel, GridLayout, MotionGraph, OperationalLimits, RateFactors, SearchInstance,
    SearcherClass,
};
use crate::error::{Error, Result};
use crate::target::{
    ConditionalTargetModel, MarkovTargetModel, TargetModel, TargetPath, TargetState, Transition,
};

/// Current instance file version.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    version: u32,
    horizon: usize,
    motion: MotionSection,
    classes: Vec<ClassSection>,
    detection: DetectionSection,
    #[serde(default)]
    limits: LimitsSection,
    target: TargetSection,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MotionSection {
    state_count: usize,
    s_plus: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    s_minus: Option<usize>,
    /// `[rows, cols]` when the first `rows * cols` states are grid cells.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    grid: Option<[usize; 2]>,
    /// Per class, a list of `[from, to, travel]`.
    arcs: Vec<Vec<[usize; 3]>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassSection {
    name: String,
    count: u32,
    endurance: usize,
    #[serde(default = "one")]
    beta: u32,
    /// `[from, to, t, beta]`
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    beta_overrides: Vec<[usize; 4]>,
}

fn one() -> u32 {
    1
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DetectionSection {
    alpha: f64,
}

#[derive(Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct LimitsSection {
    /// `[state, t, cap]`
    #[serde(default)]
    deconfliction: Vec<[usize; 3]>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TargetSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    markov: Option<MarkovSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    conditional: Option<ConditionalSection>,
}

type TransitionEntry = (usize, u8, usize, u8, f64);

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MarkovSection {
    /// `[state, mode, p]`
    initial: Vec<(usize, u8, f64)>,
    /// One step (homogeneous) or `T - 1` steps of `[s, c, s', c', p]`.
    transitions: Vec<Vec<TransitionEntry>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConditionalSection {
    paths: Vec<PathSection>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PathSection {
    /// `[state, mode]` for periods `1..=T`.
    cells: Vec<(usize, u8)>,
    weight: f64,
}

fn mode(c: u8) -> Result<bool> {
    match c {
        0 => Ok(false),
        1 => Ok(true),
        other => Err(Error::Parse(format!("camouflage mode must be 0 or 1, got {other}"))),
    }
}

fn ts(state: usize, c: u8) -> Result<TargetState> {
    Ok(TargetState { state, camouflaged: mode(c)? })
}

impl SearchInstance {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&to_file(self)).expect("instance serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(text)?;
        from_file(file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }
}

fn to_file(inst: &SearchInstance) -> InstanceFile {
    let g = &inst.motion;
    let arcs = (0..g.class_count())
        .map(|l| {
            (0..g.state_count())
                .flat_map(|s| g.forward(l, s).iter().map(move |a| [s, a.to, a.travel as usize]))
                .collect()
        })
        .collect();
    let classes = inst
        .classes
        .iter()
        .map(|c| ClassSection {
            name: c.name.clone(),
            count: c.count,
            endurance: c.endurance,
            beta: c.beta.default,
            beta_overrides: c
                .beta
                .overrides
                .iter()
                .map(|(&(f, to, t), &b)| [f, to, t, b as usize])
                .collect(),
        })
        .collect();
    let markov = inst.target.markov.as_ref().map(|m| MarkovSection {
        initial: m
            .initial()
            .iter()
            .enumerate()
            .filter(|(_, p)| **p != 0.0)
            .map(|(i, &p)| {
                let t = TargetState::from_index(i);
                (t.state, t.camouflaged as u8, p)
            })
            .collect(),
        transitions: m
            .transitions()
            .iter()
            .map(|step| {
                step.rows()
                    .iter()
                    .enumerate()
                    .flat_map(|(i, row)| {
                        let a = TargetState::from_index(i);
                        row.iter().map(move |&(j, p)| {
                            let b = TargetState::from_index(j);
                            (a.state, a.camouflaged as u8, b.state, b.camouflaged as u8, p)
                        })
                    })
                    .collect()
            })
            .collect(),
    });
    let conditional = inst.target.conditional.as_ref().map(|c| ConditionalSection {
        paths: c
            .paths
            .iter()
            .map(|p| PathSection {
                cells: p.cells.iter().map(|c| (c.state, c.camouflaged as u8)).collect(),
                weight: p.weight,
            })
            .collect(),
    });
    InstanceFile {
        version: FORMAT_VERSION,
        horizon: inst.horizon,
        motion: MotionSection {
            state_count: g.state_count(),
            s_plus: g.s_plus(),
            s_minus: g.s_minus(),
            grid: g.grid().map(|gl| [gl.rows, gl.cols]),
            arcs,
        },
        classes,
        detection: DetectionSection { alpha: inst.detection.alpha },
        limits: LimitsSection {
            deconfliction: inst.limits.caps.iter().map(|(&(s, t), &c)| [s, t, c as usize]).collect(),
        },
        target: TargetSection { markov, conditional },
    }
}

fn from_file(file: InstanceFile) -> Result<SearchInstance> {
    if file.version != FORMAT_VERSION {
        return Err(Error::Parse(format!(
            "unsupported instance version {} (expected {FORMAT_VERSION})",
            file.version
        )));
    }
    let n = file.motion.state_count;
    let mut forward = Vec::with_capacity(file.motion.arcs.len());
    for (l, arcs) in file.motion.arcs.iter().enumerate() {
        let mut star = vec![Vec::new(); n];
        for &[from, to, travel] in arcs {
            if from >= n {
                return Err(Error::Parse(format!("class {l}: arc from unknown state {from}")));
            }
            let travel = u32::try_from(travel)
                .map_err(|_| Error::Parse(format!("class {l}: travel time {travel} too large")))?;
            star[from].push(Arc { to, travel });
        }
        forward.push(star);
    }
    let mut motion = MotionGraph::new(n, file.motion.s_plus, file.motion.s_minus, forward);
    if let Some([rows, cols]) = file.motion.grid {
        motion = motion.with_grid(GridLayout { rows, cols });
    }
    let classes = file
        .classes
        .into_iter()
        .map(|c| {
            let mut overrides = BTreeMap::new();
            for [f, to, t, b] in c.beta_overrides {
                let b = u32::try_from(b).map_err(|_| Error::Parse(format!("rate factor {b} too large")))?;
                overrides.insert((f, to, t), b);
            }
            Ok(SearcherClass {
                name: c.name,
                count: c.count,
                endurance: c.endurance,
                beta: RateFactors { default: c.beta, overrides },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut caps = BTreeMap::new();
    for [s, t, c] in file.limits.deconfliction {
        let c = u32::try_from(c).map_err(|_| Error::Parse(format!("cap {c} too large")))?;
        caps.insert((s, t), c);
    }
    let markov = match file.target.markov {
        None => None,
        Some(m) => {
            let mut p = vec![0.0; 2 * n];
            for (s, c, v) in m.initial {
                if s >= n {
                    return Err(Error::Parse(format!("initial law names unknown state {s}")));
                }
                p[ts(s, c)?.index()] += v;
            }
            let mut steps = Vec::with_capacity(m.transitions.len());
            for entries in m.transitions {
                let mut rows = vec![Vec::new(); 2 * n];
                for (s, c, s2, c2, v) in entries {
                    if s >= n || s2 >= n {
                        return Err(Error::Parse(format!("transition {s} -> {s2} names an unknown state")));
                    }
                    rows[ts(s, c)?.index()].push((ts(s2, c2)?.index(), v));
                }
                steps.push(Transition::from_rows(rows));
            }
            Some(MarkovTargetModel::new(n, p, steps))
        }
    };
    let conditional = match file.target.conditional {
        None => None,
        Some(c) => Some(ConditionalTargetModel::new(
            c.paths
                .into_iter()
                .map(|p| {
                    Ok(TargetPath {
                        cells: p.cells.into_iter().map(|(s, c)| ts(s, c)).collect::<Result<_>>()?,
                        weight: p.weight,
                    })
                })
                .collect::<Result<_>>()?,
        )),
    };
    Ok(SearchInstance {
        motion,
        classes,
        detection: DetectionModel { alpha: file.detection.alpha },
        limits: OperationalLimits { caps },
        horizon: file.horizon,
        target: TargetModel { markov, conditional },
    })
}
