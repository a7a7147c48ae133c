use super::{
    Arc, DetectionModel, GridLayout, MotionGraph, OperationalLimits, RateFactors, SearchInstance,
    SearcherClass,
};
use crate::error::{Error, Result};
use crate::target::{MarkovTargetModel, TargetModel, TargetState, Transition};

/// Which cells a searcher can enter from `s+`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EntryMode {
    /// Cells (1,1), (1,2) and (2,1).
    UpperLeftThree,
    /// A single cell, 1-based `(row, col)`.
    SingleCell { row: usize, col: usize },
}

impl EntryMode {
    /// Single entry on the left edge one row above the centre, e.g. (4,1) on
    /// a 9x9 grid.
    pub fn left_of_centre(side: usize) -> Self {
        EntryMode::SingleCell { row: (side / 2).max(1), col: 1 }
    }
}

/// Moves available to a searcher class on the grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reach {
    /// Stay or move to one of the four neighbours, one period each.
    Unit,
    /// As `Unit`, plus two-cell straight moves taking `long_travel` periods.
    Extended { long_travel: u32 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassSpec {
    pub name: String,
    pub count: u32,
    /// `None` means unlimited (the horizon).
    pub endurance: Option<usize>,
    pub reach: Reach,
    pub beta: u32,
}

impl ClassSpec {
    pub fn new(name: &str, count: u32) -> Self {
        ClassSpec { name: name.into(), count, endurance: None, reach: Reach::Unit, beta: 1 }
    }
}

/// Options for [`grid_instance`].
#[derive(Clone, Debug, PartialEq)]
pub struct GridOptions {
    pub side: usize,
    pub horizon: usize,
    pub classes: Vec<ClassSpec>,
    pub camouflage: bool,
    pub entry: EntryMode,
    pub terminal_row: bool,
    /// Base detection rate; defaults to `-3 ln(0.4) / J / beta_1`.
    pub alpha: Option<f64>,
}

impl GridOptions {
    /// One class of `searchers` with unlimited endurance.
    pub fn new(side: usize, searchers: u32, horizon: usize) -> Self {
        GridOptions {
            side,
            horizon,
            classes: vec![ClassSpec::new("1", searchers)],
            camouflage: false,
            entry: EntryMode::UpperLeftThree,
            terminal_row: false,
            alpha: None,
        }
    }

    /// Splits `searchers` into a long-endurance and a short-endurance class
    /// and adds the terminal state.
    pub fn two_class(side: usize, searchers: u32, horizon: usize) -> Self {
        let second = (searchers as f64 * 0.7).floor() as u32;
        let first = searchers - second;
        let mut c1 = ClassSpec::new("1", first);
        c1.endurance = Some((horizon as f64 * 0.8).floor() as usize);
        let mut c2 = ClassSpec::new("2", second);
        c2.endurance = Some((horizon as f64 * 0.6).floor() as usize);
        GridOptions {
            classes: vec![c1, c2],
            terminal_row: true,
            ..GridOptions::new(side, searchers, horizon)
        }
    }

    pub fn with_camouflage(mut self, on: bool) -> Self {
        self.camouflage = on;
        self
    }

    pub fn with_entry(mut self, entry: EntryMode) -> Self {
        self.entry = entry;
        self
    }

    pub fn with_terminal_row(mut self, on: bool) -> Self {
        self.terminal_row = on;
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = Some(alpha);
        self
    }

    /// Second-class searchers see 80% as well as first-class ones:
    /// rate factors 5 and 4 with the base rate divided by 5.
    pub fn with_class_quality(mut self) -> Self {
        for (k, c) in self.classes.iter_mut().enumerate() {
            c.beta = if k == 0 { 5 } else { 4 };
        }
        self
    }

    pub fn total_searchers(&self) -> u32 {
        self.classes.iter().map(|c| c.count).sum()
    }
}

/// Square-grid instance with a Markov target starting in the centre cell.
///
/// States are the cells in row-major order, then `s+`, then `s-` when the
/// terminal row is enabled. Classes with zero searchers are dropped.
pub fn grid_instance(opts: &GridOptions) -> Result<SearchInstance> {
    let side = opts.side;
    if side == 0 || side.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!("grid side must be odd, got {side}")));
    }
    if opts.horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be positive".into()));
    }
    let cells = side * side;
    let s_plus = cells;
    let s_minus = opts.terminal_row.then_some(cells + 1);
    let state_count = cells + 1 + s_minus.is_some() as usize;
    let cell = |r: usize, c: usize| r * side + c;

    let entry: Vec<usize> = match opts.entry {
        EntryMode::UpperLeftThree => {
            let mut v = vec![cell(0, 0)];
            if side > 1 {
                v.push(cell(0, 1));
                v.push(cell(1, 0));
            }
            v
        }
        EntryMode::SingleCell { row, col } => {
            if row == 0 || col == 0 || row > side || col > side {
                return Err(Error::InvalidArgument(format!("entry cell ({row},{col}) is off the grid")));
            }
            vec![cell(row - 1, col - 1)]
        }
    };

    let classes: Vec<&ClassSpec> = opts.classes.iter().filter(|c| c.count > 0).collect();
    if classes.is_empty() {
        return Err(Error::InvalidArgument("no searchers".into()));
    }
    let mut forward = Vec::with_capacity(classes.len());
    for spec in &classes {
        let mut star = vec![Vec::new(); state_count];
        for r in 0..side {
            for c in 0..side {
                let s = cell(r, c);
                let arcs: &mut Vec<Arc> = &mut star[s];
                arcs.push(Arc { to: s, travel: 1 });
                for (nr, nc) in neighbours(side, r, c, 1) {
                    arcs.push(Arc { to: cell(nr, nc), travel: 1 });
                }
                if let Reach::Extended { long_travel } = spec.reach {
                    for (nr, nc) in neighbours(side, r, c, 2) {
                        arcs.push(Arc { to: cell(nr, nc), travel: long_travel });
                    }
                }
                if let (Some(sm), true) = (s_minus, r == side - 1) {
                    arcs.push(Arc { to: sm, travel: 1 });
                }
            }
        }
        star[s_plus].push(Arc { to: s_plus, travel: 1 });
        for &e in &entry {
            star[s_plus].push(Arc { to: e, travel: 1 });
        }
        if let Some(sm) = s_minus {
            star[sm].push(Arc { to: sm, travel: 1 });
        }
        forward.push(star);
    }
    let motion = MotionGraph::new(state_count, s_plus, s_minus, forward)
        .with_grid(GridLayout { rows: side, cols: side });

    let total = opts.total_searchers();
    let alpha = opts
        .alpha
        .unwrap_or_else(|| -3.0 * 0.4f64.ln() / total as f64 / classes[0].beta.max(1) as f64);
    let searchers = classes
        .iter()
        .map(|c| SearcherClass {
            name: c.name.clone(),
            count: c.count,
            endurance: c.endurance.unwrap_or(opts.horizon),
            beta: RateFactors::uniform(c.beta),
        })
        .collect();

    Ok(SearchInstance {
        motion,
        classes: searchers,
        detection: DetectionModel { alpha },
        limits: OperationalLimits::default(),
        horizon: opts.horizon,
        target: TargetModel::from_markov(grid_target(side, state_count, opts.camouflage)),
    })
}

fn neighbours(side: usize, r: usize, c: usize, step: usize) -> Vec<(usize, usize)> {
    let mut v = Vec::with_capacity(4);
    if r >= step {
        v.push((r - step, c));
    }
    if r + step < side {
        v.push((r + step, c));
    }
    if c >= step {
        v.push((r, c - step));
    }
    if c + step < side {
        v.push((r, c + step));
    }
    v
}

fn grid_target(side: usize, state_count: usize, camouflage: bool) -> MarkovTargetModel {
    let cells = side * side;
    let mut initial = vec![0.0; 2 * state_count];
    let centre = (side / 2) * side + side / 2;
    initial[TargetState::visible(centre).index()] = 1.0;
    let mut rows = vec![Vec::new(); 2 * state_count];
    let (stay, hide, move_mass) = if camouflage { (0.5, 0.1, 0.4) } else { (0.6, 0.0, 0.4) };
    for r in 0..side {
        for c in 0..side {
            let s = r * side + c;
            let nb = neighbours(side, r, c, 1);
            let vis = TargetState::visible(s).index();
            let hid = TargetState::hidden(s).index();
            let row = &mut rows[vis];
            row.push((vis, stay));
            if hide > 0.0 {
                row.push((hid, hide));
            }
            let each = move_mass / nb.len() as f64;
            for (nr, nc) in nb {
                row.push((TargetState::visible(nr * side + nc).index(), each));
            }
            rows[hid] = if camouflage {
                vec![(hid, 1.0 / 6.0), (vis, 5.0 / 6.0)]
            } else {
                vec![(vis, 1.0)]
            };
        }
    }
    debug_assert!(cells < state_count);
    MarkovTargetModel::new(state_count, initial, vec![Transition::from_rows(rows)])
}

/// Five-state line used to illustrate endurance: `s+ = 0`, `s- = 4`,
/// F(0) = {0,1}, F(1) = {1,2}, F(s) = {s-1,s,s+1} for s = 2,3, F(4) = {4};
/// one searcher, horizon 6, endurance 3. The target sits in state 2.
pub fn line_example() -> SearchInstance {
    let arcs = |v: &[usize]| v.iter().map(|&to| Arc { to, travel: 1 }).collect::<Vec<_>>();
    let forward = vec![vec![arcs(&[0, 1]), arcs(&[1, 2]), arcs(&[1, 2, 3]), arcs(&[2, 3, 4]), arcs(&[4])]];
    let motion = MotionGraph::new(5, 0, Some(4), forward);
    let target = MarkovTargetModel::from_entries(
        5,
        &[(TargetState::visible(2), 1.0)],
        &[vec![(TargetState::visible(2), TargetState::visible(2), 1.0)]],
    );
    SearchInstance {
        motion,
        classes: vec![SearcherClass {
            name: "1".into(),
            count: 1,
            endurance: 3,
            beta: RateFactors::uniform(1),
        }],
        detection: DetectionModel { alpha: std::f64::consts::LN_2 },
        limits: OperationalLimits::default(),
        horizon: 6,
        target: TargetModel::from_markov(target),
    }
}
