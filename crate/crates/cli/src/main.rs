mod record;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use searchplan::eval::{detection_prob_forward, f_conditional, f_markov};
use searchplan::model::EntryMode;
use searchplan::oracle::monte_carlo_eval;
use searchplan::report::{parse_plan_dump, write_plan_dump};
use searchplan::target::{enumerate_paths, merge_equivalent, sample_paths, DEFAULT_PATH_CAP};
use searchplan::{
    check_plan_feasibility, derive_effort, grid_instance, solve_method, validate_instance, Error,
    GridOptions, Method, RunOptions, RunStatus, SearchInstance,
};

use record::{ControlsInfo, InstanceInfo, RunRecord};

const EXIT_UNKNOWN_METHOD: u8 = 3;
const EXIT_MALFORMED: u8 = 4;
const EXIT_BUDGET: u8 = 5;
const EXIT_SOLVE: u8 = 6;
const EXIT_INFEASIBLE_PLAN: u8 = 7;

#[derive(Parser)]
#[command(name = "searchplan", version, about = "Plan searches for a moving, camouflaging target")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a grid instance file.
    Gen(GenArgs),
    /// Solve an instance with one method.
    Solve(SolveArgs),
    /// Check and evaluate a plan file.
    Eval(EvalArgs),
    /// Sweep grid instances over horizons, team sizes and methods.
    Bench(BenchArgs),
    /// Attach sampled or enumerated target paths to an instance.
    Paths(PathsArgs),
}

#[derive(Args, Clone)]
struct GridArgs {
    /// Odd grid side.
    #[arg(long, default_value_t = 9)]
    side: usize,
    /// Split the team into a long- and a short-endurance class and add the
    /// terminal state.
    #[arg(long)]
    two_class: bool,
    #[arg(long)]
    camouflage: bool,
    /// Add the terminal state below the bottom row.
    #[arg(long)]
    terminal_row: bool,
    /// `upper-left`, `left-centre` or a 1-based `ROW,COL`.
    #[arg(long, default_value = "upper-left")]
    entry: String,
    /// Base detection rate; defaults to -3 ln(0.4) / J.
    #[arg(long)]
    alpha: Option<f64>,
    /// Rate factors 5 and 4 for the two classes.
    #[arg(long)]
    class_quality: bool,
}

impl GridArgs {
    fn options(&self, searchers: u32, horizon: usize) -> Result<GridOptions, Failure> {
        let mut o = if self.two_class {
            GridOptions::two_class(self.side, searchers, horizon)
        } else {
            GridOptions::new(self.side, searchers, horizon)
        };
        o = o.with_camouflage(self.camouflage).with_entry(parse_entry(&self.entry, self.side)?);
        if self.terminal_row {
            o = o.with_terminal_row(true);
        }
        if self.class_quality {
            o = o.with_class_quality();
        }
        if let Some(a) = self.alpha {
            o = o.with_alpha(a);
        }
        Ok(o)
    }
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, default_value_t = 5)]
    searchers: u32,
    #[arg(long, default_value_t = 15)]
    horizon: usize,
    /// Attach this many sampled target paths.
    #[arg(long)]
    sample_paths: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    method: String,
    #[arg(long, default_value_t = 900.0)]
    time_limit: f64,
    #[arg(long, default_value_t = 1e-4)]
    gap: f64,
    /// Seed for `--sample-paths`.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Replace the path list with this many sampled paths before solving.
    #[arg(long)]
    sample_paths: Option<usize>,
    /// Lazy band `B1,B2` for `oa`.
    #[arg(long)]
    band: Option<String>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TargetLaw {
    Markov,
    Conditional,
    Both,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    plan: PathBuf,
    #[arg(long, value_enum, default_value_t = TargetLaw::Both)]
    model: TargetLaw,
    /// Also estimate detection by simulating this many targets.
    #[arg(long)]
    monte_carlo: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, value_delimiter = ',', default_value = "5")]
    searchers: Vec<u32>,
    #[arg(long, value_delimiter = ',', default_value = "7,8,9")]
    horizons: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "csp-l-pre,oa")]
    methods: Vec<String>,
    /// Sample this many target paths per instance; paths are enumerated
    /// from the Markov law otherwise.
    #[arg(long)]
    sample_paths: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 900.0)]
    time_limit: f64,
    #[arg(long, default_value_t = 1e-4)]
    gap: f64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct PathsArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Sample this many paths; all paths are enumerated when omitted.
    #[arg(long)]
    sample: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Drop enumerated paths with probability at or below this.
    #[arg(long, default_value_t = 0.0)]
    prob_floor: f64,
    /// Merge paths that expose the target in the same cells.
    #[arg(long)]
    merge: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure { code, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::PathExplosion { .. } | Error::BudgetExceeded { .. } | Error::EffortOverflow { .. } => EXIT_BUDGET,
            Error::Parse(_) | Error::Json(_) | Error::Io(_) => EXIT_MALFORMED,
            Error::InvalidInstance(_) | Error::Dimension(_) | Error::MissingTarget(_) => EXIT_MALFORMED,
            Error::InvalidArgument(_) => 2,
            _ => EXIT_SOLVE,
        };
        Failure::new(code, e.to_string())
    }
}

fn io_failure(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::new(EXIT_MALFORMED, format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::new(1, format!("cannot write {}: {e}", path.display())))
}

fn parse_entry(text: &str, side: usize) -> Result<EntryMode, Failure> {
    match text {
        "upper-left" => Ok(EntryMode::UpperLeftThree),
        "left-centre" | "left-center" => Ok(EntryMode::left_of_centre(side)),
        _ => {
            let bad = || Failure::new(2, format!("bad --entry {text:?}"));
            let (r, c) = text.split_once(',').ok_or_else(bad)?;
            Ok(EntryMode::SingleCell { row: r.trim().parse().map_err(|_| bad())?, col: c.trim().parse().map_err(|_| bad())? })
        }
    }
}

fn parse_method(name: &str) -> Result<Method, Failure> {
    Method::from_str(name).map_err(|_| {
        let known: Vec<&str> = Method::ALL.iter().map(|m| m.name()).collect();
        Failure::new(EXIT_UNKNOWN_METHOD, format!("unknown method {name:?}; expected one of {}", known.join(", ")))
    })
}

fn load_instance(path: &Path) -> Result<SearchInstance, Failure> {
    let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    let inst = SearchInstance::from_json(&text).map_err(|e| io_failure(path, e))?;
    let problems = validate_instance(&inst);
    if !problems.is_empty() {
        let list: Vec<String> = problems.iter().map(|p| p.to_string()).collect();
        return Err(io_failure(path, list.join("; ")));
    }
    Ok(inst)
}

fn run_options(time_limit: f64, gap: f64, band: Option<(u64, u64)>) -> Result<RunOptions, Failure> {
    if !(time_limit > 0.0 && time_limit.is_finite()) {
        return Err(Failure::new(2, "--time-limit must be positive"));
    }
    let mut opts = RunOptions::default().with_gap(gap);
    opts.controls.time_limit = Duration::from_secs_f64(time_limit);
    opts.band = band;
    Ok(opts)
}

fn attach_samples(inst: &mut SearchInstance, count: usize, seed: u64) -> Result<(), Failure> {
    let markov = inst.target.markov.as_ref().ok_or_else(|| Failure::new(EXIT_MALFORMED, "instance has no Markov target to sample"))?;
    inst.target.conditional = Some(merge_equivalent(&sample_paths(markov, inst.horizon, count, seed)?));
    Ok(())
}

fn solve_cmd(a: SolveArgs) -> Result<(), Failure> {
    let method = parse_method(&a.method)?;
    let mut inst = load_instance(&a.instance)?;
    if let Some(n) = a.sample_paths {
        attach_samples(&mut inst, n, a.seed)?;
    }
    let band = match &a.band {
        Some(text) => {
            let bad = || Failure::new(2, format!("bad --band {text:?}, expected B1,B2"));
            let (b1, b2) = text.split_once(',').ok_or_else(bad)?;
            Some((b1.trim().parse().map_err(|_| bad())?, b2.trim().parse().map_err(|_| bad())?))
        }
        None => None,
    };
    let opts = run_options(a.time_limit, a.gap, band)?;
    let report = solve_method(&inst, method, &opts)?;

    fs::create_dir_all(&a.out).map_err(|e| Failure::new(1, format!("cannot create {}: {e}", a.out.display())))?;
    let info = InstanceInfo::describe(&a.instance.display().to_string(), &inst);
    let record = RunRecord::new(info, ControlsInfo::new(&opts.controls, band), &report, a.seed);
    write_file(&a.out.join("run.json"), serde_json::to_string_pretty(&record).expect("record serializes"))?;
    let mut trace = Vec::new();
    report.write_trace(&mut trace)?;
    write_file(&a.out.join("trace.csv"), trace)?;
    if let Some(plan) = &report.plan {
        write_file(&a.out.join("plan.txt"), write_plan_dump(plan, &inst)?)?;
    }
    println!(
        "{method}: status {:?}, min-value {}, bound {:.6}, gap {:.2e}, {:.2}s",
        report.status,
        report.min_value.map_or("-".into(), |v| format!("{v:.6}")),
        report.lower_bound,
        report.gap(),
        report.seconds
    );
    if report.status == RunStatus::Failed {
        return Err(Failure::new(EXIT_SOLVE, format!("{method} found no plan")));
    }
    Ok(())
}

#[derive(Serialize)]
struct EvalOutput {
    feasible: bool,
    violations: Vec<String>,
    f_markov: Option<f64>,
    detection_forward: Option<f64>,
    f_conditional: Option<f64>,
    monte_carlo: Option<MonteCarloOutput>,
}

#[derive(Serialize)]
struct MonteCarloOutput {
    estimate: f64,
    std_error: f64,
    ci_low: f64,
    ci_high: f64,
    samples: u64,
}

fn eval_cmd(a: EvalArgs) -> Result<(), Failure> {
    let inst = load_instance(&a.instance)?;
    let text = fs::read_to_string(&a.plan).map_err(|e| io_failure(&a.plan, e))?;
    let plan = parse_plan_dump(&text, &inst).map_err(|e| io_failure(&a.plan, e))?;
    let check = check_plan_feasibility(&plan, &inst);
    let mut out = EvalOutput {
        feasible: check.feasible(),
        violations: check.violations.iter().map(|v| v.to_string()).collect(),
        f_markov: None,
        detection_forward: None,
        f_conditional: None,
        monte_carlo: None,
    };
    if check.feasible() {
        let z = derive_effort(&plan, &inst)?;
        let alpha = inst.detection.alpha;
        let want = |law| a.model == law || a.model == TargetLaw::Both;
        if let (true, Some(m)) = (want(TargetLaw::Markov), &inst.target.markov) {
            out.f_markov = Some(f_markov(&z, m, alpha, 1));
            out.detection_forward = Some(detection_prob_forward(&z, m, alpha));
        }
        if let (true, Some(c)) = (want(TargetLaw::Conditional), &inst.target.conditional) {
            out.f_conditional = Some(f_conditional(&z, c, alpha));
        }
        if a.model == TargetLaw::Markov && inst.target.markov.is_none() {
            return Err(Failure::new(EXIT_MALFORMED, "instance has no Markov target"));
        }
        if a.model == TargetLaw::Conditional && inst.target.conditional.is_none() {
            return Err(Failure::new(EXIT_MALFORMED, "instance has no target paths"));
        }
        if let (Some(n), Some(m)) = (a.monte_carlo, &inst.target.markov) {
            let e = monte_carlo_eval(&plan, &inst, m, n, a.seed)?;
            out.monte_carlo = Some(MonteCarloOutput {
                estimate: e.estimate,
                std_error: e.std_error,
                ci_low: e.ci_low,
                ci_high: e.ci_high,
                samples: e.samples,
            });
        }
    }
    println!("{}", serde_json::to_string_pretty(&out).expect("output serializes"));
    if !check.feasible() {
        return Err(Failure::new(EXIT_INFEASIBLE_PLAN, "plan is infeasible"));
    }
    Ok(())
}

fn bench_cmd(a: BenchArgs) -> Result<(), Failure> {
    let methods = a.methods.iter().map(|m| parse_method(m)).collect::<Result<Vec<_>, _>>()?;
    let opts = run_options(a.time_limit, a.gap, None)?;
    fs::create_dir_all(&a.out).map_err(|e| Failure::new(1, format!("cannot create {}: {e}", a.out.display())))?;
    let csv_path = a.out.join("bench.csv");
    let mut csv = csv::Writer::from_path(&csv_path).map_err(|e| Failure::new(1, format!("{}: {e}", csv_path.display())))?;
    csv.write_record([
        "side", "searchers", "horizon", "camouflage", "paths", "method", "status", "min_value", "bound", "gap",
        "gap_display", "seconds", "seed",
    ])
    .map_err(|e| Failure::new(1, e.to_string()))?;
    let mut lines = String::new();
    for &j in &a.searchers {
        for &t in &a.horizons {
            let mut inst = grid_instance(&a.grid.options(j, t)?)?;
            if let Some(n) = a.sample_paths {
                attach_samples(&mut inst, n, a.seed)?;
            }
            let source = format!("grid side={} J={j} T={t}", a.grid.side);
            for &m in &methods {
                let report = solve_method(&inst, m, &opts)?;
                let rec = RunRecord::new(
                    InstanceInfo::describe(&source, &inst),
                    ControlsInfo::new(&opts.controls, None),
                    &report,
                    a.seed,
                );
                csv.write_record([
                    a.grid.side.to_string(),
                    j.to_string(),
                    t.to_string(),
                    rec.instance.camouflage.to_string(),
                    rec.instance.paths.map_or(String::new(), |p| p.to_string()),
                    m.name().to_string(),
                    format!("{:?}", rec.status).to_lowercase(),
                    rec.min_value.map_or(String::new(), |v| format!("{v:.6}")),
                    format!("{:.6}", rec.bound),
                    format!("{:.6}", rec.gap),
                    rec.gap_display.clone(),
                    format!("{:.3}", rec.seconds),
                    a.seed.to_string(),
                ])
                .map_err(|e| Failure::new(1, e.to_string()))?;
                lines.push_str(&serde_json::to_string(&rec).expect("record serializes"));
                lines.push('\n');
                println!(
                    "J={j} T={t} {m}: {} {}",
                    rec.min_value.map_or("-".into(), |v| format!("{v:.4}")),
                    if rec.gap_display.is_empty() { format!("{:.1}s", rec.seconds) } else { rec.gap_display.clone() }
                );
            }
        }
    }
    csv.flush().map_err(|e| Failure::new(1, e.to_string()))?;
    write_file(&a.out.join("runs.jsonl"), lines)
}

fn paths_cmd(a: PathsArgs) -> Result<(), Failure> {
    let mut inst = load_instance(&a.instance)?;
    let markov = inst.target.markov.as_ref().ok_or_else(|| Failure::new(EXIT_MALFORMED, "instance has no Markov target"))?;
    let mut cond = match a.sample {
        Some(n) => sample_paths(markov, inst.horizon, n, a.seed)?,
        None => enumerate_paths(markov, inst.horizon, a.prob_floor, DEFAULT_PATH_CAP)?,
    };
    if a.merge {
        cond = merge_equivalent(&cond);
    }
    println!("{} paths, total weight {:.6}", cond.len(), cond.total_weight());
    inst.target.conditional = Some(cond);
    inst.save(&a.out).map_err(|e| Failure::new(1, e.to_string()))
}

fn gen_cmd(a: GenArgs) -> Result<(), Failure> {
    let mut inst = grid_instance(&a.grid.options(a.searchers, a.horizon)?)?;
    if let Some(n) = a.sample_paths {
        let markov = inst.target.markov.as_ref().expect("grid instances carry a Markov target");
        inst.target.conditional = Some(sample_paths(markov, inst.horizon, n, a.seed)?);
    }
    inst.save(&a.out).map_err(|e| Failure::new(1, e.to_string()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => gen_cmd(a),
        Command::Solve(a) => solve_cmd(a),
        Command::Eval(a) => eval_cmd(a),
        Command::Bench(a) => bench_cmd(a),
        Command::Paths(a) => paths_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
