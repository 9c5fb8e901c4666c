//! Command line front end: solve, relax, separate, bench, gen.
//!
//! The subcommands cover the whole toolbox: exact solving (enumeration,
//! brute force, or branch and cut), linear relaxation bounds with cutting
//! planes, standalone separation at a user-supplied point, batch
//! benchmarking with summary tables, and random benchmark generation.
//! Output is a table, CSV, or JSON. With `--deterministic` all wall-clock
//! fields are dropped, so identical configurations produce byte-identical
//! output.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize, Serializer};

use crate::gen::{benchmark_raws, BenchmarkSpec};
use crate::instance::{
    classify, format_benchmark, format_rat, make_instance, parse_benchmark_with, parse_decimal,
    DueDateClass, Instance, RawInstance,
};
use crate::lp::{base_problem, relax_value, simplex_solve, LpStatus};
use crate::polytope::{
    base_rows_f1, base_rows_f2, base_rows_f3, check_point_f64, Cut, Formulation, RowFamily,
    VarSpace,
};
use crate::separation::{separate, separate_triangle};
use crate::solver::{
    branch_and_cut, brute_force_schedules, enumerate_exact, solve_f2, SolveConfig, SolveError,
    SolveReport,
};
use crate::{rat, rat_f64, Rat};

pub const EXIT_OK: i32 = 0;
/// At least one run hit a time or node limit before its optimality proof.
pub const EXIT_LIMIT: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

/// Largest task count for which the relax command computes the exact
/// optimum (and hence gap percentages) as a side product.
const RELAX_OPT_MAX: usize = 16;

/// Schedules are echoed in table output only up to this size; larger ones
/// are available through the JSON format.
const TABLE_SCHEDULE_MAX: usize = 16;

#[derive(Parser)]
#[command(name = "etsched", version, about = "Exact earliness-tardiness scheduling around a common due date", disable_help_subcommand = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve instances to proven optimality.
    Solve(SolveArgs),
    /// Report linear relaxation bounds and their gaps.
    Relax(RelaxArgs),
    /// List the valid inequalities violated at a given point.
    Separate(SeparateArgs),
    /// Batch-solve a benchmark grid and print per-group statistics.
    Bench(BenchArgs),
    /// Generate a random benchmark set.
    Gen(GenArgs),
}

#[derive(Args, Clone)]
struct SourceArgs {
    /// Benchmark file: instance count, then per instance a task count and
    /// n whitespace-separated "p alpha beta" triples.
    #[arg(long, value_name = "PATH")]
    file: Option<PathBuf>,
    /// Inline instance "n;p alpha beta;..." instead of a file.
    #[arg(long, value_name = "SPEC", conflicts_with = "file")]
    inline: Option<String>,
    /// Per-instance task count, for files that omit the count lines.
    #[arg(long, value_name = "N")]
    fixed_n: Option<usize>,
    /// 1-based instance index within the file.
    #[arg(long, value_name = "K", conflicts_with = "all")]
    index: Option<usize>,
    /// Run every instance in the file (the default).
    #[arg(long)]
    all: bool,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Comma-separated due date factors in (0,1]; d = floor(h * sum p).
    #[arg(long, value_name = "LIST")]
    h: Option<String>,
    /// Output format.
    #[arg(long, value_enum, default_value_t = OutputFormat::Table)]
    format: OutputFormat,
    /// Drop wall-clock fields so identical runs give identical bytes.
    #[arg(long)]
    deterministic: bool,
    /// Skip the triangle rows of the pairwise-indicator space.
    #[arg(long)]
    no_triangle: bool,
    /// Wall-clock budget per run, in seconds.
    #[arg(long, value_name = "SECS", default_value_t = 600.0)]
    time_limit: f64,
    /// Search node budget per run.
    #[arg(long, value_name = "COUNT", default_value_t = 1_000_000)]
    node_limit: u64,
    /// Cuts accepted per family per separation round.
    #[arg(long, value_name = "COUNT", default_value_t = 10)]
    max_cuts: usize,
    /// Cutting plane rounds per search node.
    #[arg(long, value_name = "COUNT", default_value_t = 50)]
    round_cap: usize,
    /// Violation threshold when reporting cuts.
    #[arg(long, value_name = "EPS", default_value_t = 1e-6)]
    tol: f64,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, value_enum, default_value_t = Method::F3)]
    method: Method,
}

#[derive(Args)]
struct RelaxArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, value_enum, default_value_t = Method::F2)]
    method: Method,
}

#[derive(Args)]
struct SeparateArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[command(flatten)]
    run: RunArgs,
    /// JSON point file: {"formulation": "f1|f2|f3", "point": [numbers]}.
    #[arg(long, value_name = "PATH")]
    point: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, value_enum, default_value_t = Method::F3)]
    method: Method,
}

#[derive(Args)]
struct GenArgs {
    /// Number of instances.
    #[arg(long, default_value_t = 10)]
    count: usize,
    /// Tasks per instance.
    #[arg(long, default_value_t = 10)]
    n: usize,
    /// Seed for the generator stream.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1, value_name = "INT")]
    p_min: i64,
    #[arg(long, default_value_t = 20, value_name = "INT")]
    p_max: i64,
    #[arg(long, default_value_t = 1, value_name = "INT")]
    alpha_min: i64,
    #[arg(long, default_value_t = 15, value_name = "INT")]
    alpha_max: i64,
    #[arg(long, default_value_t = 1, value_name = "INT")]
    beta_min: i64,
    #[arg(long, default_value_t = 15, value_name = "INT")]
    beta_max: i64,
    /// Output layout: the benchmark text format or a JSON instance array.
    #[arg(long, value_enum, default_value_t = GenFormat::Text)]
    format: GenFormat,
    /// Due date factor for the JSON layout (text carries no due date).
    #[arg(long, value_name = "H", default_value = "1.0")]
    h: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    /// Enumerate early/tardy partitions with exact block decoding.
    Enum,
    /// Enumerate all schedules; tiny instances only.
    Brute,
    /// Branch and cut on the natural space (unrestrictive due dates).
    F1,
    /// Branch and bound on the partition space (unrestrictive due dates).
    F2,
    /// Branch and cut on the shifted space (any due date).
    F3,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::Enum => "enum",
            Method::Brute => "brute",
            Method::F1 => "f1",
            Method::F2 => "f2",
            Method::F3 => "f3",
        }
    }

    fn formulation(self) -> Option<Formulation> {
        match self {
            Method::F1 => Some(Formulation::F1),
            Method::F2 => Some(Formulation::F2),
            Method::F3 => Some(Formulation::F3),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Table,
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum GenFormat {
    Text,
    Json,
}

#[derive(Clone, Debug)]
pub enum Source {
    File(PathBuf),
    Inline(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Selection {
    All,
    /// 1-based index within the source file.
    Index(usize),
}

/// Everything a batch run needs, assembled from the command line.
///
/// Numeric tolerances of the LP engine and the separation routines are
/// compile-time constants; `tol` only thresholds what gets reported.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub source: Source,
    pub selection: Selection,
    pub fixed_n: Option<usize>,
    pub h: Vec<Rat>,
    pub method: Method,
    pub with_triangle: bool,
    pub tol: f64,
    pub solve: SolveConfig,
    pub format: OutputFormat,
    pub deterministic: bool,
}

impl RunConfig {
    fn source_name(&self) -> String {
        match &self.source {
            Source::File(p) => p.display().to_string(),
            Source::Inline(_) => "inline".to_string(),
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Internal(String),
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn map_solve_err(err: SolveError) -> CliError {
    match err {
        SolveError::Internal(msg) => CliError::Internal(msg),
        other => CliError::Usage(other.to_string()),
    }
}

/// Parses the process arguments, runs one subcommand, and returns the
/// process exit code: 0 ok, 1 limit hit, 2 usage, 3 broken invariant.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = err.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Solve(a) => {
            make_config(&a.source, &a.run, a.method, "1.0").and_then(|cfg| cmd_solve(&cfg))
        }
        Command::Relax(a) => {
            make_config(&a.source, &a.run, a.method, "1.0").and_then(|cfg| cmd_relax(&cfg))
        }
        Command::Separate(a) => make_config(&a.source, &a.run, Method::F3, "1.0")
            .and_then(|cfg| cmd_separate(&cfg, &a.point)),
        Command::Bench(a) => make_config(&a.source, &a.run, a.method, "0.2,0.4,0.6,0.8,1.0")
            .and_then(|cfg| cmd_bench(&cfg)),
        Command::Gen(a) => cmd_gen(a),
    };
    match result {
        Ok(code) => code,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(CliError::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            EXIT_INTERNAL
        }
    }
}

fn make_config(
    src: &SourceArgs,
    run: &RunArgs,
    method: Method,
    default_h: &str,
) -> Result<RunConfig, CliError> {
    let source = match (&src.file, &src.inline) {
        (Some(path), None) => Source::File(path.clone()),
        (None, Some(spec)) => Source::Inline(spec.clone()),
        (None, None) => return Err(usage("pass --file PATH or --inline SPEC")),
        (Some(_), Some(_)) => return Err(usage("--file conflicts with --inline")),
    };
    let selection = match src.index {
        Some(0) => return Err(usage("--index is 1-based")),
        Some(k) => Selection::Index(k),
        None => Selection::All,
    };
    let h = parse_h_list(run.h.as_deref().unwrap_or(default_h))?;
    if !(run.time_limit.is_finite() && run.time_limit > 0.0) {
        return Err(usage("--time-limit must be a positive number of seconds"));
    }
    if !(run.tol.is_finite() && run.tol >= 0.0) {
        return Err(usage("--tol must be a nonnegative number"));
    }
    if run.max_cuts == 0 || run.round_cap == 0 {
        return Err(usage("--max-cuts and --round-cap must be positive"));
    }
    Ok(RunConfig {
        source,
        selection,
        fixed_n: src.fixed_n,
        h,
        method,
        with_triangle: !run.no_triangle,
        tol: run.tol,
        solve: SolveConfig {
            time_limit: Duration::from_secs_f64(run.time_limit),
            node_limit: run.node_limit,
            with_triangle: !run.no_triangle,
            max_cuts: run.max_cuts,
            round_cap: run.round_cap,
        },
        format: run.format,
        deterministic: run.deterministic,
    })
}

/// Parses "n;p alpha beta;..." into raw task data.
fn parse_inline(text: &str) -> Result<RawInstance, CliError> {
    let mut parts = text.split(';').map(str::trim);
    let head = parts
        .next()
        .filter(|s| !s.is_empty())
        .ok_or_else(|| usage("empty --inline spec"))?;
    let n: usize = head
        .parse()
        .map_err(|_| usage(format!("--inline task count {head:?} is not a number")))?;
    if n == 0 {
        return Err(usage("--inline task count must be positive"));
    }
    let mut raw = RawInstance { p: Vec::new(), alpha: Vec::new(), beta: Vec::new() };
    for k in 0..n {
        let part = parts
            .next()
            .ok_or_else(|| usage(format!("--inline announces {n} tasks but stops after {k}")))?;
        let fields: Vec<&str> = part.split_whitespace().collect();
        let [p, a, b] = fields[..] else {
            return Err(usage(format!(
                "--inline task {k}: expected \"p alpha beta\", got {part:?}"
            )));
        };
        raw.p.push(parse_int(p, "processing time")?);
        raw.alpha.push(parse_int(a, "earliness penalty")?);
        raw.beta.push(parse_int(b, "tardiness penalty")?);
    }
    if let Some(extra) = parts.find(|s| !s.is_empty()) {
        return Err(usage(format!("--inline has trailing data {extra:?}")));
    }
    Ok(raw)
}

fn parse_int(text: &str, what: &str) -> Result<i64, CliError> {
    text.parse()
        .map_err(|_| usage(format!("{what} {text:?} is not an integer")))
}

/// Parses a comma-separated list of due date factors, each in (0,1].
fn parse_h_list(text: &str) -> Result<Vec<Rat>, CliError> {
    let mut out = Vec::new();
    for part in text.split(',') {
        let part = part.trim();
        let h = parse_decimal(part).map_err(|e| usage(format!("bad h {part:?}: {e}")))?;
        if h <= rat(0) || h > rat(1) {
            return Err(usage(format!("h = {part} is outside (0, 1]")));
        }
        out.push(h);
    }
    Ok(out)
}

fn load_raws(cfg: &RunConfig) -> Result<Vec<(usize, RawInstance)>, CliError> {
    let raws = match &cfg.source {
        Source::File(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
            parse_benchmark_with(&text, cfg.fixed_n)
                .map_err(|e| usage(format!("{}: {e}", path.display())))?
        }
        Source::Inline(spec) => vec![parse_inline(spec)?],
    };
    match cfg.selection {
        Selection::All => Ok(raws.into_iter().enumerate().map(|(k, r)| (k + 1, r)).collect()),
        Selection::Index(k) => {
            if k > raws.len() {
                return Err(usage(format!(
                    "--index {k} out of range; the source holds {} instance(s)",
                    raws.len()
                )));
            }
            Ok(vec![(k, raws.into_iter().nth(k - 1).unwrap())])
        }
    }
}

struct RunItem {
    index: usize,
    h: Rat,
    inst: Instance,
}

/// Cross product of the selected instances and the h list, ordered by
/// (index, h position).
fn expand(cfg: &RunConfig) -> Result<Vec<RunItem>, CliError> {
    let raws = load_raws(cfg)?;
    let mut items = Vec::new();
    for (index, raw) in &raws {
        for &h in &cfg.h {
            let mut inst =
                make_instance(raw, h).map_err(|e| usage(format!("instance {index}: {e}")))?;
            if let Some(meta) = &mut inst.meta {
                meta.source = Some(cfg.source_name());
                meta.index = Some(*index);
            }
            items.push(RunItem { index: *index, h, inst });
        }
    }
    Ok(items)
}

fn dispatch(method: Method, inst: &Instance, cfg: &SolveConfig) -> Result<SolveReport, SolveError> {
    match method {
        Method::Enum => enumerate_exact(inst),
        Method::Brute => brute_force_schedules(inst),
        Method::F1 => branch_and_cut(Formulation::F1, inst, cfg),
        Method::F2 => solve_f2(inst, cfg),
        Method::F3 => branch_and_cut(Formulation::F3, inst, cfg),
    }
}

/// Exact rational in JSON: a plain integer when integral, else "num/den".
#[derive(Clone, Copy, Debug)]
struct RatJson(Rat);

impl Serialize for RatJson {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if *self.0.denom() == 1 {
            s.serialize_i64(*self.0.numer())
        } else {
            s.serialize_str(&format!("{}/{}", self.0.numer(), self.0.denom()))
        }
    }
}

#[derive(Serialize)]
struct ScheduleJson {
    #[serde(rename = "C")]
    c: Vec<RatJson>,
    value: RatJson,
    feasible: bool,
}

#[derive(Serialize)]
struct SolveRow {
    index: usize,
    h: String,
    n: usize,
    d: i64,
    method: String,
    value: RatJson,
    optimal: bool,
    nodes: u64,
    lp_iterations: usize,
    cuts: BTreeMap<String, usize>,
    lower_bound: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    time_s: Option<f64>,
    schedule: ScheduleJson,
}

impl SolveRow {
    fn new(item: &RunItem, report: &SolveReport, deterministic: bool) -> SolveRow {
        SolveRow {
            index: item.index,
            h: format_rat(item.h),
            n: item.inst.n(),
            d: item.inst.d,
            method: report.method.clone(),
            value: RatJson(report.value),
            optimal: !report.limit_hit,
            nodes: report.nodes,
            lp_iterations: report.lp_iterations,
            cuts: report.cuts_by_family.iter().cloned().collect(),
            lower_bound: report.lower_bound,
            time_s: (!deterministic).then(|| report.wall.as_secs_f64()),
            schedule: ScheduleJson {
                c: report.schedule.iter().map(|&v| RatJson(v)).collect(),
                value: RatJson(report.value),
                feasible: true,
            },
        }
    }

    fn total_cuts(&self) -> usize {
        self.cuts.values().sum()
    }
}

pub fn cmd_solve(cfg: &RunConfig) -> Result<i32, CliError> {
    let items = expand(cfg)?;
    let mut rows = Vec::with_capacity(items.len());
    for item in &items {
        let report = dispatch(cfg.method, &item.inst, &cfg.solve).map_err(map_solve_err)?;
        rows.push(SolveRow::new(item, &report, cfg.deterministic));
    }
    match cfg.format {
        OutputFormat::Json => print_json(&serde_json::json!({ "runs": rows }))?,
        OutputFormat::Csv => {
            println!("index,h,n,d,method,value,optimal,nodes,cuts,lp_iterations,time_s");
            for r in &rows {
                println!(
                    "{},{},{},{},{},{},{},{},{},{},{}",
                    r.index,
                    r.h,
                    r.n,
                    r.d,
                    r.method,
                    format_rat(r.value.0),
                    r.optimal,
                    r.nodes,
                    r.total_cuts(),
                    r.lp_iterations,
                    fmt_csv_time(r.time_s),
                );
            }
        }
        OutputFormat::Table => {
            let header =
                ["idx", "h", "n", "d", "method", "value", "opt", "nodes", "cuts", "lp-it", "time"];
            let cells: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.index.to_string(),
                        r.h.clone(),
                        r.n.to_string(),
                        r.d.to_string(),
                        r.method.clone(),
                        format_rat(r.value.0),
                        if r.optimal { "yes" } else { "no" }.to_string(),
                        r.nodes.to_string(),
                        r.total_cuts().to_string(),
                        r.lp_iterations.to_string(),
                        fmt_table_time(r.time_s),
                    ]
                })
                .collect();
            print!("{}", render_table(&header, &cells));
            let small: Vec<&SolveRow> = rows.iter().filter(|r| r.n <= TABLE_SCHEDULE_MAX).collect();
            if !small.is_empty() {
                println!("completion times:");
                for r in small {
                    let c: Vec<String> = r.schedule.c.iter().map(|v| format_rat(v.0)).collect();
                    println!("  {} h={}: C = {}", r.index, r.h, c.join(", "));
                }
            }
        }
    }
    Ok(if rows.iter().all(|r| r.optimal) { EXIT_OK } else { EXIT_LIMIT })
}

#[derive(Serialize)]
struct RelaxRow {
    index: usize,
    h: String,
    n: usize,
    d: i64,
    #[serde(skip_serializing_if = "Option::is_none")]
    optimum: Option<RatJson>,
    lb_plain: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    gap_plain: Option<f64>,
    lb_cuts: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    gap_cuts: Option<f64>,
    cuts: usize,
    rounds: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    time_s: Option<f64>,
}

#[derive(Serialize)]
struct RelaxGroup {
    n: usize,
    h: String,
    runs: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    gap_plain: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gap_cuts: Option<f64>,
    avg_cuts: f64,
    avg_rounds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    avg_time_s: Option<f64>,
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

fn gap_against(optimum: Option<Rat>, bound: f64) -> Option<f64> {
    optimum.and_then(|opt| {
        (opt > rat(0)).then(|| ((rat_f64(opt) - bound) / rat_f64(opt) * 100.0).max(0.0))
    })
}

pub fn cmd_relax(cfg: &RunConfig) -> Result<i32, CliError> {
    let Some(formulation) = cfg.method.formulation() else {
        return Err(usage("relax takes --method f1, f2, or f3"));
    };
    let items = expand(cfg)?;
    let mut rows = Vec::with_capacity(items.len());
    for item in &items {
        let inst = &item.inst;
        if formulation != Formulation::F3 && classify(inst) == DueDateClass::General {
            return Err(usage(format!(
                "instance {} with h={}: the {} relaxation needs an unrestrictive due date",
                item.index,
                format_rat(item.h),
                cfg.method.name(),
            )));
        }
        let start = Instant::now();
        let optimum = if inst.n() <= RELAX_OPT_MAX {
            Some(enumerate_exact(inst).map_err(map_solve_err)?.value)
        } else {
            None
        };
        let plain = simplex_solve(&base_problem(formulation, inst));
        if plain.status != LpStatus::Optimal {
            return Err(CliError::Internal(format!(
                "base relaxation of instance {} came back {:?}",
                item.index, plain.status
            )));
        }
        let cut = relax_value(formulation, inst, cfg.with_triangle, optimum);
        if cut.status != LpStatus::Optimal {
            return Err(CliError::Internal(format!(
                "cutting plane loop on instance {} came back {:?}",
                item.index, cut.status
            )));
        }
        rows.push(RelaxRow {
            index: item.index,
            h: format_rat(item.h),
            n: inst.n(),
            d: inst.d,
            optimum: optimum.map(RatJson),
            lb_plain: plain.objective,
            gap_plain: gap_against(optimum, plain.objective),
            lb_cuts: cut.bound,
            gap_cuts: cut.gap_percent.map(|g| g.max(0.0)),
            cuts: cut.cuts_added,
            rounds: cut.rounds,
            time_s: (!cfg.deterministic).then(|| start.elapsed().as_secs_f64()),
        });
    }

    let mut grouped: BTreeMap<(usize, String), Vec<&RelaxRow>> = BTreeMap::new();
    for row in &rows {
        grouped.entry((row.n, row.h.clone())).or_default().push(row);
    }
    let groups: Vec<RelaxGroup> = grouped
        .iter()
        .map(|((n, h), members)| {
            let collect = |f: &dyn Fn(&RelaxRow) -> Option<f64>| -> Vec<f64> {
                members.iter().filter_map(|r| f(r)).collect()
            };
            RelaxGroup {
                n: *n,
                h: h.clone(),
                runs: members.len(),
                gap_plain: mean(&collect(&|r| r.gap_plain)),
                gap_cuts: mean(&collect(&|r| r.gap_cuts)),
                avg_cuts: members.iter().map(|r| r.cuts as f64).sum::<f64>()
                    / members.len() as f64,
                avg_rounds: members.iter().map(|r| r.rounds as f64).sum::<f64>()
                    / members.len() as f64,
                avg_time_s: mean(&collect(&|r| r.time_s)),
            }
        })
        .collect();

    match cfg.format {
        OutputFormat::Json => {
            print_json(&serde_json::json!({ "runs": rows, "groups": groups }))?
        }
        OutputFormat::Csv => {
            println!(
                "scope,index,h,n,d,optimum,lb_plain,gap_plain,lb_cuts,gap_cuts,cuts,rounds,time_s"
            );
            for r in &rows {
                println!(
                    "run,{},{},{},{},{},{:.6},{},{:.6},{},{},{},{}",
                    r.index,
                    r.h,
                    r.n,
                    r.d,
                    r.optimum.map(|v| format_rat(v.0)).unwrap_or_default(),
                    r.lb_plain,
                    fmt_csv_gap(r.gap_plain),
                    r.lb_cuts,
                    fmt_csv_gap(r.gap_cuts),
                    r.cuts,
                    r.rounds,
                    fmt_csv_time(r.time_s),
                );
            }
            for g in &groups {
                println!(
                    "avg,,{},{},,,,{},,{},{:.1},{:.1},{}",
                    g.h,
                    g.n,
                    fmt_csv_gap(g.gap_plain),
                    fmt_csv_gap(g.gap_cuts),
                    g.avg_cuts,
                    g.avg_rounds,
                    fmt_csv_time(g.avg_time_s),
                );
            }
        }
        OutputFormat::Table => {
            let header = [
                "idx", "h", "n", "optimum", "LB", "gap%", "LB+cuts", "gap%", "cuts", "rounds",
                "time",
            ];
            let mut cells: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.index.to_string(),
                        r.h.clone(),
                        r.n.to_string(),
                        r.optimum.map(|v| format_rat(v.0)).unwrap_or_else(|| "-".into()),
                        format!("{:.3}", r.lb_plain),
                        fmt_table_gap(r.gap_plain),
                        format!("{:.3}", r.lb_cuts),
                        fmt_table_gap(r.gap_cuts),
                        r.cuts.to_string(),
                        r.rounds.to_string(),
                        fmt_table_time(r.time_s),
                    ]
                })
                .collect();
            for g in &groups {
                cells.push(vec![
                    "avg".to_string(),
                    g.h.clone(),
                    g.n.to_string(),
                    "-".to_string(),
                    "-".to_string(),
                    fmt_table_gap(g.gap_plain),
                    "-".to_string(),
                    fmt_table_gap(g.gap_cuts),
                    format!("{:.1}", g.avg_cuts),
                    format!("{:.1}", g.avg_rounds),
                    fmt_table_time(g.avg_time_s),
                ]);
            }
            print!("{}", render_table(&header, &cells));
        }
    }
    Ok(EXIT_OK)
}

#[derive(Deserialize)]
struct PointFile {
    formulation: String,
    point: Vec<f64>,
}

#[derive(Serialize)]
struct CutRow {
    family: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    subset: Option<Vec<usize>>,
    violation: f64,
    row: String,
}

pub fn cmd_separate(cfg: &RunConfig, point_path: &Path) -> Result<i32, CliError> {
    let items = expand(cfg)?;
    let [item] = &items[..] else {
        return Err(usage(format!(
            "separate checks one point against one instance; the configuration expands to {} runs \
             (narrow it with --index and a single h)",
            items.len()
        )));
    };
    let inst = &item.inst;
    let text = std::fs::read_to_string(point_path)
        .map_err(|e| usage(format!("cannot read {}: {e}", point_path.display())))?;
    let parsed: PointFile = serde_json::from_str(&text)
        .map_err(|e| usage(format!("{}: {e}", point_path.display())))?;
    let formulation = match parsed.formulation.as_str() {
        "f1" => Formulation::F1,
        "f2" => Formulation::F2,
        "f3" => Formulation::F3,
        other => return Err(usage(format!("unknown formulation {other:?}; use f1, f2, or f3"))),
    };
    let vs = VarSpace::new(formulation, inst.n());
    if parsed.point.len() != vs.ncols() {
        return Err(usage(format!(
            "point has {} coordinates but the {} space of a {}-task instance has {}",
            parsed.point.len(),
            parsed.formulation,
            inst.n(),
            vs.ncols()
        )));
    }
    if !parsed.point.iter().all(|v| v.is_finite()) {
        return Err(usage("point contains non-finite coordinates"));
    }

    let base = match formulation {
        Formulation::F1 => base_rows_f1(inst),
        Formulation::F2 => base_rows_f2(inst),
        Formulation::F3 => base_rows_f3(inst),
    };
    let mut found: Vec<(Cut, f64)> = check_point_f64(&base, &parsed.point, cfg.tol)
        .into_iter()
        .map(|(k, slack)| (base[k].clone(), -slack))
        .collect();
    let families: &[RowFamily] = match formulation {
        Formulation::F1 => &[RowFamily::S1, RowFamily::S2],
        Formulation::F2 => &[],
        Formulation::F3 => &[RowFamily::S1p, RowFamily::S2p],
    };
    for &family in families {
        for cut in separate(family, inst, &vs, &parsed.point, cfg.solve.max_cuts) {
            let violation = -cut.slack_f64(&parsed.point);
            found.push((cut, violation));
        }
    }
    if cfg.with_triangle {
        for cut in separate_triangle(&vs, &parsed.point, cfg.solve.max_cuts) {
            let violation = -cut.slack_f64(&parsed.point);
            found.push((cut, violation));
        }
    }
    found.retain(|(_, violation)| *violation > cfg.tol);

    match cfg.format {
        OutputFormat::Json => {
            let rows: Vec<CutRow> = found
                .iter()
                .map(|(cut, violation)| CutRow {
                    family: cut.family.name().to_string(),
                    subset: cut.subset.clone(),
                    violation: *violation,
                    row: cut.text(&vs),
                })
                .collect();
            print_json(&serde_json::json!({ "cuts": rows }))?;
        }
        OutputFormat::Csv => {
            println!("family,violation,subset");
            for (cut, violation) in &found {
                let subset = cut
                    .subset
                    .as_ref()
                    .map(|s| s.iter().map(ToString::to_string).collect::<Vec<_>>().join(" "))
                    .unwrap_or_default();
                println!("{},{violation:.9},{subset}", cut.family.name());
            }
        }
        OutputFormat::Table => {
            if found.is_empty() {
                println!("no violated cuts");
            } else {
                for (cut, violation) in &found {
                    println!("viol={violation:<12.9}  {}", cut.text(&vs));
                }
            }
        }
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct BenchGroup {
    n: usize,
    h: String,
    runs: usize,
    opt: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    avg_t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    min_t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_t: Option<f64>,
    avg_nodes: f64,
    /// Mean gap (upper bound vs proven lower bound, percent) over the
    /// runs that hit a limit; absent when every run finished.
    #[serde(skip_serializing_if = "Option::is_none")]
    gap: Option<f64>,
}

pub fn cmd_bench(cfg: &RunConfig) -> Result<i32, CliError> {
    let items = expand(cfg)?;
    #[derive(Default)]
    struct Acc {
        runs: usize,
        opt: usize,
        times: Vec<f64>,
        nodes: f64,
        gaps: Vec<f64>,
    }
    let mut grouped: BTreeMap<(usize, Rat), Acc> = BTreeMap::new();
    let mut all_optimal = true;
    for item in &items {
        let report = dispatch(cfg.method, &item.inst, &cfg.solve).map_err(map_solve_err)?;
        let acc = grouped.entry((item.inst.n(), item.h)).or_default();
        acc.runs += 1;
        acc.nodes += report.nodes as f64;
        acc.times.push(report.wall.as_secs_f64());
        if report.limit_hit {
            all_optimal = false;
            let value = rat_f64(report.value);
            if value > 0.0 {
                acc.gaps.push(((value - report.lower_bound) / value * 100.0).max(0.0));
            }
        } else {
            acc.opt += 1;
        }
    }
    let groups: Vec<BenchGroup> = grouped
        .iter()
        .map(|((n, h), acc)| {
            let timed = !cfg.deterministic;
            BenchGroup {
                n: *n,
                h: format_rat(*h),
                runs: acc.runs,
                opt: acc.opt,
                avg_t: (timed).then(|| acc.times.iter().sum::<f64>() / acc.times.len() as f64),
                min_t: (timed).then(|| acc.times.iter().cloned().fold(f64::INFINITY, f64::min)),
                max_t: (timed).then(|| acc.times.iter().cloned().fold(0.0, f64::max)),
                avg_nodes: acc.nodes / acc.runs as f64,
                gap: mean(&acc.gaps),
            }
        })
        .collect();

    match cfg.format {
        OutputFormat::Json => print_json(&serde_json::json!({ "groups": groups }))?,
        OutputFormat::Csv => {
            println!("n,h,runs,opt,avg_t,min_t,max_t,avg_nodes,gap");
            for g in &groups {
                println!(
                    "{},{},{},{},{},{},{},{:.1},{}",
                    g.n,
                    g.h,
                    g.runs,
                    g.opt,
                    fmt_csv_time(g.avg_t),
                    fmt_csv_time(g.min_t),
                    fmt_csv_time(g.max_t),
                    g.avg_nodes,
                    fmt_csv_gap(g.gap),
                );
            }
        }
        OutputFormat::Table => {
            let header = ["n", "h", "runs", "#opt", "avg-T", "min-T", "max-T", "#nd", "gap"];
            let cells: Vec<Vec<String>> = groups
                .iter()
                .map(|g| {
                    vec![
                        g.n.to_string(),
                        g.h.clone(),
                        g.runs.to_string(),
                        g.opt.to_string(),
                        fmt_table_time(g.avg_t),
                        fmt_table_time(g.min_t),
                        fmt_table_time(g.max_t),
                        format!("{:.1}", g.avg_nodes),
                        fmt_table_gap(g.gap),
                    ]
                })
                .collect();
            print!("{}", render_table(&header, &cells));
        }
    }
    Ok(if all_optimal { EXIT_OK } else { EXIT_LIMIT })
}

fn cmd_gen(args: &GenArgs) -> Result<i32, CliError> {
    for (name, lo, hi) in [
        ("p", args.p_min, args.p_max),
        ("alpha", args.alpha_min, args.alpha_max),
        ("beta", args.beta_min, args.beta_max),
    ] {
        if lo < 1 || lo > hi {
            return Err(usage(format!("{name} range [{lo}, {hi}] must satisfy 1 <= min <= max")));
        }
    }
    if args.n == 0 {
        return Err(usage("--n must be positive"));
    }
    let spec = BenchmarkSpec {
        count: args.count,
        n: args.n,
        p_range: (args.p_min, args.p_max),
        alpha_range: (args.alpha_min, args.alpha_max),
        beta_range: (args.beta_min, args.beta_max),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let raws = benchmark_raws(&spec, &mut rng);
    match args.format {
        GenFormat::Text => print!("{}", format_benchmark(&raws)),
        GenFormat::Json => {
            let hs = parse_h_list(&args.h)?;
            let [h] = hs[..] else {
                return Err(usage("gen --format json takes a single h"));
            };
            let mut insts = Vec::with_capacity(raws.len());
            for (k, raw) in raws.iter().enumerate() {
                let mut inst =
                    make_instance(raw, h).map_err(|e| CliError::Internal(e.to_string()))?;
                if let Some(meta) = &mut inst.meta {
                    meta.source = Some(format!("generated(seed={})", args.seed));
                    meta.index = Some(k + 1);
                }
                insts.push(inst);
            }
            print_json(&serde_json::json!(insts))?;
        }
    }
    Ok(EXIT_OK)
}

fn print_json(value: &serde_json::Value) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Internal(format!("serializing report: {e}")))?;
    println!("{text}");
    Ok(())
}

fn fmt_table_time(t: Option<f64>) -> String {
    t.map(|v| format!("{v:.3}")).unwrap_or_else(|| "-".into())
}

fn fmt_csv_time(t: Option<f64>) -> String {
    t.map(|v| format!("{v:.3}")).unwrap_or_default()
}

fn fmt_table_gap(g: Option<f64>) -> String {
    g.map(|v| format!("{v:.2}")).unwrap_or_else(|| "-".into())
}

fn fmt_csv_gap(g: Option<f64>) -> String {
    g.map(|v| format!("{v:.2}")).unwrap_or_default()
}

fn render_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut width: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (k, cell) in row.iter().enumerate() {
            width[k] = width[k].max(cell.len());
        }
    }
    let mut out = String::new();
    let mut push_line = |cells: &mut dyn Iterator<Item = &str>| {
        let line: Vec<String> = cells
            .zip(&width)
            .map(|(cell, w)| format!("{cell:>w$}"))
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    };
    push_line(&mut header.iter().copied());
    for row in rows {
        push_line(&mut row.iter().map(String::as_str));
    }
    out
}
