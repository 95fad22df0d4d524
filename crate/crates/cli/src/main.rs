use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use stspgl::eval::{self, ExperimentSpec, Method, ResultRecord};
use stspgl::model::tsplib::read_tsplib;
use stspgl::model::validate_instance;
use stspgl::orchestrate::SearchConfig;
use stspgl::scenarios::{generate_instance, generate_on_coords, GeneratorConfig};
use stspgl::{Instance, Status};

#[derive(Parser)]
#[command(name = "stspgl", version, about = "Tour design under stochastic passenger demand")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a random instance.
    Generate(GenerateArgs),
    /// Solve one instance.
    Solve(SolveArgs),
    /// Compare mean-demand and stochastic planning.
    Vss(VssArgs),
    /// Solve a grid of service levels and feasibility frequencies.
    Sweep(SweepArgs),
    /// Run a benchmark spec and write per-run JSON plus a summary table.
    Bench { spec: PathBuf },
    /// Check an instance file.
    Validate { file: PathBuf },
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, default_value_t = 10)]
    nodes: usize,
    #[arg(long, default_value_t = 10)]
    requests: usize,
    #[arg(long, default_value_t = 5)]
    scenarios: usize,
    #[arg(long, default_value_t = 0.9)]
    theta: f64,
    #[arg(long, default_value_t = 0.1)]
    rho: f64,
    #[arg(long, default_value_t = 0.25)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Take node coordinates from a TSPLIB EUC_2D file (overrides --nodes).
    #[arg(long)]
    tsplib: Option<PathBuf>,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args, Clone)]
struct Budget {
    /// Total time limit in seconds.
    #[arg(long, default_value_t = 3600.0)]
    time_limit: f64,
    /// Relative gap target; 0 asks for a proven optimum.
    #[arg(long, default_value_t = 0.02)]
    gap: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long)]
    explore_size: Option<usize>,
    /// Exclude non-minimal pricing solutions with lazy cuts.
    #[arg(long)]
    minimality_cuts: bool,
}

impl Budget {
    fn config(&self) -> SearchConfig {
        let d = SearchConfig::default();
        SearchConfig {
            time_limit_total: self.time_limit,
            rmp_time_limit: d.rmp_time_limit.min(self.time_limit),
            pricing_time_limit: d.pricing_time_limit.min(self.time_limit),
            gap_target: self.gap,
            seed: self.seed,
            workers: self.workers,
            max_iterations: self.max_iterations,
            explore_size: self.explore_size,
            minimality_cuts: self.minimality_cuts,
            ..d
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    file: PathBuf,
    #[arg(long, default_value = "bp", value_parser = parse_method)]
    method: Method,
    #[command(flatten)]
    budget: Budget,
    /// Bound trace CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// One line per Benders cut.
    #[arg(long)]
    cut_log: Option<PathBuf>,
    /// One line per column-generation round.
    #[arg(long)]
    cg_log: Option<PathBuf>,
    /// Result JSON; stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct VssArgs {
    #[arg(required = true)]
    files: Vec<PathBuf>,
    #[arg(long, default_value = "bp", value_parser = parse_method)]
    method: Method,
    #[command(flatten)]
    budget: Budget,
    /// Comparison CSV; stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    file: PathBuf,
    /// Comma-separated service levels.
    #[arg(long, value_delimiter = ',', required = true)]
    theta_grid: Vec<f64>,
    /// Comma-separated infeasibility shares.
    #[arg(long, value_delimiter = ',', required = true)]
    rho_grid: Vec<f64>,
    #[arg(long, default_value = "bp", value_parser = parse_method)]
    method: Method,
    #[command(flatten)]
    budget: Budget,
    #[arg(long, default_value = "design_cost.csv")]
    design_out: PathBuf,
    #[arg(long, default_value = "nodes.csv")]
    nodes_out: PathBuf,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: stspgl::Error| e.to_string())
}

fn label(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "instance".into())
}

fn writer(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    })
}

fn load(path: &Path) -> anyhow::Result<Instance> {
    let inst = Instance::load(path).with_context(|| format!("loading {}", path.display()))?;
    validate_instance(&inst).into_result().with_context(|| format!("validating {}", path.display()))?;
    Ok(inst)
}

fn generate(a: GenerateArgs) -> anyhow::Result<ExitCode> {
    let cfg = GeneratorConfig {
        n_nodes: a.nodes,
        n_requests: a.requests,
        n_scenarios: a.scenarios,
        theta: a.theta,
        rho: a.rho,
        alpha: a.alpha,
        seed: a.seed,
        ..Default::default()
    };
    let inst = match &a.tsplib {
        Some(p) => generate_on_coords(read_tsplib(p)?.coords, &cfg)?,
        None => generate_instance(&cfg)?,
    };
    inst.save(&a.output)?;
    Ok(ExitCode::SUCCESS)
}

fn solve(a: SolveArgs) -> anyhow::Result<ExitCode> {
    let inst = load(&a.file)?;
    let cfg = SearchConfig { cut_log: a.cut_log, cg_log: a.cg_log, ..a.budget.config() };
    let res = eval::solve_with(&inst, a.method, &cfg)?;
    if let Some(p) = &a.trace {
        res.trace.write_csv(File::create(p).with_context(|| format!("creating {}", p.display()))?)?;
    }
    let rec = ResultRecord::new(&label(&a.file), &inst, a.method, a.budget.seed, &res);
    let mut out = writer(a.output.as_deref())?;
    writeln!(out, "{}", rec.to_json()?)?;
    Ok(match (res.status, res.incumbent.is_some()) {
        (Status::Infeasible, _) => ExitCode::from(2),
        (_, false) => ExitCode::from(3),
        _ => ExitCode::SUCCESS,
    })
}

fn vss(a: VssArgs) -> anyhow::Result<ExitCode> {
    let cfg = a.budget.config();
    let mut rows = Vec::new();
    for f in &a.files {
        rows.push(eval::vss_experiment(&load(f)?, a.method, &cfg)?);
    }
    eval::write_comparison_csv(writer(a.output.as_deref())?, &rows)?;
    Ok(ExitCode::SUCCESS)
}

fn sweep(a: SweepArgs) -> anyhow::Result<ExitCode> {
    let inst = load(&a.file)?;
    let grid = eval::sweep(&inst, &a.theta_grid, &a.rho_grid, a.method, &a.budget.config())?;
    grid.write_design_csv(File::create(&a.design_out)?)?;
    grid.write_nodes_csv(File::create(&a.nodes_out)?)?;
    Ok(ExitCode::SUCCESS)
}

fn bench(spec: &Path) -> anyhow::Result<ExitCode> {
    let s = ExperimentSpec::load(spec).with_context(|| format!("reading {}", spec.display()))?;
    let base = spec.parent().unwrap_or(Path::new("."));
    let rows = eval::bench(&s, base)?;
    eval::write_bench_csv(io::stdout().lock(), &rows)?;
    Ok(ExitCode::SUCCESS)
}

fn validate(path: &Path) -> anyhow::Result<ExitCode> {
    let inst = Instance::load(path)?;
    let report = validate_instance(&inst);
    if report.is_valid() {
        println!("ok");
        return Ok(ExitCode::SUCCESS);
    }
    for v in &report.violations {
        println!("{v}");
    }
    bail!("{} violation(s)", report.violations.len())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let run = match cli.cmd {
        Cmd::Generate(a) => generate(a),
        Cmd::Solve(a) => solve(a),
        Cmd::Vss(a) => vss(a),
        Cmd::Sweep(a) => sweep(a),
        Cmd::Bench { spec } => bench(&spec),
        Cmd::Validate { file } => validate(&file),
    };
    match run {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
