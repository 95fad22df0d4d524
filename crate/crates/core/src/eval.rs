//! Experiment harness: per-run result records, deterministic-vs-stochastic
//! comparison, θ/ρ sweeps and benchmark tables.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::tsplib::read_tsplib;
use crate::model::{Instance, NodeId, Request, Status, StspGlResult};
use crate::orchestrate::{run_bp, run_heuristic, run_hybrid, run_mip_benchmark, SearchConfig};
use crate::scenarios::{evaluate_metrics, generate_instance, generate_on_coords, mean_scenario, GeneratorConfig, MetricsRow};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Mip,
    Bp,
    Heuristic,
    Hybrid,
    /// B&P on the mean-demand instance.
    Deterministic,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Mip, Method::Bp, Method::Heuristic, Method::Hybrid, Method::Deterministic];

    pub fn name(self) -> &'static str {
        match self {
            Method::Mip => "mip",
            Method::Bp => "bp",
            Method::Heuristic => "heuristic",
            Method::Hybrid => "hybrid",
            Method::Deterministic => "deterministic",
        }
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
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown method `{s}`")))
    }
}

pub fn solve_with(inst: &Instance, method: Method, cfg: &SearchConfig) -> Result<StspGlResult> {
    match method {
        Method::Mip => run_mip_benchmark(inst, cfg),
        Method::Bp => run_bp(inst, cfg),
        Method::Heuristic => run_heuristic(inst, cfg),
        Method::Hybrid => run_hybrid(inst, cfg),
        Method::Deterministic => run_bp(&mean_scenario(inst), cfg),
    }
}

/// Persisted outcome of one run. Metrics are always evaluated on the
/// instance's own scenarios.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub instance: String,
    pub method: Method,
    pub seed: u64,
    pub nodes: usize,
    pub scenarios: usize,
    pub theta: f64,
    pub rho: f64,
    pub alpha: f64,
    pub status: Option<Status>,
    pub upper_bound: Option<f64>,
    pub lower_bound: Option<f64>,
    pub gap: Option<f64>,
    pub tour: Option<Vec<NodeId>>,
    pub served: Vec<Request>,
    pub cover: Vec<Request>,
    pub metrics: Option<MetricsRow>,
    pub error: Option<String>,
}

impl ResultRecord {
    pub fn new(label: &str, inst: &Instance, method: Method, seed: u64, res: &StspGlResult) -> Self {
        let sol = res.incumbent.as_ref();
        Self {
            error: None,
            status: Some(res.status),
            upper_bound: res.upper_bound,
            lower_bound: res.lower_bound,
            gap: res.gap,
            tour: sol.and_then(|s| s.cycle_order()),
            served: sol.map(|s| s.served.iter().map(|&r| inst.requests()[r]).collect()).unwrap_or_default(),
            cover: res.cover.as_ref().map(|c| c.pairs().to_vec()).unwrap_or_default(),
            metrics: sol.map(|s| evaluate_metrics(inst, s)),
            ..Self::failed(label, inst, method, seed, String::new())
        }
    }

    pub fn failed(label: &str, inst: &Instance, method: Method, seed: u64, error: String) -> Self {
        Self {
            instance: label.to_string(),
            method,
            seed,
            nodes: inst.n_nodes(),
            scenarios: inst.n_scenarios(),
            theta: inst.theta(),
            rho: inst.rho(),
            alpha: inst.alpha(),
            status: None,
            upper_bound: None,
            lower_bound: None,
            gap: None,
            tour: None,
            served: Vec::new(),
            cover: Vec::new(),
            metrics: None,
            error: Some(error),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// One approach's line of the deterministic/stochastic comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproachRow {
    pub approach: String,
    pub status: Option<Status>,
    pub design_cost: Option<f64>,
    pub nbar: Option<f64>,
    pub dbar: Option<f64>,
    pub rhobar: Option<f64>,
    /// Scenario feasibility violated, or no solution at all.
    pub infeasible: bool,
}

impl ApproachRow {
    fn from_result(approach: &str, inst: &Instance, res: &StspGlResult) -> Self {
        let m = res.incumbent.as_ref().map(|s| evaluate_metrics(inst, s));
        Self {
            approach: approach.into(),
            status: Some(res.status),
            design_cost: m.as_ref().map(|m| m.design_cost),
            nbar: m.as_ref().map(|m| m.nbar),
            dbar: m.as_ref().map(|m| m.dbar),
            rhobar: m.as_ref().map(|m| m.rhobar),
            infeasible: m.as_ref().is_none_or(|m| m.infeasible),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub deterministic: ApproachRow,
    pub stochastic: ApproachRow,
}

/// Solves the mean-demand instance and the stochastic one with the same
/// method and budget, then scores both on the original scenarios.
pub fn vss_experiment(inst: &Instance, method: Method, cfg: &SearchConfig) -> Result<ComparisonRow> {
    let base = if method == Method::Deterministic { Method::Bp } else { method };
    let det = solve_with(&mean_scenario(inst), base, cfg)?;
    let sto = solve_with(inst, base, cfg)?;
    Ok(ComparisonRow {
        deterministic: ApproachRow::from_result("deterministic", inst, &det),
        stochastic: ApproachRow::from_result("stochastic", inst, &sto),
    })
}

pub fn write_comparison_csv<W: Write>(w: W, rows: &[ComparisonRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(&r.deterministic)?;
        out.serialize(&r.stochastic)?;
    }
    out.flush()?;
    Ok(())
}

/// `design_cost` and visited-node count per (θ, ρ) cell; `None` when the
/// cell produced no solution.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepGrid {
    pub thetas: Vec<f64>,
    pub rhos: Vec<f64>,
    pub cells: Vec<Vec<Option<(f64, usize)>>>,
    pub statuses: Vec<Vec<Option<Status>>>,
}

pub fn sweep(inst: &Instance, thetas: &[f64], rhos: &[f64], method: Method, cfg: &SearchConfig) -> Result<SweepGrid> {
    if thetas.is_empty() || rhos.is_empty() {
        return Err(Error::Parameter("sweep grids must be nonempty".into()));
    }
    if thetas.iter().chain(rhos).any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::Parameter("sweep grid values must lie in [0, 1]".into()));
    }
    let mut cells = Vec::with_capacity(thetas.len());
    let mut statuses = Vec::with_capacity(thetas.len());
    for &theta in thetas {
        let mut row = Vec::with_capacity(rhos.len());
        let mut srow = Vec::with_capacity(rhos.len());
        for &rho in rhos {
            let cell = inst.with_params(theta, rho, inst.alpha());
            match solve_with(&cell, method, cfg) {
                Ok(res) => {
                    row.push(res.incumbent.as_ref().map(|s| (s.design_cost, s.visited().len())));
                    srow.push(Some(res.status));
                }
                Err(e) => {
                    log::warn!("sweep cell theta={theta} rho={rho} failed: {e}");
                    row.push(None);
                    srow.push(None);
                }
            }
        }
        cells.push(row);
        statuses.push(srow);
    }
    Ok(SweepGrid { thetas: thetas.to_vec(), rhos: rhos.to_vec(), cells, statuses })
}

impl SweepGrid {
    fn write_matrix<W: Write>(&self, w: W, pick: impl Fn((f64, usize)) -> String) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["theta\\rho".to_string()];
        header.extend(self.rhos.iter().map(ToString::to_string));
        out.write_record(&header)?;
        for (t, row) in self.thetas.iter().zip(&self.cells) {
            let mut rec = vec![t.to_string()];
            rec.extend(row.iter().map(|c| c.map(&pick).unwrap_or_else(|| "NA".into())));
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_design_csv<W: Write>(&self, w: W) -> Result<()> {
        self.write_matrix(w, |(d, _)| d.to_string())
    }

    pub fn write_nodes_csv<W: Write>(&self, w: W) -> Result<()> {
        self.write_matrix(w, |(_, n)| n.to_string())
    }
}

/// Where a benchmark instance comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InstanceSource {
    /// Instance JSON file.
    File(PathBuf),
    Generate(GeneratorConfig),
    /// TSPLIB coordinates with generated requests and scenarios.
    Tsplib { path: PathBuf, generator: GeneratorConfig },
}

impl InstanceSource {
    pub fn load(&self, base: &Path) -> Result<(String, Instance)> {
        match self {
            InstanceSource::File(p) => {
                let path = base.join(p);
                Ok((stem(&path), Instance::load(&path)?))
            }
            InstanceSource::Generate(g) => Ok((format!("gen_n{}_s{}_seed{}", g.n_nodes, g.n_scenarios, g.seed), generate_instance(g)?)),
            InstanceSource::Tsplib { path, generator } => {
                let path = base.join(path);
                let t = read_tsplib(&path)?;
                Ok((format!("{}_seed{}", t.name, generator.seed), generate_on_coords(t.coords, generator)?))
            }
        }
    }
}

fn stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "instance".into())
}

fn default_methods() -> Vec<Method> {
    vec![Method::Mip, Method::Bp, Method::Heuristic, Method::Hybrid]
}

/// Benchmark description read from JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub instances: Vec<InstanceSource>,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    pub theta_grid: Vec<f64>,
    pub rho_grid: Vec<f64>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub config: SearchConfig,
    pub output_dir: PathBuf,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.instances.is_empty() || self.methods.is_empty() || self.seeds.is_empty() {
            return Err(Error::Parameter("instances, methods and seeds must be nonempty".into()));
        }
        if self.theta_grid.is_empty() || self.rho_grid.is_empty() {
            return Err(Error::Parameter("theta and rho grids must be nonempty".into()));
        }
        self.config.validate()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let spec: Self = serde_json::from_str(&fs::read_to_string(path)?)?;
        spec.validate()?;
        Ok(spec)
    }
}

/// Table row: means over the runs of one (method, size, scenarios, θ, ρ)
/// group. UB/LB/gap means skip runs without that value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub method: Method,
    pub nodes: usize,
    pub scenarios: usize,
    pub theta: f64,
    pub rho: f64,
    pub runs: usize,
    pub ub: Option<f64>,
    pub lb: Option<f64>,
    pub gap: Option<f64>,
    pub no_ub: usize,
    pub errors: usize,
}

pub fn aggregate(records: &[ResultRecord]) -> Vec<BenchRow> {
    type Key = (Method, usize, usize, u64, u64);
    let mut groups: BTreeMap<Key, Vec<&ResultRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.method, r.nodes, r.scenarios, r.theta.to_bits(), r.rho.to_bits())).or_default().push(r);
    }
    let mean = |v: Vec<f64>| if v.is_empty() { None } else { Some(v.iter().sum::<f64>() / v.len() as f64) };
    groups
        .into_iter()
        .map(|((method, nodes, scenarios, t, r), rs)| BenchRow {
            method,
            nodes,
            scenarios,
            theta: f64::from_bits(t),
            rho: f64::from_bits(r),
            runs: rs.len(),
            ub: mean(rs.iter().filter_map(|x| x.upper_bound).collect()),
            lb: mean(rs.iter().filter_map(|x| x.lower_bound).collect()),
            gap: mean(rs.iter().filter_map(|x| x.gap).collect()),
            no_ub: rs.iter().filter(|x| x.error.is_none() && x.upper_bound.is_none()).count(),
            errors: rs.iter().filter(|x| x.error.is_some()).count(),
        })
        .collect()
}

pub fn write_bench_csv<W: Write>(w: W, rows: &[BenchRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads every per-run JSON under `dir`, sorted by file name.
pub fn load_records(dir: &Path) -> Result<Vec<ResultRecord>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths.iter().map(|p| Ok(serde_json::from_str(&fs::read_to_string(p)?)?)).collect()
}

/// Runs every method × instance × (θ, ρ) × seed, writes one JSON per run to
/// `<output_dir>/runs/` and the aggregated table to `<output_dir>/bench.csv`.
/// Paths in the spec are relative to `base`.
pub fn bench(spec: &ExperimentSpec, base: &Path) -> Result<Vec<BenchRow>> {
    spec.validate()?;
    let out_dir = base.join(&spec.output_dir);
    let runs = out_dir.join("runs");
    fs::create_dir_all(&runs)?;
    let mut records = Vec::new();
    for src in &spec.instances {
        let (label, inst) = src.load(base)?;
        for &theta in &spec.theta_grid {
            for &rho in &spec.rho_grid {
                let cell = inst.with_params(theta, rho, inst.alpha());
                for &method in &spec.methods {
                    for &seed in &spec.seeds {
                        let cfg = SearchConfig { seed, ..spec.config.clone() };
                        let rec = match solve_with(&cell, method, &cfg) {
                            Ok(res) => ResultRecord::new(&label, &cell, method, seed, &res),
                            Err(e) => {
                                log::warn!("{label} {method} theta={theta} rho={rho} seed={seed}: {e}");
                                ResultRecord::failed(&label, &cell, method, seed, e.to_string())
                            }
                        };
                        let name = format!("{label}_{method}_t{theta}_r{rho}_s{seed}.json");
                        fs::write(runs.join(name), rec.to_json()?)?;
                        records.push(rec);
                    }
                }
            }
        }
    }
    let rows = aggregate(&records);
    write_bench_csv(fs::File::create(out_dir.join("bench.csv"))?, &rows)?;
    Ok(rows)
}
