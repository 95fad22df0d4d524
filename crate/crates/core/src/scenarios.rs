//! Scenario arithmetic: routing costs of the deterministic equivalent, the
//! chance constraint, mean-scenario reduction, the instance generator and
//! solution metrics.

use std::io::Write;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    shortest_path_closure, Instance, InstanceParts, NodeId, Request, Rounding, TspGlSolution,
};

/// Absolute tolerance of the per-scenario service-level comparison.
pub const SERVICE_TOL: f64 = 1e-9;

/// Expected routing cost per unit flow, `q̃_ij^hk = c_ij · w^hk` with
/// `w^hk = (1/|S|) Σ_s s^hk / (θ Σ_D s^uv)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RoutingCostTable {
    n: usize,
    travel: Vec<f64>,
    weight: Vec<f64>,
}

impl RoutingCostTable {
    /// `q̃` of arc `(i, j)` for request index `r`.
    #[inline]
    pub fn q(&self, i: NodeId, j: NodeId, r: usize) -> f64 {
        self.travel[i * self.n + j] * self.weight[r]
    }

    /// The per-request factor `w^hk`.
    pub fn weight(&self, r: usize) -> f64 {
        self.weight[r]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weight
    }

    /// Same table with every weight scaled by `f`.
    pub fn scaled(&self, f: f64) -> Self {
        Self { weight: self.weight.iter().map(|w| w * f).collect(), ..self.clone() }
    }

    /// Table with explicit weights over the instance's travel times.
    pub fn with_weights(inst: &Instance, weight: Vec<f64>) -> Self {
        let n = inst.n_nodes();
        let travel = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| inst.travel(i, j)).collect();
        Self { n, travel, weight }
    }
}

pub fn deterministic_routing_costs(inst: &Instance) -> Result<RoutingCostTable> {
    let theta = inst.theta();
    if theta <= 0.0 {
        return Err(Error::Parameter(format!(
            "routing costs are undefined for theta = {theta} (division by zero)"
        )));
    }
    let ns = inst.n_scenarios();
    if ns == 0 {
        return Err(Error::Instance("no scenarios".into()));
    }
    let totals: Vec<f64> = (0..ns).map(|s| inst.scenario_total(s)).collect();
    if let Some(s) = totals.iter().position(|t| *t <= 0.0) {
        return Err(Error::Instance(format!("scenario {s} has zero total demand")));
    }
    let weight = (0..inst.n_requests())
        .map(|r| (0..ns).map(|s| inst.demand(r, s) / (theta * totals[s])).sum::<f64>() / ns as f64)
        .collect();
    Ok(RoutingCostTable::with_weights(inst, weight))
}

/// `⌈(1-ρ)|S|⌉`, the number of scenarios in which the service level must hold.
pub fn required_scenario_count(n_scenarios: usize, rho: f64) -> usize {
    let x = (1.0 - rho) * n_scenarios as f64;
    (x - SERVICE_TOL).ceil().max(0.0) as usize
}

/// Whether the requests `q` (indices) meet the service level in scenario `s`.
pub fn scenario_satisfied(inst: &Instance, q: &[usize], s: usize) -> bool {
    let served: f64 = q.iter().map(|&r| inst.demand(r, s)).sum();
    served >= inst.theta() * inst.scenario_total(s) - SERVICE_TOL
}

/// Per-scenario service flags; `y_s` in the deterministic equivalent.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SatisfactionVector(pub Vec<bool>);

impl SatisfactionVector {
    pub fn count(&self) -> usize {
        self.0.iter().filter(|b| **b).count()
    }
}

pub fn chance_feasible(q: &[usize], inst: &Instance) -> (bool, SatisfactionVector) {
    let v = SatisfactionVector((0..inst.n_scenarios()).map(|s| scenario_satisfied(inst, q, s)).collect());
    let ok = v.count() >= required_scenario_count(inst.n_scenarios(), inst.rho());
    (ok, v)
}

/// Precomputed thresholds for repeated chance-constraint checks.
#[derive(Clone, Debug)]
pub struct CoverChecker {
    threshold: Vec<f64>,
    required: usize,
    demand: Vec<Vec<f64>>,
}

impl CoverChecker {
    pub fn new(inst: &Instance) -> Self {
        let ns = inst.n_scenarios();
        Self {
            threshold: (0..ns).map(|s| inst.theta() * inst.scenario_total(s) - SERVICE_TOL).collect(),
            required: required_scenario_count(ns, inst.rho()),
            demand: (0..inst.n_requests()).map(|r| inst.demands(r).to_vec()).collect(),
        }
    }

    pub fn required(&self) -> usize {
        self.required
    }

    pub fn satisfied_count<I: IntoIterator<Item = usize> + Clone>(&self, q: I) -> usize {
        let mut served = vec![0.0; self.threshold.len()];
        for r in q {
            for (acc, d) in served.iter_mut().zip(&self.demand[r]) {
                *acc += d;
            }
        }
        served.iter().zip(&self.threshold).filter(|(a, t)| *a >= *t).count()
    }

    pub fn is_cover<I: IntoIterator<Item = usize> + Clone>(&self, q: I) -> bool {
        self.satisfied_count(q) >= self.required
    }
}

/// Single-scenario copy whose demand is the per-request mean.
pub fn mean_scenario(inst: &Instance) -> Instance {
    if inst.n_scenarios() == 1 {
        return inst.clone();
    }
    let ns = inst.n_scenarios() as f64;
    let demand = (0..inst.n_requests())
        .map(|r| vec![inst.demands(r).iter().sum::<f64>() / ns])
        .collect();
    inst.with_demand(demand).expect("shape preserved")
}

/// Table-5 style evaluation of a solution on the instance's scenarios.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub nodes: usize,
    pub theta: f64,
    pub rho: f64,
    pub design_cost: f64,
    pub nbar: f64,
    pub dbar: f64,
    pub rhobar: f64,
    pub infeasible: bool,
}

pub fn evaluate_metrics(inst: &Instance, sol: &TspGlSolution) -> MetricsRow {
    let ns = inst.n_scenarios();
    let mut dbar = 0.0;
    let mut unmet = 0usize;
    for s in 0..ns {
        let total = inst.scenario_total(s);
        let served: f64 = sol.served.iter().map(|&r| inst.demand(r, s)).sum();
        if total > 0.0 {
            dbar += served / total;
        }
        if !scenario_satisfied(inst, &sol.served, s) {
            unmet += 1;
        }
    }
    let rhobar = if ns > 0 { unmet as f64 / ns as f64 } else { 0.0 };
    MetricsRow {
        nodes: inst.n_nodes(),
        theta: inst.theta(),
        rho: inst.rho(),
        design_cost: sol.design_cost,
        nbar: sol.visited().len() as f64 / inst.n_nodes() as f64,
        dbar: if ns > 0 { dbar / ns as f64 } else { 0.0 },
        rhobar,
        infeasible: rhobar > inst.rho() + SERVICE_TOL,
    }
}

pub fn write_metrics_csv<W: Write>(w: W, rows: &[MetricsRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

/// Parameters of the random instance generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub n_nodes: usize,
    pub n_requests: usize,
    pub n_scenarios: usize,
    pub theta: f64,
    pub rho: f64,
    pub alpha: f64,
    pub seed: u64,
    pub p_present: f64,
    pub d_lo: u32,
    pub d_hi: u32,
    /// Coordinates are drawn uniformly from `[0, coord_max]^2`.
    pub coord_max: f64,
    pub compulsory_fraction: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            n_nodes: 10,
            n_requests: 10,
            n_scenarios: 5,
            theta: 0.9,
            rho: 0.1,
            alpha: 0.25,
            seed: 0,
            p_present: 0.8,
            d_lo: 1,
            d_hi: 10,
            coord_max: 100.0,
            compulsory_fraction: 0.2,
        }
    }
}

impl GeneratorConfig {
    fn check(&self, n: usize) -> Result<()> {
        let bad = |m: String| Err(Error::Parameter(m));
        if n < 3 {
            return bad(format!("need at least 3 nodes, got {n}"));
        }
        if self.n_requests == 0 || self.n_requests > n * (n - 1) {
            return bad(format!("n_requests must be in 1..={}", n * (n - 1)));
        }
        if self.n_scenarios == 0 {
            return bad("n_scenarios must be positive".into());
        }
        for (name, v) in [("theta", self.theta), ("rho", self.rho), ("alpha", self.alpha)] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} = {v} outside [0, 1]"));
            }
        }
        if !(self.p_present > 0.0 && self.p_present <= 1.0) {
            return bad(format!("p_present = {} outside (0, 1]", self.p_present));
        }
        if self.d_lo == 0 || self.d_lo > self.d_hi {
            return bad(format!("demand range {}..={} invalid", self.d_lo, self.d_hi));
        }
        if !(self.compulsory_fraction > 0.0 && self.compulsory_fraction <= 1.0) {
            return bad("compulsory_fraction outside (0, 1]".into());
        }
        Ok(())
    }
}

/// Random instance with uniform planar coordinates.
pub fn generate_instance(cfg: &GeneratorConfig) -> Result<Instance> {
    cfg.check(cfg.n_nodes)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let coords: Vec<(f64, f64)> = (0..cfg.n_nodes)
        .map(|_| {
            let x = rng.gen_range(0.0..=cfg.coord_max);
            let y = rng.gen_range(0.0..=cfg.coord_max);
            ((x * 100.0_f64).round() / 100.0, (y * 100.0_f64).round() / 100.0)
        })
        .collect();
    build_on_coords(coords, cfg, &mut rng)
}

/// Random compulsory set, requests and demand on fixed coordinates (for
/// example a TSPLIB point set). `cfg.n_nodes` is ignored.
pub fn generate_on_coords(coords: Vec<(f64, f64)>, cfg: &GeneratorConfig) -> Result<Instance> {
    cfg.check(coords.len())?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    build_on_coords(coords, cfg, &mut rng)
}

fn build_on_coords(coords: Vec<(f64, f64)>, cfg: &GeneratorConfig, rng: &mut ChaCha8Rng) -> Result<Instance> {
    let n = coords.len();
    let raw: Vec<f64> = coords
        .iter()
        .flat_map(|&a| coords.iter().map(move |&b| (a, b)))
        .enumerate()
        .map(|(idx, (a, b))| if idx / n == idx % n { 0.0 } else { Rounding::Euc2d.distance(a, b).max(1.0) })
        .collect();
    let closed = shortest_path_closure(n, &raw);
    let design: Vec<Vec<f64>> = closed.chunks(n).map(<[f64]>::to_vec).collect();

    let n_comp = ((cfg.compulsory_fraction * n as f64).ceil() as usize).clamp(1, n);
    let compulsory = sample(rng, n, n_comp).into_vec();

    let mut pairs: Vec<Request> = sample(rng, n * (n - 1), cfg.n_requests)
        .into_iter()
        .map(|idx| {
            let h = idx / (n - 1);
            let mut k = idx % (n - 1);
            if k >= h {
                k += 1;
            }
            Request::new(h, k)
        })
        .collect();
    pairs.sort_unstable();

    let ns = cfg.n_scenarios;
    let draw = |rng: &mut ChaCha8Rng| rng.gen_range(cfg.d_lo..=cfg.d_hi) as f64;
    let mut demand: Vec<Vec<f64>> = pairs
        .iter()
        .map(|_| (0..ns).map(|_| if rng.gen_bool(cfg.p_present) { draw(rng) } else { 0.0 }).collect())
        .collect();
    for row in demand.iter_mut() {
        if row.iter().all(|d| *d == 0.0) {
            let s = rng.gen_range(0..ns);
            row[s] = draw(rng);
        }
    }
    for s in 0..ns {
        if demand.iter().all(|row| row[s] == 0.0) {
            let r = rng.gen_range(0..demand.len());
            demand[r][s] = draw(rng);
        }
    }

    Instance::from_parts(InstanceParts {
        n,
        compulsory,
        design,
        travel: None,
        coords: Some(coords),
        rounding: Rounding::Euc2d,
        requests: pairs.into_iter().zip(demand).collect(),
        alpha: cfg.alpha,
        theta: cfg.theta,
        rho: cfg.rho,
    })
}
