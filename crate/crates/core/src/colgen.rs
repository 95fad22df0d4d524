//! Column generation over feasibility covers: restricted master LP, pricing
//! IP and the Lagrangian bound.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use crate::covers::{CoverAlgebra, FeasibilityCover, RemovalOrder};
use crate::error::Result;
use crate::model::{Edge, Instance, NodeId};
use crate::mp::{self, Cmp, ConstrId, Constraint, LinearModel, Limits, Sense, SolveStatus, VarId, RC_TOL};
use crate::scenarios::{required_scenario_count, RoutingCostTable, SERVICE_TOL};
use crate::tspgl::pad_nodes;

/// RMP duals.
#[derive(Clone, Debug, PartialEq)]
pub struct DualPrices {
    /// Design-row dual per node.
    pub iota: Vec<f64>,
    /// Flow-row dual at the origin row of each request.
    pub eps_h: Vec<f64>,
    /// Flow-row dual at the destination row of each request.
    pub eps_k: Vec<f64>,
    /// Convexity-row dual.
    pub beta: f64,
}

impl DualPrices {
    pub fn zero(inst: &Instance) -> Self {
        Self { iota: vec![0.0; inst.n_nodes()], eps_h: vec![0.0; inst.n_requests()], eps_k: vec![0.0; inst.n_requests()], beta: 0.0 }
    }
}

/// `2 Σ ι_i l(i) + Σ r (ε_h - ε_k) - β` for a column with node set `nodes`.
pub fn reduced_cost(nodes: &[NodeId], requests: &[usize], duals: &DualPrices) -> f64 {
    2.0 * nodes.iter().map(|&i| duals.iota[i]).sum::<f64>()
        + requests.iter().map(|&r| duals.eps_h[r] - duals.eps_k[r]).sum::<f64>()
        - duals.beta
}

/// Node set used for a cover's column (`N'(Q)`, padded to a triangle).
pub fn column_nodes(inst: &Instance, cover: &FeasibilityCover) -> Vec<NodeId> {
    pad_nodes(inst, cover.nodes())
}

#[derive(Clone, Debug)]
pub struct Column {
    pub cover: FeasibilityCover,
    pub nodes: Vec<NodeId>,
}

/// Covers in the RMP plus the branched set Φ.
#[derive(Clone, Debug)]
pub struct ColumnPool {
    columns: Vec<Column>,
    index: HashMap<Vec<usize>, usize>,
    phi: BTreeSet<Vec<usize>>,
}

impl ColumnPool {
    /// Pool holding only `χ_D`.
    pub fn new(inst: &Instance) -> Self {
        let mut p = Self { columns: Vec::new(), index: HashMap::new(), phi: BTreeSet::new() };
        p.add(inst, FeasibilityCover::all(inst));
        p
    }

    /// Adds a column; false if the cover is already present.
    pub fn add(&mut self, inst: &Instance, cover: FeasibilityCover) -> bool {
        if self.index.contains_key(cover.requests()) {
            return false;
        }
        self.index.insert(cover.requests().to_vec(), self.columns.len());
        let nodes = column_nodes(inst, &cover);
        self.columns.push(Column { cover, nodes });
        true
    }

    pub fn contains(&self, cover: &FeasibilityCover) -> bool {
        self.index.contains_key(cover.requests())
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn is_branched(&self, cover: &FeasibilityCover) -> bool {
        self.phi.contains(cover.requests())
    }

    /// Branched covers (request index sets).
    pub fn phi(&self) -> impl Iterator<Item = &Vec<usize>> {
        self.phi.iter()
    }

    pub fn phi_len(&self) -> usize {
        self.phi.len()
    }

    /// Fixes `χ_Q = 0` and excludes `Q` (and its supersets) from pricing.
    /// Returns false if `Q` was already branched on.
    pub fn add_branching_cut(&mut self, cover: &FeasibilityCover) -> bool {
        self.phi.insert(cover.requests().to_vec())
    }
}

/// The restricted master LP with handles to its rows and columns.
#[derive(Clone, Debug)]
pub struct Rmp {
    pub model: LinearModel,
    /// `χ_Q`, parallel to the pool's columns.
    pub chi: Vec<VarId>,
    /// Empty column with a prohibitive cost, keeping the LP feasible when
    /// every real column is branched away.
    pub artificial: VarId,
    pub convexity: ConstrId,
    pub design: Vec<ConstrId>,
    pub flow_h: Vec<ConstrId>,
    pub flow_k: Vec<ConstrId>,
}

/// Cost of the artificial column: above twice any cover's TSP-GL value.
pub fn artificial_cost(inst: &Instance, qt: &RoutingCostTable) -> f64 {
    let n = inst.n_nodes();
    let mut max_c: f64 = 0.0;
    let mut max_t: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            max_c = max_c.max(inst.design(i, j));
            max_t = max_t.max(inst.travel(i, j));
        }
    }
    let a = inst.alpha();
    let routing: f64 = qt.weights().iter().sum::<f64>() * n as f64 * max_t;
    2.0 * ((1.0 - a) * n as f64 * max_c + a * routing) + 1.0
}

pub fn build_rmp(inst: &Instance, pool: &ColumnPool, qt: &RoutingCostTable) -> Rmp {
    let n = inst.n_nodes();
    let a = inst.alpha();
    let mut m = LinearModel::new(Sense::Minimize);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            edges.push((Edge(i, j), m.add_var(format!("x_{i}_{j}"), 0.0, 1.0, (1.0 - a) * inst.design(i, j))));
        }
    }
    let chi: Vec<VarId> = pool
        .columns
        .iter()
        .enumerate()
        .map(|(c, col)| {
            let ub = if pool.is_branched(&col.cover) { 0.0 } else { f64::INFINITY };
            m.add_var(format!("chi_{c}"), 0.0, ub, 0.0)
        })
        .collect();
    let artificial = m.add_var("chi_artificial", 0.0, f64::INFINITY, artificial_cost(inst, qt));

    let mut conv: Vec<(VarId, f64)> = chi.iter().map(|&v| (v, 1.0)).collect();
    conv.push((artificial, 1.0));
    let convexity = m.add_constr("convexity", conv, Cmp::Eq, 1.0);

    let design = (0..n)
        .map(|i| {
            let mut row: Vec<(VarId, f64)> = edges.iter().filter(|(e, _)| e.touches(i)).map(|(_, v)| (*v, 1.0)).collect();
            for (col, &v) in pool.columns.iter().zip(&chi) {
                if col.nodes.binary_search(&i).is_ok() {
                    row.push((v, -2.0));
                }
            }
            m.add_constr(format!("design_{i}"), row, Cmp::Eq, 0.0)
        })
        .collect();

    let mut flow_h = Vec::with_capacity(inst.n_requests());
    let mut flow_k = Vec::with_capacity(inst.n_requests());
    for (r, q) in inst.requests().iter().enumerate() {
        let mut balance: Vec<Vec<(VarId, f64)>> = vec![Vec::new(); n];
        for &(e, xv) in &edges {
            for (i, j) in [(e.0, e.1), (e.1, e.0)] {
                let f = m.add_var(format!("f{r}_{i}_{j}"), 0.0, f64::INFINITY, a * qt.q(i, j, r));
                m.add_constr(format!("cap{r}_{i}_{j}"), vec![(xv, 1.0), (f, -1.0)], Cmp::Ge, 0.0);
                balance[i].push((f, 1.0));
                balance[j].push((f, -1.0));
            }
        }
        for (col, &v) in pool.columns.iter().zip(&chi) {
            if col.cover.request_incidence(r) {
                balance[q.h].push((v, -1.0));
                balance[q.k].push((v, 1.0));
            }
        }
        for (i, row) in balance.into_iter().enumerate() {
            let id = m.add_constr(format!("flow{r}_{i}"), row, Cmp::Eq, 0.0);
            if i == q.h {
                flow_h.push(id);
            } else if i == q.k {
                flow_k.push(id);
            }
        }
    }
    Rmp { model: m, chi, artificial, convexity, design, flow_h, flow_k }
}

#[derive(Clone, Debug)]
pub struct RmpSolution {
    pub objective: f64,
    pub chi: Vec<f64>,
    pub artificial: f64,
    pub duals: DualPrices,
}

/// Solves the RMP; `None` unless it reached LP optimality.
pub fn solve_rmp(rmp: &Rmp, limits: Limits) -> Result<Option<RmpSolution>> {
    let out = mp::solve_lp(&rmp.model, limits)?;
    if out.status != SolveStatus::Optimal || out.duals.is_none() {
        return Ok(None);
    }
    let duals = DualPrices {
        iota: rmp.design.iter().map(|&c| out.dual(c)).collect(),
        eps_h: rmp.flow_h.iter().map(|&c| out.dual(c)).collect(),
        eps_k: rmp.flow_k.iter().map(|&c| out.dual(c)).collect(),
        beta: out.dual(rmp.convexity),
    };
    Ok(Some(RmpSolution {
        objective: out.objective.unwrap_or(0.0),
        chi: rmp.chi.iter().map(|&v| out.value(v)).collect(),
        artificial: out.value(rmp.artificial),
        duals,
    }))
}

#[derive(Clone, Debug)]
pub struct PricingResult {
    /// New column with negative reduced cost, if any.
    pub cover: Option<FeasibilityCover>,
    /// Objective of the pricing solution; `-inf` when it timed out without one.
    pub objective: f64,
    /// Proven lower bound on the pricing optimum, if the solve produced one.
    pub bound: Option<f64>,
    pub timed_out: bool,
}

fn pricing_model(inst: &Instance, duals: &DualPrices, pool: &ColumnPool) -> (LinearModel, Vec<VarId>, Vec<VarId>) {
    let mut m = LinearModel::new(Sense::Minimize);
    let l: Vec<VarId> = inst
        .nodes()
        .map(|i| {
            let lb = if inst.is_compulsory(i) { 1.0 } else { 0.0 };
            m.add_int_var(format!("l_{i}"), lb, 1.0, 2.0 * duals.iota[i])
        })
        .collect();
    let r: Vec<VarId> = (0..inst.n_requests())
        .map(|q| m.add_binary(format!("r_{q}"), duals.eps_h[q] - duals.eps_k[q]))
        .collect();
    let ns = inst.n_scenarios();
    let gamma: Vec<VarId> = (0..ns).map(|s| m.add_binary(format!("g_{s}"), 0.0)).collect();
    for (q, p) in inst.requests().iter().enumerate() {
        m.add_constr(format!("lh_{q}"), vec![(l[p.h], 1.0), (r[q], -1.0)], Cmp::Ge, 0.0);
        m.add_constr(format!("lk_{q}"), vec![(l[p.k], 1.0), (r[q], -1.0)], Cmp::Ge, 0.0);
    }
    for s in 0..ns {
        let mut row: Vec<(VarId, f64)> = (0..inst.n_requests()).map(|q| (r[q], inst.demand(q, s))).collect();
        row.push((gamma[s], -inst.theta() * inst.scenario_total(s)));
        m.add_constr(format!("service_{s}"), row, Cmp::Ge, -SERVICE_TOL);
    }
    m.add_constr(
        "target",
        gamma.iter().map(|&g| (g, 1.0)).collect(),
        Cmp::Ge,
        required_scenario_count(ns, inst.rho()) as f64,
    );
    m.add_constr("tour_size", l.iter().map(|&v| (v, 1.0)).collect(), Cmp::Ge, 3.0);
    for (c, q) in pool.phi().enumerate() {
        m.add_constr(format!("phi_{c}"), q.iter().map(|&x| (r[x], 1.0)).collect(), Cmp::Le, q.len() as f64 - 1.0);
    }
    (m, l, r)
}

/// Pricing IP. A negative solution is reduced to a minimal cover with
/// `minimal_feasibility_cover`; if that cover is already a column the raw cover is used when
/// it is new. With `minimality_cuts`, non-minimal solutions are cut off
/// lazily instead.
pub fn solve_pricing(
    inst: &Instance,
    duals: &DualPrices,
    pool: &ColumnPool,
    limits: Limits,
    minimality_cuts: bool,
) -> Result<PricingResult> {
    let (mut m, _l, r) = pricing_model(inst, duals, pool);
    let alg = CoverAlgebra::new(inst);
    let selected = |x: &[f64]| -> Vec<usize> { (0..r.len()).filter(|&q| x[r[q].0] > 0.5).collect() };
    let out = if minimality_cuts {
        mp::resolve_with_cuts(&mut m, limits, usize::MAX, |x| {
            let q = selected(x);
            if alg.is_minimal(&q) {
                Vec::new()
            } else {
                vec![Constraint::new("psi", q.iter().map(|&i| (r[i], 1.0)).collect(), Cmp::Le, q.len() as f64 - 1.0)]
            }
        })?
    } else {
        mp::solve_mip(&m, limits)?
    };
    let timed_out = out.status == SolveStatus::TimeLimit || out.cut_incomplete;
    let bound = if out.status == SolveStatus::Infeasible {
        // no column left outside Φ
        Some(f64::INFINITY)
    } else if timed_out {
        out.best_bound.map(|b| b - duals.beta)
    } else {
        out.best_bound.or(out.objective).map(|b| b - duals.beta)
    };
    let (Some(obj), Some(x)) = (out.objective, out.values.as_deref()) else {
        let objective = if timed_out { f64::NEG_INFINITY } else { f64::INFINITY };
        return Ok(PricingResult { cover: None, objective, bound, timed_out });
    };
    let objective = obj - duals.beta;
    if objective >= RC_TOL {
        return Ok(PricingResult { cover: None, objective, bound, timed_out });
    }
    let raw = alg.cover(selected(x));
    let cover = if minimality_cuts {
        Some(raw).filter(|c| !pool.contains(c))
    } else {
        let min = alg.minimal_feasibility_cover(&raw, RemovalOrder::Canonical).ok();
        match min {
            Some(c) if !pool.contains(&c) && !pool.is_branched(&c) => Some(c),
            _ => Some(raw).filter(|c| !pool.contains(c) && !pool.is_branched(c)),
        }
    };
    Ok(PricingResult { cover, objective, bound, timed_out })
}

/// `rmp_obj + min(pricing_obj, 0)`: the Lagrangian bound with convexity
/// multiplier one.
pub fn lagrangian_lower_bound(rmp_obj: f64, pricing_obj: f64) -> f64 {
    rmp_obj + pricing_obj.min(0.0)
}

/// One column-generation round for the iteration log.
#[derive(Clone, Debug, PartialEq)]
pub struct CgLogLine {
    pub iter: usize,
    pub rmp_obj: f64,
    pub pricing_obj: f64,
    pub lb: Option<f64>,
    pub columns: usize,
    pub phi: usize,
}

impl CgLogLine {
    pub const HEADER: &'static str = "iter,rmp_obj,pricing_obj,lb,columns,phi";
}

impl fmt::Display for CgLogLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lb = self.lb.map(|v| v.to_string()).unwrap_or_default();
        write!(f, "{},{},{},{},{},{}", self.iter, self.rmp_obj, self.pricing_obj, lb, self.columns, self.phi)
    }
}
