//! Benders decomposition of the TSP-GL: the master picks a tour and one
//! routing estimate per origin, the flow subproblems price the tour.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use log::{debug, warn};

use super::tsp::{chosen_edges, degree_model, find_subtours, subtour_cut};
use super::{BoundEstimate, SubInstance};
use crate::error::{Error, Result};
use crate::model::{cycle_from_edges, Edge, NodeId, TspGlSolution};
use crate::mp::{self, Cmp, Constraint, LinearModel, Limits, Sense, SolveStatus, VarId};

/// Cheapest direction around the cycle `tour` from `h` to `k` for request
/// index `r`; ties go forward along `tour`.
pub fn primal_subproblem(sub: &SubInstance, tour: &[NodeId], r: usize) -> Result<(Vec<NodeId>, f64)> {
    let q = sub.inst.requests()[r];
    let len = tour.len();
    let pos = |v: NodeId| tour.iter().position(|&t| t == v);
    let (Some(ph), Some(pk)) = (pos(q.h), pos(q.k)) else {
        return Err(Error::Contract(format!("request {q} has an endpoint off the tour")));
    };
    let walk = |step: usize| {
        let mut path = vec![tour[ph]];
        let mut cost = 0.0;
        let mut p = ph;
        while p != pk {
            let next = (p + step) % len;
            cost += sub.qtilde.q(tour[p], tour[next], r);
            path.push(tour[next]);
            p = next;
        }
        (path, cost)
    };
    let fwd = walk(1);
    let bwd = walk(len - 1);
    Ok(if bwd.1 < fwd.1 { bwd } else { fwd })
}

/// Optimal dual of the flow subproblem of one request.
#[derive(Clone, Debug, PartialEq)]
pub struct BendersDuals {
    pub request: usize,
    /// `p_i` for each node of the sub-instance, in `sub.nodes` order.
    pub p: Vec<f64>,
    /// Nonzero `λ_ij`.
    pub lambda: BTreeMap<(NodeId, NodeId), f64>,
}

impl BendersDuals {
    pub fn lambda_bar(&self, e: Edge) -> f64 {
        self.lambda.get(&(e.0, e.1)).copied().unwrap_or(0.0) + self.lambda.get(&(e.1, e.0)).copied().unwrap_or(0.0)
    }

    fn p_of(&self, sub: &SubInstance, v: NodeId) -> f64 {
        self.p[sub.nodes.binary_search(&v).expect("node of sub-instance")]
    }

    /// `p_h - p_k`.
    pub fn potential_gap(&self, sub: &SubInstance) -> f64 {
        let q = sub.inst.requests()[self.request];
        self.p_of(sub, q.h) - self.p_of(sub, q.k)
    }

    /// Dual objective `p_h - p_k - Σ λ̄ x̄` at the tour `edges`.
    pub fn objective(&self, sub: &SubInstance, edges: &[Edge]) -> f64 {
        self.potential_gap(sub) - edges.iter().map(|&e| self.lambda_bar(e)).sum::<f64>()
    }

    /// Largest violation of `p_i - p_j - λ_ij ≤ q̃_ij`, `λ ≥ 0`, `p ≥ 0`.
    pub fn max_violation(&self, sub: &SubInstance) -> f64 {
        let mut worst: f64 = 0.0;
        for (a, &i) in sub.nodes.iter().enumerate() {
            worst = worst.max(-self.p[a]);
            for (b, &j) in sub.nodes.iter().enumerate() {
                if a != b {
                    let l = self.lambda.get(&(i, j)).copied().unwrap_or(0.0);
                    worst = worst.max(-l);
                    worst = worst.max(self.p[a] - self.p[b] - l - sub.qtilde.q(i, j, self.request));
                }
            }
        }
        worst
    }
}

/// Fast dual: `p_i` is the tour distance from `i` to `k`, `λ` is zero on tour
/// arcs and the smallest feasible value elsewhere. Checked against the
/// primal value; falls back to [`dual_subproblem_lp`] if it does not match.
pub fn dual_subproblem(sub: &SubInstance, tour: &[NodeId], r: usize) -> Result<BendersDuals> {
    let q = sub.inst.requests()[r];
    let (_, z) = primal_subproblem(sub, tour, r)?;
    let len = tour.len();
    let pk = tour.iter().position(|&t| t == q.k).expect("checked by primal_subproblem");
    let mut dist: BTreeMap<NodeId, f64> = BTreeMap::new();
    dist.insert(q.k, 0.0);
    // distances to k walking backwards and forwards around the cycle
    let mut back = vec![0.0; len];
    let mut fwd = vec![0.0; len];
    for s in 1..len {
        let p = (pk + len - s) % len;
        let next = (p + 1) % len;
        back[s] = back[s - 1] + sub.qtilde.q(tour[p], tour[next], r);
        let p2 = (pk + s) % len;
        let prev = (p2 + len - 1) % len;
        fwd[s] = fwd[s - 1] + sub.qtilde.q(tour[p2], tour[prev], r);
    }
    for s in 1..len {
        let p = (pk + len - s) % len;
        dist.insert(tour[p], back[s].min(fwd[len - s]));
    }
    let p: Vec<f64> = sub.nodes.iter().map(|v| dist.get(v).copied().unwrap_or(0.0)).collect();
    let edges: BTreeSet<Edge> = crate::model::tour_edges(tour).into_iter().collect();
    let mut lambda = BTreeMap::new();
    for (a, &i) in sub.nodes.iter().enumerate() {
        for (b, &j) in sub.nodes.iter().enumerate() {
            if a == b || edges.contains(&Edge::new(i, j)) {
                continue;
            }
            let l = p[a] - p[b] - sub.qtilde.q(i, j, r);
            if l > 0.0 {
                lambda.insert((i, j), l);
            }
        }
    }
    let duals = BendersDuals { request: r, p, lambda };
    let tol = 1e-9 * z.abs().max(1.0);
    let edge_list: Vec<Edge> = edges.into_iter().collect();
    if (duals.objective(sub, &edge_list) - z).abs() > tol || duals.max_violation(sub) > tol {
        warn!("fast Benders duals inconsistent for request {}; solving the dual LP", q);
        return dual_subproblem_lp(sub, &edge_list, r);
    }
    Ok(duals)
}

/// Reference dual: solves the dual flow LP for the tour edges `xbar`.
pub fn dual_subproblem_lp(sub: &SubInstance, xbar: &[Edge], r: usize) -> Result<BendersDuals> {
    let q = sub.inst.requests()[r];
    let mut m = LinearModel::new(Sense::Maximize);
    let pv: Vec<VarId> = sub
        .nodes
        .iter()
        .map(|&i| {
            let c = if i == q.h {
                1.0
            } else if i == q.k {
                -1.0
            } else {
                0.0
            };
            m.add_var(format!("p_{i}"), 0.0, f64::INFINITY, c)
        })
        .collect();
    let chosen: BTreeSet<Edge> = xbar.iter().copied().collect();
    let mut lv = Vec::new();
    for (a, &i) in sub.nodes.iter().enumerate() {
        for (b, &j) in sub.nodes.iter().enumerate() {
            if a == b {
                continue;
            }
            let c = if chosen.contains(&Edge::new(i, j)) { -1.0 } else { 0.0 };
            let l = m.add_var(format!("l_{i}_{j}"), 0.0, f64::INFINITY, c);
            m.add_constr(
                format!("ds_{i}_{j}"),
                vec![(pv[a], 1.0), (pv[b], -1.0), (l, -1.0)],
                Cmp::Le,
                sub.qtilde.q(i, j, r),
            );
            lv.push(((i, j), l));
        }
    }
    let out = mp::solve_lp(&m, Limits::default())?;
    if out.status != SolveStatus::Optimal {
        return Err(Error::Contract(format!("dual subproblem of {q} is {:?}; tour does not connect it", out.status)));
    }
    let p = pv.iter().map(|&v| out.value(v)).collect();
    let lambda = lv.into_iter().map(|(a, v)| (a, out.value(v))).filter(|(_, l)| *l > 0.0).collect();
    Ok(BendersDuals { request: r, p, lambda })
}

/// `η^h + Σ_e coeffs_e x_e ≥ rhs`.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimalityCut {
    pub origin: NodeId,
    pub coeffs: BTreeMap<Edge, f64>,
    pub rhs: f64,
}

impl OptimalityCut {
    /// Left-hand side minus right-hand side at `(edges, eta)`.
    pub fn slack(&self, edges: &[Edge], eta: f64) -> f64 {
        eta + edges.iter().map(|e| self.coeffs.get(e).copied().unwrap_or(0.0)).sum::<f64>() - self.rhs
    }

    fn to_constraint(&self, eta: VarId, edge_vars: &[(Edge, VarId)]) -> Constraint {
        let mut coeffs = vec![(eta, 1.0)];
        for (e, v) in edge_vars {
            if let Some(c) = self.coeffs.get(e) {
                coeffs.push((*v, *c));
            }
        }
        Constraint::new(format!("opt_{}", self.origin), coeffs, Cmp::Ge, self.rhs)
    }
}

/// Sums the cuts of all requests with origin `h`.
pub fn aggregated_optimality_cut(sub: &SubInstance, duals: &[BendersDuals], h: NodeId) -> OptimalityCut {
    let mut coeffs: BTreeMap<Edge, f64> = BTreeMap::new();
    let mut rhs = 0.0;
    for d in duals.iter().filter(|d| sub.inst.requests()[d.request].h == h) {
        rhs += d.potential_gap(sub);
        for &(i, j) in d.lambda.keys() {
            let e = Edge::new(i, j);
            coeffs.entry(e).or_insert(0.0);
        }
    }
    for (e, c) in coeffs.iter_mut() {
        *c = duals.iter().filter(|d| sub.inst.requests()[d.request].h == h).map(|d| d.lambda_bar(*e)).sum();
    }
    coeffs.retain(|_, c| *c != 0.0);
    OptimalityCut { origin: h, coeffs, rhs }
}

/// Subtour cuts cached by node set. A cut found on `V` stays valid on every
/// superset of `V`.
#[derive(Debug, Default)]
pub struct CutPool {
    cache: Mutex<BTreeMap<Vec<NodeId>, BTreeSet<Vec<NodeId>>>>,
    log: Mutex<Option<BufWriter<File>>>,
}

impl CutPool {
    pub fn new() -> Self {
        Self::default()
    }

    /// Also writes one line per generated cut to `path`.
    pub fn with_log(path: impl AsRef<Path>) -> Result<Self> {
        Ok(Self { log: Mutex::new(Some(BufWriter::new(File::create(path)?))), ..Self::default() })
    }

    pub fn record(&self, nodes: &[NodeId], subtours: impl IntoIterator<Item = Vec<NodeId>>) {
        let mut cache = self.cache.lock().expect("cut pool poisoned");
        let entry = cache.entry(nodes.to_vec()).or_default();
        for s in subtours {
            if s.len() >= 3 && s.len() < nodes.len() {
                entry.insert(s);
            }
        }
    }

    /// Every cached subtour set usable on `nodes`.
    pub fn lookup(&self, nodes: &[NodeId]) -> Vec<Vec<NodeId>> {
        let cache = self.cache.lock().expect("cut pool poisoned");
        let mut out = BTreeSet::new();
        for (key, sets) in cache.iter() {
            if key.iter().all(|v| nodes.binary_search(v).is_ok()) {
                out.extend(sets.iter().filter(|s| s.len() < nodes.len()).cloned());
            }
        }
        out.into_iter().collect()
    }

    pub fn len(&self) -> usize {
        self.cache.lock().expect("cut pool poisoned").values().map(BTreeSet::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn log(&self, line: impl FnOnce() -> String) {
        let mut guard = self.log.lock().expect("cut log poisoned");
        if let Some(w) = guard.as_mut() {
            let _ = writeln!(w, "{}", line());
        }
    }

    fn log_feasibility(&self, set: &[NodeId]) {
        self.log(|| format!("feasibility,{}", set.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")));
    }

    fn log_optimality(&self, cut: &OptimalityCut) {
        self.log(|| {
            let terms: Vec<String> = cut.coeffs.iter().map(|(e, c)| format!("{}-{}:{c}", e.0, e.1)).collect();
            format!("optimality,h={},rhs={},{}", cut.origin, cut.rhs, terms.join(" "))
        });
    }

    pub fn flush(&self) {
        if let Some(w) = self.log.lock().expect("cut log poisoned").as_mut() {
            let _ = w.flush();
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DualMode {
    #[default]
    Fast,
    Lp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BendersStatus {
    Optimal,
    /// Stopped because the master bound exceeded the incumbent.
    Pruned,
    TimeLimit,
}

#[derive(Clone, Debug)]
pub struct BendersOutcome {
    pub status: BendersStatus,
    /// Best tour seen; optimal when `status` is `Optimal`.
    pub solution: Option<TspGlSolution>,
    /// Largest master bound reached.
    pub lower_bound: f64,
    pub master_objectives: Vec<f64>,
    pub iterations: usize,
}

/// Solves the TSP-GL of `sub`. `warm` supplies the TSP tour and subtours from
/// [`super::cover_bounds`]; the run stops early once the master bound exceeds
/// `incumbent_ub`.
pub fn benders_solve_tspgl(
    sub: &SubInstance,
    warm: Option<&BoundEstimate>,
    incumbent_ub: f64,
    limits: Limits,
    pool: &CutPool,
    mode: DualMode,
) -> Result<BendersOutcome> {
    sub.check()?;
    let deadline = limits.time_limit.map(|t| Instant::now() + Duration::from_secs_f64(t));
    let inst = sub.inst;
    let alpha = sub.alpha();
    let (mut master, edge_vars) = degree_model(&sub.nodes, &|i, j| inst.design(i, j), 1.0 - alpha);
    let origins = sub.origins();
    let eta: BTreeMap<NodeId, VarId> =
        origins.iter().map(|&h| (h, master.add_var(format!("eta_{h}"), 0.0, f64::INFINITY, alpha))).collect();

    let mut found_subtours: Vec<Vec<NodeId>> = Vec::new();
    let mut cached = pool.lookup(&sub.nodes);
    if let Some(w) = warm {
        cached.extend(w.subtours.iter().filter(|s| s.len() < sub.nodes.len()).cloned());
        found_subtours.extend(w.subtours.iter().cloned());
    }
    cached.sort();
    cached.dedup();
    for s in &cached {
        master.push(subtour_cut(s, &edge_vars));
    }

    let duals_for = |tour: &[NodeId]| -> Result<Vec<BendersDuals>> {
        sub.requests
            .iter()
            .map(|&r| match mode {
                DualMode::Fast => dual_subproblem(sub, tour, r),
                DualMode::Lp => dual_subproblem_lp(sub, &crate::model::tour_edges(tour), r),
            })
            .collect()
    };
    let add_opt_cuts = |master: &mut LinearModel, duals: &[BendersDuals], only: Option<&BTreeSet<NodeId>>| {
        for &h in &origins {
            if only.is_some_and(|s| !s.contains(&h)) {
                continue;
            }
            let cut = aggregated_optimality_cut(sub, duals, h);
            pool.log_optimality(&cut);
            master.push(cut.to_constraint(eta[&h], &edge_vars));
        }
    };

    let mut best: Option<TspGlSolution> = None;
    if let Some(w) = warm.filter(|w| w.tsp_tour.len() == sub.nodes.len()) {
        let sol = sub.solution_for_tour(&w.tsp_tour)?;
        let duals = duals_for(&w.tsp_tour)?;
        add_opt_cuts(&mut master, &duals, None);
        best = Some(sol);
    }

    let finish = |status, best: Option<TspGlSolution>, lb: f64, objs: Vec<f64>, it: usize, found: Vec<Vec<NodeId>>| {
        pool.record(&sub.nodes, found);
        pool.flush();
        BendersOutcome { status, solution: best, lower_bound: lb, master_objectives: objs, iterations: it }
    };

    let mut lb = f64::NEG_INFINITY;
    let mut objs = Vec::new();
    let mut iterations = 0;
    loop {
        iterations += 1;
        let out = mp::solve_mip(&master, Limits { time_limit: deadline.map(mp::remaining_secs), ..limits })?;
        let (Some(obj), Some(x)) = (out.objective, out.values.as_deref()) else {
            if out.status == SolveStatus::TimeLimit {
                return Ok(finish(BendersStatus::TimeLimit, best, lb, objs, iterations, found_subtours));
            }
            return Err(Error::Backend(format!("Benders master is {:?}", out.status)));
        };
        let bound = out.best_bound.unwrap_or(obj).min(obj);
        lb = lb.max(bound);
        objs.push(obj);
        if out.status == SolveStatus::TimeLimit {
            return Ok(finish(BendersStatus::TimeLimit, best, lb, objs, iterations, found_subtours));
        }
        if lb > incumbent_ub + 1e-9 * incumbent_ub.abs().max(1.0) {
            debug!("Benders pruned: master bound {lb} above incumbent {incumbent_ub}");
            return Ok(finish(BendersStatus::Pruned, best, lb, objs, iterations, found_subtours));
        }
        let edges = chosen_edges(&edge_vars, x);
        let subs = find_subtours(&sub.nodes, &edges);
        if !subs.is_empty() {
            for s in &subs {
                pool.log_feasibility(s);
                master.push(subtour_cut(s, &edge_vars));
            }
            found_subtours.extend(subs);
            continue;
        }
        let tour = super::tsp::canonical_cycle(
            &cycle_from_edges(&edges).ok_or_else(|| Error::Backend("master returned no cycle".into()))?,
        );
        let sol = sub.solution_for_tour(&tour)?;
        let duals = duals_for(&tour)?;
        if best.as_ref().is_none_or(|b| sol.objective < b.objective) {
            best = Some(sol);
        }
        let best_val = best.as_ref().map(|b| b.objective).unwrap_or(f64::INFINITY);
        let tol = 1e-9 * best_val.abs().max(1.0);
        if obj >= best_val - tol {
            return Ok(finish(BendersStatus::Optimal, best, lb.max(obj.min(best_val)), objs, iterations, found_subtours));
        }
        let mut violated = BTreeSet::new();
        for &h in &origins {
            let z_h: f64 = duals.iter().filter(|d| inst.requests()[d.request].h == h).map(|d| d.potential_gap(sub)).sum();
            if x[eta[&h].0] < z_h - tol {
                violated.insert(h);
            }
        }
        if violated.is_empty() {
            warn!("Benders: no violated optimality cut but master {obj} < best {best_val}; accepting");
            return Ok(finish(BendersStatus::Optimal, best, lb, objs, iterations, found_subtours));
        }
        add_opt_cuts(&mut master, &duals, Some(&violated));
        if deadline.is_some_and(|d| mp::remaining_secs(d) <= 0.0) {
            return Ok(finish(BendersStatus::TimeLimit, best, lb, objs, iterations, found_subtours));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covers::FeasibilityCover;
    use crate::model::fixtures::d1;
    use crate::model::tour_edges;
    use crate::scenarios::deterministic_routing_costs;
    use crate::tspgl::cover_bounds;

    #[test]
    fn d1_primal_and_duals() {
        let inst = d1();
        let qt = deterministic_routing_costs(&inst).unwrap();
        let sub = SubInstance::new(&inst, &qt, &FeasibilityCover::new(&inst, [0]));
        let (path, z) = primal_subproblem(&sub, &[0, 1, 3], 0).unwrap();
        assert_eq!((path, z), (vec![1, 3], 2.0));
        let d = dual_subproblem(&sub, &[0, 1, 3], 0).unwrap();
        assert!((d.objective(&sub, &tour_edges(&[0, 1, 3])) - 2.0).abs() < 1e-12);
        assert!(d.lambda.is_empty());
        let lp = dual_subproblem_lp(&sub, &tour_edges(&[0, 1, 3]), 0).unwrap();
        assert!((lp.objective(&sub, &tour_edges(&[0, 1, 3])) - 2.0).abs() < 1e-9);
    }

    #[test]
    fn endpoint_off_tour_is_reported() {
        let inst = d1();
        let qt = deterministic_routing_costs(&inst).unwrap();
        let sub = SubInstance::new(&inst, &qt, &FeasibilityCover::new(&inst, [0]));
        assert!(primal_subproblem(&sub, &[0, 1, 2], 0).is_err());
    }

    #[test]
    fn d1_benders() {
        let inst = d1();
        let qt = deterministic_routing_costs(&inst).unwrap();
        let pool = CutPool::new();
        for (cover, want) in [(0usize, 5.0), (1, 6.5)] {
            let sub = SubInstance::new(&inst, &qt, &FeasibilityCover::new(&inst, [cover]));
            let warm = cover_bounds(&sub, Limits::default()).unwrap();
            for mode in [DualMode::Fast, DualMode::Lp] {
                for w in [Some(&warm), None] {
                    let out = benders_solve_tspgl(&sub, w, f64::INFINITY, Limits::default(), &pool, mode).unwrap();
                    assert_eq!(out.status, BendersStatus::Optimal);
                    let sol = out.solution.unwrap();
                    assert!((sol.objective - want).abs() < 1e-9, "cover {cover}: {}", sol.objective);
                    sol.check_structure(&inst).unwrap();
                }
            }
        }
    }

    #[test]
    fn early_abort_above_incumbent() {
        let inst = d1();
        let qt = deterministic_routing_costs(&inst).unwrap();
        let sub = SubInstance::new(&inst, &qt, &FeasibilityCover::new(&inst, [1]));
        let out = benders_solve_tspgl(&sub, None, 5.0, Limits::default(), &CutPool::new(), DualMode::Fast).unwrap();
        assert_eq!(out.status, BendersStatus::Pruned);
        assert!(out.lower_bound > 5.0);
    }

    #[test]
    fn cut_pool_reuses_subsets() {
        let pool = CutPool::new();
        pool.record(&[0, 1, 2, 3, 4, 5], vec![vec![0, 1, 2], vec![3, 4, 5]]);
        assert_eq!(pool.lookup(&[0, 1, 2, 3, 4, 5, 6]).len(), 2);
        assert!(pool.lookup(&[0, 1, 2, 3, 4]).is_empty());
        pool.record(&[0, 1, 2], vec![vec![0, 1, 2]]);
        assert_eq!(pool.len(), 2);
    }

    #[test]
    fn single_request_cut_is_disaggregated() {
        let inst = d1();
        let qt = deterministic_routing_costs(&inst).unwrap();
        let sub = SubInstance::new(&inst, &qt, &FeasibilityCover::new(&inst, [1]));
        let tour = [0, 2, 4];
        let d = dual_subproblem(&sub, &tour, 1).unwrap();
        let cut = aggregated_optimality_cut(&sub, std::slice::from_ref(&d), 2);
        assert_eq!(cut.rhs, d.potential_gap(&sub));
        assert!(cut.slack(&tour_edges(&tour), 2.0).abs() < 1e-12);
    }
}
