//! Instance and solution data model.
//!
//! Node ids are dense integers `0..n`. Requests are stored in lexicographic
//! order of `(origin, destination)` and referred to by their index in that
//! order everywhere else in the crate, so iteration orders are reproducible.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub mod file;
pub mod tsplib;

pub use file::{InstanceFile, NodeCoord, RequestRecord, Rounding};

pub type NodeId = usize;

/// Absolute tolerance for the triangle-inequality check.
pub const TRIANGLE_TOL: f64 = 1e-9;

/// An origin-destination pair `(h, k)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Request {
    pub h: NodeId,
    pub k: NodeId,
}

impl Request {
    pub fn new(h: NodeId, k: NodeId) -> Self {
        Self { h, k }
    }
}

impl fmt::Display for Request {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.h, self.k)
    }
}

/// Unordered edge `[i, j]` with `i < j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge(pub NodeId, pub NodeId);

impl Edge {
    pub fn new(a: NodeId, b: NodeId) -> Self {
        if a < b {
            Edge(a, b)
        } else {
            Edge(b, a)
        }
    }

    pub fn touches(&self, i: NodeId) -> bool {
        self.0 == i || self.1 == i
    }
}

/// A complete STSP-GL instance: metric graph, compulsory stops, requests and
/// scenario demand, plus the tradeoff weight, service level and infeasibility
/// tolerance.
///
/// Immutable once built; every derived quantity is recomputed on demand.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    n: usize,
    compulsory: Vec<NodeId>,
    design: Vec<f64>,
    travel: Vec<f64>,
    coords: Option<Vec<(f64, f64)>>,
    rounding: Rounding,
    requests: Vec<Request>,
    demand: Vec<Vec<f64>>,
    n_scenarios: usize,
    alpha: f64,
    theta: f64,
    rho: f64,
}

/// Raw ingredients of an [`Instance`]. Matrices are row-major `n x n`.
#[derive(Clone, Debug)]
pub struct InstanceParts {
    pub n: usize,
    pub compulsory: Vec<NodeId>,
    pub design: Vec<Vec<f64>>,
    pub travel: Option<Vec<Vec<f64>>>,
    pub coords: Option<Vec<(f64, f64)>>,
    pub rounding: Rounding,
    /// `(request, per-scenario demand)` in any order.
    pub requests: Vec<(Request, Vec<f64>)>,
    pub alpha: f64,
    pub theta: f64,
    pub rho: f64,
}

fn flatten(n: usize, m: &[Vec<f64>], what: &str) -> Result<Vec<f64>> {
    if m.len() != n || m.iter().any(|row| row.len() != n) {
        return Err(Error::Instance(format!("{what} matrix must be {n}x{n}")));
    }
    Ok(m.iter().flatten().copied().collect())
}

impl Instance {
    /// Builds an instance, rejecting structurally malformed input (shape
    /// mismatches, unknown nodes, self-loop or duplicate requests). Semantic
    /// assumptions such as the triangle inequality are reported by
    /// [`validate_instance`] instead.
    pub fn from_parts(parts: InstanceParts) -> Result<Self> {
        let n = parts.n;
        let design = flatten(n, &parts.design, "design cost")?;
        let travel = match &parts.travel {
            Some(t) => flatten(n, t, "travel time")?,
            None => design.clone(),
        };
        if let Some(c) = &parts.coords {
            if c.len() != n {
                return Err(Error::Instance(format!("expected {n} coordinates, got {}", c.len())));
            }
        }
        let compulsory: BTreeSet<NodeId> = parts.compulsory.iter().copied().collect();
        if let Some(&bad) = compulsory.iter().find(|&&i| i >= n) {
            return Err(Error::Instance(format!("compulsory node {bad} out of range")));
        }
        let mut requests = parts.requests;
        requests.sort_by_key(|(r, _)| *r);
        let n_scenarios = requests.first().map(|(_, d)| d.len()).unwrap_or(0);
        for w in requests.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::Instance(format!("duplicate request {}", w[0].0)));
            }
        }
        for (r, d) in &requests {
            if r.h >= n || r.k >= n {
                return Err(Error::Instance(format!("request {r} references an unknown node")));
            }
            if r.h == r.k {
                return Err(Error::Instance(format!("request {r} has equal endpoints")));
            }
            if d.len() != n_scenarios {
                return Err(Error::Instance(format!(
                    "request {r} has {} scenario demands, expected {n_scenarios}",
                    d.len()
                )));
            }
            if d.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::Instance(format!("request {r} has a negative or non-finite demand")));
            }
        }
        let (requests, demand) = requests.into_iter().unzip();
        Ok(Self {
            n,
            compulsory: compulsory.into_iter().collect(),
            design,
            travel,
            coords: parts.coords,
            rounding: parts.rounding,
            requests,
            demand,
            n_scenarios,
            alpha: parts.alpha,
            theta: parts.theta,
            rho: parts.rho,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n
    }

    pub fn nodes(&self) -> std::ops::Range<NodeId> {
        0..self.n
    }

    pub fn compulsory(&self) -> &[NodeId] {
        &self.compulsory
    }

    pub fn is_compulsory(&self, i: NodeId) -> bool {
        self.compulsory.binary_search(&i).is_ok()
    }

    /// Design cost c̄ of edge `[i, j]`.
    #[inline]
    pub fn design(&self, i: NodeId, j: NodeId) -> f64 {
        self.design[i * self.n + j]
    }

    /// Travel time c of arc `(i, j)`.
    #[inline]
    pub fn travel(&self, i: NodeId, j: NodeId) -> f64 {
        self.travel[i * self.n + j]
    }

    pub fn coords(&self) -> Option<&[(f64, f64)]> {
        self.coords.as_deref()
    }

    pub fn rounding(&self) -> Rounding {
        self.rounding
    }

    /// Requests in canonical order.
    pub fn requests(&self) -> &[Request] {
        &self.requests
    }

    pub fn n_requests(&self) -> usize {
        self.requests.len()
    }

    pub fn request_index(&self, r: Request) -> Option<usize> {
        self.requests.binary_search(&r).ok()
    }

    pub fn n_scenarios(&self) -> usize {
        self.n_scenarios
    }

    /// Demand `s^{hk}` of request index `r` in scenario `s`.
    #[inline]
    pub fn demand(&self, r: usize, s: usize) -> f64 {
        self.demand[r][s]
    }

    pub fn demands(&self, r: usize) -> &[f64] {
        &self.demand[r]
    }

    /// Total demand of scenario `s` over all requests.
    pub fn scenario_total(&self, s: usize) -> f64 {
        self.demand.iter().map(|d| d[s]).sum()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Copy with different `(theta, rho, alpha)`.
    pub fn with_params(&self, theta: f64, rho: f64, alpha: f64) -> Self {
        Self { theta, rho, alpha, ..self.clone() }
    }

    /// Copy with a replaced demand table (`demand[r][s]`, canonical request order).
    pub fn with_demand(&self, demand: Vec<Vec<f64>>) -> Result<Self> {
        if demand.len() != self.requests.len() {
            return Err(Error::Instance("demand table does not match the request set".into()));
        }
        let n_scenarios = demand.first().map(Vec::len).unwrap_or(0);
        if demand.iter().any(|d| d.len() != n_scenarios) {
            return Err(Error::Instance("ragged demand table".into()));
        }
        Ok(Self { demand, n_scenarios, ..self.clone() })
    }

    /// Replaces both distance matrices by their shortest-path closure, which
    /// restores the triangle inequality on integer-rounded distances.
    pub fn metric_closure(&self) -> Self {
        Self {
            design: shortest_path_closure(self.n, &self.design),
            travel: shortest_path_closure(self.n, &self.travel),
            ..self.clone()
        }
    }

    /// Sum of design costs over an edge set.
    pub fn design_cost<'a>(&self, edges: impl IntoIterator<Item = &'a Edge>) -> f64 {
        edges.into_iter().map(|e| self.design(e.0, e.1)).sum()
    }

    /// Cost of a closed tour given as a cyclic node sequence.
    pub fn tour_design_cost(&self, tour: &[NodeId]) -> f64 {
        match tour.len() {
            0 | 1 => 0.0,
            len => (0..len).map(|p| self.design(tour[p], tour[(p + 1) % len])).sum(),
        }
    }
}

/// Floyd-Warshall closure of a dense matrix.
pub fn shortest_path_closure(n: usize, m: &[f64]) -> Vec<f64> {
    let mut d = m.to_vec();
    for k in 0..n {
        for i in 0..n {
            let dik = d[i * n + k];
            for j in 0..n {
                let via = dik + d[k * n + j];
                if via < d[i * n + j] {
                    d[i * n + j] = via;
                }
            }
        }
    }
    d
}

/// One broken modelling assumption.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    TooFewNodes { n: usize },
    EmptyCompulsory,
    MissingEdge { i: NodeId, j: NodeId },
    NonPositiveCost { i: NodeId, j: NodeId, value: f64 },
    AsymmetricCost { i: NodeId, j: NodeId },
    TriangleInequality { i: NodeId, j: NodeId, via: NodeId, direct: f64, detour: f64 },
    TravelTriangleInequality { i: NodeId, j: NodeId, via: NodeId, direct: f64, detour: f64 },
    ParameterRange { name: &'static str, value: f64 },
    NoScenarios,
    NoRequests,
    RequestWithoutDemand { h: NodeId, k: NodeId },
    ZeroDemandScenario { scenario: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::TooFewNodes { n } => write!(f, "graph has {n} nodes, a tour needs at least 3"),
            Violation::EmptyCompulsory => write!(f, "empty compulsory set"),
            Violation::MissingEdge { i, j } => write!(f, "missing edge [{i},{j}]"),
            Violation::NonPositiveCost { i, j, value } => {
                write!(f, "design cost of [{i},{j}] is {value}, must be positive")
            }
            Violation::AsymmetricCost { i, j } => write!(f, "design cost of [{i},{j}] is asymmetric"),
            Violation::TriangleInequality { i, j, via, direct, detour } => write!(
                f,
                "triangle inequality violated: c[{i},{j}] = {direct} > {detour} via {via}"
            ),
            Violation::TravelTriangleInequality { i, j, via, direct, detour } => write!(
                f,
                "travel-time triangle inequality violated: c({i},{j}) = {direct} > {detour} via {via}"
            ),
            Violation::ParameterRange { name, value } => write!(f, "{name} = {value} outside [0, 1]"),
            Violation::NoScenarios => write!(f, "no scenarios"),
            Violation::NoRequests => write!(f, "no requests"),
            Violation::RequestWithoutDemand { h, k } => {
                write!(f, "request ({h},{k}) has zero demand in every scenario")
            }
            Violation::ZeroDemandScenario { scenario } => write!(f, "scenario {scenario} has zero total demand"),
        }
    }
}

/// Result of [`validate_instance`]; empty means valid.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_valid() {
            Ok(())
        } else {
            let msg: Vec<String> = self.violations.iter().map(ToString::to_string).collect();
            Err(Error::Instance(msg.join("; ")))
        }
    }
}

/// Lists every violated modelling assumption of `inst`.
pub fn validate_instance(inst: &Instance) -> ValidationReport {
    let mut v = Vec::new();
    let n = inst.n_nodes();
    if n < 3 {
        v.push(Violation::TooFewNodes { n });
    }
    if inst.compulsory().is_empty() {
        v.push(Violation::EmptyCompulsory);
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (inst.design(i, j), inst.design(j, i));
            if !a.is_finite() || !b.is_finite() {
                v.push(Violation::MissingEdge { i, j });
                continue;
            }
            if a <= 0.0 {
                v.push(Violation::NonPositiveCost { i, j, value: a });
            }
            if (a - b).abs() > TRIANGLE_TOL {
                v.push(Violation::AsymmetricCost { i, j });
            }
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            for k in 0..n {
                if k == i || k == j {
                    continue;
                }
                let direct = inst.design(i, j);
                let detour = inst.design(i, k) + inst.design(k, j);
                if direct > detour + TRIANGLE_TOL {
                    v.push(Violation::TriangleInequality { i, j, via: k, direct, detour });
                }
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            for k in 0..n {
                if k == i || k == j {
                    continue;
                }
                let direct = inst.travel(i, j);
                let detour = inst.travel(i, k) + inst.travel(k, j);
                if direct > detour + TRIANGLE_TOL {
                    v.push(Violation::TravelTriangleInequality { i, j, via: k, direct, detour });
                }
            }
        }
    }
    for (name, value) in [("alpha", inst.alpha()), ("theta", inst.theta()), ("rho", inst.rho())] {
        if !(0.0..=1.0).contains(&value) {
            v.push(Violation::ParameterRange { name, value });
        }
    }
    if inst.n_requests() == 0 {
        v.push(Violation::NoRequests);
    }
    if inst.n_scenarios() == 0 && inst.n_requests() > 0 {
        v.push(Violation::NoScenarios);
    }
    for (r, req) in inst.requests().iter().enumerate() {
        if inst.demands(r).iter().all(|d| *d <= 0.0) {
            v.push(Violation::RequestWithoutDemand { h: req.h, k: req.k });
        }
    }
    for s in 0..inst.n_scenarios() {
        if inst.scenario_total(s) <= 0.0 {
            v.push(Violation::ZeroDemandScenario { scenario: s });
        }
    }
    ValidationReport { violations: v }
}

/// Unit of flow of one request on one arc.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArcFlow {
    pub from: NodeId,
    pub to: NodeId,
    pub value: f64,
}

/// Flow of one served request (request index into the instance).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RequestFlow {
    pub request: usize,
    pub arcs: Vec<ArcFlow>,
}

impl RequestFlow {
    /// Unit flow along a node path.
    pub fn from_path(request: usize, path: &[NodeId]) -> Self {
        let arcs = path.windows(2).map(|w| ArcFlow { from: w[0], to: w[1], value: 1.0 }).collect();
        Self { request, arcs }
    }
}

/// A TSP-GL solution: tour edges plus one unit flow per served request.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TspGlSolution {
    pub tour_edges: Vec<Edge>,
    pub flows: Vec<RequestFlow>,
    /// Served request indices, canonical order.
    pub served: Vec<usize>,
    pub objective: f64,
    pub design_cost: f64,
    pub routing_cost: f64,
}

impl TspGlSolution {
    /// Nodes incident to at least one tour edge.
    pub fn visited(&self) -> Vec<NodeId> {
        let set: BTreeSet<NodeId> = self.tour_edges.iter().flat_map(|e| [e.0, e.1]).collect();
        set.into_iter().collect()
    }

    /// The tour as a cyclic node sequence starting at its smallest node, when
    /// the edges form a single cycle.
    pub fn cycle_order(&self) -> Option<Vec<NodeId>> {
        cycle_from_edges(&self.tour_edges)
    }

    /// Checks every structural invariant: degree 2 on visited nodes, a single
    /// cycle containing all compulsory nodes, flows only on tour edges, and
    /// unit flow conservation for each served request.
    pub fn check_structure(&self, inst: &Instance) -> Result<()> {
        let visited = self.visited();
        for &i in &visited {
            let deg = self.tour_edges.iter().filter(|e| e.touches(i)).count();
            if deg != 2 {
                return Err(Error::Structure(format!("node {i} has tour degree {deg}")));
            }
        }
        let edges: BTreeSet<Edge> = self.tour_edges.iter().copied().collect();
        if edges.len() != self.tour_edges.len() {
            return Err(Error::Structure("duplicate tour edge".into()));
        }
        if self.cycle_order().is_none() {
            return Err(Error::Structure("tour edges do not form a single cycle".into()));
        }
        for &c in inst.compulsory() {
            if visited.binary_search(&c).is_err() {
                return Err(Error::Structure(format!("compulsory node {c} not visited")));
            }
        }
        self.check_flows(inst, &edges)
    }

    fn check_flows(&self, inst: &Instance, edges: &BTreeSet<Edge>) -> Result<()> {
        for fl in &self.flows {
            let req = *inst
                .requests()
                .get(fl.request)
                .ok_or_else(|| Error::Structure(format!("unknown request index {}", fl.request)))?;
            let mut balance = vec![0.0; inst.n_nodes()];
            for a in &fl.arcs {
                if a.value < -1e-9 {
                    return Err(Error::Structure(format!("negative flow on ({},{})", a.from, a.to)));
                }
                if a.value > 1e-9 && !edges.contains(&Edge::new(a.from, a.to)) {
                    return Err(Error::Structure(format!(
                        "request {req} uses arc ({},{}) outside the tour",
                        a.from, a.to
                    )));
                }
                balance[a.from] += a.value;
                balance[a.to] -= a.value;
            }
            for (i, b) in balance.iter().enumerate() {
                let want = if i == req.h {
                    1.0
                } else if i == req.k {
                    -1.0
                } else {
                    0.0
                };
                if (b - want).abs() > 1e-6 {
                    return Err(Error::Structure(format!("request {req} violates flow conservation at {i}")));
                }
            }
        }
        let mut flowed: Vec<usize> = self.flows.iter().map(|f| f.request).collect();
        flowed.sort_unstable();
        if flowed != self.served {
            return Err(Error::Structure("served set does not match the flows".into()));
        }
        Ok(())
    }
}

/// Cyclic node order of an edge set forming exactly one cycle.
pub fn cycle_from_edges(edges: &[Edge]) -> Option<Vec<NodeId>> {
    if edges.len() < 3 {
        return None;
    }
    let start = edges.iter().map(|e| e.0).min()?;
    let neighbours = |i: NodeId| -> Vec<NodeId> {
        let mut v: Vec<NodeId> = edges
            .iter()
            .filter(|e| e.touches(i))
            .map(|e| if e.0 == i { e.1 } else { e.0 })
            .collect();
        v.sort_unstable();
        v
    };
    let first = neighbours(start);
    if first.len() != 2 {
        return None;
    }
    let mut order = vec![start];
    let (mut prev, mut cur) = (start, first[0]);
    while cur != start {
        if order.len() > edges.len() {
            return None;
        }
        order.push(cur);
        let nb = neighbours(cur);
        if nb.len() != 2 {
            return None;
        }
        let next = if nb[0] == prev { nb[1] } else { nb[0] };
        prev = cur;
        cur = next;
    }
    (order.len() == edges.len()).then_some(order)
}

/// Edges of a closed tour given as a cyclic node sequence.
pub fn tour_edges(tour: &[NodeId]) -> Vec<Edge> {
    let len = tour.len();
    let mut e: Vec<Edge> = (0..len).map(|p| Edge::new(tour[p], tour[(p + 1) % len])).collect();
    e.sort_unstable();
    e
}

/// Objective split `(total, design, routing)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveSplit {
    pub total: f64,
    pub design: f64,
    pub routing: f64,
}

/// `(1-α)·Σ c̄x + α·Σ q̃f` for a solution. Flow on an arc whose edge is not in
/// the tour is a structural error.
pub fn objective(inst: &Instance, sol: &TspGlSolution, qtilde: &crate::scenarios::RoutingCostTable) -> Result<ObjectiveSplit> {
    let edges: BTreeSet<Edge> = sol.tour_edges.iter().copied().collect();
    let design = inst.design_cost(&sol.tour_edges);
    let mut routing = 0.0;
    for fl in &sol.flows {
        for a in &fl.arcs {
            if a.value != 0.0 && !edges.contains(&Edge::new(a.from, a.to)) {
                return Err(Error::Structure(format!("flow on non-tour arc ({},{})", a.from, a.to)));
            }
            routing += qtilde.q(a.from, a.to, fl.request) * a.value;
        }
    }
    let alpha = inst.alpha();
    Ok(ObjectiveSplit { total: (1.0 - alpha) * design + alpha * routing, design, routing })
}

/// Solve status shared by all end-to-end methods.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Optimal,
    Feasible,
    Infeasible,
    TimeLimit,
}

/// Final outcome of an STSP-GL solve.
#[derive(Clone, Debug, Serialize)]
pub struct StspGlResult {
    pub status: Status,
    pub incumbent: Option<TspGlSolution>,
    pub cover: Option<crate::covers::FeasibilityCover>,
    pub upper_bound: Option<f64>,
    pub lower_bound: Option<f64>,
    pub gap: Option<f64>,
    #[serde(skip)]
    pub trace: crate::orchestrate::SolveTrace,
}

impl StspGlResult {
    /// `(UB - LB) / UB` when both are finite and UB > 0.
    pub fn compute_gap(ub: Option<f64>, lb: Option<f64>) -> Option<f64> {
        match (ub, lb) {
            (Some(u), Some(l)) if u > 0.0 => Some(((u - l) / u).max(0.0)),
            (Some(u), Some(l)) if u == 0.0 && l >= 0.0 => Some(0.0),
            _ => None,
        }
    }
}
