//! TSP-GL on the subgraph induced by a feasibility cover: exact TSP, cover
//! bounds, Benders decomposition and a direct MIP used as an oracle.

use crate::covers::FeasibilityCover;
use crate::error::{Error, Result};
use crate::model::{tour_edges, Edge, Instance, NodeId, RequestFlow, TspGlSolution};
use crate::mp::Limits;
use crate::scenarios::RoutingCostTable;

pub mod benders;
pub mod direct;
pub mod tsp;

pub use benders::{
    aggregated_optimality_cut, benders_solve_tspgl, dual_subproblem, dual_subproblem_lp, primal_subproblem,
    BendersDuals, BendersOutcome, CutPool,
};
pub use direct::solve_tspgl_direct;
pub use tsp::{find_subtours, symmetric_tsp, TspResult};

/// TSP-GL restricted to `N'(Q)`.
#[derive(Clone, Debug)]
pub struct SubInstance<'a> {
    pub inst: &'a Instance,
    pub qtilde: &'a RoutingCostTable,
    /// Request indices of `Q`, canonical order.
    pub requests: Vec<usize>,
    /// `N'(Q)`, sorted; padded to three nodes when smaller (see [`pad_nodes`]).
    pub nodes: Vec<NodeId>,
}

/// A tour needs three distinct nodes. When `N'(Q)` is smaller, the cheapest
/// completion to a triangle is added; under the triangle inequality no larger
/// tour can be cheaper and direct arcs stay shortest, so this is exact.
pub fn pad_nodes(inst: &Instance, nodes: &[NodeId]) -> Vec<NodeId> {
    let mut nodes = nodes.to_vec();
    nodes.sort_unstable();
    nodes.dedup();
    if nodes.len() >= 3 || inst.n_nodes() < 3 {
        return nodes;
    }
    let others: Vec<NodeId> = inst.nodes().filter(|i| nodes.binary_search(i).is_err()).collect();
    let perimeter = |t: &[NodeId]| inst.design(t[0], t[1]) + inst.design(t[1], t[2]) + inst.design(t[0], t[2]);
    let mut best: Option<(f64, Vec<NodeId>)> = None;
    let mut consider = |extra: &[NodeId]| {
        let mut t = nodes.clone();
        t.extend_from_slice(extra);
        t.sort_unstable();
        let v = perimeter(&t);
        if best.as_ref().is_none_or(|(b, _)| v < *b) {
            best = Some((v, t));
        }
    };
    match nodes.len() {
        2 => others.iter().for_each(|&a| consider(&[a])),
        1 => {
            for (p, &a) in others.iter().enumerate() {
                for &b in &others[p + 1..] {
                    consider(&[a, b]);
                }
            }
        }
        _ => {
            for (p, &a) in others.iter().enumerate() {
                for (q, &b) in others.iter().enumerate().skip(p + 1) {
                    for &c in &others[q + 1..] {
                        consider(&[a, b, c]);
                    }
                }
            }
        }
    }
    best.map(|(_, t)| t).unwrap_or(nodes)
}

impl<'a> SubInstance<'a> {
    pub fn new(inst: &'a Instance, qtilde: &'a RoutingCostTable, cover: &FeasibilityCover) -> Self {
        Self { inst, qtilde, requests: cover.requests().to_vec(), nodes: pad_nodes(inst, cover.nodes()) }
    }

    pub fn alpha(&self) -> f64 {
        self.inst.alpha()
    }

    pub fn edges(&self) -> Vec<Edge> {
        let mut e = Vec::new();
        for (a, &i) in self.nodes.iter().enumerate() {
            for &j in &self.nodes[a + 1..] {
                e.push(Edge(i, j));
            }
        }
        e
    }

    /// Distinct origins of the requests, sorted.
    pub fn origins(&self) -> Vec<NodeId> {
        let mut h: Vec<NodeId> = self.requests.iter().map(|&r| self.inst.requests()[r].h).collect();
        h.sort_unstable();
        h.dedup();
        h
    }

    pub fn check(&self) -> Result<()> {
        if self.nodes.len() < 3 {
            return Err(Error::Instance("a tour needs at least three nodes".into()));
        }
        Ok(())
    }

    /// Complete solution for a tour (cyclic order over `nodes`), routing each
    /// request on its cheaper direction around the cycle.
    pub fn solution_for_tour(&self, tour: &[NodeId]) -> Result<TspGlSolution> {
        let mut flows = Vec::with_capacity(self.requests.len());
        let mut routing = 0.0;
        for &r in &self.requests {
            let (path, z) = primal_subproblem(self, tour, r)?;
            routing += z;
            flows.push(RequestFlow::from_path(r, &path));
        }
        let edges = tour_edges(tour);
        let design = self.inst.design_cost(&edges);
        let a = self.alpha();
        Ok(TspGlSolution {
            tour_edges: edges,
            flows,
            served: self.requests.clone(),
            objective: (1.0 - a) * design + a * routing,
            design_cost: design,
            routing_cost: routing,
        })
    }
}

/// Cheap bracket on a cover's TSP-GL value.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundEstimate {
    pub lb_design: f64,
    /// `q̃_hk^hk` per request of the cover.
    pub lb_routing: Vec<f64>,
    /// Shortest path on the TSP tour per request.
    pub ub_routing: Vec<f64>,
    pub lb: f64,
    pub ub: f64,
    pub tsp_tour: Vec<NodeId>,
    pub subtours: Vec<Vec<NodeId>>,
}

pub fn cover_bounds(sub: &SubInstance, limits: Limits) -> Result<BoundEstimate> {
    sub.check()?;
    let inst = sub.inst;
    let tsp = symmetric_tsp(&sub.nodes, |i, j| inst.design(i, j), limits)?;
    let mut lb_routing = Vec::with_capacity(sub.requests.len());
    let mut ub_routing = Vec::with_capacity(sub.requests.len());
    for &r in &sub.requests {
        let q = inst.requests()[r];
        lb_routing.push(sub.qtilde.q(q.h, q.k, r));
        ub_routing.push(primal_subproblem(sub, &tsp.tour, r)?.1);
    }
    let a = sub.alpha();
    let lb = (1.0 - a) * tsp.value + a * lb_routing.iter().sum::<f64>();
    let ub = (1.0 - a) * tsp.value + a * ub_routing.iter().sum::<f64>();
    Ok(BoundEstimate { lb_design: tsp.value, lb_routing, ub_routing, lb, ub, tsp_tour: tsp.tour, subtours: tsp.subtours })
}
