//! The deterministic equivalent solved as one MIP.

use crate::covers::{CoverAlgebra, FeasibilityCover};
use crate::error::Result;
use crate::model::{cycle_from_edges, Edge, Instance, Status, StspGlResult};
use crate::mp::{self, Cmp, Constraint, LinearModel, Limits, Sense, SolveStatus, VarId, EXACT_GAP};
use crate::scenarios::{deterministic_routing_costs, required_scenario_count, SERVICE_TOL};
use crate::tspgl::tsp::{canonical_cycle, components};
use crate::tspgl::SubInstance;

use super::{update_incumbent, IncumbentState, SearchConfig, OPTIMAL_GAP};

pub fn run_mip_benchmark(inst: &Instance, cfg: &SearchConfig) -> Result<StspGlResult> {
    solve(inst, cfg, None)
}

/// Same model with the served requests fixed to `cover`.
pub fn run_mip_with_cover(inst: &Instance, cfg: &SearchConfig, cover: &FeasibilityCover) -> Result<StspGlResult> {
    solve(inst, cfg, Some(cover))
}

struct Vars {
    x: Vec<(Edge, VarId)>,
    w: Vec<VarId>,
    z: Vec<VarId>,
}

fn build(inst: &Instance, qt: &crate::scenarios::RoutingCostTable, fixed: Option<&FeasibilityCover>) -> (LinearModel, Vars) {
    let n = inst.n_nodes();
    let a = inst.alpha();
    let mut m = LinearModel::new(Sense::Minimize);
    let mut x = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            x.push((Edge(i, j), m.add_binary(format!("x_{i}_{j}"), (1.0 - a) * inst.design(i, j))));
        }
    }
    let w: Vec<VarId> = inst
        .nodes()
        .map(|i| m.add_int_var(format!("w_{i}"), if inst.is_compulsory(i) { 1.0 } else { 0.0 }, 1.0, 0.0))
        .collect();
    let z: Vec<VarId> = (0..inst.n_requests())
        .map(|r| match fixed {
            Some(q) => {
                let v = if q.request_incidence(r) { 1.0 } else { 0.0 };
                m.add_int_var(format!("z_{r}"), v, v, 0.0)
            }
            None => m.add_binary(format!("z_{r}"), 0.0),
        })
        .collect();
    let ns = inst.n_scenarios();
    let y: Vec<VarId> = (0..ns).map(|s| m.add_binary(format!("y_{s}"), 0.0)).collect();
    for s in 0..ns {
        let mut row: Vec<(VarId, f64)> = z.iter().enumerate().map(|(r, &v)| (v, inst.demand(r, s))).collect();
        row.push((y[s], -inst.theta() * inst.scenario_total(s)));
        m.add_constr(format!("service_{s}"), row, Cmp::Ge, -SERVICE_TOL);
    }
    m.add_constr("target", y.iter().map(|&v| (v, 1.0)).collect(), Cmp::Ge, required_scenario_count(ns, inst.rho()) as f64);
    for i in 0..n {
        let mut row: Vec<(VarId, f64)> = x.iter().filter(|(e, _)| e.touches(i)).map(|(_, v)| (*v, 1.0)).collect();
        row.push((w[i], -2.0));
        m.add_constr(format!("deg_{i}"), row, Cmp::Eq, 0.0);
    }
    for (r, q) in inst.requests().iter().enumerate() {
        m.add_constr(format!("wh_{r}"), vec![(w[q.h], 1.0), (z[r], -1.0)], Cmp::Ge, 0.0);
        m.add_constr(format!("wk_{r}"), vec![(w[q.k], 1.0), (z[r], -1.0)], Cmp::Ge, 0.0);
        let mut balance: Vec<Vec<(VarId, f64)>> = vec![Vec::new(); n];
        for &(e, xv) in &x {
            for (i, j) in [(e.0, e.1), (e.1, e.0)] {
                let f = m.add_var(format!("f{r}_{i}_{j}"), 0.0, f64::INFINITY, a * qt.q(i, j, r));
                m.add_constr(format!("cap{r}_{i}_{j}"), vec![(xv, 1.0), (f, -1.0)], Cmp::Ge, 0.0);
                balance[i].push((f, 1.0));
                balance[j].push((f, -1.0));
            }
        }
        balance[q.h].push((z[r], -1.0));
        balance[q.k].push((z[r], 1.0));
        for (i, row) in balance.into_iter().enumerate() {
            m.add_constr(format!("flow{r}_{i}"), row, Cmp::Eq, 0.0);
        }
    }
    (m, Vars { x, w, z })
}

/// For each component `S` of a disconnected tour: `x(δ(S)) ≥ 2(w_i + w_j - 1)`
/// with `i ∈ S` and `j` visited outside `S`.
fn generalized_secs(vars: &Vars, x: &[f64]) -> Vec<Constraint> {
    let visited: Vec<usize> = (0..vars.w.len()).filter(|&i| x[vars.w[i].0] > 0.5).collect();
    let edges: Vec<Edge> = vars.x.iter().filter(|(_, v)| x[v.0] > 0.5).map(|(e, _)| *e).collect();
    let comps = components(&visited, &edges);
    if comps.len() <= 1 {
        return Vec::new();
    }
    comps
        .iter()
        .enumerate()
        .map(|(c, s)| {
            let j = comps[(c + 1) % comps.len()][0];
            let inside = |v: usize| s.binary_search(&v).is_ok();
            let mut row: Vec<(VarId, f64)> =
                vars.x.iter().filter(|(e, _)| inside(e.0) != inside(e.1)).map(|(_, v)| (*v, 1.0)).collect();
            row.push((vars.w[s[0]], -2.0));
            row.push((vars.w[j], -2.0));
            Constraint::new("gsec", row, Cmp::Ge, -2.0)
        })
        .collect()
}

fn solve(inst: &Instance, cfg: &SearchConfig, fixed: Option<&FeasibilityCover>) -> Result<StspGlResult> {
    cfg.validate()?;
    let qt = deterministic_routing_costs(inst)?;
    let mut state = IncumbentState::started();
    let infeasible = |state: IncumbentState| StspGlResult {
        status: Status::Infeasible,
        incumbent: None,
        cover: None,
        upper_bound: None,
        lower_bound: None,
        gap: None,
        trace: state.trace,
    };
    let alg = CoverAlgebra::new(inst);
    let feasible = match fixed {
        Some(q) => alg.is_cover(q.requests()),
        None => alg.is_cover(FeasibilityCover::all(inst).requests()),
    };
    if !feasible {
        return Ok(infeasible(state));
    }
    let (mut m, vars) = build(inst, &qt, fixed);
    let limits = Limits::time(cfg.time_limit_total).with_gap(cfg.gap_target.max(EXACT_GAP));
    let out = mp::resolve_with_cuts(&mut m, limits, usize::MAX, |x| generalized_secs(&vars, x))?;
    if out.status == SolveStatus::Infeasible {
        return Ok(infeasible(state));
    }
    if let (Some(x), false) = (out.values.as_deref(), out.cut_incomplete) {
        let edges: Vec<Edge> = vars.x.iter().filter(|(_, v)| x[v.0] > 0.5).map(|(e, _)| *e).collect();
        if let Some(tour) = cycle_from_edges(&edges) {
            let tour = canonical_cycle(&tour);
            let requests: Vec<usize> = (0..vars.z.len()).filter(|&r| x[vars.z[r].0] > 0.5).collect();
            let cover = FeasibilityCover::new(inst, requests.iter().copied());
            let mut nodes = tour.clone();
            nodes.sort_unstable();
            let sub = SubInstance { inst, qtilde: &qt, requests, nodes };
            let sol = sub.solution_for_tour(&tour)?;
            update_incumbent(&mut state, &cover, sol);
        }
    }
    let proven = out.status == SolveStatus::Optimal && !out.cut_incomplete;
    if let Some(b) = out.best_bound.or(if proven { out.objective } else { None }) {
        state.update_lb(b);
    }
    let gap = state.gap();
    let status = match (state.ub(), proven) {
        (Some(_), true) if gap.is_some_and(|g| g <= OPTIMAL_GAP) => Status::Optimal,
        (Some(_), true) => Status::Feasible,
        _ => Status::TimeLimit,
    };
    state.trace.push("final", state.ub(), state.lb, state.cover.as_ref().map(FeasibilityCover::len), state.evaluated);
    Ok(StspGlResult {
        status,
        upper_bound: state.ub(),
        lower_bound: state.lb,
        gap,
        incumbent: state.solution,
        cover: state.cover,
        trace: state.trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::{d1, triangle};
    use crate::tspgl::symmetric_tsp;

    fn exact() -> SearchConfig {
        SearchConfig { gap_target: 0.0, time_limit_total: 60.0, ..Default::default() }
    }

    #[test]
    fn d1_benchmark() {
        let inst = d1();
        let r = run_mip_benchmark(&inst, &exact()).unwrap();
        assert_eq!(r.status, Status::Optimal);
        assert!((r.upper_bound.unwrap() - 5.0).abs() < 1e-9);
        assert_eq!(r.cover.unwrap().requests(), &[0]);
        let f = run_mip_with_cover(&inst, &exact(), &FeasibilityCover::new(&inst, [1])).unwrap();
        assert!((f.upper_bound.unwrap() - 6.5).abs() < 1e-9);
    }

    #[test]
    fn everything_forced_is_a_tsp() {
        let inst = d1().with_params(1.0, 0.0, 0.0);
        let all: Vec<usize> = inst.nodes().collect();
        let r = run_mip_benchmark(&inst, &exact()).unwrap();
        let tsp = symmetric_tsp(&all, |i, j| inst.design(i, j), Limits::default()).unwrap();
        assert!((r.upper_bound.unwrap() - tsp.value).abs() < 1e-9);
        assert_eq!(r.cover.unwrap().len(), 2);
        let t = run_mip_benchmark(&triangle(), &exact()).unwrap();
        assert_eq!(t.status, Status::Optimal);
    }

    #[test]
    fn unattainable_service_is_infeasible() {
        // with ρ = 0 both scenarios must be met, so (1,3) alone is not a cover
        let inst = d1().with_params(0.5, 0.0, 0.25);
        assert!(run_mip_benchmark(&inst, &exact()).unwrap().upper_bound.is_some());
        let bad = FeasibilityCover::new(&inst, [0]);
        assert_eq!(run_mip_with_cover(&inst, &exact(), &bad).unwrap().status, Status::Infeasible);
    }
}
