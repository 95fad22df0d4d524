//! Monolithic TSP-GL MIP on a sub-instance, used as a reference solver.

use super::tsp::{canonical_cycle, chosen_edges, degree_model, find_subtours, subtour_cut};
use super::SubInstance;
use crate::error::{Error, Result};
use crate::model::{cycle_from_edges, TspGlSolution};
use crate::mp::{self, Cmp, Limits, SolveStatus};

/// Tour variables, one flow per request and arc, degree and flow
/// conservation rows, subtours cut lazily. Flows alone need not connect the
/// tour (nodes without demand), hence the cut loop.
pub fn solve_tspgl_direct(sub: &SubInstance, limits: Limits) -> Result<TspGlSolution> {
    sub.check()?;
    let inst = sub.inst;
    let alpha = sub.alpha();
    let (mut m, edge_vars) = degree_model(&sub.nodes, &|i, j| inst.design(i, j), 1.0 - alpha);
    for &r in &sub.requests {
        let q = inst.requests()[r];
        let mut balance: Vec<Vec<(mp::VarId, f64)>> = vec![Vec::new(); sub.nodes.len()];
        let at = |v| sub.nodes.binary_search(&v).expect("node of sub-instance");
        for &(e, xv) in &edge_vars {
            for (i, j) in [(e.0, e.1), (e.1, e.0)] {
                let f = m.add_var(format!("f{r}_{i}_{j}"), 0.0, f64::INFINITY, alpha * sub.qtilde.q(i, j, r));
                m.add_constr(format!("cap{r}_{i}_{j}"), vec![(xv, 1.0), (f, -1.0)], Cmp::Ge, 0.0);
                balance[at(i)].push((f, 1.0));
                balance[at(j)].push((f, -1.0));
            }
        }
        for (a, row) in balance.into_iter().enumerate() {
            let v = sub.nodes[a];
            let rhs = if v == q.h {
                1.0
            } else if v == q.k {
                -1.0
            } else {
                0.0
            };
            m.add_constr(format!("flow{r}_{v}"), row, Cmp::Eq, rhs);
        }
    }
    let out = mp::resolve_with_cuts(&mut m, limits, usize::MAX, |x| {
        let subs = find_subtours(&sub.nodes, &chosen_edges(&edge_vars, x));
        subs.iter().map(|s| subtour_cut(s, &edge_vars)).collect()
    })?;
    if out.status != SolveStatus::Optimal || out.cut_incomplete {
        return Err(Error::Backend(format!("direct TSP-GL MIP ended with {:?}", out.status)));
    }
    let edges = chosen_edges(&edge_vars, out.values.as_deref().unwrap_or(&[]));
    let tour = cycle_from_edges(&edges).ok_or_else(|| Error::Backend("direct MIP returned no cycle".into()))?;
    sub.solution_for_tour(&canonical_cycle(&tour))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covers::FeasibilityCover;
    use crate::model::fixtures::d1;
    use crate::scenarios::deterministic_routing_costs;
    use crate::tspgl::symmetric_tsp;

    #[test]
    fn d1_direct() {
        let inst = d1();
        let qt = deterministic_routing_costs(&inst).unwrap();
        for (c, want) in [(0usize, 5.0), (1, 6.5)] {
            let sub = SubInstance::new(&inst, &qt, &FeasibilityCover::new(&inst, [c]));
            let sol = solve_tspgl_direct(&sub, Limits::default()).unwrap();
            assert!((sol.objective - want).abs() < 1e-9);
        }
    }

    #[test]
    fn alpha_zero_is_plain_tsp() {
        let inst = d1().with_params(0.5, 0.5, 0.0);
        let qt = deterministic_routing_costs(&inst).unwrap();
        let sub = SubInstance::new(&inst, &qt, &FeasibilityCover::all(&inst));
        let sol = solve_tspgl_direct(&sub, Limits::default()).unwrap();
        let tsp = symmetric_tsp(&sub.nodes, |i, j| inst.design(i, j), Limits::default()).unwrap();
        assert!((sol.objective - tsp.value).abs() < 1e-9);
    }
}
