//! Exact symmetric TSP on a node subset.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::model::{Edge, NodeId};
use crate::mp::{self, Cmp, Constraint, LinearModel, Limits, Sense, SolveStatus, VarId};

/// Largest node count solved by Held-Karp.
pub const HELD_KARP_MAX: usize = 15;

#[derive(Clone, Debug, PartialEq)]
pub struct TspResult {
    /// Cyclic order starting at the smallest node.
    pub tour: Vec<NodeId>,
    pub value: f64,
    /// Subtours separated while solving (MIP path only).
    pub subtours: Vec<Vec<NodeId>>,
}

/// Rotates and orients a cycle so it starts at its smallest node and
/// continues towards the smaller of that node's two neighbours.
pub fn canonical_cycle(tour: &[NodeId]) -> Vec<NodeId> {
    let len = tour.len();
    if len < 3 {
        let mut t = tour.to_vec();
        t.sort_unstable();
        return t;
    }
    let start = (0..len).min_by_key(|&p| tour[p]).unwrap();
    let next = tour[(start + 1) % len];
    let prev = tour[(start + len - 1) % len];
    if next < prev {
        (0..len).map(|s| tour[(start + s) % len]).collect()
    } else {
        (0..len).map(|s| tour[(start + len - s) % len]).collect()
    }
}

fn cycle_value<F: Fn(NodeId, NodeId) -> f64>(tour: &[NodeId], cost: &F) -> f64 {
    let len = tour.len();
    (0..len).map(|p| cost(tour[p], tour[(p + 1) % len])).sum()
}

/// Exact TSP over `nodes` with symmetric costs `cost`. One node gives value 0,
/// two nodes the doubled edge.
pub fn symmetric_tsp<F>(nodes: &[NodeId], cost: F, limits: Limits) -> Result<TspResult>
where
    F: Fn(NodeId, NodeId) -> f64,
{
    let mut nodes = nodes.to_vec();
    nodes.sort_unstable();
    nodes.dedup();
    match nodes.len() {
        0 => Ok(TspResult { tour: vec![], value: 0.0, subtours: vec![] }),
        1 => Ok(TspResult { tour: nodes, value: 0.0, subtours: vec![] }),
        2 => {
            let value = 2.0 * cost(nodes[0], nodes[1]);
            Ok(TspResult { tour: nodes, value, subtours: vec![] })
        }
        n if n <= HELD_KARP_MAX => Ok(held_karp(&nodes, &cost)),
        _ => tsp_mip(&nodes, &cost, limits),
    }
}

/// Bellman-Held-Karp dynamic program rooted at `nodes[0]`.
pub fn held_karp<F: Fn(NodeId, NodeId) -> f64>(nodes: &[NodeId], cost: &F) -> TspResult {
    let n = nodes.len();
    let m = n - 1;
    let c = |a: usize, b: usize| cost(nodes[a], nodes[b]);
    let full = 1usize << m;
    let mut dp = vec![f64::INFINITY; full * m];
    let mut parent = vec![usize::MAX; full * m];
    for j in 0..m {
        dp[(1 << j) * m + j] = c(0, j + 1);
    }
    for set in 1..full {
        for j in 0..m {
            if set & (1 << j) == 0 {
                continue;
            }
            let cur = dp[set * m + j];
            if !cur.is_finite() {
                continue;
            }
            for k in 0..m {
                if set & (1 << k) != 0 {
                    continue;
                }
                let next = set | (1 << k);
                let v = cur + c(j + 1, k + 1);
                if v < dp[next * m + k] {
                    dp[next * m + k] = v;
                    parent[next * m + k] = j;
                }
            }
        }
    }
    let last = full - 1;
    let (mut end, mut best) = (0, f64::INFINITY);
    for j in 0..m {
        let v = dp[last * m + j] + c(j + 1, 0);
        if v < best {
            best = v;
            end = j;
        }
    }
    let mut order = Vec::with_capacity(n);
    let (mut set, mut j) = (last, end);
    while j != usize::MAX {
        order.push(nodes[j + 1]);
        let p = parent[set * m + j];
        set &= !(1 << j);
        j = p;
    }
    order.push(nodes[0]);
    order.reverse();
    let tour = canonical_cycle(&order);
    let value = cycle_value(&tour, cost);
    TspResult { tour, value, subtours: vec![] }
}

/// Connected components of an edge set over `nodes`; empty when there is
/// only one. Components are sorted and listed by smallest member.
pub fn find_subtours(nodes: &[NodeId], edges: &[Edge]) -> Vec<Vec<NodeId>> {
    let mut comps = components(nodes, edges);
    if comps.len() <= 1 {
        comps.clear();
    }
    comps
}

pub(crate) fn components(nodes: &[NodeId], edges: &[Edge]) -> Vec<Vec<NodeId>> {
    let idx = |v: NodeId| nodes.binary_search(&v).ok();
    let mut parent: Vec<usize> = (0..nodes.len()).collect();
    fn root(p: &mut [usize], mut a: usize) -> usize {
        while p[a] != a {
            p[a] = p[p[a]];
            a = p[a];
        }
        a
    }
    for e in edges {
        if let (Some(a), Some(b)) = (idx(e.0), idx(e.1)) {
            let (ra, rb) = (root(&mut parent, a), root(&mut parent, b));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<NodeId>> = Default::default();
    for (i, &v) in nodes.iter().enumerate() {
        let r = root(&mut parent, i);
        groups.entry(r).or_default().push(v);
    }
    groups.into_values().collect()
}

/// `Σ_{[i,j] ⊆ S} x ≤ |S| - 1` over the given edge variables.
pub fn subtour_cut(set: &[NodeId], edge_vars: &[(Edge, VarId)]) -> Constraint {
    let coeffs = edge_vars
        .iter()
        .filter(|(e, _)| set.binary_search(&e.0).is_ok() && set.binary_search(&e.1).is_ok())
        .map(|(_, v)| (*v, 1.0))
        .collect();
    Constraint::new("sec", coeffs, Cmp::Le, set.len() as f64 - 1.0)
}

/// Degree-2 binary model over all edges of `nodes`.
pub(crate) fn degree_model<F: Fn(NodeId, NodeId) -> f64>(nodes: &[NodeId], cost: &F, scale: f64) -> (LinearModel, Vec<(Edge, VarId)>) {
    let mut m = LinearModel::new(Sense::Minimize);
    let mut edge_vars = Vec::new();
    for (a, &i) in nodes.iter().enumerate() {
        for &j in &nodes[a + 1..] {
            let v = m.add_binary(format!("x_{i}_{j}"), scale * cost(i, j));
            edge_vars.push((Edge(i, j), v));
        }
    }
    for &i in nodes {
        let row = edge_vars.iter().filter(|(e, _)| e.touches(i)).map(|(_, v)| (*v, 1.0)).collect();
        m.add_constr(format!("deg_{i}"), row, Cmp::Eq, 2.0);
    }
    (m, edge_vars)
}

pub(crate) fn chosen_edges(edge_vars: &[(Edge, VarId)], x: &[f64]) -> Vec<Edge> {
    edge_vars.iter().filter(|(_, v)| x[v.0] > 0.5).map(|(e, _)| *e).collect()
}

fn tsp_mip<F: Fn(NodeId, NodeId) -> f64>(nodes: &[NodeId], cost: &F, limits: Limits) -> Result<TspResult> {
    let start = Instant::now();
    let (mut m, edge_vars) = degree_model(nodes, cost, 1.0);
    let mut found = Vec::new();
    let out = mp::resolve_with_cuts(&mut m, limits, usize::MAX, |x| {
        let subs = find_subtours(nodes, &chosen_edges(&edge_vars, x));
        let cuts = subs.iter().map(|s| subtour_cut(s, &edge_vars)).collect();
        found.extend(subs);
        cuts
    })?;
    if out.status != SolveStatus::Optimal || out.cut_incomplete {
        return Err(Error::Backend(format!(
            "TSP on {} nodes not solved to optimality ({:?}) after {:.1}s",
            nodes.len(),
            out.status,
            start.elapsed().as_secs_f64()
        )));
    }
    let edges = chosen_edges(&edge_vars, out.values.as_deref().unwrap_or(&[]));
    let tour = crate::model::cycle_from_edges(&edges).ok_or_else(|| Error::Backend("TSP MIP returned no cycle".into()))?;
    let tour = canonical_cycle(&tour);
    let value = cycle_value(&tour, cost);
    Ok(TspResult { tour, value, subtours: found })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_force(nodes: &[NodeId], cost: &dyn Fn(NodeId, NodeId) -> f64) -> f64 {
        fn perms(rest: &mut Vec<NodeId>, k: usize, out: &mut Vec<Vec<NodeId>>) {
            if k == rest.len() {
                out.push(rest.clone());
                return;
            }
            for i in k..rest.len() {
                rest.swap(k, i);
                perms(rest, k + 1, out);
                rest.swap(k, i);
            }
        }
        let mut rest = nodes[1..].to_vec();
        let mut all = Vec::new();
        perms(&mut rest, 0, &mut all);
        all.into_iter()
            .map(|p| {
                let mut t = vec![nodes[0]];
                t.extend(p);
                cycle_value(&t, &cost)
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn small_cases() {
        let c = |i: usize, j: usize| [[0., 1., 2.], [1., 0., 3.], [2., 3., 0.]][i][j];
        assert_eq!(symmetric_tsp(&[0, 1, 2], c, Limits::default()).unwrap().value, 6.0);
        let unit = |i: usize, j: usize| if i == j { 0.0 } else { 1.0 };
        assert_eq!(symmetric_tsp(&[0, 1, 2, 3], unit, Limits::default()).unwrap().value, 4.0);
        assert_eq!(symmetric_tsp(&[4], unit, Limits::default()).unwrap().value, 0.0);
        assert_eq!(symmetric_tsp(&[4, 2], |_, _| 3.0, Limits::default()).unwrap().value, 6.0);
    }

    #[test]
    fn collinear_five() {
        let c = |i: usize, j: usize| (i as f64 - j as f64).abs();
        let r = symmetric_tsp(&[0, 1, 2, 3, 4], c, Limits::default()).unwrap();
        assert_eq!(r.value, 8.0);
        assert_eq!(r.tour[0], 0);
    }

    #[test]
    fn held_karp_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let n = rng.gen_range(3..8);
            let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0))).collect();
            let cost = |i: usize, j: usize| (pts[i].0 - pts[j].0).hypot(pts[i].1 - pts[j].1);
            let nodes: Vec<usize> = (0..n).collect();
            let hk = held_karp(&nodes, &cost);
            assert!((hk.value - brute_force(&nodes, &cost)).abs() < 1e-9);
            assert_eq!(hk.tour.len(), n);
        }
    }

    #[test]
    fn mip_path_matches_held_karp() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in [4usize, 6, 9] {
            let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0))).collect();
            let cost = |i: usize, j: usize| (pts[i].0 - pts[j].0).hypot(pts[i].1 - pts[j].1);
            let nodes: Vec<usize> = (0..n).collect();
            let mip = tsp_mip(&nodes, &cost, Limits::default()).unwrap();
            assert!((mip.value - held_karp(&nodes, &cost).value).abs() < 1e-6);
        }
    }

    #[test]
    fn large_instance_uses_mip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 18;
        let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen_range(0.0..100.0), rng.gen_range(0.0..100.0))).collect();
        let cost = |i: usize, j: usize| (pts[i].0 - pts[j].0).hypot(pts[i].1 - pts[j].1);
        let nodes: Vec<usize> = (0..n).collect();
        let r = symmetric_tsp(&nodes, cost, Limits::default()).unwrap();
        assert_eq!(r.tour.len(), n);
        assert!(r.value > 0.0);
    }

    #[test]
    fn subtours() {
        let nodes: Vec<usize> = (0..6).collect();
        let mut e = crate::model::tour_edges(&[0, 1, 2]);
        e.extend(crate::model::tour_edges(&[3, 4, 5]));
        assert_eq!(find_subtours(&nodes, &e), vec![vec![0, 1, 2], vec![3, 4, 5]]);
        assert!(find_subtours(&nodes, &crate::model::tour_edges(&[0, 1, 2, 3, 4, 5])).is_empty());
    }

    #[test]
    fn subtour_cut_excludes_component() {
        let nodes: Vec<usize> = (0..6).collect();
        let (m, ev) = degree_model(&nodes, &|_, _| 1.0, 1.0);
        let mut x = vec![0.0; m.n_vars()];
        for (e, v) in &ev {
            if [Edge(0, 1), Edge(1, 2), Edge(0, 2), Edge(3, 4), Edge(4, 5), Edge(3, 5)].contains(e) {
                x[v.0] = 1.0;
            }
        }
        let cut = subtour_cut(&[0, 1, 2], &ev);
        assert!(cut.violation(&x) > 0.5);
    }

    #[test]
    fn canonical_orientation() {
        assert_eq!(canonical_cycle(&[3, 1, 0, 2]), vec![0, 1, 3, 2]);
        assert_eq!(canonical_cycle(&[0, 2, 3, 1]), vec![0, 1, 3, 2]);
    }
}
