//! Thin LP/MIP layer. Models are plain data ([`LinearModel`]); every solve
//! hands a fresh copy to the engine, so lazily separated cuts are simply rows
//! appended to the model between solves.
//!
//! Dual values follow `d = c - Aᵀy` for both senses: at an optimum of a
//! minimisation, `y > 0` marks a binding lower row bound (`>=` rows).

use std::fmt::Write as _;
use std::time::Instant;

use highs::{HighsModelStatus, HighsSolutionStatus, RowProblem, Sense as HSense};

use crate::error::{Error, Result};

pub const FEAS_TOL: f64 = 1e-6;
pub const INT_TOL: f64 = 1e-5;
/// A reduced cost below this is treated as negative.
pub const RC_TOL: f64 = -1e-6;
/// Relative MIP gap used when the caller asks for a proven optimum.
pub const EXACT_GAP: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConstrId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lb: f64,
    pub ub: f64,
    pub integer: bool,
    pub obj: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub coeffs: Vec<(VarId, f64)>,
    pub cmp: Cmp,
    pub rhs: f64,
}

impl Constraint {
    pub fn new(name: impl Into<String>, coeffs: Vec<(VarId, f64)>, cmp: Cmp, rhs: f64) -> Self {
        Self { name: name.into(), coeffs: merge_coeffs(coeffs), cmp, rhs }
    }

    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|(v, a)| a * x[v.0]).sum()
    }

    /// Amount by which `x` violates the row (0 if satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs = self.activity(x);
        match self.cmp {
            Cmp::Le => (lhs - self.rhs).max(0.0),
            Cmp::Ge => (self.rhs - lhs).max(0.0),
            Cmp::Eq => (lhs - self.rhs).abs(),
        }
    }

    fn row_bounds(&self) -> (f64, f64) {
        match self.cmp {
            Cmp::Le => (f64::NEG_INFINITY, self.rhs),
            Cmp::Ge => (self.rhs, f64::INFINITY),
            Cmp::Eq => (self.rhs, self.rhs),
        }
    }
}

fn merge_coeffs(mut c: Vec<(VarId, f64)>) -> Vec<(VarId, f64)> {
    c.sort_by_key(|(v, _)| *v);
    let mut out: Vec<(VarId, f64)> = Vec::with_capacity(c.len());
    for (v, a) in c {
        match out.last_mut() {
            Some((w, b)) if *w == v => *b += a,
            _ => out.push((v, a)),
        }
    }
    out.retain(|(_, a)| *a != 0.0);
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearModel {
    pub sense: Sense,
    vars: Vec<Variable>,
    constrs: Vec<Constraint>,
}

impl LinearModel {
    pub fn new(sense: Sense) -> Self {
        Self { sense, vars: Vec::new(), constrs: Vec::new() }
    }

    pub fn add_var(&mut self, name: impl Into<String>, lb: f64, ub: f64, obj: f64) -> VarId {
        self.vars.push(Variable { name: name.into(), lb, ub, integer: false, obj });
        VarId(self.vars.len() - 1)
    }

    pub fn add_int_var(&mut self, name: impl Into<String>, lb: f64, ub: f64, obj: f64) -> VarId {
        self.vars.push(Variable { name: name.into(), lb, ub, integer: true, obj });
        VarId(self.vars.len() - 1)
    }

    pub fn add_binary(&mut self, name: impl Into<String>, obj: f64) -> VarId {
        self.add_int_var(name, 0.0, 1.0, obj)
    }

    pub fn add_constr(&mut self, name: impl Into<String>, coeffs: Vec<(VarId, f64)>, cmp: Cmp, rhs: f64) -> ConstrId {
        self.push(Constraint::new(name, coeffs, cmp, rhs))
    }

    pub fn push(&mut self, c: Constraint) -> ConstrId {
        self.constrs.push(c);
        ConstrId(self.constrs.len() - 1)
    }

    pub fn set_bounds(&mut self, v: VarId, lb: f64, ub: f64) {
        self.vars[v.0].lb = lb;
        self.vars[v.0].ub = ub;
    }

    pub fn var(&self, v: VarId) -> &Variable {
        &self.vars[v.0]
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn constrs(&self) -> &[Constraint] {
        &self.constrs
    }

    pub fn n_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn n_constrs(&self) -> usize {
        self.constrs.len()
    }

    pub fn has_integers(&self) -> bool {
        self.vars.iter().any(|v| v.integer)
    }

    /// Copy with integrality dropped.
    pub fn relaxed(&self) -> Self {
        let mut m = self.clone();
        for v in &mut m.vars {
            v.integer = false;
        }
        m
    }

    pub fn objective_at(&self, x: &[f64]) -> f64 {
        self.vars.iter().zip(x).map(|(v, xi)| v.obj * xi).sum()
    }

    /// Largest bound or row violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let bounds = self.vars.iter().zip(x).map(|(v, &xi)| (v.lb - xi).max(xi - v.ub).max(0.0));
        let rows = self.constrs.iter().map(|c| c.violation(x));
        bounds.chain(rows).fold(0.0, f64::max)
    }

    fn check(&self) -> Result<()> {
        for v in &self.vars {
            if !v.obj.is_finite() || v.lb.is_nan() || v.ub.is_nan() || v.lb > v.ub {
                return Err(Error::Backend(format!("variable {} has invalid data", v.name)));
            }
        }
        for c in &self.constrs {
            if !c.rhs.is_finite() || c.coeffs.iter().any(|(v, a)| !a.is_finite() || v.0 >= self.vars.len()) {
                return Err(Error::Backend(format!("constraint {} has invalid data", c.name)));
            }
        }
        Ok(())
    }

    /// CPLEX LP text, for debugging.
    pub fn to_lp_string(&self) -> String {
        let name = |i: usize| format!("x{i}_{}", sanitize(&self.vars[i].name));
        let term = |a: f64, i: usize| if a < 0.0 { format!(" - {} {}", -a, name(i)) } else { format!(" + {a} {}", name(i)) };
        let mut s = String::new();
        s.push_str(if self.sense == Sense::Minimize { "Minimize\n obj:" } else { "Maximize\n obj:" });
        for (i, v) in self.vars.iter().enumerate().filter(|(_, v)| v.obj != 0.0) {
            s.push_str(&term(v.obj, i));
        }
        s.push_str("\nSubject To\n");
        for (r, c) in self.constrs.iter().enumerate() {
            let _ = write!(s, " c{r}_{}:", sanitize(&c.name));
            for (v, a) in &c.coeffs {
                s.push_str(&term(*a, v.0));
            }
            let op = match c.cmp {
                Cmp::Le => "<=",
                Cmp::Ge => ">=",
                Cmp::Eq => "=",
            };
            let _ = writeln!(s, " {op} {}", c.rhs);
        }
        s.push_str("Bounds\n");
        for (i, v) in self.vars.iter().enumerate() {
            let lb = if v.lb.is_finite() { v.lb.to_string() } else { "-inf".into() };
            let ub = if v.ub.is_finite() { v.ub.to_string() } else { "+inf".into() };
            let _ = writeln!(s, " {lb} <= {} <= {ub}", name(i));
        }
        let ints: Vec<String> = (0..self.vars.len()).filter(|&i| self.vars[i].integer).map(name).collect();
        if !ints.is_empty() {
            let _ = writeln!(s, "General\n {}", ints.join(" "));
        }
        s.push_str("End\n");
        s
    }

    pub fn write_lp(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        std::fs::write(path, self.to_lp_string())?;
        Ok(())
    }
}

fn sanitize(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' }).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Feasible,
    Infeasible,
    Unbounded,
    TimeLimit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    pub objective: Option<f64>,
    pub values: Option<Vec<f64>>,
    /// Row duals; only for LPs solved to optimality.
    pub duals: Option<Vec<f64>>,
    pub reduced_costs: Option<Vec<f64>>,
    /// Proven bound on the optimum (MIP only).
    pub best_bound: Option<f64>,
    pub gap: Option<f64>,
    /// Set by [`resolve_with_cuts`] when the round budget or time ran out
    /// with violated cuts still pending.
    pub cut_incomplete: bool,
    /// Objective after each round of [`resolve_with_cuts`].
    pub round_objectives: Vec<f64>,
}

impl SolveOutcome {
    fn empty(status: SolveStatus) -> Self {
        Self {
            status,
            objective: None,
            values: None,
            duals: None,
            reduced_costs: None,
            best_bound: None,
            gap: None,
            cut_incomplete: false,
            round_objectives: Vec::new(),
        }
    }

    pub fn value(&self, v: VarId) -> f64 {
        self.values.as_ref().map(|x| x[v.0]).unwrap_or(0.0)
    }

    pub fn dual(&self, c: ConstrId) -> f64 {
        self.duals.as_ref().map(|y| y[c.0]).unwrap_or(0.0)
    }

    pub fn has_solution(&self) -> bool {
        self.values.is_some()
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

/// Solve limits. `time_limit` is in seconds; `gap` is the relative MIP gap.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Limits {
    pub time_limit: Option<f64>,
    pub gap: f64,
}

impl Default for Limits {
    fn default() -> Self {
        Self { time_limit: None, gap: EXACT_GAP }
    }
}

impl Limits {
    pub fn time(secs: f64) -> Self {
        Self { time_limit: Some(secs), ..Self::default() }
    }

    pub fn until(deadline: Option<Instant>) -> Self {
        Self { time_limit: deadline.map(remaining_secs), ..Self::default() }
    }

    pub fn with_gap(self, gap: f64) -> Self {
        Self { gap, ..self }
    }
}

/// Seconds left until `deadline`, never negative.
pub fn remaining_secs(deadline: Instant) -> f64 {
    deadline.saturating_duration_since(Instant::now()).as_secs_f64()
}

/// Engine choice. Read from the `mp_backend` configuration key or the
/// `MP_BACKEND` environment variable.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Backend {
    #[default]
    Highs,
}

impl Backend {
    pub fn parse(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "highs" => Ok(Backend::Highs),
            other => Err(Error::Parameter(format!("unknown mp_backend `{other}`"))),
        }
    }

    pub fn from_env() -> Result<Self> {
        match std::env::var("MP_BACKEND") {
            Ok(v) if !v.is_empty() => Self::parse(&v),
            _ => Ok(Backend::Highs),
        }
    }
}

pub fn solve_lp(model: &LinearModel, limits: Limits) -> Result<SolveOutcome> {
    run_highs(model, false, limits)
}

pub fn solve_mip(model: &LinearModel, limits: Limits) -> Result<SolveOutcome> {
    run_highs(model, true, limits)
}

/// Solve, separate, append, repeat. `cut_source` sees each round's primal
/// values and returns the rows it finds violated. All appended rows stay in
/// `model`. With `max_rounds == 0` the model is solved once without
/// separation and the result is flagged incomplete.
pub fn resolve_with_cuts<F>(model: &mut LinearModel, limits: Limits, max_rounds: usize, mut cut_source: F) -> Result<SolveOutcome>
where
    F: FnMut(&[f64]) -> Vec<Constraint>,
{
    let deadline = limits.time_limit.map(|t| Instant::now() + std::time::Duration::from_secs_f64(t));
    let mut objectives = Vec::new();
    let mut round = 0;
    loop {
        let lim = Limits { time_limit: deadline.map(remaining_secs), ..limits };
        let mut out = solve_mip(model, lim)?;
        if let Some(o) = out.objective {
            objectives.push(o);
        }
        out.round_objectives = objectives.clone();
        if max_rounds == 0 {
            out.cut_incomplete = true;
            return Ok(out);
        }
        round += 1;
        let Some(x) = out.values.as_deref() else { return Ok(out) };
        let cuts = cut_source(x);
        if cuts.is_empty() {
            return Ok(out);
        }
        for c in cuts {
            model.push(c);
        }
        let out_of_time = deadline.is_some_and(|d| remaining_secs(d) <= 0.0);
        if round >= max_rounds || out_of_time || out.status == SolveStatus::TimeLimit {
            out.cut_incomplete = true;
            if out_of_time {
                out.status = SolveStatus::TimeLimit;
            }
            return Ok(out);
        }
    }
}

/// Lagrangian dual objective of an LP solution, `Σ y·(row bound) + Σ d·(column bound)`,
/// picking the bound each multiplier's sign refers to.
pub fn dual_objective(model: &LinearModel, out: &SolveOutcome) -> Option<f64> {
    let y = out.duals.as_ref()?;
    let d = out.reduced_costs.as_ref()?;
    let sign = if model.sense == Sense::Minimize { 1.0 } else { -1.0 };
    let pick = |m: f64, lo: f64, hi: f64| {
        let m = sign * m;
        if m > 0.0 {
            m * lo
        } else if m < 0.0 {
            m * hi
        } else {
            0.0
        }
    };
    let rows: f64 = model
        .constrs
        .iter()
        .zip(y)
        .map(|(c, &yi)| {
            let (lo, hi) = c.row_bounds();
            pick(yi, lo, hi)
        })
        .sum();
    let cols: f64 = model.vars.iter().zip(d).map(|(v, &dj)| pick(dj, v.lb, v.ub)).sum();
    Some(sign * (rows + cols))
}

fn run_highs(model: &LinearModel, integer: bool, limits: Limits) -> Result<SolveOutcome> {
    model.check()?;
    let integer = integer && model.has_integers();
    if model.vars.is_empty() {
        let feasible = model.constrs.iter().all(|c| c.violation(&[]) <= FEAS_TOL);
        if !feasible {
            return Ok(SolveOutcome::empty(SolveStatus::Infeasible));
        }
        return Ok(SolveOutcome {
            objective: Some(0.0),
            values: Some(Vec::new()),
            duals: (!integer).then(|| vec![0.0; model.constrs.len()]),
            reduced_costs: (!integer).then(Vec::new),
            ..SolveOutcome::empty(SolveStatus::Optimal)
        });
    }
    let sign = if model.sense == Sense::Minimize { 1.0 } else { -1.0 };
    let mut pb = RowProblem::default();
    let cols: Vec<_> = model
        .vars
        .iter()
        .map(|v| {
            if integer && v.integer {
                pb.add_integer_column(sign * v.obj, v.lb..=v.ub)
            } else {
                pb.add_column(sign * v.obj, v.lb..=v.ub)
            }
        })
        .collect();
    for c in &model.constrs {
        let (lo, hi) = c.row_bounds();
        let row: Vec<_> = c.coeffs.iter().map(|(v, a)| (cols[v.0], *a)).collect();
        pb.add_row(lo..=hi, row);
    }
    let mut m = pb.optimise(HSense::Minimise);
    m.make_quiet();
    m.set_option("threads", 1);
    if let Some(t) = limits.time_limit {
        m.set_option("time_limit", t.max(1e-3));
    }
    if integer {
        m.set_option("mip_rel_gap", limits.gap.max(0.0));
    }
    let solved = m.try_solve().map_err(|e| Error::Backend(format!("HiGHS run failed: {e:?}")))?;
    let status = solved.status();
    let has_primal = solved.primal_solution_status() == HighsSolutionStatus::Feasible;
    let st = match status {
        HighsModelStatus::Optimal => SolveStatus::Optimal,
        HighsModelStatus::Infeasible => SolveStatus::Infeasible,
        // Every model built in this crate has a bounded objective, so the
        // ambiguous status can only mean an empty feasible region.
        HighsModelStatus::UnboundedOrInfeasible => SolveStatus::Infeasible,
        HighsModelStatus::Unbounded => SolveStatus::Unbounded,
        HighsModelStatus::ReachedTimeLimit => SolveStatus::TimeLimit,
        HighsModelStatus::ReachedIterationLimit
        | HighsModelStatus::ReachedSolutionLimit
        | HighsModelStatus::ReachedInterrupt
        | HighsModelStatus::ObjectiveBound
        | HighsModelStatus::ObjectiveTarget
            if has_primal =>
        {
            SolveStatus::Feasible
        }
        other => return Err(Error::Backend(format!("HiGHS model status {other:?}"))),
    };
    let mut out = SolveOutcome::empty(st);
    if matches!(st, SolveStatus::Infeasible | SolveStatus::Unbounded) {
        return Ok(out);
    }
    if has_primal {
        let sol = solved.get_solution();
        let mut x = sol.columns().to_vec();
        for (xi, v) in x.iter_mut().zip(&model.vars) {
            if integer && v.integer {
                *xi = xi.round();
            }
        }
        out.objective = Some(sign * solved.objective_value());
        if !integer && st == SolveStatus::Optimal {
            out.duals = Some(sol.dual_rows().iter().map(|y| sign * y).collect());
            out.reduced_costs = Some(sol.dual_columns().iter().map(|d| sign * d).collect());
        }
        out.values = Some(x);
    }
    if integer {
        if let Ok(b) = solved.double_info_value(c"mip_dual_bound") {
            if b.is_finite() {
                out.best_bound = Some(sign * b);
            }
        }
        out.gap = out.objective.map(|_| solved.mip_gap());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn one_dimensional_lp() {
        let mut m = LinearModel::new(Sense::Minimize);
        let x = m.add_var("x", f64::NEG_INFINITY, f64::INFINITY, 1.0);
        let c = m.add_constr("lb", vec![(x, 1.0)], Cmp::Ge, 3.0);
        let out = solve_lp(&m, Limits::default()).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal);
        assert!((out.objective.unwrap() - 3.0).abs() < 1e-9);
        assert!((out.dual(c) - 1.0).abs() < 1e-9);
        assert!((dual_objective(&m, &out).unwrap() - 3.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_lp() {
        let mut m = LinearModel::new(Sense::Minimize);
        let x = m.add_var("x", 0.0, 1.0, 1.0);
        m.add_constr("c", vec![(x, 1.0)], Cmp::Ge, 2.0);
        assert_eq!(solve_lp(&m, Limits::default()).unwrap().status, SolveStatus::Infeasible);
    }

    #[test]
    fn knapsack_mip() {
        let mut m = LinearModel::new(Sense::Maximize);
        let x = m.add_binary("x", 3.0);
        let y = m.add_binary("y", 2.0);
        m.add_constr("cap", vec![(x, 1.0), (y, 1.0)], Cmp::Le, 1.0);
        let out = solve_mip(&m, Limits::default()).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal);
        assert_eq!(out.objective, Some(3.0));
        assert_eq!(out.value(x), 1.0);
        assert!(out.duals.is_none());
    }

    #[test]
    fn gap_limit_is_respected() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut m = LinearModel::new(Sense::Maximize);
        let items: Vec<_> = (0..40).map(|i| m.add_binary(format!("i{i}"), rng.gen_range(10.0..60.0))).collect();
        let w: Vec<(VarId, f64)> = items.iter().map(|&v| (v, rng.gen_range(5.0..40.0))).collect();
        m.add_constr("cap", w, Cmp::Le, 200.0);
        let out = solve_mip(&m, Limits::default().with_gap(0.02)).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal);
        assert!(out.gap.unwrap() <= 0.02 + 1e-12);
        let b = out.best_bound.unwrap();
        assert!(b >= out.objective.unwrap() - 1e-9);
    }

    #[test]
    fn duplicate_coefficients_merge() {
        let c = Constraint::new("c", vec![(VarId(1), 1.0), (VarId(0), 2.0), (VarId(1), 1.5)], Cmp::Le, 1.0);
        assert_eq!(c.coeffs, vec![(VarId(0), 2.0), (VarId(1), 2.5)]);
    }

    fn k4_degree_model() -> (LinearModel, Vec<((usize, usize), VarId)>) {
        let cost = |i: usize, j: usize| [[0., 1., 9., 1.], [1., 0., 1., 9.], [9., 1., 0., 1.], [1., 9., 1., 0.]][i][j];
        let mut m = LinearModel::new(Sense::Minimize);
        let mut e = Vec::new();
        for i in 0..4 {
            for j in (i + 1)..4 {
                e.push(((i, j), m.add_binary(format!("e{i}{j}"), cost(i, j))));
            }
        }
        for i in 0..4 {
            let row = e.iter().filter(|((a, b), _)| *a == i || *b == i).map(|(_, v)| (*v, 1.0)).collect();
            m.add_constr(format!("deg{i}"), row, Cmp::Eq, 2.0);
        }
        (m, e)
    }

    #[test]
    fn cut_loop_identity_without_cuts() {
        let (mut m, _) = k4_degree_model();
        let plain = solve_mip(&m, Limits::default()).unwrap();
        let looped = resolve_with_cuts(&mut m, Limits::default(), 10, |_| Vec::new()).unwrap();
        assert_eq!(plain.objective, looped.objective);
        assert!(!looped.cut_incomplete);
        assert_eq!(looped.round_objectives.len(), 1);
    }

    #[test]
    fn cut_loop_zero_rounds_is_incomplete() {
        let (mut m, _) = k4_degree_model();
        let out = resolve_with_cuts(&mut m, Limits::default(), 0, |_| panic!("no separation expected")).unwrap();
        assert!(out.cut_incomplete);
        assert!(out.has_solution());
    }

    #[test]
    fn cut_loop_keeps_cuts_and_objective_nondecreasing() {
        let (mut m, e) = k4_degree_model();
        let rows_before = m.n_constrs();
        let out = resolve_with_cuts(&mut m, Limits::default(), 20, |x| {
            // on 4 nodes a degree-2 solution is a 4-cycle unless it is two 2-cycles,
            // which binaries cannot form, so only check the Hamiltonian property
            let chosen: Vec<(usize, usize)> = e.iter().filter(|(_, v)| x[v.0] > 0.5).map(|(p, _)| *p).collect();
            if chosen.len() == 4 {
                Vec::new()
            } else {
                vec![Constraint::new("sec", e.iter().map(|(_, v)| (*v, 1.0)).collect(), Cmp::Eq, 4.0)]
            }
        })
        .unwrap();
        assert_eq!(out.objective, Some(4.0));
        assert!(m.n_constrs() >= rows_before);
        assert!(out.round_objectives.windows(2).all(|w| w[1] >= w[0] - 1e-9));
    }

    #[test]
    fn weak_duality_on_random_lps() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..30 {
            let mut m = LinearModel::new(Sense::Minimize);
            let xs: Vec<_> = (0..6).map(|i| m.add_var(format!("x{i}"), 0.0, rng.gen_range(1.0..5.0), rng.gen_range(-2.0..5.0))).collect();
            for r in 0..4 {
                let row = xs.iter().map(|&v| (v, rng.gen_range(-1.0..3.0))).collect();
                let cmp = [Cmp::Le, Cmp::Ge, Cmp::Eq][r % 3];
                m.add_constr(format!("r{r}"), row, cmp, rng.gen_range(0.0..2.0));
            }
            let out = solve_lp(&m, Limits::default()).unwrap();
            if out.status != SolveStatus::Optimal {
                continue;
            }
            let primal = out.objective.unwrap();
            let dual = dual_objective(&m, &out).unwrap();
            assert!(dual <= primal + 1e-6 * primal.abs().max(1.0), "dual {dual} > primal {primal}");
            assert!((dual - primal).abs() <= 1e-6 * primal.abs().max(1.0));
        }
    }

    #[test]
    fn max_lp_duals_follow_same_convention() {
        // max x s.t. x <= 2  ->  d = c - y = 0 with y = 1
        let mut m = LinearModel::new(Sense::Maximize);
        let x = m.add_var("x", 0.0, f64::INFINITY, 1.0);
        let c = m.add_constr("ub", vec![(x, 1.0)], Cmp::Le, 2.0);
        let out = solve_lp(&m, Limits::default()).unwrap();
        assert_eq!(out.objective, Some(2.0));
        assert!((out.dual(c) - 1.0).abs() < 1e-9);
        assert!((dual_objective(&m, &out).unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn lp_export_mentions_every_row() {
        let (m, _) = k4_degree_model();
        let s = m.to_lp_string();
        assert!(s.starts_with("Minimize"));
        assert_eq!(s.matches("deg").count(), 4);
        assert!(s.contains("General"));
    }

    #[test]
    fn backend_selection() {
        assert_eq!(Backend::parse("HiGHS").unwrap(), Backend::Highs);
        assert!(Backend::parse("cplex").is_err());
    }
}
