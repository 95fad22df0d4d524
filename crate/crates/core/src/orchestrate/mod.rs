//! End-to-end STSP-GL solvers: adapted branch-and-price, hybrid, local-search
//! heuristic and the monolithic MIP benchmark.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::covers::FeasibilityCover;
use crate::error::{Error, Result};
use crate::model::TspGlSolution;

mod mip;
mod search;
mod trace;

pub use mip::{run_mip_benchmark, run_mip_with_cover};
pub use search::{run_bp, run_heuristic, run_hybrid};
pub use trace::{SolveTrace, TraceEvent};

/// Relative gap below which a closed search reports `Optimal`.
pub const OPTIMAL_GAP: f64 = 1e-6;

/// Budgets and knobs shared by all methods. Times are seconds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    pub time_limit_total: f64,
    pub rmp_time_limit: f64,
    pub pricing_time_limit: f64,
    /// Relative gap at which B&P, hybrid and the MIP stop. Zero asks for a
    /// proven optimum.
    pub gap_target: f64,
    /// Pricing rounds per B&P iteration.
    pub pricing_per_iteration: usize,
    /// Queue entries inspected per B&P iteration.
    pub evals_per_iteration: usize,
    /// First node-cover size tried by exploration; defaults to
    /// `max(|𝒞|, ⌈|N|/2⌉)`.
    pub explore_size: Option<usize>,
    pub seed: u64,
    pub max_iterations: Option<usize>,
    /// Parallel TSP-GL evaluations in phase 3. Results are deterministic only
    /// with one worker.
    pub workers: usize,
    /// Cut non-minimal pricing solutions lazily instead of minimalizing them.
    pub minimality_cuts: bool,
    /// Solve every Benders dual subproblem as an LP.
    pub lp_duals: bool,
    #[serde(skip)]
    pub cut_log: Option<PathBuf>,
    #[serde(skip)]
    pub cg_log: Option<PathBuf>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            time_limit_total: 3600.0,
            rmp_time_limit: 2400.0,
            pricing_time_limit: 1200.0,
            gap_target: 0.02,
            pricing_per_iteration: 5,
            evals_per_iteration: 5,
            explore_size: None,
            seed: 0,
            max_iterations: None,
            workers: 1,
            minimality_cuts: false,
            lp_duals: false,
            cut_log: None,
            cg_log: None,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        let times = [self.time_limit_total, self.rmp_time_limit, self.pricing_time_limit];
        if times.iter().any(|t| !(*t > 0.0)) {
            return Err(Error::Parameter("time limits must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.gap_target) {
            return Err(Error::Parameter(format!("gap target {} outside [0, 1)", self.gap_target)));
        }
        if self.pricing_per_iteration == 0 || self.evals_per_iteration == 0 || self.workers == 0 {
            return Err(Error::Parameter("iteration counts and workers must be positive".into()));
        }
        if self.explore_size == Some(0) {
            return Err(Error::Parameter("exploration size must be positive".into()));
        }
        Ok(())
    }
}

/// A scored cover waiting for exact evaluation.
#[derive(Clone, Debug)]
pub struct QueueEntry {
    pub ub: f64,
    pub lb: f64,
    pub cover: FeasibilityCover,
}

impl PartialEq for QueueEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for QueueEntry {}

impl PartialOrd for QueueEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for QueueEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.ub.total_cmp(&other.ub).then(self.lb.total_cmp(&other.lb)).then_with(|| self.cover.cmp(&other.cover))
    }
}

/// Min-queue on `(ub, lb, cover)`.
#[derive(Clone, Debug, Default)]
pub struct ScoredQueue {
    heap: BinaryHeap<Reverse<QueueEntry>>,
}

impl ScoredQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, ub: f64, lb: f64, cover: FeasibilityCover) {
        self.heap.push(Reverse(QueueEntry { ub, lb, cover }));
    }

    pub fn pop(&mut self) -> Option<QueueEntry> {
        self.heap.pop().map(|Reverse(e)| e)
    }

    pub fn peek(&self) -> Option<&QueueEntry> {
        self.heap.peek().map(|Reverse(e)| e)
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}

/// Best solution so far plus the bound trace.
#[derive(Clone, Debug, Default)]
pub struct IncumbentState {
    pub solution: Option<TspGlSolution>,
    pub cover: Option<FeasibilityCover>,
    pub lb: Option<f64>,
    pub evaluated: usize,
    pub trace: SolveTrace,
}

impl IncumbentState {
    pub fn started() -> Self {
        Self { trace: SolveTrace::started(), ..Self::default() }
    }

    pub fn ub(&self) -> Option<f64> {
        self.solution.as_ref().map(|s| s.objective)
    }

    pub fn ub_or_inf(&self) -> f64 {
        self.ub().unwrap_or(f64::INFINITY)
    }

    pub fn gap(&self) -> Option<f64> {
        crate::model::StspGlResult::compute_gap(self.ub(), self.lb)
    }

    /// Raises the global lower bound (clamped to the UB). Returns whether it
    /// moved.
    pub fn update_lb(&mut self, lb: f64) -> bool {
        let lb = lb.min(self.ub_or_inf());
        if self.lb.is_some_and(|cur| lb <= cur + 1e-12 * cur.abs().max(1.0)) {
            return false;
        }
        self.lb = Some(lb);
        let size = self.cover.as_ref().map(FeasibilityCover::len);
        self.trace.push("lb", self.ub(), self.lb, size, self.evaluated);
        true
    }

    fn cover_size(&self) -> Option<usize> {
        self.cover.as_ref().map(FeasibilityCover::len)
    }
}

/// Replaces the incumbent iff `sol` improves the UB by more than 1e-9.
pub fn update_incumbent(state: &mut IncumbentState, cover: &FeasibilityCover, sol: TspGlSolution) -> bool {
    if sol.objective >= state.ub_or_inf() - 1e-9 {
        return false;
    }
    state.solution = Some(sol);
    state.cover = Some(cover.clone());
    if let (Some(lb), Some(ub)) = (state.lb, state.ub()) {
        // an LP bound can exceed the optimum by solver noise only
        state.lb = Some(lb.min(ub));
    }
    let size = state.cover_size();
    state.trace.push("incumbent", state.ub(), state.lb, size, state.evaluated);
    true
}
