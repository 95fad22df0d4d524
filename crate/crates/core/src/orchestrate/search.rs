//! Cover-based searches: adapted branch-and-price, its hybrid variant and the
//! local-search heuristic. All three score covers with cheap bounds, keep a
//! queue ordered by upper bound and solve TSP-GLs exactly with Benders.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::colgen::{build_rmp, lagrangian_lower_bound, solve_pricing, solve_rmp, CgLogLine, ColumnPool};
use crate::covers::{CoverAlgebra, FeasibilityCover, SeenRegistry};
use crate::error::Result;
use crate::model::{Instance, Status, StspGlResult};
use crate::mp::{remaining_secs, Limits};
use crate::scenarios::{deterministic_routing_costs, RoutingCostTable};
use crate::tspgl::benders::{BendersStatus, DualMode};
use crate::tspgl::{benders_solve_tspgl, cover_bounds, BendersOutcome, BoundEstimate, CutPool, SubInstance};

use super::{update_incumbent, IncumbentState, ScoredQueue, SearchConfig, OPTIMAL_GAP};

/// Columns with at least this RMP value are scored in phase 2.
const CHI_SUPPORT: f64 = 1e-6;
/// Consecutive idle heuristic iterations tolerated once exploration is spent.
const HEURISTIC_IDLE_LIMIT: usize = 20;

pub fn run_bp(inst: &Instance, cfg: &SearchConfig) -> Result<StspGlResult> {
    Search::new(inst, cfg)?.branch_and_price(false)
}

pub fn run_hybrid(inst: &Instance, cfg: &SearchConfig) -> Result<StspGlResult> {
    Search::new(inst, cfg)?.branch_and_price(true)
}

pub fn run_heuristic(inst: &Instance, cfg: &SearchConfig) -> Result<StspGlResult> {
    Search::new(inst, cfg)?.heuristic()
}

enum Scored {
    Queued,
    Discarded,
    Known,
}

struct Search<'a> {
    inst: &'a Instance,
    cfg: &'a SearchConfig,
    qt: RoutingCostTable,
    alg: CoverAlgebra<'a>,
    deadline: Instant,
    state: IncumbentState,
    queue: ScoredQueue,
    /// Every scored cover with its bounds.
    bounds: BTreeMap<FeasibilityCover, BoundEstimate>,
    /// Best known value per evaluated cover (a lower bound when pruned).
    exact: BTreeMap<FeasibilityCover, f64>,
    cuts: CutPool,
    rng: ChaCha8Rng,
    seen: SeenRegistry,
    timed_out: bool,
}

impl<'a> Search<'a> {
    fn new(inst: &'a Instance, cfg: &'a SearchConfig) -> Result<Self> {
        cfg.validate()?;
        let cuts = match &cfg.cut_log {
            Some(p) => CutPool::with_log(p)?,
            None => CutPool::new(),
        };
        Ok(Self {
            inst,
            cfg,
            qt: deterministic_routing_costs(inst)?,
            alg: CoverAlgebra::new(inst),
            deadline: Instant::now() + Duration::from_secs_f64(cfg.time_limit_total),
            state: IncumbentState::started(),
            queue: ScoredQueue::new(),
            bounds: BTreeMap::new(),
            exact: BTreeMap::new(),
            cuts,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            seen: SeenRegistry::new(),
            timed_out: false,
        })
    }

    fn out_of_time(&mut self) -> bool {
        if remaining_secs(self.deadline) <= 0.0 {
            self.timed_out = true;
        }
        self.timed_out
    }

    fn limits(&self, cap: f64) -> Limits {
        Limits::time(cap.min(remaining_secs(self.deadline)).max(0.0))
    }

    fn tol(&self) -> f64 {
        1e-9 * self.state.ub_or_inf().abs().clamp(1.0, f64::MAX)
    }

    fn closed(&self) -> bool {
        self.state.gap().is_some_and(|g| g <= self.cfg.gap_target.max(OPTIMAL_GAP))
    }

    fn no_cover_exists(&self) -> bool {
        !self.alg.is_cover(FeasibilityCover::all(self.inst).requests())
    }

    fn explore_sizes(&self) -> Vec<usize> {
        let n = self.inst.n_nodes();
        let lo = self.inst.compulsory().len().max(1);
        let first = self.cfg.explore_size.unwrap_or(n.div_ceil(2)).clamp(lo, n);
        (first..=n).chain((lo..first).rev()).collect()
    }

    /// Scores a new cover and queues it unless its lower bound already
    /// reaches the incumbent.
    fn enqueue(&mut self, cover: FeasibilityCover) -> Result<Scored> {
        if self.bounds.contains_key(&cover) {
            return Ok(Scored::Known);
        }
        let sub = SubInstance::new(self.inst, &self.qt, &cover);
        let b = cover_bounds(&sub, self.limits(self.cfg.time_limit_total))?;
        self.cuts.record(&sub.nodes, b.subtours.iter().cloned());
        let (lb, ub) = (b.lb, b.ub);
        self.bounds.insert(cover.clone(), b);
        if lb >= self.state.ub_or_inf() - self.tol() {
            return Ok(Scored::Discarded);
        }
        self.queue.push(ub, lb, cover);
        Ok(Scored::Queued)
    }

    fn benders(&self, cover: &FeasibilityCover, ub: f64) -> Result<BendersOutcome> {
        let sub = SubInstance::new(self.inst, &self.qt, cover);
        let mode = if self.cfg.lp_duals { DualMode::Lp } else { DualMode::Fast };
        benders_solve_tspgl(&sub, self.bounds.get(cover), ub, self.limits(self.cfg.time_limit_total), &self.cuts, mode)
    }

    fn absorb(&mut self, cover: &FeasibilityCover, out: BendersOutcome) {
        self.state.evaluated += 1;
        let value = match (&out.status, &out.solution) {
            (BendersStatus::Optimal, Some(s)) => s.objective,
            _ => out.lower_bound,
        };
        self.exact.insert(cover.clone(), value);
        if out.status == BendersStatus::TimeLimit {
            self.timed_out = true;
        }
        if let Some(sol) = out.solution {
            if out.status != BendersStatus::Pruned || sol.objective < self.state.ub_or_inf() {
                update_incumbent(&mut self.state, cover, sol);
            }
        }
    }

    /// Exact TSP-GL values for a batch; parallel when more than one worker
    /// is configured (every run then sees the batch-start UB).
    fn evaluate_batch(&mut self, covers: Vec<FeasibilityCover>) -> Result<()> {
        if self.cfg.workers <= 1 || covers.len() <= 1 {
            for c in covers {
                if self.out_of_time() {
                    break;
                }
                let lb = self.bounds.get(&c).map(|b| b.lb).unwrap_or(f64::NEG_INFINITY);
                if lb >= self.state.ub_or_inf() - self.tol() {
                    continue;
                }
                let out = self.benders(&c, self.state.ub_or_inf())?;
                self.absorb(&c, out);
            }
            return Ok(());
        }
        let ub = self.state.ub_or_inf();
        let chunk = covers.len().div_ceil(self.cfg.workers);
        let this = &*self;
        let results: Vec<Result<BendersOutcome>> = std::thread::scope(|s| {
            let handles: Vec<_> = covers
                .chunks(chunk)
                .map(|part| s.spawn(move || part.iter().map(|c| this.benders(c, ub)).collect::<Vec<_>>()))
                .collect();
            handles.into_iter().flat_map(|h| h.join().expect("evaluation worker panicked")).collect()
        });
        for (c, out) in covers.iter().zip(results) {
            self.absorb(c, out?);
        }
        Ok(())
    }

    fn add_neighbour(&mut self, cover: Option<FeasibilityCover>, pool: &mut ColumnPool) -> Result<()> {
        let Some(c) = cover else { return Ok(()) };
        if pool.contains(&c) || pool.is_branched(&c) {
            return Ok(());
        }
        pool.add(self.inst, c.clone());
        if let Scored::Discarded = self.enqueue(c.clone())? {
            pool.add_branching_cut(&c);
        }
        Ok(())
    }

    fn finish(mut self, proven_closed: bool) -> StspGlResult {
        self.cuts.flush();
        let gap = self.state.gap();
        let status = match self.state.ub() {
            None if self.timed_out => Status::TimeLimit,
            None => Status::Infeasible,
            Some(_) if proven_closed && gap.is_some_and(|g| g <= OPTIMAL_GAP) => Status::Optimal,
            Some(_) if self.timed_out => Status::TimeLimit,
            Some(_) => Status::Feasible,
        };
        let size = self.state.cover.as_ref().map(FeasibilityCover::len);
        self.state.trace.push("final", self.state.ub(), self.state.lb, size, self.state.evaluated);
        StspGlResult {
            status,
            upper_bound: self.state.ub(),
            lower_bound: self.state.lb,
            gap,
            incumbent: self.state.solution,
            cover: self.state.cover,
            trace: self.state.trace,
        }
    }

    fn branch_and_price(mut self, hybrid: bool) -> Result<StspGlResult> {
        if self.no_cover_exists() {
            return Ok(self.finish(false));
        }
        let mut log = match &self.cfg.cg_log {
            Some(p) => {
                let mut w = BufWriter::new(File::create(p)?);
                writeln!(w, "{}", CgLogLine::HEADER)?;
                Some(w)
            }
            None => None,
        };
        let mut pool = ColumnPool::new(self.inst);
        if hybrid {
            let size = self.explore_sizes()[0];
            for _ in 0..self.cfg.evals_per_iteration {
                let c = self.alg.explore(size, &mut self.rng, &self.seen);
                self.add_neighbour(c, &mut pool)?;
            }
        }
        let mut iter = 0usize;
        let mut round = 0usize;
        loop {
            if self.closed() || self.out_of_time() || self.cfg.max_iterations.is_some_and(|m| iter >= m) {
                break;
            }
            iter += 1;
            let mut progress = false;

            // phase 1: column generation rounds
            for _ in 0..self.cfg.pricing_per_iteration {
                if self.out_of_time() {
                    break;
                }
                let rmp = build_rmp(self.inst, &pool, &self.qt);
                let Some(sol) = solve_rmp(&rmp, self.limits(self.cfg.rmp_time_limit))? else {
                    self.out_of_time();
                    break;
                };
                let pricing = solve_pricing(
                    self.inst,
                    &sol.duals,
                    &pool,
                    self.limits(self.cfg.pricing_time_limit),
                    self.cfg.minimality_cuts,
                )?;
                let lb = pricing.bound.map(|b| lagrangian_lower_bound(sol.objective, b));
                if let Some(lb) = lb {
                    progress |= self.state.update_lb(lb);
                }
                round += 1;
                if let Some(w) = log.as_mut() {
                    let line = CgLogLine {
                        iter: round,
                        rmp_obj: sol.objective,
                        pricing_obj: pricing.objective,
                        lb,
                        columns: pool.len(),
                        phi: pool.phi_len(),
                    };
                    writeln!(w, "{line}")?;
                }
                let Some(c) = pricing.cover else { break };
                progress = true;
                pool.add(self.inst, c.clone());
                if hybrid {
                    let ls = self.alg.local_search(&c, &mut self.rng);
                    self.add_neighbour(ls, &mut pool)?;
                    let size = c.nodes().len().max(self.inst.compulsory().len());
                    let ex = self.alg.explore(size, &mut self.rng, &self.seen);
                    self.add_neighbour(ex, &mut pool)?;
                }
                if self.closed() {
                    break;
                }
            }
            if self.closed() || self.out_of_time() {
                break;
            }

            // phase 2: score covers in the support of the current RMP
            let rmp = build_rmp(self.inst, &pool, &self.qt);
            let Some(sol) = solve_rmp(&rmp, self.limits(self.cfg.rmp_time_limit))? else {
                self.out_of_time();
                break;
            };
            let support: Vec<FeasibilityCover> = pool
                .columns()
                .iter()
                .zip(&sol.chi)
                .filter(|(col, &v)| v > CHI_SUPPORT && !pool.is_branched(&col.cover))
                .map(|(col, _)| col.cover.clone())
                .collect();
            for c in support {
                match self.enqueue(c.clone())? {
                    Scored::Queued => progress = true,
                    Scored::Discarded => {
                        pool.add_branching_cut(&c);
                        progress = true;
                    }
                    Scored::Known => {}
                }
            }
            if self.state.ub().is_none() && self.queue.is_empty() {
                if let Scored::Queued = self.enqueue(FeasibilityCover::all(self.inst))? {
                    progress = true;
                }
            }

            // phase 3: exact evaluation of the most promising covers
            let mut batch = Vec::new();
            while batch.len() < self.cfg.evals_per_iteration {
                let Some(e) = self.queue.pop() else { break };
                progress = true;
                pool.add_branching_cut(&e.cover);
                if e.lb < self.state.ub_or_inf() - self.tol() {
                    batch.push(e.cover);
                }
            }
            self.evaluate_batch(batch)?;
            if !progress {
                break;
            }
        }
        if let Some(mut w) = log {
            w.flush()?;
        }
        let closed = self.closed();
        Ok(self.finish(closed))
    }

    /// Best two scored covers by current upper bound (exact value once solved).
    fn best_known(&self, k: usize) -> Vec<FeasibilityCover> {
        let mut all: Vec<(f64, f64, &FeasibilityCover)> = self
            .bounds
            .iter()
            .map(|(c, b)| (self.exact.get(c).copied().unwrap_or(b.ub), b.lb, c))
            .collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)).then_with(|| a.2.cmp(b.2)));
        all.into_iter().take(k).map(|(_, _, c)| c.clone()).collect()
    }

    fn heuristic(mut self) -> Result<StspGlResult> {
        if self.no_cover_exists() {
            return Ok(self.finish(false));
        }
        let sizes = self.explore_sizes();
        let mut size_at = 0;
        let mut idle = 0;
        let mut iter = 0usize;
        loop {
            if self.out_of_time() || self.cfg.max_iterations.is_some_and(|m| iter >= m) {
                break;
            }
            iter += 1;
            let mut progress = false;
            while size_at < sizes.len() {
                match self.alg.explore(sizes[size_at], &mut self.rng, &self.seen) {
                    Some(c) => {
                        progress |= !matches!(self.enqueue(c)?, Scored::Known);
                        break;
                    }
                    None => size_at += 1,
                }
            }
            for c in self.best_known(2) {
                if let Some(q) = self.alg.local_search(&c, &mut self.rng) {
                    progress |= !matches!(self.enqueue(q)?, Scored::Known);
                }
            }
            while let Some(e) = self.queue.pop() {
                if e.lb < self.state.ub_or_inf() - self.tol() {
                    self.evaluate_batch(vec![e.cover])?;
                    progress = true;
                    break;
                }
            }
            if progress {
                idle = 0;
            } else if size_at >= sizes.len() && self.queue.is_empty() {
                idle += 1;
                if idle >= HEURISTIC_IDLE_LIMIT {
                    break;
                }
            }
        }
        Ok(self.finish(false))
    }
}
