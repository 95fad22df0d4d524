//! Bound trace of a solve, written as CSV for convergence plots.

use std::io::Write;
use std::time::Instant;

use crate::error::Result;

#[derive(Clone, Debug, PartialEq)]
pub struct TraceEvent {
    pub t_seconds: f64,
    pub event: String,
    pub ub: Option<f64>,
    pub lb: Option<f64>,
    pub cover_size: Option<usize>,
    /// Covers whose TSP-GL has been solved so far.
    pub nodes_visited: usize,
}

#[derive(Clone, Debug, Default)]
pub struct SolveTrace {
    start: Option<Instant>,
    pub events: Vec<TraceEvent>,
}

impl SolveTrace {
    pub const HEADER: &'static str = "t_seconds,event,ub,lb,cover_size,nodes_visited";

    pub fn started() -> Self {
        Self { start: Some(Instant::now()), events: Vec::new() }
    }

    pub fn elapsed(&self) -> f64 {
        self.start.map(|s| s.elapsed().as_secs_f64()).unwrap_or(0.0)
    }

    pub fn push(&mut self, event: &str, ub: Option<f64>, lb: Option<f64>, cover_size: Option<usize>, nodes_visited: usize) {
        let t_seconds = self.elapsed();
        self.events.push(TraceEvent { t_seconds, event: event.to_string(), ub, lb, cover_size, nodes_visited });
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(Self::HEADER.split(','))?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for e in &self.events {
            out.write_record([
                format!("{:.6}", e.t_seconds),
                e.event.clone(),
                opt(e.ub),
                opt(e.lb),
                e.cover_size.map(|c| c.to_string()).unwrap_or_default(),
                e.nodes_visited.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    /// UB nonincreasing, LB nondecreasing, UB >= LB, all up to `tol`
    /// relative. Returns the first offending event index.
    pub fn check_monotone(&self, tol: f64) -> std::result::Result<(), usize> {
        let close = |a: f64, b: f64| a <= b + tol * a.abs().max(b.abs()).max(1.0);
        let mut ub: Option<f64> = None;
        let mut lb: Option<f64> = None;
        for (k, e) in self.events.iter().enumerate() {
            if let (Some(prev), Some(cur)) = (ub, e.ub) {
                if !close(cur, prev) {
                    return Err(k);
                }
            }
            if let (Some(prev), Some(cur)) = (lb, e.lb) {
                if !close(prev, cur) {
                    return Err(k);
                }
            }
            if let (Some(u), Some(l)) = (e.ub, e.lb) {
                if !close(l, u) {
                    return Err(k);
                }
            }
            if e.ub.is_some() {
                ub = e.ub;
            }
            if e.lb.is_some() {
                lb = e.lb;
            }
        }
        Ok(())
    }
}
