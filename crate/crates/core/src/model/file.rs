//! JSON instance files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Instance, InstanceParts, Request};
use crate::error::{Error, Result};

/// How coordinates are turned into distances.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rounding {
    /// TSPLIB EUC_2D: nearest integer of the Euclidean distance.
    #[default]
    Euc2d,
    /// Unrounded Euclidean distance.
    Exact,
}

impl Rounding {
    pub fn distance(self, a: (f64, f64), b: (f64, f64)) -> f64 {
        let d = (a.0 - b.0).hypot(a.1 - b.1);
        match self {
            Rounding::Euc2d => (d + 0.5).floor(),
            Rounding::Exact => d,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeCoord {
    pub id: usize,
    pub x: f64,
    pub y: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RequestRecord {
    pub h: usize,
    pub k: usize,
    pub demand: Vec<f64>,
}

fn default_alpha() -> f64 {
    0.25
}

/// On-disk instance. When both `nodes` and `dist` are present, `dist` wins
/// and the coordinates are kept for reference only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<Vec<NodeCoord>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dist: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub travel: Option<Vec<Vec<f64>>>,
    pub compulsory: Vec<usize>,
    pub requests: Vec<RequestRecord>,
    pub theta: f64,
    pub rho: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub rounding: Rounding,
}

/// Distance matrix of a point set.
pub fn euclidean_matrix(coords: &[(f64, f64)], rounding: Rounding) -> Vec<Vec<f64>> {
    coords
        .iter()
        .map(|&a| coords.iter().map(|&b| rounding.distance(a, b)).collect())
        .collect()
}

impl InstanceFile {
    pub fn into_instance(self) -> Result<Instance> {
        let coords = match &self.nodes {
            Some(nodes) => {
                let mut sorted = nodes.clone();
                sorted.sort_by_key(|n| n.id);
                if sorted.iter().enumerate().any(|(i, n)| n.id != i) {
                    return Err(Error::Parse("node ids must be exactly 0..n-1".into()));
                }
                Some(sorted.iter().map(|n| (n.x, n.y)).collect::<Vec<_>>())
            }
            None => None,
        };
        let design = match (&self.dist, &coords) {
            (Some(d), _) => d.clone(),
            (None, Some(c)) => euclidean_matrix(c, self.rounding),
            (None, None) => return Err(Error::Parse("instance needs `nodes` or `dist`".into())),
        };
        Instance::from_parts(InstanceParts {
            n: design.len(),
            compulsory: self.compulsory,
            design,
            travel: self.travel,
            coords,
            rounding: self.rounding,
            requests: self.requests.into_iter().map(|r| (Request::new(r.h, r.k), r.demand)).collect(),
            alpha: self.alpha,
            theta: self.theta,
            rho: self.rho,
        })
    }

    pub fn from_instance(inst: &Instance) -> Self {
        let n = inst.n_nodes();
        let matrix = |f: &dyn Fn(usize, usize) -> f64| -> Vec<Vec<f64>> {
            (0..n).map(|i| (0..n).map(|j| f(i, j)).collect()).collect()
        };
        let dist = matrix(&|i, j| inst.design(i, j));
        let travel = matrix(&|i, j| inst.travel(i, j));
        Self {
            nodes: inst
                .coords()
                .map(|c| c.iter().enumerate().map(|(id, &(x, y))| NodeCoord { id, x, y }).collect()),
            travel: (travel != dist).then_some(travel),
            dist: Some(dist),
            compulsory: inst.compulsory().to_vec(),
            requests: inst
                .requests()
                .iter()
                .enumerate()
                .map(|(r, q)| RequestRecord { h: q.h, k: q.k, demand: inst.demands(r).to_vec() })
                .collect(),
            theta: inst.theta(),
            rho: inst.rho(),
            alpha: inst.alpha(),
            rounding: inst.rounding(),
        }
    }
}

impl Instance {
    pub fn from_json_str(s: &str) -> Result<Self> {
        serde_json::from_str::<InstanceFile>(s)?.into_instance()
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&InstanceFile::from_instance(self)).expect("instance serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json_string() + "\n")?;
        Ok(())
    }
}
