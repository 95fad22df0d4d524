//! Feasibility covers: minimality extraction, random node covers,
//! exploration and the swap local search.

use std::collections::HashSet;
use std::hash::{Hash, Hasher};
use std::sync::Mutex;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::model::{Instance, NodeId, Request};
use crate::scenarios::CoverChecker;

/// Draws tried by [`CoverAlgebra::random_minimal_node_cover`] before giving up.
pub const NODE_COVER_ATTEMPTS: usize = 200;

/// A request subset `Q ⊆ D` (indices, canonical order) with its node set
/// `𝒞 ∪ {h, k : (h,k) ∈ Q}`. Equality and ordering look at the requests only.
#[derive(Clone, Debug)]
pub struct FeasibilityCover {
    requests: Vec<usize>,
    pairs: Vec<Request>,
    nodes: Vec<NodeId>,
    /// `(lb, ub)` from the bound estimator once scored.
    pub bounds: Option<(f64, f64)>,
    /// Set once the cover's TSP-GL has been solved exactly.
    pub evaluated: bool,
}

impl FeasibilityCover {
    /// Builds the cover without checking the chance constraint.
    pub fn new(inst: &Instance, requests: impl IntoIterator<Item = usize>) -> Self {
        let mut requests: Vec<usize> = requests.into_iter().collect();
        requests.sort_unstable();
        requests.dedup();
        let pairs: Vec<Request> = requests.iter().map(|&r| inst.requests()[r]).collect();
        let mut nodes: Vec<NodeId> = inst.compulsory().to_vec();
        nodes.extend(pairs.iter().flat_map(|p| [p.h, p.k]));
        nodes.sort_unstable();
        nodes.dedup();
        Self { requests, pairs, nodes, bounds: None, evaluated: false }
    }

    /// All of `D`.
    pub fn all(inst: &Instance) -> Self {
        Self::new(inst, 0..inst.n_requests())
    }

    pub fn requests(&self) -> &[usize] {
        &self.requests
    }

    pub fn pairs(&self) -> &[Request] {
        &self.pairs
    }

    /// `N'(Q)`, sorted.
    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.requests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.requests.is_empty()
    }

    /// `l_Q(i)`.
    pub fn node_incidence(&self, i: NodeId) -> bool {
        self.nodes.binary_search(&i).is_ok()
    }

    /// `r_Q^{hk}` for request index `r`.
    pub fn request_incidence(&self, r: usize) -> bool {
        self.requests.binary_search(&r).is_ok()
    }

    pub fn is_subset_of(&self, other: &FeasibilityCover) -> bool {
        self.requests.iter().all(|r| other.request_incidence(*r))
    }
}

impl PartialEq for FeasibilityCover {
    fn eq(&self, other: &Self) -> bool {
        self.requests == other.requests
    }
}

impl Eq for FeasibilityCover {}

impl Hash for FeasibilityCover {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.requests.hash(state)
    }
}

impl PartialOrd for FeasibilityCover {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for FeasibilityCover {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.requests.cmp(&other.requests)
    }
}

impl Serialize for FeasibilityCover {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.pairs.serialize(s)
    }
}

/// A node set `𝒞 ⊆ V' ⊆ N` whose induced requests contain a cover.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct NodeCover {
    pub nodes: Vec<NodeId>,
}

/// Order in which `minimal_feasibility_cover` tries removals.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RemovalOrder {
    #[default]
    Canonical,
    Random(u64),
}

/// Sampled node sets already used by exploration. Check-and-insert is atomic.
#[derive(Debug, Default)]
pub struct SeenRegistry {
    inner: Mutex<HashSet<Vec<NodeId>>>,
}

impl SeenRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts `key`; false if it was already present.
    pub fn insert_if_new(&self, key: &[NodeId]) -> bool {
        self.inner.lock().expect("seen registry poisoned").insert(key.to_vec())
    }

    pub fn contains(&self, key: &[NodeId]) -> bool {
        self.inner.lock().expect("seen registry poisoned").contains(key)
    }

    pub fn len(&self) -> usize {
        self.inner.lock().expect("seen registry poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return acc;
        }
    }
    acc
}

fn combinations(items: &[NodeId], k: usize) -> Vec<Vec<NodeId>> {
    fn rec(items: &[NodeId], k: usize, start: usize, cur: &mut Vec<NodeId>, out: &mut Vec<Vec<NodeId>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..items.len() {
            if items.len() - i < k - cur.len() {
                break;
            }
            cur.push(items[i]);
            rec(items, k, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(items, k, 0, &mut Vec::new(), &mut out);
    out
}

/// Cover operations bound to one instance.
#[derive(Clone, Debug)]
pub struct CoverAlgebra<'a> {
    inst: &'a Instance,
    checker: CoverChecker,
}

impl<'a> CoverAlgebra<'a> {
    pub fn new(inst: &'a Instance) -> Self {
        Self { inst, checker: CoverChecker::new(inst) }
    }

    pub fn instance(&self) -> &'a Instance {
        self.inst
    }

    pub fn cover(&self, requests: impl IntoIterator<Item = usize>) -> FeasibilityCover {
        FeasibilityCover::new(self.inst, requests)
    }

    pub fn is_cover(&self, q: &[usize]) -> bool {
        self.checker.is_cover(q.iter().copied())
    }

    fn is_cover_without(&self, q: &[usize], skip: usize) -> bool {
        self.checker.is_cover(q.iter().copied().filter(|&r| r != skip))
    }

    /// Drops requests while the rest stays a cover. Restarting the scan after a successful removal is not
    /// needed: a request that could not be dropped from a larger set cannot
    /// be dropped from a subset either, so one pass reaches the same result.
    pub fn minimal_feasibility_cover(&self, q: &FeasibilityCover, order: RemovalOrder) -> Result<FeasibilityCover> {
        if !self.is_cover(q.requests()) {
            return Err(Error::Contract("input of minimal_feasibility_cover is not a feasibility cover".into()));
        }
        let mut scan = q.requests().to_vec();
        if let RemovalOrder::Random(seed) = order {
            scan.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        }
        let mut keep = q.requests().to_vec();
        for r in scan {
            if self.is_cover_without(&keep, r) {
                keep.retain(|&x| x != r);
            }
        }
        Ok(self.cover(keep))
    }

    /// No single request can be removed. False for non-covers.
    pub fn is_minimal(&self, q: &[usize]) -> bool {
        self.is_cover(q) && q.iter().all(|&r| !self.is_cover_without(q, r))
    }

    /// Requests with both endpoints in `nodes` (sorted).
    pub fn induced_requests(&self, nodes: &[NodeId]) -> Vec<usize> {
        self.inst
            .requests()
            .iter()
            .enumerate()
            .filter(|(_, p)| nodes.binary_search(&p.h).is_ok() && nodes.binary_search(&p.k).is_ok())
            .map(|(r, _)| r)
            .collect()
    }

    fn induces_cover(&self, nodes: &[NodeId]) -> bool {
        self.is_cover(&self.induced_requests(nodes))
    }

    /// Samples node sets of size `n` containing `𝒞` until one induces a cover
    /// and is not in `seen`, then drops non-compulsory nodes (in random order)
    /// while the remainder still induces a cover. When there are at most
    /// [`NODE_COVER_ATTEMPTS`] candidate sets they are enumerated instead, so
    /// exhaustion is detected exactly.
    pub fn random_minimal_node_cover<R: Rng>(&self, n: usize, rng: &mut R, seen: &SeenRegistry) -> Option<NodeCover> {
        let comp = self.inst.compulsory();
        let free: Vec<NodeId> = self.inst.nodes().filter(|i| !self.inst.is_compulsory(*i)).collect();
        if n < comp.len() {
            return None;
        }
        let extra = (n - comp.len()).min(free.len());
        let with_comp = |pick: &[NodeId]| {
            let mut v: Vec<NodeId> = comp.iter().chain(pick).copied().collect();
            v.sort_unstable();
            v
        };
        let total = binomial(free.len(), extra);
        let accept = |v: &Vec<NodeId>| !seen.contains(v) && self.induces_cover(v) && seen.insert_if_new(v);
        let sampled = if total <= NODE_COVER_ATTEMPTS as u128 {
            let mut all = combinations(&free, extra);
            all.shuffle(rng);
            all.into_iter().map(|p| with_comp(&p)).find(accept)
        } else {
            (0..NODE_COVER_ATTEMPTS)
                .map(|_| {
                    let pick: Vec<NodeId> = free.choose_multiple(rng, extra).copied().collect();
                    with_comp(&pick)
                })
                .find(accept)
        }?;
        let mut nodes = sampled;
        let mut order: Vec<NodeId> = nodes.iter().copied().filter(|i| !self.inst.is_compulsory(*i)).collect();
        order.shuffle(rng);
        for i in order {
            let trial: Vec<NodeId> = nodes.iter().copied().filter(|&x| x != i).collect();
            if self.induces_cover(&trial) {
                nodes = trial;
            }
        }
        Some(NodeCover { nodes })
    }

    /// Minimal cover inside the requests induced by a fresh random node cover.
    pub fn explore<R: Rng>(&self, n: usize, rng: &mut R, seen: &SeenRegistry) -> Option<FeasibilityCover> {
        let v = self.random_minimal_node_cover(n, rng, seen)?;
        let induced = self.cover(self.induced_requests(&v.nodes));
        self.minimal_feasibility_cover(&induced, RemovalOrder::Canonical).ok()
    }

    /// Swap-based local search around a cover. Returns `None` only when `q` is not a cover.
    pub fn local_search<R: Rng>(&self, q: &FeasibilityCover, rng: &mut R) -> Option<FeasibilityCover> {
        if !self.is_cover(q.requests()) {
            return None;
        }
        let mut cur = q.requests().to_vec();
        let mut removed = Vec::new();
        while !cur.is_empty() && self.is_cover(&cur) {
            let p = rng.gen_range(0..cur.len());
            removed.push(cur.swap_remove(p));
        }
        let mut candidates: Vec<usize> = (0..self.inst.n_requests())
            .filter(|r| !removed.contains(r) && !cur.contains(r))
            .collect();
        candidates.shuffle(rng);
        for r in candidates {
            if self.is_cover(&cur) {
                break;
            }
            cur.push(r);
        }
        if !self.is_cover(&cur) {
            removed.shuffle(rng);
            for r in removed {
                if self.is_cover(&cur) {
                    break;
                }
                cur.push(r);
            }
        }
        self.minimal_feasibility_cover(&self.cover(cur), RemovalOrder::Canonical).ok()
    }
}

pub fn minimal_feasibility_cover(inst: &Instance, q: &FeasibilityCover) -> Result<FeasibilityCover> {
    CoverAlgebra::new(inst).minimal_feasibility_cover(q, RemovalOrder::Canonical)
}

pub fn is_minimal(inst: &Instance, q: &FeasibilityCover) -> bool {
    CoverAlgebra::new(inst).is_minimal(q.requests())
}

pub fn random_minimal_node_cover(inst: &Instance, n: usize, seed: u64, seen: &SeenRegistry) -> Option<NodeCover> {
    CoverAlgebra::new(inst).random_minimal_node_cover(n, &mut ChaCha8Rng::seed_from_u64(seed), seen)
}

pub fn explore(inst: &Instance, n: usize, seed: u64, seen: &SeenRegistry) -> Option<FeasibilityCover> {
    CoverAlgebra::new(inst).explore(n, &mut ChaCha8Rng::seed_from_u64(seed), seen)
}

pub fn local_search(inst: &Instance, q: &FeasibilityCover, seed: u64) -> Option<FeasibilityCover> {
    CoverAlgebra::new(inst).local_search(q, &mut ChaCha8Rng::seed_from_u64(seed))
}
