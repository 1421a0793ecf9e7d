//! Graphs, node sets, probability vectors and the locality predicate.
//!
//! Edges are ordered pairs `(v, v')` read as "probability mass may flow from
//! `v` to `v'`". Every graph carries all self-loops `(v, v)`.

use std::fmt;

use bitvec::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed on probability sums.
pub const SUM_TOL: f64 = 1e-9;
/// Slack used when two probabilities are asserted equal.
pub const EQ_TOL: f64 = 1e-12;
/// Largest node count for which all `2^n` subsets are scanned.
pub const MAX_SUBSET_SCAN: usize = 20;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    directed: bool,
    succ: Vec<Vec<usize>>,
    pred: Vec<Vec<usize>>,
}

impl Graph {
    fn build(n: usize, edges: &[(usize, usize)], directed: bool) -> Result<Self> {
        let mut succ = vec![Vec::new(); n];
        for &(a, b) in edges {
            for x in [a, b] {
                if x >= n {
                    return Err(Error::NodeOutOfRange { node: x, n });
                }
            }
            succ[a].push(b);
            if !directed {
                succ[b].push(a);
            }
        }
        for (v, s) in succ.iter_mut().enumerate() {
            s.push(v);
            s.sort_unstable();
            s.dedup();
        }
        let mut pred = vec![Vec::new(); n];
        for (v, s) in succ.iter().enumerate() {
            for &w in s {
                pred[w].push(v);
            }
        }
        Ok(Self {
            n,
            directed,
            succ,
            pred,
        })
    }

    /// Undirected graph: each input pair is stored in both directions.
    pub fn undirected(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        Self::build(n, edges, false)
    }

    pub fn directed(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        Self::build(n, edges, true)
    }

    pub fn complete(n: usize) -> Self {
        let edges: Vec<_> = (0..n)
            .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
            .collect();
        Self::build(n, &edges, false).expect("indices in range")
    }

    pub fn path(n: usize) -> Self {
        let edges: Vec<_> = (1..n).map(|v| (v - 1, v)).collect();
        Self::build(n, &edges, false).expect("indices in range")
    }

    pub fn cycle(n: usize) -> Self {
        let edges: Vec<_> = (0..n).map(|v| (v, (v + 1) % n)).collect();
        Self::build(n, &edges, false).expect("indices in range")
    }

    /// Periodic lattice `Z_m^d`, node `(i_1..i_d)` stored at `Σ i_k m^(k-1)`.
    pub fn torus(m: usize, d: u32) -> Self {
        let n = m.pow(d);
        let mut edges = Vec::with_capacity(n * d as usize);
        for v in 0..n {
            for k in 0..d {
                edges.push((v, torus_shift(v, m, k, 1)));
            }
        }
        Self::build(n, &edges, false).expect("indices in range")
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        from < self.n && self.succ[from].binary_search(&to).is_ok()
    }

    /// Nodes `v'` with `(v, v') ∈ E`, including `v` itself.
    pub fn successors(&self, v: usize) -> &[usize] {
        &self.succ[v]
    }

    /// Nodes `v` with `(v, v') ∈ E`, including `v'` itself.
    pub fn predecessors(&self, v: usize) -> &[usize] {
        &self.pred[v]
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.succ
            .iter()
            .enumerate()
            .flat_map(|(v, s)| s.iter().map(move |&w| (v, w)))
    }

    pub fn edge_count(&self) -> usize {
        self.succ.iter().map(Vec::len).sum()
    }

    /// Parses the edge-list format: first line `n`, then one `v v'` pair per
    /// line, 1-indexed. Blank lines and `#` comments are skipped. Pairs are
    /// symmetrized unless `directed` is set.
    pub fn from_edge_list(text: &str, directed: bool) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty edge list".into()))?;
        let n: usize = header
            .parse()
            .map_err(|_| Error::Parse(format!("bad node count {header:?}")))?;
        let mut edges = Vec::new();
        for line in lines {
            let mut it = line.split_whitespace();
            let mut next = || -> Result<usize> {
                let tok = it
                    .next()
                    .ok_or_else(|| Error::Parse(format!("expected two nodes in {line:?}")))?;
                let v: usize = tok
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad node {tok:?}")))?;
                if v == 0 || v > n {
                    return Err(Error::NodeOutOfRange { node: v, n });
                }
                Ok(v - 1)
            };
            let a = next()?;
            let b = next()?;
            edges.push((a, b));
        }
        Self::build(n, &edges, directed)
    }

    /// Writes the edge-list format (1-indexed, self-loops omitted; for
    /// undirected graphs each edge once).
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{}\n", self.n);
        for (a, b) in self.edges() {
            if a == b || (!self.directed && b < a) {
                continue;
            }
            out.push_str(&format!("{} {}\n", a + 1, b + 1));
        }
        out
    }
}

pub(crate) fn torus_shift(v: usize, m: usize, axis: u32, step: isize) -> usize {
    let stride = m.pow(axis);
    let coord = (v / stride) % m;
    let shifted = (coord as isize + step).rem_euclid(m as isize) as usize;
    v - coord * stride + shifted * stride
}

/// A subset of the node set.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct NodeSet {
    bits: BitVec<u64, Lsb0>,
}

impl NodeSet {
    pub fn empty(n: usize) -> Self {
        Self {
            bits: bitvec![u64, Lsb0; 0; n],
        }
    }

    pub fn full(n: usize) -> Self {
        Self {
            bits: bitvec![u64, Lsb0; 1; n],
        }
    }

    pub fn from_nodes<I: IntoIterator<Item = usize>>(n: usize, nodes: I) -> Result<Self> {
        let mut s = Self::empty(n);
        for v in nodes {
            if v >= n {
                return Err(Error::NodeOutOfRange { node: v, n });
            }
            s.bits.set(v, true);
        }
        Ok(s)
    }

    /// Bit `i` of `mask` selects node `i`.
    pub fn from_mask(n: usize, mask: u64) -> Self {
        let mut s = Self::empty(n);
        for v in 0..n.min(64) {
            if mask >> v & 1 == 1 {
                s.bits.set(v, true);
            }
        }
        s
    }

    pub fn universe(&self) -> usize {
        self.bits.len()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.bits.get(v).map(|b| *b).unwrap_or(false)
    }

    pub fn insert(&mut self, v: usize) {
        self.bits.set(v, true);
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.not_any()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter_ones()
    }

    pub fn complement(&self) -> Self {
        Self {
            bits: !self.bits.clone(),
        }
    }

    pub fn intersects(&self, other: &NodeSet) -> bool {
        self.iter().any(|v| other.contains(v))
    }

    /// Total weight of the set under `p`.
    pub fn mass(&self, p: &Dist) -> f64 {
        self.iter().map(|v| p[v]).sum()
    }

    /// Members as 1-indexed labels, for reports.
    pub fn labels(&self) -> Vec<usize> {
        self.iter().map(|v| v + 1).collect()
    }
}

impl fmt::Debug for NodeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// A probability vector over `V` or over `C×V`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Dist(Vec<f64>);

impl Dist {
    /// Validates nonnegativity and unit sum. Negative entries above `-1e-12`
    /// are roundoff and are clamped to zero.
    pub fn new(mut weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidDistribution("empty vector".into()));
        }
        for (i, w) in weights.iter_mut().enumerate() {
            if !w.is_finite() || *w < -EQ_TOL || *w > 1.0 + SUM_TOL {
                return Err(Error::InvalidDistribution(format!(
                    "entry {i} = {w} outside [0, 1]"
                )));
            }
            if *w < 0.0 {
                *w = 0.0;
            }
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidDistribution(format!("sum is {total}")));
        }
        Ok(Self(weights))
    }

    /// Normalizes nonnegative weights with a positive total.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidDistribution("weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidDistribution("weights sum to zero".into()));
        }
        Self::new(weights.into_iter().map(|w| w / total).collect())
    }

    pub fn delta(n: usize, v: usize) -> Result<Self> {
        if v >= n {
            return Err(Error::NodeOutOfRange { node: v, n });
        }
        let mut w = vec![0.0; n];
        w[v] = 1.0;
        Ok(Self(w))
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform distribution over an empty set");
        Self(vec![1.0 / n as f64; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Support of the distribution.
    pub fn support(&self) -> NodeSet {
        NodeSet::from_nodes(
            self.len(),
            self.0.iter().enumerate().filter(|(_, &w)| w > 0.0).map(|(i, _)| i),
        )
        .expect("indices in range")
    }

    /// `λ·self + (1-λ)·other`.
    pub fn mix(&self, other: &Dist, lambda: f64) -> Result<Dist> {
        check_same_len(self.len(), other.len())?;
        Dist::new(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
                .collect(),
        )
    }

    /// L1 distance `Σ|p - q|`.
    pub fn l1_distance(&self, other: &Dist) -> Result<f64> {
        check_same_len(self.len(), other.len())?;
        Ok(self.0.iter().zip(&other.0).map(|(a, b)| (a - b).abs()).sum())
    }
}

impl std::ops::Index<usize> for Dist {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

pub(crate) fn check_same_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Total variation distance `½ Σ_v |p(v) - q(v)|`.
pub fn tv_distance(p: &Dist, q: &Dist) -> Result<f64> {
    Ok(0.5 * p.l1_distance(q)?)
}

/// In-neighbourhood `B(X) = {v ∉ X : (v, v') ∈ E for some v' ∈ X}`.
pub fn neighborhood(g: &Graph, set: &NodeSet) -> Result<NodeSet> {
    check_same_len(g.node_count(), set.universe())?;
    let mut out = NodeSet::empty(g.node_count());
    for target in set.iter() {
        for &v in g.predecessors(target) {
            if !set.contains(v) {
                out.insert(v);
            }
        }
    }
    Ok(out)
}

/// Outcome of [`check_locality_trace`].
#[derive(Clone, Debug, PartialEq)]
pub enum LocalityReport {
    Local,
    /// `P_X[p_{t+1}] > P_X[p_t] + P_{B(X)}[p_t] + slack` for the first such
    /// `(t, X)` found; `excess` is the amount by which it is exceeded.
    Violated {
        step: usize,
        set: NodeSet,
        excess: f64,
    },
}

impl LocalityReport {
    pub fn is_local(&self) -> bool {
        matches!(self, LocalityReport::Local)
    }
}

/// Precomputed subset tables for exhaustive locality scans.
struct SubsetScanner {
    n: usize,
    /// For each mask `X`, the mask of `X ∪ B(X)`.
    closure: Vec<u32>,
}

impl SubsetScanner {
    fn new(g: &Graph) -> Result<Self> {
        let n = g.node_count();
        if n > MAX_SUBSET_SCAN {
            return Err(Error::TooLarge {
                what: "subset scan",
                n,
                max: MAX_SUBSET_SCAN,
            });
        }
        let pred_mask: Vec<u32> = (0..n)
            .map(|v| g.predecessors(v).iter().fold(0u32, |m, &u| m | 1 << u))
            .collect();
        let mut closure = vec![0u32; 1 << n];
        for x in 1usize..1 << n {
            let low = x.trailing_zeros() as usize;
            closure[x] = closure[x & (x - 1)] | pred_mask[low];
        }
        Ok(Self { n, closure })
    }

    fn subset_sums(&self, p: &[f64]) -> Vec<f64> {
        let mut sums = vec![0.0; 1 << self.n];
        for x in 1usize..1 << self.n {
            let low = x.trailing_zeros() as usize;
            sums[x] = sums[x & (x - 1)] + p[low];
        }
        sums
    }

    /// Largest `z(X) - y(X ∪ B(X))` over all nonempty `X`, with its mask.
    fn worst_excess(&self, y: &[f64], z: &[f64]) -> (f64, u64) {
        let ys = self.subset_sums(y);
        let zs = self.subset_sums(z);
        let mut worst = (f64::NEG_INFINITY, 0u64);
        for x in 1usize..1 << self.n {
            let excess = zs[x] - ys[self.closure[x] as usize];
            if excess > worst.0 {
                worst = (excess, x as u64);
            }
        }
        worst
    }

    /// First mask (in increasing order) exceeding the slack, if any.
    fn first_violation(&self, y: &[f64], z: &[f64], slack: f64) -> Option<(u64, f64)> {
        let ys = self.subset_sums(y);
        let zs = self.subset_sums(z);
        (1usize..1 << self.n).find_map(|x| {
            let excess = zs[x] - ys[self.closure[x] as usize];
            (excess > slack).then_some((x as u64, excess))
        })
    }
}

/// Largest `z(X) - y(X ∪ B(X))` over nonempty `X`, with its set. A
/// positive value rules out any local stochastic map sending `y` to `z`.
pub fn max_locality_excess(y: &Dist, z: &Dist, g: &Graph) -> Result<(f64, NodeSet)> {
    check_same_len(g.node_count(), y.len())?;
    check_same_len(g.node_count(), z.len())?;
    let (excess, mask) = SubsetScanner::new(g)?.worst_excess(y.as_slice(), z.as_slice());
    Ok((excess, NodeSet::from_mask(g.node_count(), mask)))
}

/// Checks `P_X[p_{t+1}] ≤ P_X[p_t] + P_{B(X)}[p_t]` (slack `1e-9`) for every
/// consecutive pair of the trace and every `X ⊆ V`. Requires `n ≤ 20`.
pub fn check_locality_trace(trace: &[Dist], g: &Graph) -> Result<LocalityReport> {
    for p in trace {
        check_same_len(g.node_count(), p.len())?;
    }
    let scanner = SubsetScanner::new(g)?;
    for (t, pair) in trace.windows(2).enumerate() {
        if let Some((mask, excess)) =
            scanner.first_violation(pair[0].as_slice(), pair[1].as_slice(), SUM_TOL)
        {
            return Ok(LocalityReport::Violated {
                step: t,
                set: NodeSet::from_mask(g.node_count(), mask),
                excess,
            });
        }
    }
    Ok(LocalityReport::Local)
}
