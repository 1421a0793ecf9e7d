//! Stochastic matrices and lifted Markov chains.
//!
//! All matrices act on column vectors: `p_{t+1} = P p_t`, and entry `(v', v)`
//! is the probability of the jump `v → v'`.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{check_same_len, Dist, Graph, EQ_TOL, SUM_TOL};
use crate::quantum::KrausChannel;
use crate::space::{CoinAssignment, LiftedSpace};

/// Column-stochastic matrix stored column-compressed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StochMatrix {
    n: usize,
    col_ptr: Vec<usize>,
    rows: Vec<usize>,
    vals: Vec<f64>,
}

impl StochMatrix {
    /// Builds from per-column `(target, probability)` lists. Entries within
    /// `1e-12` below zero are clamped, exact zeros dropped, duplicates summed.
    pub fn from_columns(n: usize, columns: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        check_same_len(n, columns.len())?;
        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut rows = Vec::new();
        let mut vals = Vec::new();
        col_ptr.push(0);
        for (v, mut col) in columns.into_iter().enumerate() {
            col.sort_by_key(|e| e.0);
            let mut sum = 0.0;
            let start = rows.len();
            for (to, w) in col {
                if to >= n {
                    return Err(Error::NodeOutOfRange { node: to, n });
                }
                if !w.is_finite() || w < -EQ_TOL {
                    return Err(Error::NotStochastic(format!(
                        "entry ({to}, {v}) = {w} is negative"
                    )));
                }
                if w <= 0.0 {
                    continue;
                }
                sum += w;
                if rows.len() > start && rows[rows.len() - 1] == to {
                    *vals.last_mut().expect("nonempty") += w;
                } else {
                    rows.push(to);
                    vals.push(w);
                }
            }
            if (sum - 1.0).abs() > SUM_TOL {
                return Err(Error::NotStochastic(format!("column {v} sums to {sum}")));
            }
            col_ptr.push(rows.len());
        }
        Ok(Self {
            n,
            col_ptr,
            rows,
            vals,
        })
    }

    /// Builds from a dense row-major matrix, `rows[v'][v] = P(v', v)`.
    pub fn from_dense(dense: &[Vec<f64>]) -> Result<Self> {
        let n = dense.len();
        for r in dense {
            check_same_len(n, r.len())?;
        }
        let columns = (0..n)
            .map(|v| (0..n).map(|w| (w, dense[w][v])).collect())
            .collect();
        Self::from_columns(n, columns)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n,
            col_ptr: (0..=n).collect(),
            rows: (0..n).collect(),
            vals: vec![1.0; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Nonzero `(target, probability)` pairs of column `v`.
    pub fn column(&self, v: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.col_ptr[v]..self.col_ptr[v + 1];
        self.rows[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    /// `P(to, from)`.
    pub fn get(&self, to: usize, from: usize) -> f64 {
        let r = self.col_ptr[from]..self.col_ptr[from + 1];
        match self.rows[r.clone()].binary_search(&to) {
            Ok(k) => self.vals[r.start + k],
            Err(_) => 0.0,
        }
    }

    /// Triplets `(to, from, probability)` over the nonzero pattern.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |v| self.column(v).map(move |(w, p)| (w, v, p)))
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.apply_into(x, &mut out);
        out
    }

    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (v, &xv) in x.iter().enumerate() {
            if xv == 0.0 {
                continue;
            }
            for k in self.col_ptr[v]..self.col_ptr[v + 1] {
                out[self.rows[k]] += self.vals[k] * xv;
            }
        }
    }

    pub fn apply_dist(&self, p: &Dist) -> Result<Dist> {
        check_same_len(self.n, p.len())?;
        Dist::new(self.apply(p.as_slice()))
    }

    /// Matrix product `self · other` (apply `other` first).
    pub fn mul(&self, other: &StochMatrix) -> Result<StochMatrix> {
        check_same_len(self.n, other.n)?;
        let columns = (0..self.n)
            .map(|v| {
                let mut acc = std::collections::BTreeMap::new();
                for (mid, a) in other.column(v) {
                    for (to, b) in self.column(mid) {
                        *acc.entry(to).or_insert(0.0) += a * b;
                    }
                }
                acc.into_iter().collect()
            })
            .collect();
        Self::from_columns(self.n, columns)
    }

    /// `(P + I) / 2`.
    pub fn lazy(&self) -> StochMatrix {
        let columns = (0..self.n)
            .map(|v| {
                self.column(v)
                    .map(|(w, p)| (w, 0.5 * p))
                    .chain(std::iter::once((v, 0.5)))
                    .collect()
            })
            .collect();
        Self::from_columns(self.n, columns).expect("lazy version of a stochastic matrix")
    }

    /// Dense rows, `out[v'][v] = P(v', v)`.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (w, v, p) in self.triplets() {
            d[w][v] = p;
        }
        d
    }

    /// First nonzero entry `(v', v)` with `(node(v), node(v')) ∉ E`, where
    /// states are mapped to nodes through `space`.
    pub fn locality_violation(&self, g: &Graph, space: LiftedSpace) -> Option<(usize, usize)> {
        if space.dim() != self.n {
            return Some((0, 0));
        }
        self.triplets()
            .find(|&(w, v, _)| !g.has_edge(space.node_of(v), space.node_of(w)))
            .map(|(w, v, _)| (w, v))
    }

    pub fn respects(&self, g: &Graph) -> bool {
        g.node_count() == self.n
            && self
                .locality_violation(g, LiftedSpace::new(1, self.n.max(1)).expect("n ≥ 1"))
                .is_none()
    }

    /// Strong connectivity of the nonzero pattern.
    pub fn is_irreducible(&self) -> bool {
        if self.n == 0 {
            return false;
        }
        let reach = |forward: bool| {
            let mut adj = vec![Vec::new(); self.n];
            for (w, v, _) in self.triplets() {
                if forward {
                    adj[v].push(w);
                } else {
                    adj[w].push(v);
                }
            }
            let mut seen = vec![false; self.n];
            let mut stack = vec![0];
            seen[0] = true;
            while let Some(u) = stack.pop() {
                for &x in &adj[u] {
                    if !seen[x] {
                        seen[x] = true;
                        stack.push(x);
                    }
                }
            }
            seen.into_iter().all(|s| s)
        };
        reach(true) && reach(false)
    }
}

/// Power-iteration cap for [`stationary`].
pub const MAX_POWER_ITERATIONS: usize = 1_000_000;

/// Stationary distribution of an irreducible chain, by power iteration on
/// `(P + I)/2` until `‖P p - p‖₁ ≤ 1e-12`.
pub fn stationary(p: &StochMatrix) -> Result<Dist> {
    if !p.is_irreducible() {
        return Err(Error::Reducible);
    }
    let n = p.dim();
    let lazy = p.lazy();
    let mut x = vec![1.0 / n as f64; n];
    let mut y = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for it in 0..MAX_POWER_ITERATIONS {
        if it % 16 == 0 {
            p.apply_into(&x, &mut y);
            residual = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).sum();
            if residual <= EQ_TOL {
                let total: f64 = x.iter().sum();
                return Dist::new(x.iter().map(|w| w / total).collect());
            }
        }
        lazy.apply_into(&x, &mut y);
        let total: f64 = y.iter().sum();
        for (a, b) in x.iter_mut().zip(&y) {
            *a = b / total;
        }
    }
    Err(Error::NoConvergence {
        iterations: MAX_POWER_ITERATIONS,
        residual,
    })
}

/// A Markov chain on `C×V` whose jumps follow edges of the base graph.
#[derive(Clone, Debug)]
pub struct LiftedChain {
    space: LiftedSpace,
    graph: Graph,
    transition: StochMatrix,
    init: CoinAssignment,
}

impl LiftedChain {
    pub fn new(
        space: LiftedSpace,
        graph: Graph,
        transition: StochMatrix,
        init: CoinAssignment,
    ) -> Result<Self> {
        check_same_len(space.nodes(), graph.node_count())?;
        check_same_len(space.dim(), transition.dim())?;
        check_same_len(space.nodes(), init.len())?;
        if let Some((w, v)) = transition.locality_violation(&graph, space) {
            return Err(Error::NotLocal(format!(
                "lifted jump ({},{}) -> ({},{}) leaves the graph",
                space.coin_of(v),
                space.node_of(v) + 1,
                space.coin_of(w),
                space.node_of(w) + 1
            )));
        }
        Ok(Self {
            space,
            graph,
            transition,
            init,
        })
    }

    /// An ordinary chain on `V` seen as a lift with a single coin value.
    pub fn trivial(graph: Graph, transition: StochMatrix) -> Result<Self> {
        let space = LiftedSpace::new(1, graph.node_count())?;
        let init = CoinAssignment::constant(0, space)?;
        Self::new(space, graph, transition, init)
    }

    pub fn space(&self) -> LiftedSpace {
        self.space
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn transition(&self) -> &StochMatrix {
        &self.transition
    }

    pub fn init(&self) -> &CoinAssignment {
        &self.init
    }

    /// `(P + I)/2` with the same initialization.
    pub fn lazy(&self) -> LiftedChain {
        Self {
            transition: self.transition.lazy(),
            ..self.clone()
        }
    }

    /// `F[p0]` over `C×V`.
    pub fn lift(&self, p0: &Dist) -> Result<Vec<f64>> {
        self.init.lift(p0, self.space)
    }
}

/// `f(P^t F[p0])`.
pub fn lmc_evolve(chain: &LiftedChain, p0: &Dist, t: usize) -> Result<Dist> {
    let mut x = chain.lift(p0)?;
    let mut y = vec![0.0; x.len()];
    for _ in 0..t {
        chain.transition.apply_into(&x, &mut y);
        std::mem::swap(&mut x, &mut y);
    }
    chain.space.marginalize(&x)
}

/// Kraus form `M_k = √P(k) |c',v'⟩⟨c,v|`, one operator per nonzero entry.
pub fn as_channel(chain: &LiftedChain) -> KrausChannel {
    KrausChannel::from_rank_one(
        chain.space,
        chain.graph.clone(),
        chain.transition.triplets().map(|(w, v, p)| (w, v, p.sqrt())),
    )
}

/// Chain on `V` averaging the lifted transitions under the stationary
/// distribution `p̂̄`:
/// `P_V(v', v) = Σ_{c,c'} p̂̄(c,v)/p̄(v) · P((c',v'),(c,v))`.
///
/// Returns the chain together with `p̄ = f(p̂̄)`. Nodes with `p̄(v) = 0`
/// get an identity column and a warning.
pub fn induced_chain(chain: &LiftedChain) -> Result<(StochMatrix, Dist)> {
    let joint = stationary(&chain.transition)?;
    induced_chain_with(chain, &joint)
}

/// [`induced_chain`] with a caller-supplied stationary distribution.
pub fn induced_chain_with(chain: &LiftedChain, joint: &Dist) -> Result<(StochMatrix, Dist)> {
    let space = chain.space;
    check_same_len(space.dim(), joint.len())?;
    let residual: f64 = chain
        .transition
        .apply(joint.as_slice())
        .iter()
        .zip(joint.as_slice())
        .map(|(a, b)| (a - b).abs())
        .sum();
    if residual > SUM_TOL {
        return Err(Error::NotInvariant(format!(
            "lifted distribution moved by {residual:.3e}"
        )));
    }
    let marginal = space.marginalize(joint.as_slice())?;
    let n = space.nodes();
    let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (v, col) in columns.iter_mut().enumerate() {
        if marginal[v] <= 0.0 {
            warn!("node {} carries no stationary mass; using an identity column", v + 1);
            col.push((v, 1.0));
            continue;
        }
        let mut acc = vec![0.0; n];
        for c in 0..space.coins() {
            let i = space.index(c, v);
            let weight = joint[i] / marginal[v];
            if weight == 0.0 {
                continue;
            }
            for (j, pr) in chain.transition.column(i) {
                acc[space.node_of(j)] += weight * pr;
            }
        }
        let total: f64 = acc.iter().sum();
        col.extend(
            acc.into_iter()
                .enumerate()
                .filter(|&(_, w)| w > 0.0)
                .map(|(w, p)| (w, p / total)),
        );
    }
    Ok((StochMatrix::from_columns(n, columns)?, marginal))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{init_map, node_marginal, step, validate_channel};

    fn two_state(a: f64, b: f64) -> StochMatrix {
        StochMatrix::from_dense(&[vec![1.0 - a, b], vec![a, 1.0 - b]]).unwrap()
    }

    fn shift(n: usize) -> StochMatrix {
        StochMatrix::from_columns(n, (0..n).map(|v| vec![((v + 1) % n, 1.0)]).collect()).unwrap()
    }

    #[test]
    fn rejects_non_stochastic() {
        assert!(StochMatrix::from_dense(&[vec![0.5, 0.0], vec![0.4, 1.0]]).is_err());
        assert!(StochMatrix::from_dense(&[vec![1.5, 0.0], vec![-0.5, 1.0]]).is_err());
    }

    #[test]
    fn product_and_lazy_stay_stochastic() {
        let p = two_state(0.3, 0.6);
        let q = p.mul(&shift(2)).unwrap();
        assert!((q.get(0, 0) - 0.6).abs() < EQ_TOL);
        let l = p.lazy();
        assert!((l.get(0, 0) - 0.85).abs() < EQ_TOL);
        assert!((l.get(1, 0) - 0.15).abs() < EQ_TOL);
    }

    #[test]
    fn stationary_two_state_closed_form() {
        let (a, b) = (0.2, 0.7);
        let pi = stationary(&two_state(a, b)).unwrap();
        assert!((pi[0] - b / (a + b)).abs() < 1e-12);
        assert!((pi[1] - a / (a + b)).abs() < 1e-12);
    }

    #[test]
    fn stationary_of_periodic_shift_is_uniform() {
        let pi = stationary(&shift(5)).unwrap();
        for v in 0..5 {
            assert!((pi[v] - 0.2).abs() < 1e-12);
        }
    }

    #[test]
    fn stationary_rejects_reducible() {
        assert!(matches!(
            stationary(&StochMatrix::identity(3)),
            Err(Error::Reducible)
        ));
    }

    #[test]
    fn trivial_lift_induces_itself() {
        let g = Graph::complete(2);
        let p = two_state(0.25, 0.5);
        let chain = LiftedChain::trivial(g, p.clone()).unwrap();
        let (pv, pbar) = induced_chain(&chain).unwrap();
        for (w, v, x) in p.triplets() {
            assert!((pv.get(w, v) - x).abs() < 1e-12);
        }
        assert!((pbar[0] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn lifted_chain_rejects_nonlocal_jump() {
        let g = Graph::path(3);
        let s = LiftedSpace::new(1, 3).unwrap();
        let p = StochMatrix::from_columns(3, vec![vec![(2, 1.0)], vec![(1, 1.0)], vec![(0, 1.0)]])
            .unwrap();
        let f = CoinAssignment::constant(0, s).unwrap();
        assert!(matches!(
            LiftedChain::new(s, g, p, f),
            Err(Error::NotLocal(_))
        ));
    }

    #[test]
    fn two_state_channel_has_four_kraus_operators() {
        let a = 0.3;
        let chain = LiftedChain::trivial(Graph::complete(2), two_state(a, a)).unwrap();
        let ch = as_channel(&chain);
        assert_eq!(ch.len(), 4);
        assert!(validate_channel(&ch).is_ok());
        let norms: Vec<f64> = ch.kraus_operators().iter().map(|m| m.norm()).collect();
        assert!(norms.iter().any(|x| (x - a.sqrt()).abs() < 1e-15));
        assert!(norms.iter().any(|x| (x - (1.0 - a).sqrt()).abs() < 1e-15));
    }

    #[test]
    fn identity_chain_channel_is_projectors() {
        let chain = LiftedChain::trivial(Graph::path(3), StochMatrix::identity(3)).unwrap();
        let ops = as_channel(&chain).kraus_operators();
        assert_eq!(ops.len(), 3);
        for (k, m) in ops.iter().enumerate() {
            assert_eq!(m[(k, k)].re, 1.0);
            assert!((m.norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn channel_round_trip_matches_lmc() {
        let chain = LiftedChain::trivial(Graph::complete(2), two_state(0.1, 0.4)).unwrap();
        let ch = as_channel(&chain);
        let s = chain.space();
        let p0 = Dist::delta(2, 0).unwrap();
        let mut rho = init_map(&p0, chain.init(), s).unwrap();
        for t in 1..=50 {
            rho = step(&ch, &rho).unwrap();
            let a = node_marginal(&rho).unwrap();
            let b = lmc_evolve(&chain, &p0, t).unwrap();
            assert!(a.l1_distance(&b).unwrap() < 1e-12);
        }
    }
}
