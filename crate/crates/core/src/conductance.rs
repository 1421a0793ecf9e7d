//! Cut conductance, chain conductance, graph conductance and the mixing
//! bounds derived from them.
//!
//! `Φ_X(P) = Q_P(X^c, X) / p̄(X)` with ergodic flow
//! `Q_P(X^c, X) = Σ_{v ∈ X, v' ∉ X} P(v', v) p̄(v)`.

use log::warn;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{check_same_len, tv_distance, Dist, Graph, NodeSet, MAX_SUBSET_SCAN, SUM_TOL};
use crate::lmc::StochMatrix;
use crate::lp::{LinearProgram, Sense, LP_TOL};
use crate::mixing::{mixing_time, MixingResult};
use crate::process::{check_invariance, check_process_locality, ProcessKind, StochProcess};

/// Slack on the `p̄(X) ≤ 1/2` cut condition.
pub const HALF_TOL: f64 = 1e-12;
/// Largest number of positive-mass nodes for which every cut is written
/// into the conductance LP up front; larger graphs use cut generation.
pub const FULL_CUT_LIMIT: usize = 10;
/// Largest number of positive-mass nodes the cut separation will enumerate.
pub const MAX_CUT_NODES: usize = 26;

fn check_invariant(p: &StochMatrix, pbar: &Dist) -> Result<()> {
    check_same_len(p.dim(), pbar.len())?;
    let moved: f64 = p
        .apply(pbar.as_slice())
        .iter()
        .zip(pbar.as_slice())
        .map(|(a, b)| (a - b).abs())
        .sum();
    if moved > SUM_TOL {
        return Err(Error::NotInvariant(format!("‖P p̄ - p̄‖₁ = {moved:.3e}")));
    }
    Ok(())
}

/// `Q_P(X^c, X)`, with no condition on the cut.
pub fn ergodic_flow(p: &StochMatrix, pbar: &Dist, x: &NodeSet) -> Result<f64> {
    check_same_len(p.dim(), pbar.len())?;
    check_same_len(p.dim(), x.universe())?;
    Ok(x.iter()
        .map(|v| {
            p.column(v)
                .filter(|&(w, _)| !x.contains(w))
                .map(|(_, pr)| pr * pbar[v])
                .sum::<f64>()
        })
        .sum())
}

#[derive(Clone, Debug, Serialize)]
pub struct CutReport {
    #[serde(serialize_with = "serialize_labels")]
    pub cut: NodeSet,
    pub flow: f64,
    pub mass: f64,
    pub phi: f64,
}

fn serialize_labels<S: serde::Serializer>(x: &NodeSet, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(x.labels())
}

/// `Φ_X(P)` for a cut with `0 < p̄(X) ≤ 1/2`.
pub fn phi_cut(p: &StochMatrix, pbar: &Dist, x: &NodeSet) -> Result<f64> {
    check_invariant(p, pbar)?;
    let mass = x.mass(pbar);
    if mass <= 0.0 || mass > 0.5 + HALF_TOL {
        return Err(Error::InvalidParameter(format!(
            "cut {:?} has mass {mass}, need 0 < p̄(X) ≤ 1/2",
            x.labels()
        )));
    }
    Ok(ergodic_flow(p, pbar, x)? / mass)
}

/// `Φ(P) = min_{0 < p̄(X) ≤ 1/2} Φ_X(P)` by exhaustive enumeration.
pub fn phi_chain(p: &StochMatrix, pbar: &Dist) -> Result<CutReport> {
    check_invariant(p, pbar)?;
    let n = p.dim();
    if n > MAX_SUBSET_SCAN {
        return Err(Error::TooLarge {
            what: "cut enumeration",
            n,
            max: MAX_SUBSET_SCAN,
        });
    }
    // out[v] = jumps v → w with ergodic weight P(w, v) p̄(v)
    let out: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|v| {
            p.column(v)
                .filter(|&(w, _)| w != v)
                .map(|(w, pr)| (w, pr * pbar[v]))
                .collect()
        })
        .collect();
    let mut best: Option<(f64, u32, f64, f64)> = None;
    for mask in 1u32..(1u32 << n) {
        let mut mass = 0.0;
        for v in 0..n {
            if mask >> v & 1 == 1 {
                mass += pbar[v];
            }
        }
        if mass <= 0.0 || mass > 0.5 + HALF_TOL {
            continue;
        }
        let mut flow = 0.0;
        for v in 0..n {
            if mask >> v & 1 == 1 {
                for &(w, q) in &out[v] {
                    if mask >> w & 1 == 0 {
                        flow += q;
                    }
                }
            }
        }
        let phi = flow / mass;
        if best.map_or(true, |b| phi < b.0) {
            best = Some((phi, mask, flow, mass));
        }
    }
    let (phi, mask, flow, mass) =
        best.ok_or_else(|| Error::InvalidParameter("no cut with 0 < p̄(X) ≤ 1/2".into()))?;
    Ok(CutReport {
        cut: NodeSet::from_mask(n, mask as u64),
        flow,
        mass,
        phi,
    })
}

#[derive(Clone, Debug)]
pub struct GraphConductance {
    pub phi: f64,
    /// A `p̄`-invariant local chain attaining `phi`.
    pub witness: StochMatrix,
    /// A cut at which the witness attains its conductance.
    pub binding_cut: NodeSet,
    /// Cut rows in the final LP.
    pub cuts_used: usize,
    /// LP solves (1 when every cut is materialized).
    pub rounds: usize,
}

/// Edge variables and row builders of the conductance LP.
struct ConductanceLp<'a> {
    n: usize,
    pbar: &'a Dist,
    /// Off-diagonal edges `(from, to)`; variable `k` is `P(to, from)`.
    edges: Vec<(usize, usize)>,
    /// Nodes with positive mass; zero-mass nodes always sit inside `X`.
    positive: Vec<usize>,
    zero_mask: Vec<bool>,
}

impl<'a> ConductanceLp<'a> {
    fn new(g: &Graph, pbar: &'a Dist) -> Self {
        let n = g.node_count();
        let edges = g.edges().filter(|&(a, b)| a != b).collect();
        let positive: Vec<usize> = (0..n).filter(|&v| pbar[v] > 0.0).collect();
        let zero_mask = (0..n).map(|v| pbar[v] <= 0.0).collect();
        Self {
            n,
            pbar,
            edges,
            positive,
            zero_mask,
        }
    }

    fn t_var(&self) -> usize {
        self.edges.len()
    }

    /// Node membership of the cut encoded by `mask` over positive nodes.
    fn members(&self, mask: u64) -> Vec<bool> {
        let mut inside = self.zero_mask.clone();
        for (i, &v) in self.positive.iter().enumerate() {
            if mask >> i & 1 == 1 {
                inside[v] = true;
            }
        }
        inside
    }

    fn mass(&self, mask: u64) -> f64 {
        self.positive
            .iter()
            .enumerate()
            .filter(|&(i, _)| mask >> i & 1 == 1)
            .map(|(_, &v)| self.pbar[v])
            .sum()
    }

    fn qualifies(&self, mask: u64) -> bool {
        let m = self.mass(mask);
        m > 0.0 && m <= 0.5 + HALF_TOL
    }

    /// `t·p̄(X) - Σ_{crossing} p̄(from) x_k ≤ 0`.
    fn cut_row(&self, mask: u64) -> Vec<(usize, f64)> {
        let inside = self.members(mask);
        let mut row: Vec<(usize, f64)> = self
            .edges
            .iter()
            .enumerate()
            .filter(|&(_, &(a, b))| inside[a] && !inside[b])
            .map(|(k, &(a, _))| (k, -self.pbar[a]))
            .collect();
        row.push((self.t_var(), self.mass(mask)));
        row
    }

    fn base_program(&self) -> LinearProgram {
        let nv = self.edges.len() + 1;
        let mut obj = vec![0.0; nv];
        obj[self.t_var()] = 1.0;
        let mut lp = LinearProgram::maximize(obj);
        let mut out_rows = vec![Vec::new(); self.n];
        let mut balance = vec![Vec::new(); self.n];
        for (k, &(a, b)) in self.edges.iter().enumerate() {
            out_rows[a].push((k, 1.0));
            balance[b].push((k, self.pbar[a]));
            balance[a].push((k, -self.pbar[a]));
        }
        for row in out_rows {
            if !row.is_empty() {
                lp.add(row, Sense::Le, 1.0);
            }
        }
        // one balance row is implied by the others
        for row in balance.into_iter().take(self.n.saturating_sub(1)) {
            if !row.is_empty() {
                lp.add(row, Sense::Eq, 0.0);
            }
        }
        lp.add(vec![(self.t_var(), 1.0)], Sense::Le, 1.0);
        lp
    }

    fn witness(&self, x: &[f64]) -> Result<StochMatrix> {
        let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.n];
        for (k, &(a, b)) in self.edges.iter().enumerate() {
            let w = x[k].max(0.0);
            if w > 0.0 {
                columns[a].push((b, w));
            }
        }
        for (v, col) in columns.iter_mut().enumerate() {
            let out: f64 = col.iter().map(|e| e.1).sum();
            if out > 1.0 {
                col.iter_mut().for_each(|e| e.1 /= out);
            } else {
                col.push((v, 1.0 - out));
            }
        }
        StochMatrix::from_columns(self.n, columns)
    }

    /// Every qualifying cut whose row is violated by more than `LP_TOL` at
    /// `x`, most violated first, at most `limit` of them. Gray-code walk
    /// with exact recomputation at the start of each block.
    fn separate(&self, x: &[f64], limit: usize) -> Vec<u64> {
        let k = self.positive.len();
        let t = x[self.t_var()];
        let mut out_adj = vec![Vec::new(); self.n];
        let mut in_adj = vec![Vec::new(); self.n];
        for (e, &(a, b)) in self.edges.iter().enumerate() {
            let f = self.pbar[a] * x[e].max(0.0);
            if f > 0.0 {
                out_adj[a].push((b, f));
                in_adj[b].push((a, f));
            }
        }
        let exact = |inside: &[bool]| -> f64 {
            (0..self.n)
                .filter(|&v| inside[v])
                .flat_map(|v| out_adj[v].iter())
                .filter(|&&(w, _)| !inside[w])
                .map(|&(_, f)| f)
                .sum()
        };
        const BLOCK: u64 = 1 << 12;
        let total = 1u64 << k;
        let mut found: Vec<(f64, u64)> = Vec::new();
        let mut inside = self.members(0);
        let mut flow = 0.0;
        let mut mass = 0.0;
        for i in 0..total {
            let gray = i ^ (i >> 1);
            if i % BLOCK == 0 {
                inside = self.members(gray);
                flow = exact(&inside);
                mass = self.mass(gray);
            } else {
                let bit = (i.trailing_zeros()) as usize;
                let v = self.positive[bit];
                if gray >> bit & 1 == 1 {
                    // v enters X
                    for &(w, f) in &out_adj[v] {
                        if !inside[w] {
                            flow += f;
                        }
                    }
                    for &(u, f) in &in_adj[v] {
                        if inside[u] {
                            flow -= f;
                        }
                    }
                    inside[v] = true;
                    mass += self.pbar[v];
                } else {
                    inside[v] = false;
                    for &(w, f) in &out_adj[v] {
                        if !inside[w] {
                            flow -= f;
                        }
                    }
                    for &(u, f) in &in_adj[v] {
                        if inside[u] {
                            flow += f;
                        }
                    }
                    mass -= self.pbar[v];
                }
            }
            if mass <= 0.0 || mass > 0.5 + HALF_TOL {
                continue;
            }
            let violation = t * mass - flow;
            if violation > LP_TOL {
                if found.len() < limit {
                    found.push((violation, gray));
                } else {
                    let (j, min) = found
                        .iter()
                        .enumerate()
                        .min_by(|a, b| a.1 .0.total_cmp(&b.1 .0))
                        .map(|(j, e)| (j, e.0))
                        .expect("nonempty");
                    if violation > min {
                        found[j] = (violation, gray);
                    }
                }
            }
        }
        found.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        // confirm with an exact evaluation before handing back
        found
            .into_iter()
            .filter(|&(_, mask)| {
                let inside = self.members(mask);
                t * self.mass(mask) - exact(&inside) > LP_TOL
            })
            .map(|(_, mask)| mask)
            .collect()
    }
}

/// `Φ_p̄ = max Φ(P)` over `p̄`-invariant chains respecting `g`, as the LP
/// `max t` s.t. `Q_P(X^c, X) ≥ t·p̄(X)` for every cut with
/// `0 < p̄(X) ≤ 1/2`.
///
/// Zero-mass nodes are placed inside every cut, which attains the minimum
/// over their placements. With at most [`FULL_CUT_LIMIT`] positive nodes
/// all cuts are written up front; otherwise violated cuts are added from an
/// exhaustive separation until none remains.
pub fn graph_conductance(g: &Graph, pbar: &Dist) -> Result<GraphConductance> {
    check_same_len(g.node_count(), pbar.len())?;
    let lpb = ConductanceLp::new(g, pbar);
    let k = lpb.positive.len();
    if k < lpb.n {
        warn!(
            "{} zero-mass node(s) kept inside every cut",
            lpb.n - k
        );
    }
    if k > MAX_CUT_NODES {
        return Err(Error::TooLarge {
            what: "conductance cut enumeration",
            n: k,
            max: MAX_CUT_NODES,
        });
    }
    let any_cut = (1u64..1u64 << k).any(|m| lpb.qualifies(m));
    if !any_cut {
        return Err(Error::InvalidParameter(
            "no cut with 0 < p̄(X) ≤ 1/2; conductance undefined".into(),
        ));
    }
    let mut lp = lpb.base_program();
    let mut masks: Vec<u64> = Vec::new();
    let rounds = if k <= FULL_CUT_LIMIT {
        masks.extend((1u64..1u64 << k).filter(|&m| lpb.qualifies(m)));
        for &mask in &masks {
            lp.add(lpb.cut_row(mask), Sense::Le, 0.0);
        }
        1
    } else {
        // seed with single-node cuts
        masks.extend((0..k).map(|i| 1u64 << i).filter(|&m| lpb.qualifies(m)));
        for &mask in &masks {
            lp.add(lpb.cut_row(mask), Sense::Le, 0.0);
        }
        let mut rounds = 1;
        loop {
            let sol = lp.solve()?;
            let violated = lpb.separate(&sol.x, 4 * k);
            if violated.is_empty() {
                break;
            }
            for mask in violated {
                lp.add(lpb.cut_row(mask), Sense::Le, 0.0);
                masks.push(mask);
            }
            rounds += 1;
        }
        rounds
    };
    let solution = lp.solve()?;
    let phi = solution.x[lpb.t_var()];
    let witness = lpb.witness(&solution.x)?;
    // some row of the final LP is tight at the optimum
    let mut binding = (f64::INFINITY, masks[0]);
    for &mask in &masks {
        let inside = lpb.members(mask);
        let cut = NodeSet::from_nodes(lpb.n, (0..lpb.n).filter(|&v| inside[v]))?;
        let r = ergodic_flow(&witness, pbar, &cut)? / lpb.mass(mask);
        if r < binding.0 {
            binding = (r, mask);
        }
    }
    let inside = lpb.members(binding.1);
    let binding_cut = NodeSet::from_nodes(lpb.n, (0..lpb.n).filter(|&v| inside[v]))?;
    let cuts_used = masks.len();
    Ok(GraphConductance {
        phi,
        witness,
        binding_cut,
        cuts_used,
        rounds,
    })
}

/// How the locality of a process was established.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LocalityEvidence {
    /// Every basis trajectory passed the exhaustive subset scan.
    TraceScan,
    /// Built from local transitions on this graph (too large to scan).
    Construction,
    Violated,
    Unknown,
}

#[derive(Clone, Debug, Serialize)]
pub struct LowerBoundReport {
    pub phi: f64,
    /// `1/(4Φ_p̄)`.
    pub bound: f64,
    pub invariant: bool,
    pub locality: LocalityEvidence,
    pub mixing: MixingResult,
    /// `τ(1/4) ≥ 1/(4Φ_p̄) - 1`; `None` when the preconditions fail.
    pub holds: Option<bool>,
}

/// Checks `τ(1/4) ≥ 1/(4Φ_p̄) - 1` after confirming invariance and locality.
/// An unresolved `τ` counts as `τ > horizon`.
pub fn mixing_lower_bound_check<P: StochProcess + ?Sized>(
    proc: &P,
    pbar: &Dist,
    g: &Graph,
    horizon: usize,
) -> Result<LowerBoundReport> {
    let phi = graph_conductance(g, pbar)?.phi;
    mixing_lower_bound_check_with(proc, pbar, g, phi, horizon)
}

/// [`mixing_lower_bound_check`] with a precomputed `Φ_p̄`.
pub fn mixing_lower_bound_check_with<P: StochProcess + ?Sized>(
    proc: &P,
    pbar: &Dist,
    g: &Graph,
    phi: f64,
    horizon: usize,
) -> Result<LowerBoundReport> {
    check_same_len(g.node_count(), proc.node_count())?;
    let invariant = check_invariance(proc, pbar, horizon)?;
    let locality = if g.node_count() <= MAX_SUBSET_SCAN {
        match check_process_locality(proc, g, horizon.min(20))? {
            None => LocalityEvidence::TraceScan,
            Some(_) => LocalityEvidence::Violated,
        }
    } else if proc.graph() == Some(g)
        && matches!(proc.kind(), ProcessKind::LiftedChain | ProcessKind::QuantumWalk)
    {
        LocalityEvidence::Construction
    } else {
        LocalityEvidence::Unknown
    };
    let mixing = mixing_time(proc, pbar, 0.25, horizon)?;
    let bound = if phi > 0.0 { 1.0 / (4.0 * phi) } else { f64::INFINITY };
    let applicable = invariant
        && matches!(locality, LocalityEvidence::TraceScan | LocalityEvidence::Construction);
    let holds = applicable.then(|| match mixing.tau {
        Some(tau) => tau as f64 >= bound - 1.0,
        None => horizon as f64 >= bound - 1.0,
    });
    Ok(LowerBoundReport {
        phi,
        bound,
        invariant,
        locality,
        mixing,
        holds,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct EscapeStep {
    pub t: usize,
    /// `P_{X^c}[P^t p̄_X]`.
    pub escaped: f64,
    /// `‖P^t p̄_X - p̄_X‖_TV`.
    pub tv: f64,
    /// `t·Φ_X(P)`.
    pub bound: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EscapeReport {
    pub phi_x: f64,
    pub steps: Vec<EscapeStep>,
    pub holds: bool,
}

/// Verifies `P_{X^c}[P^t p̄_X] ≤ ‖P^t p̄_X - p̄_X‖_TV ≤ t·Φ_X(P)` for
/// `t ≤ tmax`, each link within `1e-10`, where `p̄_X` is `p̄` restricted to
/// `X` and renormalized.
pub fn escape_bound_check(
    p: &StochMatrix,
    pbar: &Dist,
    x: &NodeSet,
    tmax: usize,
) -> Result<EscapeReport> {
    if !p.is_irreducible() {
        return Err(Error::Reducible);
    }
    check_invariant(p, pbar)?;
    let mass = x.mass(pbar);
    if mass <= 0.0 {
        return Err(Error::InvalidParameter("cut carries no stationary mass".into()));
    }
    let phi_x = ergodic_flow(p, pbar, x)? / mass;
    let restricted: Vec<f64> = (0..p.dim())
        .map(|v| if x.contains(v) { pbar[v] / mass } else { 0.0 })
        .collect();
    let start = Dist::new(restricted)?;
    let mut cur = start.clone();
    let mut steps = Vec::with_capacity(tmax + 1);
    let mut holds = true;
    for t in 0..=tmax {
        if t > 0 {
            cur = p.apply_dist(&cur)?;
        }
        let escaped: f64 = (0..p.dim()).filter(|&v| !x.contains(v)).map(|v| cur[v]).sum();
        let tv = tv_distance(&cur, &start)?;
        let bound = t as f64 * phi_x;
        holds &= escaped <= tv + 1e-10 && tv <= bound + 1e-10;
        steps.push(EscapeStep { t, escaped, tv, bound });
    }
    Ok(EscapeReport { phi_x, steps, holds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::EQ_TOL;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= EQ_TOL
    }

    fn cycle_walk(n: usize, stay: f64) -> StochMatrix {
        let mv = (1.0 - stay) / 2.0;
        StochMatrix::from_columns(
            n,
            (0..n)
                .map(|v| vec![(v, stay), ((v + 1) % n, mv), ((v + n - 1) % n, mv)])
                .collect(),
        )
        .unwrap()
    }

    fn set(n: usize, nodes: &[usize]) -> NodeSet {
        NodeSet::from_nodes(n, nodes.iter().copied()).unwrap()
    }

    #[test]
    fn phi_cut_examples() {
        let u = Dist::uniform(4);
        let x = set(4, &[0, 1]);
        assert!(close(phi_cut(&cycle_walk(4, 0.0), &u, &x).unwrap(), 0.5));
        let shift = StochMatrix::from_columns(4, (0..4).map(|v| vec![((v + 1) % 4, 1.0)]).collect())
            .unwrap();
        assert!(close(phi_cut(&shift, &u, &x).unwrap(), 0.5));
        assert!(close(phi_cut(&StochMatrix::identity(4), &u, &x).unwrap(), 0.0));
        assert!(phi_cut(&shift, &u, &set(4, &[0, 1, 2])).is_err());
    }

    #[test]
    fn phi_chain_examples() {
        let rep = phi_chain(&cycle_walk(4, 0.5), &Dist::uniform(4)).unwrap();
        assert!(close(rep.phi, 0.25));
        assert!(close(phi_chain(&StochMatrix::identity(3), &Dist::uniform(3)).unwrap().phi, 0.0));
    }

    #[test]
    fn graph_conductance_small_cases() {
        let c4 = graph_conductance(&Graph::cycle(4), &Dist::uniform(4)).unwrap();
        assert!((c4.phi - 0.5).abs() < 1e-7);
        let k3 = graph_conductance(&Graph::complete(3), &Dist::uniform(3)).unwrap();
        assert!((k3.phi - 1.0).abs() < 1e-7);
        // K4: the six two-node cuts sum to 3t ≤ 2
        let k4 = graph_conductance(&Graph::complete(4), &Dist::uniform(4)).unwrap();
        assert!((k4.phi - 2.0 / 3.0).abs() < 1e-7);
        assert!(graph_conductance(&Graph::complete(1), &Dist::uniform(1)).is_err());
    }

    #[test]
    fn witness_is_feasible_and_optimal() {
        let g = Graph::path(5);
        let pbar = Dist::new(vec![0.1, 0.3, 0.2, 0.25, 0.15]).unwrap();
        let gc = graph_conductance(&g, &pbar).unwrap();
        assert!(gc.witness.respects(&g));
        check_invariant(&gc.witness, &pbar).unwrap();
        let rep = phi_chain(&gc.witness, &pbar).unwrap();
        assert!((rep.phi - gc.phi).abs() < 1e-7);
    }

    #[test]
    fn cut_generation_matches_full_lp() {
        // 12 positive nodes forces cut generation. A half arc of the
        // uniform cycle has two boundary edges carrying at most 1/n in
        // total, so Φ = (1/n)/(1/2) = 2/n.
        let gc = graph_conductance(&Graph::cycle(12), &Dist::uniform(12)).unwrap();
        assert!(gc.rounds > 1);
        assert!((gc.phi - 2.0 / 12.0).abs() < 1e-7, "{}", gc.phi);
        let rep = phi_chain(&gc.witness, &Dist::uniform(12)).unwrap();
        assert!((rep.phi - gc.phi).abs() < 1e-7);
    }

    #[test]
    fn zero_mass_nodes_are_handled() {
        let g = Graph::path(3);
        let pbar = Dist::new(vec![0.5, 0.5, 0.0]).unwrap();
        let gc = graph_conductance(&g, &pbar).unwrap();
        assert!((gc.phi - 1.0).abs() < 1e-7);
    }

    #[test]
    fn escape_bound_on_lazy_cycle() {
        let p = cycle_walk(4, 0.5);
        let rep = escape_bound_check(&p, &Dist::uniform(4), &set(4, &[0, 1]), 20).unwrap();
        assert!(rep.holds);
        assert_eq!(rep.steps[0].escaped, 0.0);
        assert!(close(rep.steps[1].escaped, rep.phi_x));
    }
}
