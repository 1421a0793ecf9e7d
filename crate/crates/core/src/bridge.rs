//! Stochastic bridges: local stochastic matrices mapping `y` to `z`, read
//! off a maximum flow.
//!
//! The network has a source `s`, two copies `W`, `W'` of the nodes and a
//! sink `r`. Arc `s → v` has capacity `y(v)`, `v → v'` capacity 1 for each
//! edge, and `v' → r` capacity `z(v')`. A flow of value 1 exists iff the pair
//! satisfies the locality inequality, and `flow(v → v')/y(v)` is then a
//! local bridge.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{check_same_len, Dist, Graph, SUM_TOL};
use crate::lmc::StochMatrix;
use crate::process::StochProcess;

/// Residual capacity below which an arc counts as saturated.
pub const RESIDUAL_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Arc {
    pub from: usize,
    pub to: usize,
    pub capacity: f64,
}

#[derive(Clone, Debug)]
pub struct FlowNetwork {
    n: usize,
    arcs: Vec<Arc>,
    /// Index range of the middle arcs `v → v'` inside `arcs`.
    middle: std::ops::Range<usize>,
}

impl FlowNetwork {
    pub fn source(&self) -> usize {
        0
    }

    pub fn sink(&self) -> usize {
        2 * self.n + 1
    }

    /// Network vertex of node `v` in the first copy.
    pub fn left(&self, v: usize) -> usize {
        1 + v
    }

    /// Network vertex of node `v'` in the second copy.
    pub fn right(&self, v: usize) -> usize {
        1 + self.n + v
    }

    pub fn vertex_count(&self) -> usize {
        2 * self.n + 2
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    /// Middle arcs as `(v, v', capacity)` in node labels.
    pub fn middle_arcs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.arcs[self.middle.clone()]
            .iter()
            .map(move |a| (a.from - 1, a.to - 1 - self.n))
    }
}

pub fn build_flow_network(y: &Dist, z: &Dist, g: &Graph) -> Result<FlowNetwork> {
    let n = g.node_count();
    check_same_len(n, y.len())?;
    check_same_len(n, z.len())?;
    let mut arcs = Vec::with_capacity(2 * n + g.edge_count());
    for v in 0..n {
        arcs.push(Arc {
            from: 0,
            to: 1 + v,
            capacity: y[v],
        });
    }
    let start = arcs.len();
    for (v, w) in g.edges() {
        arcs.push(Arc {
            from: 1 + v,
            to: 1 + n + w,
            capacity: 1.0,
        });
    }
    let middle = start..arcs.len();
    for w in 0..n {
        arcs.push(Arc {
            from: 1 + n + w,
            to: 2 * n + 1,
            capacity: z[w],
        });
    }
    Ok(FlowNetwork { n, arcs, middle })
}

#[derive(Clone, Debug)]
pub struct MaxFlow {
    pub value: f64,
    /// Flow on each middle arc, `(v, v', flow)`.
    pub middle: Vec<(usize, usize, f64)>,
}

/// Shortest-augmenting-path (Edmonds–Karp) maximum flow.
pub fn max_flow(net: &FlowNetwork) -> MaxFlow {
    let nv = net.vertex_count();
    // Residual graph: arc 2k is forward, 2k+1 its reverse.
    let mut head = Vec::with_capacity(2 * net.arcs.len());
    let mut residual = Vec::with_capacity(2 * net.arcs.len());
    let mut adj = vec![Vec::new(); nv];
    for a in &net.arcs {
        adj[a.from].push(head.len());
        head.push(a.to);
        residual.push(a.capacity.max(0.0));
        adj[a.to].push(head.len());
        head.push(a.from);
        residual.push(0.0);
    }
    let (s, r) = (net.source(), net.sink());
    let mut value = 0.0;
    let mut via = vec![usize::MAX; nv];
    loop {
        via.iter_mut().for_each(|x| *x = usize::MAX);
        let mut queue = VecDeque::from([s]);
        let mut reached = false;
        while let Some(u) = queue.pop_front() {
            for &e in &adj[u] {
                let w = head[e];
                if w != s && via[w] == usize::MAX && residual[e] > RESIDUAL_TOL {
                    via[w] = e;
                    if w == r {
                        reached = true;
                        break;
                    }
                    queue.push_back(w);
                }
            }
            if reached {
                break;
            }
        }
        if !reached {
            break;
        }
        let mut bottleneck = f64::INFINITY;
        let mut w = r;
        while w != s {
            let e = via[w];
            bottleneck = bottleneck.min(residual[e]);
            w = head[e ^ 1];
        }
        let mut w = r;
        while w != s {
            let e = via[w];
            residual[e] -= bottleneck;
            residual[e ^ 1] += bottleneck;
            w = head[e ^ 1];
        }
        value += bottleneck;
    }
    let middle = net
        .middle
        .clone()
        .map(|k| {
            let a = &net.arcs[k];
            (a.from - 1, a.to - 1 - net.n, residual[2 * k + 1])
        })
        .collect();
    MaxFlow { value, middle }
}

/// `P(v', v) = flow(v → v') / y(v)`, columns renormalized. Columns with
/// `y(v) = 0` (or no outgoing flow) are set to `δ_v`.
pub fn extract_bridge(flow: &MaxFlow, y: &Dist, g: &Graph) -> Result<StochMatrix> {
    let n = g.node_count();
    check_same_len(n, y.len())?;
    if flow.value < 1.0 - SUM_TOL {
        return Err(Error::Infeasible { value: flow.value });
    }
    let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for &(v, w, f) in &flow.middle {
        if v >= n || w >= n {
            return Err(Error::NodeOutOfRange { node: v.max(w), n });
        }
        if !g.has_edge(v, w) {
            return Err(Error::NotLocal(format!("flow on missing edge ({}, {})", v + 1, w + 1)));
        }
        if y[v] > 0.0 && f > 0.0 {
            columns[v].push((w, f));
        }
    }
    for (v, col) in columns.iter_mut().enumerate() {
        let total: f64 = col.iter().map(|e| e.1).sum();
        if total <= 0.0 {
            col.clear();
            col.push((v, 1.0));
        } else {
            col.iter_mut().for_each(|e| e.1 /= total);
        }
    }
    StochMatrix::from_columns(n, columns)
}

/// One-shot bridge for the pair `(y, z)`.
pub fn bridge(y: &Dist, z: &Dist, g: &Graph) -> Result<(StochMatrix, f64)> {
    let flow = max_flow(&build_flow_network(y, z, g)?);
    let m = extract_bridge(&flow, y, g)?;
    Ok((m, flow.value))
}

/// Bridges `P_1, …, P_T` for one initial distribution.
#[derive(Clone, Debug)]
pub struct BridgeSequence {
    pub p0: Dist,
    pub matrices: Vec<StochMatrix>,
    /// `Ψ_0[p0], …, Ψ_T[p0]`.
    pub trace: Vec<Dist>,
    /// Max-flow value of each step.
    pub flow_values: Vec<f64>,
}

impl BridgeSequence {
    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    /// `max_t ‖P_t p_{t-1} - p_t‖₁`.
    pub fn step_residual(&self) -> f64 {
        self.matrices
            .iter()
            .enumerate()
            .map(|(t, m)| {
                let y = m.apply(self.trace[t].as_slice());
                y.iter()
                    .zip(self.trace[t + 1].as_slice())
                    .map(|(a, b)| (a - b).abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    /// `max_t ‖P_t ⋯ P_1 p0 - Ψ_t[p0]‖₁`.
    pub fn product_residual(&self) -> f64 {
        let mut p = self.p0.as_slice().to_vec();
        let mut worst: f64 = 0.0;
        for (t, m) in self.matrices.iter().enumerate() {
            p = m.apply(&p);
            let r: f64 = p
                .iter()
                .zip(self.trace[t + 1].as_slice())
                .map(|(a, b)| (a - b).abs())
                .sum();
            worst = worst.max(r);
        }
        worst
    }
}

/// Bridges reproducing `Ψ_1[p0], …, Ψ_T[p0]` step by step.
pub fn bridge_sequence<P: StochProcess + ?Sized>(
    proc: &P,
    g: &Graph,
    p0: &Dist,
    horizon: usize,
) -> Result<BridgeSequence> {
    if horizon == 0 {
        return Err(Error::InvalidParameter("bridge horizon must be ≥ 1".into()));
    }
    check_same_len(g.node_count(), proc.node_count())?;
    let trace = proc.trajectory(p0, horizon)?;
    let mut matrices = Vec::with_capacity(horizon);
    let mut flow_values = Vec::with_capacity(horizon);
    for pair in trace.windows(2) {
        let (m, value) = bridge(&pair[0], &pair[1], g)?;
        matrices.push(m);
        flow_values.push(value);
    }
    Ok(BridgeSequence {
        p0: p0.clone(),
        matrices,
        trace,
        flow_values,
    })
}

/// [`bridge_sequence`] from every basis start `δ_v`, in parallel.
pub fn basis_bridges<P: StochProcess + ?Sized>(
    proc: &P,
    g: &Graph,
    horizon: usize,
) -> Result<Vec<BridgeSequence>> {
    let n = g.node_count();
    (0..n)
        .into_par_iter()
        .map(|v| bridge_sequence(proc, g, &Dist::delta(n, v)?, horizon))
        .collect()
}
