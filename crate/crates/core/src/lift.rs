//! Clock lifts: a single time-invariant lifted chain that replays the bridges
//! of every start node.
//!
//! The coin is `(v0, l)`: the start node and a clock `l ∈ {0, …, T}`. State
//! `(v0, l, v)` sits at flat index `v0·(T+1)·n + l·n + v`, which is the
//! coin-major layout of [`LiftedSpace`] with coin `v0·(T+1) + l`.

use serde::Serialize;

use crate::bridge::BridgeSequence;
use crate::error::{Error, Result};
use crate::graph::{check_same_len, Dist, Graph};
use crate::lmc::{LiftedChain, StochMatrix};
use crate::process::{basis_trajectories, Amplified, StochProcess};
use crate::space::{CoinAssignment, LiftedSpace};

#[derive(Clone, Debug)]
pub struct ClockLift {
    chain: LiftedChain,
    horizon: usize,
    amplified: bool,
    /// `steps[v0][l]` is the bridge `P_{l+1}^{(v0)}`.
    steps: Vec<Vec<StochMatrix>>,
}

impl ClockLift {
    pub fn chain(&self) -> &LiftedChain {
        &self.chain
    }

    /// The clock length `T`.
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn is_amplified(&self) -> bool {
        self.amplified
    }

    pub fn node_count(&self) -> usize {
        self.chain.space().nodes()
    }

    /// Flat index of `(v0, l, v)`.
    pub fn index(&self, v0: usize, l: usize, v: usize) -> usize {
        let n = self.node_count();
        (v0 * (self.horizon + 1) + l) * n + v
    }

    /// Inverse of [`ClockLift::index`].
    pub fn state(&self, i: usize) -> (usize, usize, usize) {
        let n = self.node_count();
        let c = i / n;
        (c / (self.horizon + 1), c % (self.horizon + 1), i % n)
    }

    fn build(g: &Graph, steps: Vec<Vec<StochMatrix>>, amplified: bool) -> Result<Self> {
        let n = g.node_count();
        let horizon = steps[0].len();
        let t1 = horizon + 1;
        let space = LiftedSpace::new(n * t1, n)?;
        let idx = |v0: usize, l: usize, v: usize| (v0 * t1 + l) * n + v;
        let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); space.dim()];
        for v0 in 0..n {
            for l in 0..horizon {
                let m = &steps[v0][l];
                for v in 0..n {
                    columns[idx(v0, l, v)] = m.column(v).map(|(w, p)| (idx(v0, l + 1, w), p)).collect();
                }
            }
            for v in 0..n {
                columns[idx(v0, horizon, v)] = if amplified {
                    // restart from (v, 0, v) and take its first step at once
                    steps[v][0].column(v).map(|(w, p)| (idx(v, 1, w), p)).collect()
                } else {
                    vec![(idx(v0, horizon, v), 1.0)]
                };
            }
        }
        let transition = StochMatrix::from_columns(space.dim(), columns)?;
        let init = CoinAssignment::new((0..n).map(|v| v * t1).collect(), space)?;
        let chain = LiftedChain::new(space, g.clone(), transition, init)?;
        Ok(Self {
            chain,
            horizon,
            amplified,
            steps,
        })
    }
}

/// Compiles one bridge sequence per start node `δ_v` (in node order) into
/// the plain clock lift, whose terminal block is the identity.
pub fn clock_lift(bridges: &[BridgeSequence], g: &Graph) -> Result<ClockLift> {
    let n = g.node_count();
    if bridges.len() != n {
        return Err(Error::InvalidParameter(format!(
            "expected one bridge sequence per node ({n}), got {}",
            bridges.len()
        )));
    }
    let horizon = bridges[0].len();
    if horizon == 0 {
        return Err(Error::InvalidParameter("empty bridge sequence".into()));
    }
    for (v, b) in bridges.iter().enumerate() {
        if b.p0 != Dist::delta(n, v)? {
            return Err(Error::InvalidParameter(format!(
                "bridge sequence {} does not start from node {}",
                v,
                v + 1
            )));
        }
        check_same_len(horizon, b.len())?;
        for m in &b.matrices {
            check_same_len(n, m.dim())?;
        }
    }
    let steps = bridges.iter().map(|b| b.matrices.clone()).collect();
    ClockLift::build(g, steps, false)
}

/// Replaces the terminal identity with a restart: from `(v0, T, v)` the
/// walk re-enters the bridges of `v`. The restart is merged with the first
/// bridge step, so the lift reproduces `Ψ_{t mod T}(Ψ_T)^{⌊t/T⌋}` at every
/// time without an idle step.
pub fn amplified_lift(lift: &ClockLift) -> Result<ClockLift> {
    if lift.amplified {
        return Err(Error::InvalidParameter("lift is already amplified".into()));
    }
    ClockLift::build(lift.chain.graph(), lift.steps.clone(), true)
}

#[derive(Clone, Debug, Serialize)]
pub struct SimulationReport {
    /// `max ‖f(P^t F[δ_v]) - target_t[δ_v]‖₁` over starts and `t ≤ horizon`.
    pub max_residual: f64,
    /// `(start node, t)` of the largest residual.
    pub worst: (usize, usize),
    /// Every nonzero jump of the lift follows an edge of the base graph.
    pub local: bool,
    pub horizon: usize,
}

/// Compares the lift's marginals with `Ψ_t` (plain) or the amplified
/// process (amplified) from every basis start up to `horizon`.
pub fn verify_simulation<P: StochProcess + ?Sized>(
    lift: &ClockLift,
    proc: &P,
    horizon: usize,
) -> Result<SimulationReport> {
    let n = lift.node_count();
    check_same_len(n, proc.node_count())?;
    let targets = if lift.amplified {
        basis_trajectories(&Amplified::new(proc, lift.horizon)?, horizon)?
    } else {
        basis_trajectories(proc, horizon)?
    };
    let actual = basis_trajectories(lift.chain(), horizon)?;
    let mut max_residual: f64 = 0.0;
    let mut worst = (0, 0);
    for v in 0..n {
        for t in 0..=horizon {
            let r = actual[v][t].l1_distance(&targets[v][t])?;
            if r > max_residual {
                max_residual = r;
                worst = (v, t);
            }
        }
    }
    let chain = lift.chain();
    let local = chain
        .transition()
        .locality_violation(chain.graph(), chain.space())
        .is_none();
    Ok(SimulationReport {
        max_residual,
        worst,
        local,
        horizon,
    })
}
