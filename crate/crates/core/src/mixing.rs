//! Mixing times from total-variation trajectories.
//!
//! The worst case over initial distributions is taken over point masses:
//! `p0 ↦ TV(Ψ_t[p0], p̄)` is convex because `Ψ_t` is linear, so its maximum
//! over the simplex sits at a vertex.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{check_same_len, tv_distance, Dist};
use crate::process::{ProcessKind, StochProcess};

/// Slack on the `TV ≤ ε` comparison.
pub const TV_SLACK: f64 = 1e-12;

pub const CONVEXITY_NOTE: &str = "worst case over p0 taken over point masses: \
TV(Psi_t[p0], pbar) is convex in p0, so its maximum over the simplex is attained at a vertex; \
tau is certified only up to the horizon";

#[derive(Clone, Debug, Serialize)]
pub struct TvTrajectory {
    /// `max_u TV(Ψ_t[δ_u], p̄)` for `t = 0..=horizon`.
    pub max_tv: Vec<f64>,
    /// Start node attaining `max_tv[t]` (lowest index on ties).
    pub argmax: Vec<usize>,
}

impl TvTrajectory {
    pub fn horizon(&self) -> usize {
        self.max_tv.len() - 1
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MixingResult {
    pub eps: f64,
    /// Smallest `t` with `max_tv[s] ≤ ε` for every `s ∈ [t, horizon]`;
    /// `None` when `max_tv[horizon] > ε`.
    pub tau: Option<usize>,
    pub horizon: usize,
    /// Start node attaining the last TV above `ε` (or at `t = 0`).
    pub worst_start: usize,
    pub trajectory: TvTrajectory,
    pub note: &'static str,
}

/// Maximum TV to `p̄` over basis starts, per time step.
pub fn tv_trajectory<P: StochProcess + ?Sized>(
    proc: &P,
    pbar: &Dist,
    horizon: usize,
) -> Result<TvTrajectory> {
    tv_trajectory_from(proc, pbar, horizon, &(0..proc.node_count()).collect::<Vec<_>>())
}

/// [`tv_trajectory`] restricted to the given start nodes. When the process
/// commutes with a group acting transitively on the nodes, one start per
/// orbit gives the same maximum.
pub fn tv_trajectory_from<P: StochProcess + ?Sized>(
    proc: &P,
    pbar: &Dist,
    horizon: usize,
    starts: &[usize],
) -> Result<TvTrajectory> {
    let n = proc.node_count();
    check_same_len(n, pbar.len())?;
    if starts.is_empty() {
        return Err(Error::InvalidParameter("no start nodes".into()));
    }
    let per_start: Vec<Vec<f64>> = starts
        .par_iter()
        .map(|&u| {
            let mut tv = Vec::with_capacity(horizon + 1);
            proc.walk(&Dist::delta(n, u)?, horizon, &mut |_, p| {
                tv.push(tv_distance(p, pbar)?);
                Ok(())
            })?;
            Ok(tv)
        })
        .collect::<Result<_>>()?;
    let mut max_tv = vec![f64::NEG_INFINITY; horizon + 1];
    let mut argmax = vec![0; horizon + 1];
    for (&u, tv) in starts.iter().zip(&per_start) {
        for t in 0..=horizon {
            if tv[t] > max_tv[t] || (tv[t] == max_tv[t] && u < argmax[t]) {
                max_tv[t] = tv[t];
                argmax[t] = u;
            }
        }
    }
    Ok(TvTrajectory { max_tv, argmax })
}

/// Reads `τ(ε)` off a trajectory, with persistence through its end.
pub fn mixing_time_from(trajectory: TvTrajectory, eps: f64) -> Result<MixingResult> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("ε must be positive, got {eps}")));
    }
    let horizon = trajectory.horizon();
    let last_above = trajectory.max_tv.iter().rposition(|&tv| tv > eps + TV_SLACK);
    let (tau, worst_start) = match last_above {
        None => (Some(0), trajectory.argmax[0]),
        Some(t) if t == horizon => (None, trajectory.argmax[t]),
        Some(t) => (Some(t + 1), trajectory.argmax[t]),
    };
    Ok(MixingResult {
        eps,
        tau,
        horizon,
        worst_start,
        trajectory,
        note: CONVEXITY_NOTE,
    })
}

/// `τ(ε)` certified up to `horizon`.
pub fn mixing_time<P: StochProcess + ?Sized>(
    proc: &P,
    pbar: &Dist,
    eps: f64,
    horizon: usize,
) -> Result<MixingResult> {
    if horizon == 0 {
        return Err(Error::InvalidParameter("horizon must be at least 1".into()));
    }
    mixing_time_from(tv_trajectory(proc, pbar, horizon)?, eps)
}

/// `τ̄·⌈log(1/ε)/log(1/(2ε₀))⌉`; zero when `ε ≥ 1`.
pub fn amplification_bound(tau_bar: usize, eps0: f64, eps: f64) -> Result<usize> {
    if !(eps0 > 0.0 && eps0 < 0.5) {
        return Err(Error::InvalidParameter(format!("ε₀ must lie in (0, 1/2), got {eps0}")));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("ε must be positive, got {eps}")));
    }
    if eps >= 1.0 {
        return Ok(0);
    }
    let ratio = (1.0 / eps).ln() / (1.0 / (2.0 * eps0)).ln();
    // absorb rounding so that exact ratios such as log 4 / log 2 stay integral
    let k = (ratio - 1e-9).ceil().max(0.0) as usize;
    Ok(tau_bar * k)
}

/// `20n` for chains, `40n` for quantum walks.
pub fn default_horizon(kind: ProcessKind, n: usize) -> usize {
    match kind {
        ProcessKind::QuantumWalk => 40 * n,
        _ => 20 * n,
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn fit_exponent(xs: &[f64], ys: &[f64]) -> Result<f64> {
    check_same_len(xs.len(), ys.len())?;
    if xs.len() < 2 {
        return Err(Error::InvalidParameter("need at least two points".into()));
    }
    if xs.iter().chain(ys).any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidParameter("log-log fit needs positive data".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("x values coincide".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}
