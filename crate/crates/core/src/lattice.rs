//! Concrete walk families on cycles and tori, and the lattice lemma checks.
//!
//! On the cycle, coin 0 is `+` (moves `v → v+1`) and coin 1 is `−`. On
//! `Z_M^d`, coin `2k` is `+_k` and coin `2k+1` is `−_k`, acting on axis `k`
//! of the mixed-radix node index `Σ i_k M^k`.

use std::f64::consts::E;

use log::warn;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{torus_shift, tv_distance, Dist, Graph};
use crate::lmc::{LiftedChain, StochMatrix};
use crate::mixing::{mixing_time_from, tv_trajectory_from, MixingResult};
use crate::process::{induced_process, QuantumWalkProcess, StochProcess};
use crate::quantum::{measured_unitary_channel, CMatrix, KrausChannel};
use crate::space::{CoinAssignment, LiftedSpace};

/// Parameters of the measured coined walk on the cycle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CycleParams {
    pub n: usize,
    pub alpha: f64,
    pub phi: f64,
    pub theta: f64,
    /// Measurement probability after each unitary step.
    pub q: f64,
    /// Replace the channel `Γ` by `(Id + Γ)/2`.
    pub lazy: bool,
}

impl CycleParams {
    /// `α = 1/2`, `φ = θ = 0`, `q = 1/n`, not lazy.
    pub fn new(n: usize) -> Self {
        Self {
            n,
            alpha: 0.5,
            phi: 0.0,
            theta: 0.0,
            q: 1.0 / n as f64,
            lazy: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidParameter(format!("cycle needs n ≥ 2, got {}", self.n)));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidParameter(format!("α = {} outside [0, 1]", self.alpha)));
        }
        if !(0.0..=1.0).contains(&self.q) {
            return Err(Error::InvalidParameter(format!("q = {} outside [0, 1]", self.q)));
        }
        if !self.phi.is_finite() || !self.theta.is_finite() {
            return Err(Error::InvalidParameter("phases must be finite".into()));
        }
        Ok(())
    }
}

fn step_of(coin: usize) -> isize {
    if coin % 2 == 0 {
        1
    } else {
        -1
    }
}

/// `[[e^{-iφ}√(1-α), e^{iθ}√α], [-e^{-iθ}√α, e^{iφ}√(1-α)]]`.
pub fn coin_matrix(alpha: f64, phi: f64, theta: f64) -> [[Complex64; 2]; 2] {
    let a = (1.0 - alpha).sqrt();
    let b = alpha.sqrt();
    [
        [Complex64::from_polar(a, -phi), Complex64::from_polar(b, theta)],
        [-Complex64::from_polar(b, -theta), Complex64::from_polar(a, phi)],
    ]
}

/// `U = S·(C ⊗ I_N)` on `{+,−}×Z_N`.
pub fn cycle_unitary(p: &CycleParams) -> Result<CMatrix> {
    p.validate()?;
    let n = p.n;
    let c = coin_matrix(p.alpha, p.phi, p.theta);
    let space = LiftedSpace::new(2, n)?;
    let mut u = CMatrix::zeros(2 * n, 2 * n);
    for from_coin in 0..2 {
        for v in 0..n {
            for (to_coin, row) in c.iter().enumerate() {
                let w = (v as isize + step_of(to_coin)).rem_euclid(n as isize) as usize;
                u[(space.index(to_coin, w), space.index(from_coin, v))] += row[from_coin];
            }
        }
    }
    Ok(u)
}

/// The measured cycle walk as a channel, with every node starting on `+`.
pub fn cycle_qw(p: &CycleParams) -> Result<(KrausChannel, CoinAssignment)> {
    let u = cycle_unitary(p)?;
    let space = LiftedSpace::new(2, p.n)?;
    let mut ch = measured_unitary_channel(&u, p.q, space, Graph::cycle(p.n))?;
    if p.lazy {
        ch = ch.lazy();
    }
    Ok((ch, CoinAssignment::constant(0, space)?))
}

pub fn cycle_qw_process(p: &CycleParams) -> Result<QuantumWalkProcess> {
    let (ch, coins) = cycle_qw(p)?;
    induced_process(&ch, &coins)
}

/// `P = S·(S̄ ⊗ I_N)` with `S̄ = [[1-α, α], [α, 1-α]]`, every node starting
/// on `+`.
pub fn cycle_lmc(n: usize, alpha: f64) -> Result<LiftedChain> {
    torus_like(n, 1, alpha)
}

/// `P0 = (P+ + P−)/2`; for even `n` the lazy `(P0 + I)/2`, which is
/// aperiodic.
pub fn classical_walk(n: usize) -> Result<StochMatrix> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("cycle needs n ≥ 2, got {n}")));
    }
    let p0 = StochMatrix::from_columns(
        n,
        (0..n)
            .map(|v| vec![((v + 1) % n, 0.5), ((v + n - 1) % n, 0.5)])
            .collect(),
    )?;
    if n % 2 == 0 {
        warn!("classical walk on an even cycle is periodic; using the lazy variant");
        Ok(p0.lazy())
    } else {
        Ok(p0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TorusParams {
    pub m: usize,
    pub d: u32,
    /// Coin switch probability; `1/(2dM)` when `None`.
    pub alpha: Option<f64>,
    /// Replace `P` by `(P + I)/2`.
    pub lazy: bool,
}

impl TorusParams {
    /// Default `α`, lazy exactly when `m` is even.
    pub fn new(m: usize, d: u32) -> Self {
        Self {
            m,
            d,
            alpha: None,
            lazy: m % 2 == 0,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
            .unwrap_or(1.0 / (2.0 * self.d as f64 * self.m as f64))
    }

    pub fn coins(&self) -> usize {
        2 * self.d as usize
    }

    pub fn nodes(&self) -> usize {
        self.m.pow(self.d)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 2 || self.d < 1 {
            return Err(Error::InvalidParameter(format!(
                "torus needs M ≥ 2 and d ≥ 1, got M = {}, d = {}",
                self.m, self.d
            )));
        }
        let a = self.alpha();
        if !(a >= 0.0 && 2.0 * self.d as f64 * a <= 1.0 + 1e-12) {
            return Err(Error::InvalidParameter(format!(
                "α = {a} violates 0 ≤ 2dα ≤ 1"
            )));
        }
        Ok(())
    }
}

fn torus_like(m: usize, d: u32, alpha: f64) -> Result<LiftedChain> {
    if m < 2 {
        return Err(Error::InvalidParameter(format!("side length must be ≥ 2, got {m}")));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!("α = {alpha} outside [0, 1]")));
    }
    let coins = 2 * d as usize;
    let n = m.pow(d);
    let space = LiftedSpace::new(coins, n)?;
    let stay = 1.0 - (coins as f64 - 1.0) * alpha;
    let mut columns = vec![Vec::with_capacity(coins); space.dim()];
    for c in 0..coins {
        for v in 0..n {
            columns[space.index(c, v)] = (0..coins)
                .map(|c2| {
                    let w = torus_shift(v, m, (c2 / 2) as u32, step_of(c2));
                    (space.index(c2, w), if c2 == c { stay } else { alpha })
                })
                .collect();
        }
    }
    let transition = StochMatrix::from_columns(space.dim(), columns)?;
    let graph = if d == 1 { Graph::cycle(m) } else { Graph::torus(m, d) };
    LiftedChain::new(space, graph, transition, CoinAssignment::constant(0, space)?)
}

/// The coined torus chain with `S` having `1-(2d-1)α` on the diagonal and
/// `α` elsewhere; every node starts on `+_1`.
pub fn torus_lmc(p: &TorusParams) -> Result<LiftedChain> {
    p.validate()?;
    let chain = torus_like(p.m, p.d, p.alpha())?;
    Ok(if p.lazy { chain.lazy() } else { chain })
}

/// `2(1-1/M)^(2M-1)`: probability of exactly one coin toss in `2M` steps
/// when each step tosses with probability `1/M`.
pub fn single_toss_probability(m: usize) -> f64 {
    2.0 * (1.0 - 1.0 / m as f64).powi(2 * m as i32 - 1)
}

/// `⌈3M(d ln d + d)·32e·d⌉`, the horizon obtained in the proof of the
/// contraction lemma.
pub fn contraction_horizon(m: usize, d: u32) -> usize {
    let (m, d) = (m as f64, d as f64);
    (3.0 * m * (d * d.ln() + d) * 32.0 * E * d).ceil() as usize
}

/// `⌈3M·d(d ln d + d)⌉`, the horizon in the lemma's statement.
pub fn contraction_stated_horizon(m: usize, d: u32) -> usize {
    let (m, d) = (m as f64, d as f64);
    (3.0 * m * d * (d * d.ln() + d)).ceil() as usize
}

/// `q = (1 - 1/e)/2`.
pub fn contraction_weight() -> f64 {
    (1.0 - 1.0 / E) / 2.0
}

#[derive(Clone, Debug, Serialize)]
pub struct LatticeLemmaReport {
    pub m: usize,
    pub d: u32,
    /// `2(1-1/M)^(2M-1)`.
    pub coin_toss_probability: f64,
    /// `1/(16dM)`.
    pub axis_threshold: f64,
    /// Smallest `P[i_k = n]` after `2M` steps over atoms `(c, v)` and
    /// values `n`, where `k` is the axis of `c`.
    pub axis_min: f64,
    pub axis_holds: bool,
    pub horizon: usize,
    /// `q = (1-1/e)/2`.
    pub weight: f64,
    /// Smallest `p_T(c, v)/p̄(c, v)` over atom starts and states.
    pub min_ratio: f64,
    pub contraction_holds: bool,
}

/// Exact evolution of every atom of `C×V`: the axis-mixing bound after
/// `2M` steps and `p_T ≥ q·p̄` at the supplied `T`. Linearity makes atoms
/// sufficient for arbitrary starts.
pub fn lattice_lemma_checks(p: &TorusParams, horizon: usize) -> Result<LatticeLemmaReport> {
    p.validate()?;
    if p.m % 2 == 0 && !p.lazy {
        return Err(Error::InvalidParameter(format!(
            "M = {} is even: the chain has a parity obstruction; set lazy",
            p.m
        )));
    }
    let chain = torus_lmc(p)?;
    let space = chain.space();
    let pm = chain.transition();
    let dim = space.dim();
    let m = p.m;
    let d = p.d;
    let axis_threshold = 1.0 / (16.0 * d as f64 * m as f64);
    let pbar = 1.0 / dim as f64;
    let q = contraction_weight();
    let per_atom: Vec<(f64, f64)> = (0..dim)
        .into_par_iter()
        .map(|start| {
            let axis = (space.coin_of(start) / 2) as u32;
            let mut x = vec![0.0; dim];
            let mut y = vec![0.0; dim];
            x[start] = 1.0;
            let ratio_of = |x: &[f64]| x.iter().fold(f64::INFINITY, |a, &w| a.min(w / pbar));
            let mut axis_min = f64::INFINITY;
            let mut ratio = ratio_of(&x);
            for t in 1..=horizon.max(2 * m) {
                pm.apply_into(&x, &mut y);
                std::mem::swap(&mut x, &mut y);
                if t == 2 * m {
                    let stride = m.pow(axis);
                    let mut marg = vec![0.0; m];
                    for (i, &w) in x.iter().enumerate() {
                        marg[(space.node_of(i) / stride) % m] += w;
                    }
                    axis_min = marg.into_iter().fold(f64::INFINITY, f64::min);
                }
                if t == horizon {
                    ratio = ratio_of(&x);
                }
            }
            (axis_min, ratio)
        })
        .collect();
    let axis_min = per_atom.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
    let min_ratio = per_atom.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    Ok(LatticeLemmaReport {
        m,
        d,
        coin_toss_probability: single_toss_probability(m),
        axis_threshold,
        axis_min,
        axis_holds: axis_min >= axis_threshold - 1e-12,
        horizon,
        weight: q,
        min_ratio,
        contraction_holds: min_ratio >= q,
    })
}

/// `τ(ε)` of a walk commuting with the cyclic (or toroidal) translations,
/// from the single start node 0. Translation invariance of the dynamics and
/// of the constant coin assignment makes every start equivalent.
pub fn translation_invariant_mixing_time<P: StochProcess + ?Sized>(
    proc: &P,
    eps: f64,
    horizon: usize,
) -> Result<MixingResult> {
    let n = proc.node_count();
    mixing_time_from(tv_trajectory_from(proc, &Dist::uniform(n), horizon, &[0])?, eps)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MultiscalePoint {
    pub t: usize,
    pub qw_tv: f64,
    pub lmc_tv: f64,
}

/// Window of the `2t+1` nodes nearest to node 0 (the whole cycle once
/// `2t+1 ≥ n`).
pub fn multiscale_window(n: usize, t: usize) -> Vec<usize> {
    if 2 * t + 1 >= n {
        return (0..n).collect();
    }
    let mut w: Vec<usize> = (0..=t).chain((n - t)..n).collect();
    w.sort_unstable();
    w
}

fn window_tv(p: &Dist, window: &[usize]) -> Result<f64> {
    let mass: f64 = window.iter().map(|&v| p[v]).sum();
    if mass <= 0.0 {
        return Ok(1.0);
    }
    let restricted = Dist::new(window.iter().map(|&v| p[v] / mass).collect())?;
    tv_distance(&restricted, &Dist::uniform(window.len()))
}

/// Window TV of the measured walk (`α = 1/2`, `q = 1/N`) and of the lifted
/// chain (`α = 1/N`), both started at `(+, 0)`, for every `t ≤ tmax`.
pub fn multiscale_series(n: usize, tmax: usize) -> Result<Vec<MultiscalePoint>> {
    if tmax >= n {
        return Err(Error::InvalidParameter(format!("need t < N, got t = {tmax}, N = {n}")));
    }
    let qw = cycle_qw_process(&CycleParams::new(n))?;
    let lmc = cycle_lmc(n, 1.0 / n as f64)?;
    let start = Dist::delta(n, 0)?;
    let qs = qw.trajectory(&start, tmax)?;
    let ls = lmc.trajectory(&start, tmax)?;
    (0..=tmax)
        .map(|t| {
            let w = multiscale_window(n, t);
            Ok(MultiscalePoint {
                t,
                qw_tv: window_tv(&qs[t], &w)?,
                lmc_tv: window_tv(&ls[t], &w)?,
            })
        })
        .collect()
}

/// The last point of [`multiscale_series`].
pub fn multiscale_experiment(n: usize, t: usize) -> Result<MultiscalePoint> {
    Ok(*multiscale_series(n, t)?.last().expect("t + 1 points"))
}
