//! Families of stochastic linear maps `Ψ_t` over the node set.
//!
//! Every process is evaluated lazily: [`StochProcess::walk`] visits
//! `Ψ_0[p0], Ψ_1[p0], …` in order without storing the trace.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{check_locality_trace, check_same_len, tv_distance, Dist, Graph, LocalityReport, SUM_TOL};
use crate::lmc::{LiftedChain, StochMatrix};
use crate::quantum::{init_map, node_marginal, step, KrausChannel};
use crate::space::CoinAssignment;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProcessKind {
    QuantumWalk,
    LiftedChain,
    MarkovChain,
    Cesaro,
    Amplified,
    Bridge,
}

pub type Visitor<'a> = dyn FnMut(usize, &Dist) -> Result<()> + 'a;

pub trait StochProcess: Send + Sync {
    fn node_count(&self) -> usize;

    fn kind(&self) -> ProcessKind;

    /// Graph whose locality the process is built to respect, if known.
    fn graph(&self) -> Option<&Graph>;

    /// Calls `visit(t, Ψ_t[p0])` for `t = 0..=horizon`.
    fn walk(&self, p0: &Dist, horizon: usize, visit: &mut Visitor<'_>) -> Result<()>;

    /// `[Ψ_0[p0], …, Ψ_horizon[p0]]`.
    fn trajectory(&self, p0: &Dist, horizon: usize) -> Result<Vec<Dist>> {
        let mut out = Vec::with_capacity(horizon + 1);
        self.walk(p0, horizon, &mut |_, p| {
            out.push(p.clone());
            Ok(())
        })?;
        Ok(out)
    }

    /// `Ψ_t[p0]`.
    fn evaluate(&self, p0: &Dist, t: usize) -> Result<Dist> {
        let mut last = None;
        self.walk(p0, t, &mut |s, p| {
            if s == t {
                last = Some(p.clone());
            }
            Ok(())
        })?;
        last.ok_or_else(|| Error::InvalidParameter(format!("no value at t = {t}")))
    }
}

impl<P: StochProcess + ?Sized> StochProcess for Box<P> {
    fn node_count(&self) -> usize {
        (**self).node_count()
    }
    fn kind(&self) -> ProcessKind {
        (**self).kind()
    }
    fn graph(&self) -> Option<&Graph> {
        (**self).graph()
    }
    fn walk(&self, p0: &Dist, horizon: usize, visit: &mut Visitor<'_>) -> Result<()> {
        (**self).walk(p0, horizon, visit)
    }
}

impl<P: StochProcess + ?Sized> StochProcess for &P {
    fn node_count(&self) -> usize {
        (**self).node_count()
    }
    fn kind(&self) -> ProcessKind {
        (**self).kind()
    }
    fn graph(&self) -> Option<&Graph> {
        (**self).graph()
    }
    fn walk(&self, p0: &Dist, horizon: usize, visit: &mut Visitor<'_>) -> Result<()> {
        (**self).walk(p0, horizon, visit)
    }
}

/// `Ψ_t[p0] = f(Γ_t ∘ … ∘ Γ_1 [F(p0)])`.
///
/// Step `t` applies `schedule[min(t, len) - 1]`, so a single channel gives
/// a time-invariant walk and a longer schedule models `q_t`.
#[derive(Clone, Debug)]
pub struct QuantumWalkProcess {
    schedule: Vec<KrausChannel>,
    coins: CoinAssignment,
}

impl QuantumWalkProcess {
    pub fn with_schedule(schedule: Vec<KrausChannel>, coins: CoinAssignment) -> Result<Self> {
        let first = schedule
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty channel schedule".into()))?;
        let space = first.space();
        for ch in &schedule {
            if ch.space() != space || ch.graph() != first.graph() {
                return Err(Error::InvalidParameter(
                    "scheduled channels must share space and graph".into(),
                ));
            }
        }
        check_same_len(space.nodes(), coins.len())?;
        Ok(Self { schedule, coins })
    }

    pub fn channel(&self) -> &KrausChannel {
        &self.schedule[0]
    }

    pub fn coins(&self) -> &CoinAssignment {
        &self.coins
    }
}

/// The process induced on `V` by a channel and an initial coin assignment.
pub fn induced_process(ch: &KrausChannel, coins: &CoinAssignment) -> Result<QuantumWalkProcess> {
    QuantumWalkProcess::with_schedule(vec![ch.clone()], coins.clone())
}

impl StochProcess for QuantumWalkProcess {
    fn node_count(&self) -> usize {
        self.schedule[0].space().nodes()
    }

    fn kind(&self) -> ProcessKind {
        ProcessKind::QuantumWalk
    }

    fn graph(&self) -> Option<&Graph> {
        Some(self.schedule[0].graph())
    }

    fn walk(&self, p0: &Dist, horizon: usize, visit: &mut Visitor<'_>) -> Result<()> {
        let space = self.schedule[0].space();
        let mut rho = init_map(p0, &self.coins, space)?;
        visit(0, &node_marginal(&rho)?)?;
        for t in 1..=horizon {
            let ch = &self.schedule[(t - 1).min(self.schedule.len() - 1)];
            rho = step(ch, &rho)?;
            visit(t, &node_marginal(&rho)?)?;
        }
        Ok(())
    }
}

impl StochProcess for LiftedChain {
    fn node_count(&self) -> usize {
        self.space().nodes()
    }

    fn kind(&self) -> ProcessKind {
        ProcessKind::LiftedChain
    }

    fn graph(&self) -> Option<&Graph> {
        Some(LiftedChain::graph(self))
    }

    fn walk(&self, p0: &Dist, horizon: usize, visit: &mut Visitor<'_>) -> Result<()> {
        let space = self.space();
        let mut x = self.lift(p0)?;
        let mut y = vec![0.0; x.len()];
        visit(0, &space.marginalize(&x)?)?;
        for t in 1..=horizon {
            self.transition().apply_into(&x, &mut y);
            std::mem::swap(&mut x, &mut y);
            visit(t, &space.marginalize(&x)?)?;
        }
        Ok(())
    }
}

impl StochProcess for StochMatrix {
    fn node_count(&self) -> usize {
        self.dim()
    }

    fn kind(&self) -> ProcessKind {
        ProcessKind::MarkovChain
    }

    fn graph(&self) -> Option<&Graph> {
        None
    }

    fn walk(&self, p0: &Dist, horizon: usize, visit: &mut Visitor<'_>) -> Result<()> {
        check_same_len(self.dim(), p0.len())?;
        let mut x = p0.as_slice().to_vec();
        let mut y = vec![0.0; x.len()];
        visit(0, p0)?;
        for t in 1..=horizon {
            self.apply_into(&x, &mut y);
            std::mem::swap(&mut x, &mut y);
            visit(t, &Dist::new(x.clone())?)?;
        }
        Ok(())
    }
}

/// Running time average `Ψ̃_t = (1/(t+1)) Σ_{s ≤ t} Ψ_s`.
#[derive(Clone, Debug)]
pub struct Cesaro<P>(pub P);

pub fn cesaro<P: StochProcess>(proc: P) -> Cesaro<P> {
    Cesaro(proc)
}

impl<P: StochProcess> StochProcess for Cesaro<P> {
    fn node_count(&self) -> usize {
        self.0.node_count()
    }

    fn kind(&self) -> ProcessKind {
        ProcessKind::Cesaro
    }

    fn graph(&self) -> Option<&Graph> {
        self.0.graph()
    }

    fn walk(&self, p0: &Dist, horizon: usize, visit: &mut Visitor<'_>) -> Result<()> {
        let mut sum = vec![0.0; self.node_count()];
        self.0.walk(p0, horizon, &mut |t, p| {
            for (s, w) in sum.iter_mut().zip(p.as_slice()) {
                *s += w;
            }
            let k = (t + 1) as f64;
            visit(t, &Dist::new(sum.iter().map(|s| s / k).collect())?)
        })
    }
}

/// `Ψ̃_t = Ψ_{t mod T} (Ψ_T)^{⌊t/T⌋}`, evaluated from the basis
/// trajectories of the inner process up to `T`.
#[derive(Clone, Debug)]
pub struct Amplified {
    period: usize,
    graph: Option<Graph>,
    /// `table[u][r] = Ψ_r[δ_u]`, `r ≤ T`.
    table: Vec<Vec<Dist>>,
}

impl Amplified {
    pub fn new<P: StochProcess + ?Sized>(inner: &P, period: usize) -> Result<Self> {
        if period == 0 {
            return Err(Error::InvalidParameter("amplification period must be ≥ 1".into()));
        }
        Ok(Self {
            period,
            graph: inner.graph().cloned(),
            table: basis_trajectories(inner, period)?,
        })
    }

    pub fn period(&self) -> usize {
        self.period
    }

    fn combine(&self, weights: &[f64], r: usize) -> Result<Dist> {
        let mut out = vec![0.0; weights.len()];
        for (u, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (o, x) in out.iter_mut().zip(self.table[u][r].as_slice()) {
                *o += w * x;
            }
        }
        Dist::new(out)
    }
}

impl StochProcess for Amplified {
    fn node_count(&self) -> usize {
        self.table.len()
    }

    fn kind(&self) -> ProcessKind {
        ProcessKind::Amplified
    }

    fn graph(&self) -> Option<&Graph> {
        self.graph.as_ref()
    }

    fn walk(&self, p0: &Dist, horizon: usize, visit: &mut Visitor<'_>) -> Result<()> {
        check_same_len(self.node_count(), p0.len())?;
        let mut restart = p0.clone();
        for t in 0..=horizon {
            let r = t % self.period;
            if r == 0 && t > 0 {
                restart = self.combine(restart.as_slice(), self.period)?;
            }
            visit(t, &self.combine(restart.as_slice(), r)?)?;
        }
        Ok(())
    }
}

/// `Ψ_t = P_t ⋯ P_1`, defined for `t ≤` the sequence length.
#[derive(Clone, Debug)]
pub struct MatrixSequence {
    graph: Option<Graph>,
    matrices: Vec<StochMatrix>,
}

impl MatrixSequence {
    pub fn new(matrices: Vec<StochMatrix>, graph: Option<Graph>) -> Result<Self> {
        let n = matrices
            .first()
            .map(StochMatrix::dim)
            .ok_or_else(|| Error::InvalidParameter("empty matrix sequence".into()))?;
        for m in &matrices {
            check_same_len(n, m.dim())?;
        }
        Ok(Self { graph, matrices })
    }

    pub fn matrices(&self) -> &[StochMatrix] {
        &self.matrices
    }
}

impl StochProcess for MatrixSequence {
    fn node_count(&self) -> usize {
        self.matrices[0].dim()
    }

    fn kind(&self) -> ProcessKind {
        ProcessKind::Bridge
    }

    fn graph(&self) -> Option<&Graph> {
        self.graph.as_ref()
    }

    fn walk(&self, p0: &Dist, horizon: usize, visit: &mut Visitor<'_>) -> Result<()> {
        if horizon > self.matrices.len() {
            return Err(Error::InvalidParameter(format!(
                "sequence of length {} evaluated at t = {horizon}",
                self.matrices.len()
            )));
        }
        check_same_len(self.node_count(), p0.len())?;
        let mut p = p0.clone();
        visit(0, &p)?;
        for (t, m) in self.matrices[..horizon].iter().enumerate() {
            p = m.apply_dist(&p)?;
            visit(t + 1, &p)?;
        }
        Ok(())
    }
}

/// `out[u][t] = Ψ_t[δ_u]` for every node `u`, in parallel over `u`.
pub fn basis_trajectories<P: StochProcess + ?Sized>(
    proc: &P,
    horizon: usize,
) -> Result<Vec<Vec<Dist>>> {
    let n = proc.node_count();
    (0..n)
        .into_par_iter()
        .map(|u| {
            let mut out = Vec::with_capacity(horizon + 1);
            proc.walk(&Dist::delta(n, u)?, horizon, &mut |_, p| {
                out.push(p.clone());
                Ok(())
            })?;
            Ok(out)
        })
        .collect()
}

/// True iff `TV(Ψ_t[p̄], p̄) ≤ 1e-9` for every `t ≤ horizon`.
pub fn check_invariance<P: StochProcess + ?Sized>(
    proc: &P,
    pbar: &Dist,
    horizon: usize,
) -> Result<bool> {
    check_same_len(proc.node_count(), pbar.len())?;
    let mut ok = true;
    proc.walk(pbar, horizon, &mut |_, p| {
        ok &= tv_distance(p, pbar)? <= SUM_TOL;
        Ok(())
    })?;
    Ok(ok)
}

/// Runs [`check_locality_trace`] on the trajectory of every basis start.
/// Returns the start node of the first violation found.
pub fn check_process_locality<P: StochProcess + ?Sized>(
    proc: &P,
    g: &Graph,
    horizon: usize,
) -> Result<Option<(usize, LocalityReport)>> {
    check_same_len(g.node_count(), proc.node_count())?;
    for (u, trace) in basis_trajectories(proc, horizon)?.into_iter().enumerate() {
        let report = check_locality_trace(&trace, g)?;
        if !report.is_local() {
            return Ok(Some((u, report)));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::EQ_TOL;
    use crate::quantum::{measured_unitary_channel, CMatrix};
    use crate::space::LiftedSpace;
    use num_complex::Complex64;

    fn hadamard_process() -> QuantumWalkProcess {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let h = CMatrix::from_row_slice(2, 2, &[s, s, s, -s].map(|x| Complex64::new(x, 0.0)));
        let space = LiftedSpace::new(1, 2).unwrap();
        let ch = measured_unitary_channel(&h, 0.0, space, Graph::complete(2)).unwrap();
        induced_process(&ch, &CoinAssignment::constant(0, space).unwrap()).unwrap()
    }

    #[test]
    fn hadamard_two_step_identity() {
        let proc = hadamard_process();
        let d = Dist::delta(2, 0).unwrap();
        assert_eq!(proc.evaluate(&d, 0).unwrap(), d);
        assert!(proc.evaluate(&d, 2).unwrap().l1_distance(&d).unwrap() < EQ_TOL);
    }

    #[test]
    fn cesaro_of_hadamard() {
        let proc = cesaro(hadamard_process());
        let p1 = proc.evaluate(&Dist::delta(2, 0).unwrap(), 1).unwrap();
        assert!((p1[0] - 0.75).abs() < EQ_TOL && (p1[1] - 0.25).abs() < EQ_TOL);
        let id = cesaro(StochMatrix::identity(3));
        let d = Dist::delta(3, 1).unwrap();
        assert_eq!(id.evaluate(&d, 5).unwrap(), d);
    }

    #[test]
    fn invariance_examples() {
        let u = Dist::uniform(2);
        assert!(check_invariance(&hadamard_process(), &u, 10).unwrap());
        let biased = StochMatrix::from_dense(&[vec![1.0, 1.0], vec![0.0, 0.0]]).unwrap();
        assert!(!check_invariance(&biased, &u, 3).unwrap());
        assert!(check_invariance(&cesaro(hadamard_process()), &u, 10).unwrap());
    }

    #[test]
    fn amplified_restarts_every_period() {
        let p = StochMatrix::from_dense(&[vec![0.9, 0.3], vec![0.1, 0.7]]).unwrap();
        let amp = Amplified::new(&p, 3).unwrap();
        let d = Dist::delta(2, 0).unwrap();
        // for a time-homogeneous chain the amplified process is the chain itself
        for t in 0..10 {
            let a = amp.evaluate(&d, t).unwrap();
            let b = p.evaluate(&d, t).unwrap();
            assert!(a.l1_distance(&b).unwrap() < 1e-12);
        }
        let h = Amplified::new(&hadamard_process(), 1).unwrap();
        let p2 = h.evaluate(&d, 2).unwrap();
        assert!((p2[0] - 0.5).abs() < EQ_TOL);
    }

    #[test]
    fn sequence_rejects_long_horizon() {
        let seq = MatrixSequence::new(vec![StochMatrix::identity(2)], None).unwrap();
        assert!(seq.evaluate(&Dist::uniform(2), 2).is_err());
    }

    #[test]
    fn hadamard_process_is_local() {
        let proc = hadamard_process();
        assert!(check_process_locality(&proc, &Graph::complete(2), 6)
            .unwrap()
            .is_none());
    }
}
