//! Random test objects: graphs, distributions, local chains, lifted chains,
//! local channels and locality-violating distribution pairs.
//!
//! Everything takes the generator explicitly so callers control seeding.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::graph::{Dist, Graph};
use crate::lattice::CycleParams;
use crate::lmc::{LiftedChain, StochMatrix};
use crate::quantum::{measured_unitary_channel, CMatrix, KrausChannel};
use crate::space::{CoinAssignment, LiftedSpace};

/// Random spanning tree plus each remaining pair with probability `p`.
pub fn random_connected_graph<R: Rng + ?Sized>(rng: &mut R, n: usize, p: f64) -> Graph {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut edges = Vec::new();
    for i in 1..n {
        edges.push((order[rng.gen_range(0..i)], order[i]));
    }
    for a in 0..n {
        for b in a + 1..n {
            if rng.gen_bool(p) {
                edges.push((a, b));
            }
        }
    }
    Graph::undirected(n, &edges).expect("indices in range")
}

/// Weights drawn from `[0.1, 1]` and normalized.
pub fn random_positive_dist<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Dist {
    Dist::from_weights((0..n).map(|_| rng.gen_range(0.1..1.0)).collect()).expect("positive weights")
}

/// Each column spreads random positive weights over the out-neighbors
/// (including the node itself).
pub fn random_local_chain<R: Rng + ?Sized>(rng: &mut R, g: &Graph) -> StochMatrix {
    let columns = (0..g.node_count())
        .map(|v| {
            let w: Vec<f64> = g.successors(v).iter().map(|_| rng.gen_range(0.05..1.0)).collect();
            let s: f64 = w.iter().sum();
            g.successors(v).iter().zip(w).map(|(&u, x)| (u, x / s)).collect()
        })
        .collect();
    StochMatrix::from_columns(g.node_count(), columns).expect("normalized columns")
}

/// Metropolis chain for `p̄` on an undirected graph with a random
/// laziness, so `P p̄ = p̄` and `P` is reversible.
pub fn random_reversible_chain<R: Rng + ?Sized>(rng: &mut R, g: &Graph, pbar: &Dist) -> StochMatrix {
    let n = g.node_count();
    let deg = (0..n).map(|v| g.successors(v).len()).max().unwrap_or(1) as f64;
    let scale = rng.gen_range(0.5..1.0) / deg;
    let columns = (0..n)
        .map(|v| {
            let mut col: Vec<(usize, f64)> = g
                .successors(v)
                .iter()
                .filter(|&&w| w != v)
                .map(|&w| (w, scale * (pbar[w] / pbar[v]).min(1.0)))
                .collect();
            let out: f64 = col.iter().map(|e| e.1).sum();
            col.push((v, 1.0 - out));
            col
        })
        .collect();
    StochMatrix::from_columns(n, columns).expect("substochastic off-diagonal")
}

/// A lifted chain whose every allowed transition `(c,v) → (c',v')` with
/// `(v,v') ∈ E` has positive probability; irreducible on a connected graph.
pub fn random_lifted_chain<R: Rng + ?Sized>(
    rng: &mut R,
    g: &Graph,
    coins: usize,
) -> Result<LiftedChain> {
    let n = g.node_count();
    let space = LiftedSpace::new(coins, n)?;
    let columns = (0..space.dim())
        .map(|i| {
            let v = space.node_of(i);
            let targets: Vec<usize> = (0..coins)
                .flat_map(|c| g.successors(v).iter().map(move |&w| space.index(c, w)))
                .collect();
            let w: Vec<f64> = targets.iter().map(|_| rng.gen_range(0.05..1.0)).collect();
            let s: f64 = w.iter().sum();
            targets.into_iter().zip(w).map(|(t, x)| (t, x / s)).collect()
        })
        .collect();
    let transition = StochMatrix::from_columns(space.dim(), columns)?;
    let init = CoinAssignment::new((0..n).map(|_| rng.gen_range(0..coins)).collect(), space)?;
    LiftedChain::new(space, g.clone(), transition, init)
}

/// Haar-like random unitary from the QR factor of a complex Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, k: usize) -> CMatrix {
    let z = DMatrix::from_fn(k, k, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let qr = z.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..k {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..k {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Block unitary on `C×V`: a random matching pairs adjacent nodes and each
/// pair (or lone node) gets a random unitary over its coin-node states, so
/// amplitude only moves along edges.
pub fn random_local_unitary<R: Rng + ?Sized>(rng: &mut R, g: &Graph, space: LiftedSpace) -> CMatrix {
    let n = g.node_count();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut partner = vec![None; n];
    for &v in &order {
        if partner[v].is_some() {
            continue;
        }
        let free: Vec<usize> = g
            .successors(v)
            .iter()
            .copied()
            .filter(|&w| w != v && partner[w].is_none() && g.has_edge(w, v))
            .collect();
        if let Some(&w) = free.choose(rng) {
            if rng.gen_bool(0.8) {
                partner[v] = Some(w);
                partner[w] = Some(v);
            }
        }
    }
    let mut u = CMatrix::zeros(space.dim(), space.dim());
    let mut done = vec![false; n];
    for v in 0..n {
        if done[v] {
            continue;
        }
        let block: Vec<usize> = match partner[v] {
            Some(w) => vec![v, w],
            None => vec![v],
        };
        let states: Vec<usize> = block
            .iter()
            .flat_map(|&x| (0..space.coins()).map(move |c| space.index(c, x)))
            .collect();
        let b = random_unitary(rng, states.len());
        for (i, &si) in states.iter().enumerate() {
            for (j, &sj) in states.iter().enumerate() {
                u[(si, sj)] = b[(i, j)];
            }
        }
        for x in block {
            done[x] = true;
        }
    }
    u
}

/// Measured local unitary with random `q`, optionally mixed with a second
/// one. Unital, so with one coin value the uniform distribution is
/// invariant.
pub fn random_local_channel<R: Rng + ?Sized>(
    rng: &mut R,
    g: &Graph,
    coins: usize,
) -> Result<KrausChannel> {
    let space = LiftedSpace::new(coins, g.node_count())?;
    let u = random_local_unitary(rng, g, space);
    let ch = measured_unitary_channel(&u, rng.gen_range(0.0..1.0), space, g.clone())?;
    if rng.gen_bool(0.5) {
        let u2 = random_local_unitary(rng, g, space);
        let ch2 = measured_unitary_channel(&u2, rng.gen_range(0.0..1.0), space, g.clone())?;
        KrausChannel::mix(&ch, &ch2, rng.gen_range(0.2..0.8))
    } else {
        Ok(ch)
    }
}

/// `y = δ_a` and a `z` placing positive mass on some `b ∉ B(a)`, so no
/// local bridge maps `y` to `z`. Fails on graphs where every node sees
/// every other.
pub fn violating_pair<R: Rng + ?Sized>(rng: &mut R, g: &Graph) -> Result<(Dist, Dist)> {
    let n = g.node_count();
    let candidates: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| (0..n).map(move |b| (a, b)))
        .filter(|&(a, b)| !g.has_edge(a, b))
        .collect();
    let &(a, b) = candidates
        .choose(rng)
        .ok_or_else(|| Error::InvalidParameter("graph has no missing edge".into()))?;
    let y = Dist::delta(n, a)?;
    let mut w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
    w[b] += rng.gen_range(0.1..1.0);
    Ok((y, Dist::from_weights(w)?))
}

/// Random coin bias, phases and measurement rate on the cycle.
pub fn random_cycle_params<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CycleParams {
    CycleParams {
        n,
        alpha: rng.gen_range(0.0..=1.0),
        phi: rng.gen_range(-3.2..3.2),
        theta: rng.gen_range(-3.2..3.2),
        q: rng.gen_range(0.0..=1.0),
        lazy: rng.gen_bool(0.5),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::{check_invariance, induced_process, StochProcess};
    use crate::quantum::validate_channel;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_objects_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let n = rng.gen_range(2..8);
            let g = random_connected_graph(&mut rng, n, 0.3);
            let pbar = random_positive_dist(&mut rng, n);
            let p = random_reversible_chain(&mut rng, &g, &pbar);
            assert!(p.respects(&g) && p.is_irreducible());
            assert!(check_invariance(&p, &pbar, 5).unwrap());
            assert!(random_local_chain(&mut rng, &g).respects(&g));
            let lc = random_lifted_chain(&mut rng, &g, 3).unwrap();
            assert!(lc.transition().is_irreducible());
            let ch = random_local_channel(&mut rng, &g, 1).unwrap();
            assert!(validate_channel(&ch).is_ok());
            let proc = induced_process(&ch, &CoinAssignment::constant(0, ch.space()).unwrap()).unwrap();
            assert!(check_invariance(&proc, &Dist::uniform(n), 4).unwrap());
            assert_eq!(proc.node_count(), n);
        }
    }

    #[test]
    fn unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_unitary(&mut rng, 5);
        let r = &u.adjoint() * &u - CMatrix::identity(5, 5);
        assert!(r.iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn violating_pair_needs_missing_edge() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        assert!(violating_pair(&mut rng, &Graph::complete(4)).is_err());
        let (y, z) = violating_pair(&mut rng, &Graph::path(4)).unwrap();
        assert_eq!(y.support().len(), 1);
        assert_eq!(z.len(), 4);
    }
}
