//! The lifted state space `C×V` and the maps between distributions on `V`
//! and on `C×V`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{check_same_len, Dist};

/// Coin-major layout of `C×V`: state `(c, v)` sits at `c·|V| + v`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LiftedSpace {
    coins: usize,
    nodes: usize,
}

impl LiftedSpace {
    pub fn new(coins: usize, nodes: usize) -> Result<Self> {
        if coins == 0 || nodes == 0 {
            return Err(Error::InvalidParameter(format!(
                "lifted space needs |C| ≥ 1 and |V| ≥ 1, got {coins}×{nodes}"
            )));
        }
        Ok(Self { coins, nodes })
    }

    pub fn coins(&self) -> usize {
        self.coins
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn dim(&self) -> usize {
        self.coins * self.nodes
    }

    #[inline]
    pub fn index(&self, coin: usize, node: usize) -> usize {
        debug_assert!(coin < self.coins && node < self.nodes);
        coin * self.nodes + node
    }

    #[inline]
    pub fn coin_of(&self, i: usize) -> usize {
        i / self.nodes
    }

    #[inline]
    pub fn node_of(&self, i: usize) -> usize {
        i % self.nodes
    }

    /// Marginal over the coin, `f(p̂)(v) = Σ_c p̂(c, v)`.
    pub fn marginalize(&self, joint: &[f64]) -> Result<Dist> {
        check_same_len(self.dim(), joint.len())?;
        let mut p = vec![0.0; self.nodes];
        for (i, w) in joint.iter().enumerate() {
            p[self.node_of(i)] += w;
        }
        Dist::new(p)
    }
}

/// Initial coin `c_v` attached to each node by the initialization map.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoinAssignment(Vec<usize>);

impl CoinAssignment {
    pub fn new(coins: Vec<usize>, space: LiftedSpace) -> Result<Self> {
        check_same_len(space.nodes(), coins.len())?;
        if let Some((v, &c)) = coins.iter().enumerate().find(|(_, &c)| c >= space.coins()) {
            return Err(Error::InvalidParameter(format!(
                "coin {c} assigned to node {v} exceeds |C| = {}",
                space.coins()
            )));
        }
        Ok(Self(coins))
    }

    /// The same coin value on every node.
    pub fn constant(coin: usize, space: LiftedSpace) -> Result<Self> {
        Self::new(vec![coin; space.nodes()], space)
    }

    pub fn coin(&self, v: usize) -> usize {
        self.0[v]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    /// Classical initialization `F[p] = Σ_v p(v) δ_(c_v, v)`.
    pub fn lift(&self, p: &Dist, space: LiftedSpace) -> Result<Vec<f64>> {
        check_same_len(space.nodes(), p.len())?;
        check_same_len(space.nodes(), self.len())?;
        let mut joint = vec![0.0; space.dim()];
        for v in 0..space.nodes() {
            joint[space.index(self.coin(v), v)] = p[v];
        }
        Ok(joint)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coin_major_indexing() {
        let s = LiftedSpace::new(2, 5).unwrap();
        assert_eq!(s.index(1, 3), 8);
        assert_eq!(s.coin_of(8), 1);
        assert_eq!(s.node_of(8), 3);
        assert!(LiftedSpace::new(0, 3).is_err());
    }

    #[test]
    fn lift_then_marginalize_is_identity() {
        let s = LiftedSpace::new(3, 4).unwrap();
        let f = CoinAssignment::new(vec![0, 2, 1, 2], s).unwrap();
        let p = Dist::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let joint = f.lift(&p, s).unwrap();
        assert_eq!(joint[s.index(2, 1)], 0.2);
        assert_eq!(s.marginalize(&joint).unwrap(), p);
        assert!(CoinAssignment::new(vec![0, 3, 0, 0], s).is_err());
    }
}
