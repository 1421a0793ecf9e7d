//! Dense two-phase simplex: Dantzig pricing, switching to Bland's rule
//! while the objective stalls on a degenerate vertex.
//!
//! Inequality right-hand sides are shifted by distinct offsets of order
//! [`PERTURBATION`] to break ties; the exact right-hand side is carried
//! along and the solution is read from it whenever the final basis is
//! feasible for the unperturbed problem.
//!
//! Solves `max c·x` subject to linear rows `a·x (≤ | ≥ | =) b` and `x ≥ 0`.
//! Small dense problems only; pivoting is deterministic.

use crate::error::{Error, Result};

/// Pivot and optimality tolerance.
pub const LP_TOL: f64 = 1e-9;
const MAX_PIVOTS: usize = 2_000_000;
/// Scale of the right-hand-side shifts on inequality rows.
pub const PERTURBATION: f64 = 1e-9;
/// Consecutive degenerate pivots tolerated before falling back to Bland.
const STALL_LIMIT: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug)]
pub struct Constraint {
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Clone, Debug, Default)]
pub struct LinearProgram {
    n_vars: usize,
    objective: Vec<f64>,
    rows: Vec<Constraint>,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

impl LinearProgram {
    /// `max objective·x`, `x ≥ 0`.
    pub fn maximize(objective: Vec<f64>) -> Self {
        Self {
            n_vars: objective.len(),
            objective,
            rows: Vec::new(),
        }
    }

    pub fn add(&mut self, coeffs: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        debug_assert!(coeffs.iter().all(|&(j, _)| j < self.n_vars));
        self.rows.push(Constraint { coeffs, sense, rhs });
    }

    pub fn var_count(&self) -> usize {
        self.n_vars
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.rows
    }

    /// Largest violation of any row or sign constraint at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = x.iter().map(|&v| (-v).max(0.0)).fold(0.0, f64::max);
        for r in &self.rows {
            let lhs: f64 = r.coeffs.iter().map(|&(j, a)| a * x[j]).sum();
            let v = match r.sense {
                Sense::Le => lhs - r.rhs,
                Sense::Ge => r.rhs - lhs,
                Sense::Eq => (lhs - r.rhs).abs(),
            };
            worst = worst.max(v);
        }
        worst
    }

    pub fn solve(&self) -> Result<LpSolution> {
        Tableau::new(self).solve(self)
    }
}

struct Tableau {
    m: usize,
    width: usize,
    /// Row-major `m × (width + 2)`: column `width` is the perturbed
    /// right-hand side that drives the pivots, column `width + 1` the exact
    /// one.
    a: Vec<f64>,
    basis: Vec<usize>,
    n_vars: usize,
    first_artificial: usize,
    pivots: usize,
}

impl Tableau {
    fn new(lp: &LinearProgram) -> Self {
        let m = lp.rows.len();
        let mut senses = Vec::with_capacity(m);
        let mut n_slack = 0;
        let mut n_art = 0;
        for r in &lp.rows {
            let flip = r.rhs < 0.0;
            let s = match (r.sense, flip) {
                (Sense::Le, false) | (Sense::Ge, true) => Sense::Le,
                (Sense::Ge, false) | (Sense::Le, true) => Sense::Ge,
                (Sense::Eq, _) => Sense::Eq,
            };
            if s != Sense::Eq {
                n_slack += 1;
            }
            if s != Sense::Le {
                n_art += 1;
            }
            senses.push((s, flip));
        }
        let first_slack = lp.n_vars;
        let first_artificial = first_slack + n_slack;
        let width = first_artificial + n_art;
        let stride = width + 2;
        let mut a = vec![0.0; m * stride];
        let mut basis = vec![0; m];
        let (mut slack, mut art) = (first_slack, first_artificial);
        for (i, (r, &(s, flip))) in lp.rows.iter().zip(&senses).enumerate() {
            let sign = if flip { -1.0 } else { 1.0 };
            let row = &mut a[i * stride..(i + 1) * stride];
            for &(j, v) in &r.coeffs {
                row[j] += sign * v;
            }
            row[width] = sign * r.rhs;
            row[width + 1] = sign * r.rhs;
            match s {
                Sense::Le => {
                    // golden-ratio offsets keep the shifts pairwise distinct
                    row[width] += PERTURBATION * (1.0 + (i as f64 * 0.618_033_988_75).fract());
                    row[slack] = 1.0;
                    basis[i] = slack;
                    slack += 1;
                }
                Sense::Ge => {
                    row[slack] = -1.0;
                    slack += 1;
                    row[art] = 1.0;
                    basis[i] = art;
                    art += 1;
                }
                Sense::Eq => {
                    row[art] = 1.0;
                    basis[i] = art;
                    art += 1;
                }
            }
        }
        Self {
            m,
            width,
            a,
            basis,
            n_vars: lp.n_vars,
            first_artificial,
            pivots: 0,
        }
    }

    fn stride(&self) -> usize {
        self.width + 2
    }

    fn pivot(&mut self, r: usize, c: usize, obj: &mut [f64]) {
        let stride = self.stride();
        let p = self.a[r * stride + c];
        for x in &mut self.a[r * stride..(r + 1) * stride] {
            *x /= p;
        }
        let pivot_row: Vec<f64> = self.a[r * stride..(r + 1) * stride].to_vec();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.a[i * stride + c];
            if f != 0.0 {
                let row = &mut self.a[i * stride..(i + 1) * stride];
                for (x, &y) in row.iter_mut().zip(&pivot_row) {
                    *x -= f * y;
                }
                row[c] = 0.0;
            }
        }
        let f = obj[c];
        if f != 0.0 {
            for (x, &y) in obj.iter_mut().zip(&pivot_row) {
                *x -= f * y;
            }
            obj[c] = 0.0;
        }
        self.basis[r] = c;
        self.pivots += 1;
    }

    /// Relative profits `c_j - c_B B⁻¹ A_j`, with the negated objective value
    /// in the last slot.
    fn profit_row(&self, cost: &[f64]) -> Vec<f64> {
        let stride = self.stride();
        let mut obj = vec![0.0; stride];
        obj[..cost.len()].copy_from_slice(cost);
        for i in 0..self.m {
            let cb = cost.get(self.basis[i]).copied().unwrap_or(0.0);
            if cb != 0.0 {
                for (x, &y) in obj.iter_mut().zip(&self.a[i * stride..(i + 1) * stride]) {
                    *x -= cb * y;
                }
            }
        }
        obj
    }

    /// Maximizes `cost·x` over columns `< limit`. Entering columns follow
    /// Dantzig's rule; after [`STALL_LIMIT`] degenerate pivots in a row the
    /// lowest eligible index is taken instead (Bland), which cannot cycle.
    fn optimize(&mut self, cost: &[f64], limit: usize, phase_one: bool) -> Result<()> {
        let stride = self.stride();
        let mut obj = self.profit_row(cost);
        let mut stalled = 0;
        loop {
            if phase_one && self.artificial_level() <= LP_TOL * LP_TOL {
                return Ok(());
            }
            if self.pivots > MAX_PIVOTS {
                return Err(Error::Lp(format!("no termination after {MAX_PIVOTS} pivots")));
            }
            let entering = if stalled < STALL_LIMIT {
                (0..limit)
                    .filter(|&j| obj[j] > LP_TOL)
                    .max_by(|&a, &b| obj[a].total_cmp(&obj[b]).then(b.cmp(&a)))
            } else {
                (0..limit).find(|&j| obj[j] > LP_TOL)
            };
            let Some(c) = entering else {
                return Ok(());
            };
            let mut best: Option<(usize, f64)> = None;
            for i in 0..self.m {
                let aij = self.a[i * stride + c];
                if aij > LP_TOL {
                    let ratio = self.a[i * stride + self.width].max(0.0) / aij;
                    best = match best {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            if ratio < br - 1e-12
                                || (ratio <= br + 1e-12 && self.basis[i] < self.basis[bi])
                            {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            let Some((r, ratio)) = best else {
                return Err(Error::Lp("objective is unbounded".into()));
            };
            stalled = if ratio <= 1e-12 { stalled + 1 } else { 0 };
            self.pivot(r, c, &mut obj);
            for i in 0..self.m {
                let b = &mut self.a[i * stride + self.width];
                if *b < 0.0 && *b > -1e-11 {
                    *b = 0.0;
                }
            }
        }
    }

    fn rhs(&self, i: usize) -> f64 {
        self.a[i * self.stride() + self.width]
    }

    fn exact_rhs(&self, i: usize) -> f64 {
        self.a[i * self.stride() + self.width + 1]
    }

    /// Sum of the basic artificial variables.
    fn artificial_level(&self) -> f64 {
        (0..self.m)
            .filter(|&i| self.basis[i] >= self.first_artificial)
            .map(|i| self.rhs(i))
            .sum()
    }

    fn solve(mut self, lp: &LinearProgram) -> Result<LpSolution> {
        if self.first_artificial < self.width {
            let cost: Vec<f64> = (0..self.width)
                .map(|j| if j >= self.first_artificial { -1.0 } else { 0.0 })
                .collect();
            self.optimize(&cost, self.width, true)?;
            let infeas = self.artificial_level();
            if infeas > LP_TOL {
                return Err(Error::Lp(format!("infeasible (phase-one residual {infeas:.3e})")));
            }
            self.evict_artificials();
        }
        let mut cost = vec![0.0; self.first_artificial];
        cost[..self.n_vars].copy_from_slice(&lp.objective);
        self.optimize(&cost, self.first_artificial, false)?;
        // reduced costs do not depend on b, so a basis that stays feasible
        // for the exact right-hand side is optimal for it
        let exact_ok = (0..self.m).all(|i| self.exact_rhs(i) >= -LP_TOL);
        let mut x = vec![0.0; self.n_vars];
        for i in 0..self.m {
            if self.basis[i] < self.n_vars {
                let v = if exact_ok { self.exact_rhs(i) } else { self.rhs(i) };
                x[self.basis[i]] = v.max(0.0);
            }
        }
        let objective = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        Ok(LpSolution {
            x,
            objective,
            pivots: self.pivots,
        })
    }

    /// Pivots zero-level artificials out of the basis; rows where that is
    /// impossible are redundant and are dropped.
    fn evict_artificials(&mut self) {
        let stride = self.stride();
        let mut i = 0;
        while i < self.m {
            if self.basis[i] < self.first_artificial {
                i += 1;
                continue;
            }
            let col = (0..self.first_artificial).find(|&j| self.a[i * stride + j].abs() > LP_TOL);
            match col {
                Some(j) => {
                    let mut dummy = vec![0.0; stride];
                    self.pivot(i, j, &mut dummy);
                    i += 1;
                }
                None => {
                    self.a.drain(i * stride..(i + 1) * stride);
                    self.basis.remove(i);
                    self.m -= 1;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_maximum() {
        // max 3x + 5y, x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 → (2, 6), 36
        let mut lp = LinearProgram::maximize(vec![3.0, 5.0]);
        lp.add(vec![(0, 1.0)], Sense::Le, 4.0);
        lp.add(vec![(1, 2.0)], Sense::Le, 12.0);
        lp.add(vec![(0, 3.0), (1, 2.0)], Sense::Le, 18.0);
        let s = lp.solve().unwrap();
        assert!((s.objective - 36.0).abs() < 1e-9);
        assert!((s.x[0] - 2.0).abs() < 1e-9 && (s.x[1] - 6.0).abs() < 1e-9);
    }

    #[test]
    fn equality_and_ge_rows() {
        // max -x, x + y = 1, x ≥ 0.3, y ≥ 0.2 → x = 0.3
        let mut lp = LinearProgram::maximize(vec![-1.0, 0.0]);
        lp.add(vec![(0, 1.0), (1, 1.0)], Sense::Eq, 1.0);
        lp.add(vec![(0, 1.0)], Sense::Ge, 0.3);
        lp.add(vec![(1, 1.0)], Sense::Ge, 0.2);
        let s = lp.solve().unwrap();
        assert!((s.x[0] - 0.3).abs() < 1e-9);
        assert!(lp.max_violation(&s.x) < 1e-9);
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LinearProgram::maximize(vec![1.0, 1.0]);
        lp.add(vec![(0, 1.0), (1, -1.0)], Sense::Eq, 0.0);
        lp.add(vec![(0, 2.0), (1, -2.0)], Sense::Eq, 0.0);
        lp.add(vec![(0, 1.0)], Sense::Le, 1.0);
        let s = lp.solve().unwrap();
        assert!((s.objective - 2.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::maximize(vec![1.0]);
        lp.add(vec![(0, 1.0)], Sense::Le, 1.0);
        lp.add(vec![(0, 1.0)], Sense::Ge, 2.0);
        assert!(matches!(lp.solve(), Err(Error::Lp(_))));
        let lp = LinearProgram::maximize(vec![1.0]);
        assert!(matches!(lp.solve(), Err(Error::Lp(_))));
    }

    #[test]
    fn negative_rhs_rows_are_flipped() {
        // max -x, -x ≤ -2 → x = 2
        let mut lp = LinearProgram::maximize(vec![-1.0]);
        lp.add(vec![(0, -1.0)], Sense::Le, -2.0);
        let s = lp.solve().unwrap();
        assert!((s.x[0] - 2.0).abs() < 1e-9);
    }
}
