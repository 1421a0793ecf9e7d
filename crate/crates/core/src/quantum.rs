//! Density-operator evolution of local quantum channels on `C×V`.
//!
//! A channel is a list of Kraus operators `M_k` acting on the coin-major
//! space of [`LiftedSpace`]. Operators are stored row-sparse, so that both
//! dense coined unitaries and the rank-one operators of a classical chain are
//! applied at a cost proportional to their nonzero pattern.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{check_same_len, Dist, Graph, SUM_TOL};
use crate::space::{CoinAssignment, LiftedSpace};

pub type CMatrix = DMatrix<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Hermiticity slack for density operators.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Most negative eigenvalue tolerated in a density operator.
pub const PSD_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
struct SparseRow {
    index: usize,
    /// `(column, position of the column in SparseOp::cols, value)`
    entries: Vec<(usize, usize, Complex64)>,
}

/// Row-sparse square operator.
#[derive(Clone, Debug)]
struct SparseOp {
    dim: usize,
    rows: Vec<SparseRow>,
    cols: Vec<usize>,
}

impl SparseOp {
    fn from_dense(m: &CMatrix) -> Self {
        let dim = m.nrows();
        let mut cols: Vec<usize> = (0..dim)
            .filter(|&j| m.column(j).iter().any(|z| *z != ZERO))
            .collect();
        cols.sort_unstable();
        let mut pos = vec![usize::MAX; dim];
        for (p, &j) in cols.iter().enumerate() {
            pos[j] = p;
        }
        let rows = (0..dim)
            .filter_map(|i| {
                let entries: Vec<_> = (0..dim)
                    .filter(|&j| m[(i, j)] != ZERO)
                    .map(|j| (j, pos[j], m[(i, j)]))
                    .collect();
                (!entries.is_empty()).then_some(SparseRow { index: i, entries })
            })
            .collect();
        Self { dim, rows, cols }
    }

    fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for row in &self.rows {
            for &(j, _, z) in &row.entries {
                m[(row.index, j)] = z;
            }
        }
        m
    }

    fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        for row in &mut out.rows {
            for e in &mut row.entries {
                e.2 *= s;
            }
        }
        out
    }

    /// `out += M ρ M†`, with `ρ` Hermitian and column-major.
    fn sandwich_into(&self, rho: &CMatrix, out: &mut CMatrix) {
        let dim = self.dim;
        let data = rho.as_slice();
        let nc = self.cols.len();
        // a[r][p] = (M ρ)[rows[r], cols[p]]
        let mut a = vec![ZERO; self.rows.len() * nc];
        for (r, row) in self.rows.iter().enumerate() {
            let ar = &mut a[r * nc..(r + 1) * nc];
            for (p, &j) in self.cols.iter().enumerate() {
                let col = &data[j * dim..(j + 1) * dim];
                let mut acc = ZERO;
                for &(k, _, m) in &row.entries {
                    acc += m * col[k];
                }
                ar[p] = acc;
            }
        }
        let out_data = out.as_mut_slice();
        for (r, row) in self.rows.iter().enumerate() {
            let ar = &a[r * nc..(r + 1) * nc];
            for row2 in &self.rows[r..] {
                let mut acc = ZERO;
                for &(_, p, m2) in &row2.entries {
                    acc += ar[p] * m2.conj();
                }
                // out is Hermitian: fill (i, i2) and (i2, i).
                let (i, i2) = (row.index, row2.index);
                out_data[i + i2 * dim] += acc;
                if i != i2 {
                    out_data[i2 + i * dim] += acc.conj();
                }
            }
        }
    }

    fn accumulate_gram(&self, gram: &mut CMatrix) {
        for row in &self.rows {
            for &(j, _, a) in &row.entries {
                for &(k, _, b) in &row.entries {
                    gram[(j, k)] += a.conj() * b;
                }
            }
        }
    }
}

/// Structure known at construction, used to shortcut the Kraus sum.
#[derive(Clone, Debug)]
enum Shortcut {
    /// `ρ ↦ λρ + (1-λ)[(1-q) UρU† + q diag(UρU†)]`
    MeasuredUnitary {
        unitary: SparseOp,
        q: f64,
        stay: f64,
    },
}

/// A list of Kraus operators over `C×V` with a reference graph.
#[derive(Clone, Debug)]
pub struct KrausChannel {
    space: LiftedSpace,
    graph: Graph,
    ops: Vec<SparseOp>,
    shortcut: Option<Shortcut>,
}

/// A nonzero amplitude `⟨c',v'|M_k|c,v⟩` on a pair `(v, v') ∉ E`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AmplitudeViolation {
    pub op: usize,
    pub from: (usize, usize),
    pub to: (usize, usize),
}

/// Result of [`validate_channel`].
#[derive(Clone, Debug)]
pub struct ChannelReport {
    pub locality_violations: Vec<AmplitudeViolation>,
    /// `max |(Σ_k M_k†M_k - I)_{ij}|`
    pub completeness_residual: f64,
}

impl ChannelReport {
    pub fn is_local(&self) -> bool {
        self.locality_violations.is_empty()
    }

    pub fn is_complete(&self) -> bool {
        self.completeness_residual <= SUM_TOL
    }

    pub fn is_ok(&self) -> bool {
        self.is_local() && self.is_complete()
    }
}

impl KrausChannel {
    /// Wraps a Kraus list. Only shapes are checked here; see
    /// [`validate_channel`] for completeness and locality.
    pub fn new(space: LiftedSpace, graph: Graph, ops: Vec<CMatrix>) -> Result<Self> {
        check_same_len(space.nodes(), graph.node_count())?;
        if ops.is_empty() {
            return Err(Error::InvalidParameter("empty Kraus list".into()));
        }
        for m in &ops {
            check_same_len(space.dim(), m.nrows())?;
            check_same_len(space.dim(), m.ncols())?;
        }
        Ok(Self {
            space,
            graph,
            ops: ops.iter().map(SparseOp::from_dense).collect(),
            shortcut: None,
        })
    }

    pub(crate) fn from_rank_one(
        space: LiftedSpace,
        graph: Graph,
        entries: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Self {
        let dim = space.dim();
        let ops = entries
            .into_iter()
            .map(|(to, from, amp)| SparseOp {
                dim,
                rows: vec![SparseRow {
                    index: to,
                    entries: vec![(from, 0, Complex64::new(amp, 0.0))],
                }],
                cols: vec![from],
            })
            .collect();
        Self {
            space,
            graph,
            ops,
            shortcut: None,
        }
    }

    pub fn identity(space: LiftedSpace, graph: Graph) -> Result<Self> {
        Self::new(space, graph, vec![CMatrix::identity(space.dim(), space.dim())])
    }

    pub fn space(&self) -> LiftedSpace {
        self.space
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn kraus_operators(&self) -> Vec<CMatrix> {
        self.ops.iter().map(SparseOp::to_dense).collect()
    }

    /// `λ·Γ_a + (1-λ)·Γ_b` as the Kraus list `{√λ A_k} ∪ {√(1-λ) B_j}`.
    pub fn mix(a: &KrausChannel, b: &KrausChannel, lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidParameter(format!("mixing weight {lambda}")));
        }
        if a.space != b.space || a.graph != b.graph {
            return Err(Error::InvalidParameter(
                "mixed channels must share space and graph".into(),
            ));
        }
        let ops = a
            .ops
            .iter()
            .map(|m| m.scaled(lambda.sqrt()))
            .chain(b.ops.iter().map(|m| m.scaled((1.0 - lambda).sqrt())))
            .collect();
        Ok(Self {
            space: a.space,
            graph: a.graph.clone(),
            ops,
            shortcut: None,
        })
    }

    /// `ρ ↦ (ρ + Γ[ρ]) / 2`. The identity is local thanks to self-loops.
    pub fn lazy(&self) -> Self {
        let id = Self::identity(self.space, self.graph.clone()).expect("shapes match");
        let mut out = Self::mix(&id, self, 0.5).expect("same space");
        if let Some(Shortcut::MeasuredUnitary { unitary, q, stay }) = &self.shortcut {
            out.shortcut = Some(Shortcut::MeasuredUnitary {
                unitary: unitary.clone(),
                q: *q,
                stay: 0.5 + 0.5 * stay,
            });
        }
        out
    }

    /// Applies the channel by summing over the Kraus list, ignoring any
    /// structural shortcut.
    pub fn apply_kraus_sum(&self, rho: &CMatrix) -> CMatrix {
        let dim = self.space.dim();
        let mut out = CMatrix::zeros(dim, dim);
        for op in &self.ops {
            op.sandwich_into(rho, &mut out);
        }
        out
    }

    fn apply(&self, rho: &CMatrix) -> CMatrix {
        match &self.shortcut {
            None => self.apply_kraus_sum(rho),
            Some(Shortcut::MeasuredUnitary { unitary, q, stay }) => {
                let dim = self.space.dim();
                let mut sigma = CMatrix::zeros(dim, dim);
                unitary.sandwich_into(rho, &mut sigma);
                let move_w = 1.0 - stay;
                let mut out = rho * Complex64::new(*stay, 0.0);
                for j in 0..dim {
                    for i in 0..dim {
                        let coherent = if i == j { 1.0 } else { 1.0 - q };
                        out[(i, j)] += sigma[(i, j)] * (move_w * coherent);
                    }
                }
                out
            }
        }
    }
}

/// Checks `⟨c',v'|M_k|c,v⟩ = 0` for `(v, v') ∉ E` and `Σ_k M_k†M_k = I`.
pub fn validate_channel(ch: &KrausChannel) -> ChannelReport {
    let space = ch.space;
    let mut locality_violations = Vec::new();
    let mut gram = CMatrix::zeros(space.dim(), space.dim());
    for (k, op) in ch.ops.iter().enumerate() {
        for row in &op.rows {
            let to = row.index;
            for &(from, _, _) in &row.entries {
                if !ch.graph.has_edge(space.node_of(from), space.node_of(to)) {
                    locality_violations.push(AmplitudeViolation {
                        op: k,
                        from: (space.coin_of(from), space.node_of(from)),
                        to: (space.coin_of(to), space.node_of(to)),
                    });
                }
            }
        }
        op.accumulate_gram(&mut gram);
    }
    for i in 0..space.dim() {
        gram[(i, i)] -= ONE;
    }
    let completeness_residual = gram.iter().map(|z| z.norm()).fold(0.0, f64::max);
    ChannelReport {
        locality_violations,
        completeness_residual,
    }
}

fn unitarity_residual(u: &CMatrix) -> f64 {
    let mut g = u.adjoint() * u;
    for i in 0..g.nrows() {
        g[(i, i)] -= ONE;
    }
    g.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Unitary step followed, with probability `q`, by a projective measurement
/// in the canonical basis. Ensemble form: `{√(1-q) U} ∪ {√q |c,v⟩⟨c,v| U}`.
pub fn measured_unitary_channel(
    unitary: &CMatrix,
    q: f64,
    space: LiftedSpace,
    graph: Graph,
) -> Result<KrausChannel> {
    check_same_len(space.dim(), unitary.nrows())?;
    check_same_len(space.dim(), unitary.ncols())?;
    check_same_len(space.nodes(), graph.node_count())?;
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidParameter(format!(
            "measurement probability {q} outside [0, 1]"
        )));
    }
    let residual = unitarity_residual(unitary);
    if residual > SUM_TOL {
        return Err(Error::NotUnitary { residual });
    }
    let u = SparseOp::from_dense(unitary);
    let mut ops = Vec::new();
    if q < 1.0 {
        ops.push(u.scaled((1.0 - q).sqrt()));
    }
    if q > 0.0 {
        let sq = q.sqrt();
        for row in &u.rows {
            ops.push(SparseOp {
                dim: u.dim,
                rows: vec![SparseRow {
                    index: row.index,
                    entries: row.entries.iter().map(|&(j, p, z)| (j, p, z * sq)).collect(),
                }],
                cols: u.cols.clone(),
            });
        }
    }
    Ok(KrausChannel {
        space,
        graph,
        ops,
        shortcut: Some(Shortcut::MeasuredUnitary {
            unitary: u,
            q,
            stay: 0.0,
        }),
    })
}

/// A density operator on `C×V`.
#[derive(Clone, Debug)]
pub struct DensityOp {
    space: LiftedSpace,
    mat: CMatrix,
}

impl DensityOp {
    /// Validates Hermiticity (`1e-10`), unit trace (`1e-9`) and
    /// eigenvalues `≥ -1e-10`.
    pub fn new(space: LiftedSpace, mat: CMatrix) -> Result<Self> {
        let rho = Self { space, mat };
        rho.validate()?;
        Ok(rho)
    }

    /// `|ψ⟩⟨ψ|` for a normalized vector.
    pub fn pure(space: LiftedSpace, psi: &[Complex64]) -> Result<Self> {
        check_same_len(space.dim(), psi.len())?;
        let v = nalgebra::DVector::from_column_slice(psi);
        Self::new(space, &v * v.adjoint())
    }

    pub fn maximally_mixed(space: LiftedSpace) -> Self {
        let d = space.dim();
        Self {
            space,
            mat: CMatrix::identity(d, d) / Complex64::new(d as f64, 0.0),
        }
    }

    pub fn space(&self) -> LiftedSpace {
        self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn trace(&self) -> f64 {
        self.mat.diagonal().iter().map(|z| z.re).sum()
    }

    fn hermitian_residual(&self) -> f64 {
        let d = self.mat.nrows();
        let mut worst: f64 = 0.0;
        for j in 0..d {
            for i in 0..=j {
                worst = worst.max((self.mat[(i, j)] - self.mat[(j, i)].conj()).norm());
            }
        }
        worst
    }

    fn check_cheap(&self) -> Result<()> {
        check_same_len(self.space.dim(), self.mat.nrows())?;
        check_same_len(self.space.dim(), self.mat.ncols())?;
        let h = self.hermitian_residual();
        if h > HERMITIAN_TOL {
            return Err(Error::InvalidDensity(format!("not Hermitian (residual {h:.3e})")));
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidDensity(format!("trace {tr}")));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.check_cheap()?;
        let min_eig = self
            .mat
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -PSD_TOL {
            return Err(Error::InvalidDensity(format!(
                "negative eigenvalue {min_eig:.3e}"
            )));
        }
        Ok(())
    }

    fn hermitize(&mut self) {
        let d = self.mat.nrows();
        for j in 0..d {
            for i in 0..j {
                let avg = (self.mat[(i, j)] + self.mat[(j, i)].conj()) * 0.5;
                self.mat[(i, j)] = avg;
                self.mat[(j, i)] = avg.conj();
            }
            self.mat[(j, j)].im = 0.0;
        }
    }

    /// Diagonal `⟨c,v|ρ|c,v⟩` as real populations.
    pub fn populations(&self) -> Vec<f64> {
        self.mat.diagonal().iter().map(|z| z.re).collect()
    }
}

/// One application `ρ ↦ Σ_k M_k ρ M_k†`, followed by re-hermitization.
///
/// Hermiticity and trace are re-checked on the output; positivity is
/// guaranteed by complete positivity and is only verified by
/// [`DensityOp::validate`].
pub fn step(ch: &KrausChannel, rho: &DensityOp) -> Result<DensityOp> {
    if ch.space != rho.space {
        return Err(Error::DimensionMismatch {
            expected: ch.space.dim(),
            found: rho.space.dim(),
        });
    }
    let mut out = DensityOp {
        space: rho.space,
        mat: ch.apply(&rho.mat),
    };
    out.hermitize();
    out.check_cheap()?;
    Ok(out)
}

/// `F[p0] = Σ_v p0(v) |c_v,v⟩⟨c_v,v|`.
pub fn init_map(p0: &Dist, coins: &CoinAssignment, space: LiftedSpace) -> Result<DensityOp> {
    let joint = coins.lift(p0, space)?;
    let mat = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        space.dim(),
        joint.into_iter().map(|w| Complex64::new(w, 0.0)),
    ));
    Ok(DensityOp { space, mat })
}

/// `p(v) = Σ_c ⟨c,v|ρ|c,v⟩`.
pub fn node_marginal(rho: &DensityOp) -> Result<Dist> {
    rho.space.marginalize(&rho.populations())
}

/// Dense row-major serialization of a channel: each matrix entry is a
/// `[re, im]` pair.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChannelFile {
    pub coins: usize,
    pub nodes: usize,
    /// Undirected edge list, 1-indexed, self-loops implied.
    pub edges: Vec<[usize; 2]>,
    #[serde(default)]
    pub directed: bool,
    pub kraus: Vec<Vec<Vec<[f64; 2]>>>,
}

impl ChannelFile {
    pub fn from_channel(ch: &KrausChannel) -> Self {
        let g = ch.graph();
        let edges = g
            .edges()
            .filter(|&(a, b)| a != b && (g.is_directed() || a < b))
            .map(|(a, b)| [a + 1, b + 1])
            .collect();
        let kraus = ch
            .kraus_operators()
            .iter()
            .map(|m| {
                (0..m.nrows())
                    .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
                    .collect()
            })
            .collect();
        Self {
            coins: ch.space.coins(),
            nodes: ch.space.nodes(),
            edges,
            directed: g.is_directed(),
            kraus,
        }
    }

    pub fn into_channel(self) -> Result<KrausChannel> {
        let space = LiftedSpace::new(self.coins, self.nodes)?;
        let mut pairs = Vec::with_capacity(self.edges.len());
        for [a, b] in self.edges {
            for x in [a, b] {
                if x == 0 || x > self.nodes {
                    return Err(Error::NodeOutOfRange { node: x, n: self.nodes });
                }
            }
            pairs.push((a - 1, b - 1));
        }
        let graph = if self.directed {
            Graph::directed(self.nodes, &pairs)?
        } else {
            Graph::undirected(self.nodes, &pairs)?
        };
        let dim = space.dim();
        let mut ops = Vec::with_capacity(self.kraus.len());
        for rows in self.kraus {
            check_same_len(dim, rows.len())?;
            let mut m = CMatrix::zeros(dim, dim);
            for (i, row) in rows.into_iter().enumerate() {
                check_same_len(dim, row.len())?;
                for (j, [re, im]) in row.into_iter().enumerate() {
                    m[(i, j)] = Complex64::new(re, im);
                }
            }
            ops.push(m);
        }
        KrausChannel::new(space, graph, ops)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::EQ_TOL;

    fn hadamard() -> CMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        CMatrix::from_row_slice(
            2,
            2,
            &[s, s, s, -s].map(|x| Complex64::new(x, 0.0)),
        )
    }

    fn qubit() -> (LiftedSpace, Graph) {
        (LiftedSpace::new(1, 2).unwrap(), Graph::complete(2))
    }

    #[test]
    fn zero_q_gives_single_unitary_kraus() {
        let (s, g) = qubit();
        let ch = measured_unitary_channel(&hadamard(), 0.0, s, g).unwrap();
        assert_eq!(ch.len(), 1);
        assert!((ch.kraus_operators()[0].clone() - hadamard()).norm() < 1e-15);
        assert!(validate_channel(&ch).is_ok());
    }

    #[test]
    fn hadamard_memory_effect() {
        let (s, g) = qubit();
        let ch = measured_unitary_channel(&hadamard(), 0.0, s, g).unwrap();
        let f = CoinAssignment::constant(0, s).unwrap();
        let rho0 = init_map(&Dist::delta(2, 0).unwrap(), &f, s).unwrap();
        let rho1 = step(&ch, &rho0).unwrap();
        let p1 = node_marginal(&rho1).unwrap();
        assert!((p1[0] - 0.5).abs() < EQ_TOL && (p1[1] - 0.5).abs() < EQ_TOL);
        let rho2 = step(&ch, &rho1).unwrap();
        assert!((rho2.matrix() - rho0.matrix()).norm() < EQ_TOL);
    }

    #[test]
    fn full_measurement_dephases() {
        let (s, g) = qubit();
        let ch = measured_unitary_channel(&hadamard(), 1.0, s, g).unwrap();
        assert!(validate_channel(&ch).is_ok());
        let f = CoinAssignment::constant(0, s).unwrap();
        let mut rho = init_map(&Dist::delta(2, 0).unwrap(), &f, s).unwrap();
        for _ in 0..4 {
            rho = step(&ch, &rho).unwrap();
            let p = node_marginal(&rho).unwrap();
            assert!((p[0] - 0.5).abs() < EQ_TOL);
            assert!(rho.matrix()[(0, 1)].norm() < EQ_TOL);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let (s, g) = qubit();
        let half = CMatrix::identity(2, 2) * Complex64::new(0.5, 0.0);
        assert!(matches!(
            measured_unitary_channel(&half, 0.5, s, g.clone()),
            Err(Error::NotUnitary { .. })
        ));
        assert!(measured_unitary_channel(&hadamard(), 1.5, s, g).is_err());
    }

    #[test]
    fn validation_reports_each_problem() {
        let s = LiftedSpace::new(1, 3).unwrap();
        let g = Graph::path(3);
        let half = KrausChannel::new(
            s,
            g.clone(),
            vec![CMatrix::identity(3, 3) * Complex64::new(0.5, 0.0)],
        )
        .unwrap();
        let rep = validate_channel(&half);
        assert!(rep.is_local());
        assert!((rep.completeness_residual - 0.75).abs() < 1e-15);

        // a hop 1 -> 3 across the missing edge.
        let mut jump = CMatrix::zeros(3, 3);
        jump[(2, 0)] = ONE;
        jump[(0, 2)] = ONE;
        jump[(1, 1)] = ONE;
        let rep = validate_channel(&KrausChannel::new(s, g, vec![jump]).unwrap());
        assert!(rep.is_complete());
        assert_eq!(rep.locality_violations.len(), 2);
        assert_eq!(
            rep.locality_violations[0],
            AmplitudeViolation { op: 0, from: (0, 2), to: (0, 0) }
        );
    }

    #[test]
    fn identity_channel_fixes_states() {
        let s = LiftedSpace::new(2, 2).unwrap();
        let psi: Vec<_> = [0.5, 0.5, -0.5, 0.5]
            .iter()
            .map(|&x| Complex64::new(x, 0.0))
            .collect();
        let rho = DensityOp::pure(s, &psi).unwrap();
        let id = KrausChannel::identity(s, Graph::complete(2)).unwrap();
        let out = step(&id, &rho).unwrap();
        assert!((out.matrix() - rho.matrix()).norm() < 1e-15);
    }

    #[test]
    fn shortcut_matches_kraus_sum() {
        let s = LiftedSpace::new(1, 2).unwrap();
        let g = Graph::complete(2);
        let phase = Complex64::from_polar(1.0, 0.3);
        let h = hadamard();
        let u = CMatrix::from_row_slice(2, 2, &[h[(0, 0)], h[(0, 1)] * phase, h[(1, 0)], h[(1, 1)] * phase]);
        let ch = measured_unitary_channel(&u, 0.37, s, g).unwrap().lazy();
        let psi = [Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)];
        let rho = DensityOp::pure(s, &psi).unwrap();
        let fast = ch.apply(rho.matrix());
        let slow = ch.apply_kraus_sum(rho.matrix());
        assert!((fast - slow).norm() < 1e-14);
    }

    #[test]
    fn node_marginal_examples() {
        let s = LiftedSpace::new(2, 2).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        // (|+,1⟩ + |−,2⟩)/√2
        let psi = [
            Complex64::new(r, 0.0),
            ZERO,
            ZERO,
            Complex64::new(r, 0.0),
        ];
        let p = node_marginal(&DensityOp::pure(s, &psi).unwrap()).unwrap();
        assert!((p[0] - 0.5).abs() < EQ_TOL);
        let p = node_marginal(&DensityOp::maximally_mixed(s)).unwrap();
        assert!((p[1] - 0.5).abs() < EQ_TOL);
    }

    #[test]
    fn init_map_is_diagonal_with_matching_marginal() {
        let s = LiftedSpace::new(2, 3).unwrap();
        let f = CoinAssignment::new(vec![0, 1, 0], s).unwrap();
        let p0 = Dist::new(vec![0.25, 0.0, 0.75]).unwrap();
        let rho = init_map(&p0, &f, s).unwrap();
        rho.validate().unwrap();
        assert_eq!(rho.matrix()[(s.index(0, 2), s.index(0, 2))].re, 0.75);
        assert_eq!(node_marginal(&rho).unwrap(), p0);
        let offdiag: f64 = (0..6)
            .flat_map(|i| (0..6).map(move |j| (i, j)))
            .filter(|(i, j)| i != j)
            .map(|(i, j)| rho.matrix()[(i, j)].norm())
            .sum();
        assert_eq!(offdiag, 0.0);
    }

    #[test]
    fn density_validation() {
        let s = LiftedSpace::new(1, 2).unwrap();
        let bad = CMatrix::from_row_slice(
            2,
            2,
            &[1.5, 0.0, 0.0, -0.5].map(|x| Complex64::new(x, 0.0)),
        );
        assert!(DensityOp::new(s, bad).is_err());
        let nonherm = CMatrix::from_row_slice(
            2,
            2,
            &[0.5, 0.1, 0.0, 0.5].map(|x| Complex64::new(x, 0.0)),
        );
        assert!(DensityOp::new(s, nonherm).is_err());
    }

    #[test]
    fn channel_file_round_trip() {
        let (s, g) = qubit();
        let ch = measured_unitary_channel(&hadamard(), 0.25, s, g).unwrap();
        let json = serde_json::to_string(&ChannelFile::from_channel(&ch)).unwrap();
        let back: ChannelFile = serde_json::from_str(&json).unwrap();
        let ch2 = back.into_channel().unwrap();
        assert_eq!(ch2.len(), ch.len());
        for (a, b) in ch.kraus_operators().iter().zip(ch2.kraus_operators()) {
            assert!((a - b).norm() < 1e-15);
        }
    }
}
