//! File formats: dense matrix CSV with a JSON sidecar, lift triplets with a
//! layout manifest, bridge manifests, TV trajectories, conductance reports
//! and channel JSON.
//!
//! Numbers are written with 12 significant digits. Node labels in reports
//! are 1-indexed; flat state indices are 0-indexed.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bridge::BridgeSequence;
use crate::conductance::GraphConductance;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::lift::ClockLift;
use crate::lmc::{LiftedChain, StochMatrix};
use crate::mixing::TvTrajectory;
use crate::quantum::{ChannelFile, KrausChannel};

/// `%.12g`-style formatting.
pub fn fmt12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.11e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..12).contains(&exp) {
        return format!("{}e{}{:02}", trim_zeros(mantissa), if exp < 0 { '-' } else { '+' }, exp.abs());
    }
    let decimals = (11 - exp).max(0) as usize;
    trim_zeros(&format!("{:.*}", decimals, x)).to_string()
}

/// `x` rounded to 12 significant digits, for JSON fields.
pub fn round12(x: f64) -> f64 {
    fmt12(x).parse().unwrap_or(x)
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    Ok(BufWriter::new(File::create(path)?))
}

/// Writes pretty JSON followed by a newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Dense CSV, one row per target state: row `i`, column `j` is `P(i, j)`.
pub fn write_matrix_csv(path: &Path, p: &StochMatrix) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(create(path)?);
    for row in p.to_dense() {
        w.write_record(row.iter().map(|&x| fmt12(x)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix_csv(path: &Path) -> Result<StochMatrix> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_path(path)?;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    StochMatrix::from_dense(&rows)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixSidecar {
    pub coins: usize,
    pub nodes: usize,
    /// Flat index of `(c, v)` is `c·nodes + v`.
    pub layout: String,
    /// Initial coin of each node, in node order.
    pub coin_assignment: Vec<usize>,
}

/// Writes `<stem>.csv` and `<stem>.json` for a lifted chain.
pub fn write_chain(dir: &Path, stem: &str, chain: &LiftedChain) -> Result<()> {
    write_matrix_csv(&dir.join(format!("{stem}.csv")), chain.transition())?;
    let space = chain.space();
    write_json(
        &dir.join(format!("{stem}.json")),
        &MatrixSidecar {
            coins: space.coins(),
            nodes: space.nodes(),
            layout: "coin-major: index = c * nodes + v (0-indexed)".into(),
            coin_assignment: chain.init().as_slice().to_vec(),
        },
    )
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LiftLayout {
    pub nodes: usize,
    pub horizon: usize,
    pub amplified: bool,
    pub states: usize,
    pub ordering: String,
    pub triplets: String,
}

/// Writes `lift_triplets.csv` (`from,to,probability`) and `lift_layout.json`.
pub fn write_lift(dir: &Path, lift: &ClockLift) -> Result<()> {
    let triplets = dir.join("lift_triplets.csv");
    let mut w = csv::Writer::from_writer(create(&triplets)?);
    w.write_record(["from", "to", "probability"])?;
    for (to, from, p) in lift.chain().transition().triplets() {
        w.write_record([from.to_string(), to.to_string(), fmt12(p)])?;
    }
    w.flush()?;
    write_json(
        &dir.join("lift_layout.json"),
        &LiftLayout {
            nodes: lift.node_count(),
            horizon: lift.horizon(),
            amplified: lift.is_amplified(),
            states: lift.chain().space().dim(),
            ordering: "v0-major, then l, then v: index = (v0 * (T + 1) + l) * nodes + v (0-indexed)"
                .into(),
            triplets: "lift_triplets.csv".into(),
        },
    )
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BridgeEntry {
    /// 1-indexed start node.
    pub start: usize,
    /// 1-indexed step `t` of `P_t`.
    pub step: usize,
    pub flow_value: f64,
    pub file: String,
}

/// Writes every bridge of a basis run as `bridge_s<start>_t<step>.csv`
/// under `dir`, plus `manifest.json`.
pub fn write_bridges(dir: &Path, bridges: &[BridgeSequence]) -> Result<Vec<BridgeEntry>> {
    let mut manifest = Vec::new();
    for (v0, b) in bridges.iter().enumerate() {
        for (l, m) in b.matrices.iter().enumerate() {
            let file = format!("bridge_s{}_t{}.csv", v0 + 1, l + 1);
            write_matrix_csv(&dir.join(&file), m)?;
            manifest.push(BridgeEntry {
                start: v0 + 1,
                step: l + 1,
                flow_value: round12(b.flow_values[l]),
                file,
            });
        }
    }
    write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

/// `t,max_tv,argmax_start` with 1-indexed start labels.
pub fn write_trajectory_csv(path: &Path, tr: &TvTrajectory) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["t", "max_tv", "argmax_start"])?;
    for (t, (&tv, &u)) in tr.max_tv.iter().zip(&tr.argmax).enumerate() {
        w.write_record([t.to_string(), fmt12(tv), (u + 1).to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a two-or-more column CSV with a header into rows of strings.
pub fn read_csv_rows(path: &Path) -> Result<Vec<Vec<String>>> {
    let mut r = csv::Reader::from_path(path)?;
    r.records()
        .map(|rec| Ok(rec?.iter().map(str::to_string).collect()))
        .collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConductanceFile {
    pub phi: f64,
    /// 1-indexed.
    pub witness_cut: Vec<usize>,
    pub witness_chain_path: String,
}

/// Writes `witness_chain.csv` and `conductance.json`.
pub fn write_conductance(dir: &Path, gc: &GraphConductance) -> Result<ConductanceFile> {
    write_matrix_csv(&dir.join("witness_chain.csv"), &gc.witness)?;
    let file = ConductanceFile {
        phi: round12(gc.phi),
        witness_cut: gc.binding_cut.labels(),
        witness_chain_path: "witness_chain.csv".into(),
    };
    write_json(&dir.join("conductance.json"), &file)?;
    Ok(file)
}

pub fn write_channel(path: &Path, ch: &KrausChannel) -> Result<()> {
    write_json(path, &ChannelFile::from_channel(ch))
}

pub fn read_channel(path: &Path) -> Result<KrausChannel> {
    let file: ChannelFile = serde_json::from_reader(File::open(path)?)?;
    file.into_channel()
}

/// Edge-list text: first line `n`, then `v v'` pairs, 1-indexed.
pub fn read_graph(path: &Path, directed: bool) -> Result<Graph> {
    Graph::from_edge_list(&fs::read_to_string(path)?, directed)
}

pub fn write_graph(path: &Path, g: &Graph) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(g.to_edge_list().as_bytes())?;
    w.flush()?;
    Ok(())
}

/// `dir/name`, creating `dir`.
pub fn out_path(dir: &Path, name: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    Ok(dir.join(name))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bridge::basis_bridges;
    use crate::lattice::cycle_lmc;
    use crate::lift::clock_lift;

    #[test]
    fn fmt12_matches_printf_g() {
        assert_eq!(fmt12(0.25), "0.25");
        assert_eq!(fmt12(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt12(2.0 / 3.0), "0.666666666667");
        assert_eq!(fmt12(123456.0), "123456");
        assert_eq!(fmt12(1e-7), "1e-07");
        assert_eq!(fmt12(-1.5e13), "-1.5e+13");
        assert_eq!(fmt12(1e-5), "1e-05");
        assert_eq!(fmt12(1e-4), "0.0001");
        assert_eq!(fmt12(-0.0), "0");
        assert_eq!(round12(0.1 + 0.2), 0.3);
        assert_eq!(round12(f64::INFINITY), f64::INFINITY);
    }

    #[test]
    fn matrix_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let chain = cycle_lmc(4, 0.3).unwrap();
        write_chain(dir.path(), "p", &chain).unwrap();
        let back = read_matrix_csv(&dir.path().join("p.csv")).unwrap();
        assert_eq!(back.to_dense(), chain.transition().to_dense());
        let side: MatrixSidecar =
            serde_json::from_str(&fs::read_to_string(dir.path().join("p.json")).unwrap()).unwrap();
        assert_eq!((side.coins, side.nodes), (2, 4));
    }

    #[test]
    fn lift_and_bridges_written() {
        let dir = tempfile::tempdir().unwrap();
        let g = Graph::cycle(3);
        let p = crate::lattice::classical_walk(3).unwrap();
        let b = basis_bridges(&p, &g, 2).unwrap();
        let lift = clock_lift(&b, &g).unwrap();
        write_lift(dir.path(), &lift).unwrap();
        let rows = read_csv_rows(&dir.path().join("lift_triplets.csv")).unwrap();
        assert_eq!(rows.len(), lift.chain().transition().nnz());
        let man = write_bridges(&dir.path().join("bridges"), &b).unwrap();
        assert_eq!(man.len(), 6);
        assert!(dir.path().join("bridges/bridge_s3_t2.csv").exists());
    }

    #[test]
    fn graph_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = Graph::torus(3, 2);
        let path = dir.path().join("g.txt");
        write_graph(&path, &g).unwrap();
        assert_eq!(read_graph(&path, false).unwrap(), g);
    }
}
