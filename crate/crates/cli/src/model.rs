//! Builds the process, graph and reference distribution a scenario works on.

use std::path::Path;

use liftwalk::fixtures::{random_connected_graph, random_positive_dist, random_reversible_chain};
use liftwalk::io::{read_graph, write_chain, write_channel, write_matrix_csv};
use liftwalk::lattice::{classical_walk, cycle_lmc, cycle_qw_process, torus_lmc, CycleParams, TorusParams};
use liftwalk::process::QuantumWalkProcess;
use liftwalk::{Dist, Error, Graph, LiftedChain, Result, StochMatrix, StochProcess};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::{Config, GraphKind, GraphSection, PbarSpec, Source};

/// Dense matrix artifacts are skipped above this dimension.
pub const DENSE_LIMIT: usize = 1024;
/// Kraus lists are written only up to this Hilbert space dimension.
pub const CHANNEL_LIMIT: usize = 64;

pub enum Model {
    Walk(QuantumWalkProcess),
    Lifted(LiftedChain),
    Chain(StochMatrix),
}

pub struct Built {
    pub model: Model,
    pub graph: Graph,
    pub pbar: Dist,
    /// Resolved parameters, echoed into `results.json`.
    pub params: Value,
    pub torus: Option<TorusParams>,
}

impl Built {
    pub fn process(&self) -> &dyn StochProcess {
        match &self.model {
            Model::Walk(p) => p,
            Model::Lifted(c) => c,
            Model::Chain(p) => p,
        }
    }

    /// Writes the transition matrix (chains) or Kraus list (walks) when
    /// small enough; returns the file names written.
    pub fn write_matrices(&self, dir: &Path) -> Result<Vec<String>> {
        match &self.model {
            Model::Walk(p) if p.channel().space().dim() <= CHANNEL_LIMIT => {
                write_channel(&dir.join("channel.json"), p.channel())?;
                Ok(vec!["channel.json".into()])
            }
            Model::Lifted(c) if c.space().dim() <= DENSE_LIMIT => {
                write_chain(dir, "transition", c)?;
                Ok(vec!["transition.csv".into(), "transition.json".into()])
            }
            Model::Chain(p) if p.dim() <= DENSE_LIMIT => {
                write_matrix_csv(&dir.join("transition.csv"), p)?;
                Ok(vec!["transition.csv".into()])
            }
            _ => Ok(Vec::new()),
        }
    }
}

fn invalid(msg: String) -> Error {
    Error::InvalidParameter(msg)
}

/// Torus parameters with `M` replaced by `size` when given.
pub fn torus_params(cfg: &Config, size: Option<usize>) -> Result<TorusParams> {
    let t = cfg.torus.clone().unwrap_or_default();
    let m = size.or(t.m).ok_or_else(|| invalid("torus.m is required".into()))?;
    let d = t.d.ok_or_else(|| invalid("torus.d is required".into()))?;
    Ok(TorusParams {
        m,
        d,
        alpha: t.alpha,
        lazy: t.lazy.unwrap_or(m % 2 == 0),
    })
}

/// The graph described by `graph.*`.
pub fn graph_from(section: &GraphSection, base: &Path, rng: &mut ChaCha8Rng) -> Result<Graph> {
    let n = section.n.unwrap_or(0);
    Ok(match section.kind {
        GraphKind::Cycle => Graph::cycle(n),
        GraphKind::Path => Graph::path(n),
        GraphKind::Complete => Graph::complete(n),
        GraphKind::Torus => Graph::torus(section.m.unwrap_or(2), section.d.unwrap_or(1)),
        GraphKind::Random => random_connected_graph(rng, n, section.p.unwrap_or(0.0)),
        GraphKind::File => {
            let file = section.file.as_ref().ok_or_else(|| invalid("graph.file is required".into()))?;
            read_graph(&base.join(file), section.directed)?
        }
    })
}

/// `pbar` from the config, uniform when absent.
pub fn pbar_from(cfg: &Config, n: usize) -> Result<Dist> {
    match &cfg.pbar {
        Some(PbarSpec::Weights(w)) => {
            if w.len() != n {
                return Err(invalid(format!("pbar has {} weights for {n} nodes", w.len())));
            }
            Dist::from_weights(w.clone())
        }
        _ => Ok(Dist::uniform(n)),
    }
}

/// Builds `src`, replacing the family size (`cycle.n` or `torus.m`) by
/// `size` when sweeping.
pub fn build(cfg: &Config, src: Source, size: Option<usize>, rng: &mut ChaCha8Rng) -> Result<Built> {
    let c = cfg.cycle.clone().unwrap_or_default();
    let cycle_n = || size.or(c.n).ok_or_else(|| invalid("cycle.n is required".into()));
    match src {
        Source::CycleQw => {
            let n = cycle_n()?;
            let p = CycleParams {
                n,
                alpha: c.alpha.unwrap_or(0.5),
                phi: c.phi,
                theta: c.theta,
                q: c.q.unwrap_or(1.0 / n as f64),
                lazy: c.lazy.unwrap_or(n % 2 == 0),
            };
            let proc = cycle_qw_process(&p)?;
            Ok(Built {
                graph: proc.channel().graph().clone(),
                pbar: pbar_from(cfg, n)?,
                params: json!({"n": n, "alpha": p.alpha, "phi": p.phi, "theta": p.theta, "q": p.q, "lazy": p.lazy}),
                model: Model::Walk(proc),
                torus: None,
            })
        }
        Source::CycleLmc => {
            let n = cycle_n()?;
            let alpha = c.alpha.unwrap_or(1.0 / n as f64);
            let lazy = c.lazy.unwrap_or(n % 2 == 0);
            let chain = cycle_lmc(n, alpha)?;
            let chain = if lazy { chain.lazy() } else { chain };
            Ok(Built {
                graph: chain.graph().clone(),
                pbar: pbar_from(cfg, n)?,
                params: json!({"n": n, "alpha": alpha, "lazy": lazy}),
                model: Model::Lifted(chain),
                torus: None,
            })
        }
        Source::ClassicalWalk => {
            let n = cycle_n()?;
            let lazy = c.lazy.unwrap_or(n % 2 == 0);
            if !lazy && n % 2 == 0 {
                return Err(invalid(format!(
                    "classical-walk on an even cycle (N = {n}) is periodic; leave cycle.lazy unset"
                )));
            }
            // classical_walk is already lazy for even n
            let p = classical_walk(n)?;
            let p = if lazy && n % 2 == 1 { p.lazy() } else { p };
            Ok(Built {
                graph: Graph::cycle(n),
                pbar: pbar_from(cfg, n)?,
                params: json!({"n": n, "lazy": lazy}),
                model: Model::Chain(p),
                torus: None,
            })
        }
        Source::TorusLmc => {
            let tp = torus_params(cfg, size)?;
            let chain = torus_lmc(&tp)?;
            Ok(Built {
                graph: chain.graph().clone(),
                pbar: pbar_from(cfg, tp.nodes())?,
                params: json!({"m": tp.m, "d": tp.d, "alpha": tp.alpha(), "lazy": tp.lazy, "nodes": tp.nodes()}),
                model: Model::Lifted(chain),
                torus: Some(tp),
            })
        }
        Source::RandomReversible => {
            let section = cfg.graph.as_ref().ok_or_else(|| invalid("missing graph.kind".into()))?;
            let g = graph_from(section, &cfg.base_dir, rng)?;
            let n = g.node_count();
            let pbar = match cfg.pbar {
                Some(_) => pbar_from(cfg, n)?,
                None => random_positive_dist(rng, n),
            };
            let p = random_reversible_chain(rng, &g, &pbar);
            Ok(Built {
                params: json!({"nodes": n, "edges": g.edge_count()}),
                graph: g,
                pbar,
                model: Model::Chain(p),
                torus: None,
            })
        }
    }
}
