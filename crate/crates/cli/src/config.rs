//! Scenario files: TOML with flat dotted keys, e.g.
//!
//! ```toml
//! kind = "cycle-qw"
//! eps = [0.25]
//! cycle.n = 16
//! cycle.q = 0.0625
//! ```
//!
//! Unknown keys are rejected. Kind-specific completeness is checked by
//! [`Config::validate`] before anything is computed.

use std::path::{Path, PathBuf};

use serde::Deserialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    CycleQw,
    CycleLmc,
    ClassicalWalk,
    TorusLmc,
    BridgeBuild,
    LiftBuild,
    Conductance,
    LowerBoundCheck,
    LatticeLemmas,
    Multiscale,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::CycleQw => "cycle-qw",
            Kind::CycleLmc => "cycle-lmc",
            Kind::ClassicalWalk => "classical-walk",
            Kind::TorusLmc => "torus-lmc",
            Kind::BridgeBuild => "bridge-build",
            Kind::LiftBuild => "lift-build",
            Kind::Conductance => "conductance",
            Kind::LowerBoundCheck => "lower-bound-check",
            Kind::LatticeLemmas => "lattice-lemmas",
            Kind::Multiscale => "multiscale",
        }
    }

    /// Kinds that evolve one of the lattice walks and report mixing times.
    pub fn is_walk(self) -> bool {
        matches!(self, Kind::CycleQw | Kind::CycleLmc | Kind::ClassicalWalk | Kind::TorusLmc)
    }
}

/// Process fed to the bridge, lift and lower-bound scenarios.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    CycleQw,
    CycleLmc,
    ClassicalWalk,
    TorusLmc,
    /// Metropolis chain on `graph.*` for a random `p̄`, drawn from `--seed`.
    RandomReversible,
}

impl Source {
    pub fn of_walk(kind: Kind) -> Option<Source> {
        match kind {
            Kind::CycleQw => Some(Source::CycleQw),
            Kind::CycleLmc => Some(Source::CycleLmc),
            Kind::ClassicalWalk => Some(Source::ClassicalWalk),
            Kind::TorusLmc => Some(Source::TorusLmc),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CycleSection {
    pub n: Option<usize>,
    /// Coin bias; `1/2` for the walk, `1/N` for the lifted chain.
    pub alpha: Option<f64>,
    #[serde(default)]
    pub phi: f64,
    #[serde(default)]
    pub theta: f64,
    /// Measurement rate; `1/N` by default.
    pub q: Option<f64>,
    /// Defaults to `true` for even `N`.
    pub lazy: Option<bool>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TorusSection {
    pub m: Option<usize>,
    pub d: Option<u32>,
    pub alpha: Option<f64>,
    pub lazy: Option<bool>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GraphKind {
    Cycle,
    Path,
    Complete,
    Torus,
    Random,
    File,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSection {
    pub kind: GraphKind,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub d: Option<u32>,
    /// Extra-edge probability of the random graph.
    pub p: Option<f64>,
    /// Edge-list file, relative to the config file.
    pub file: Option<PathBuf>,
    #[serde(default)]
    pub directed: bool,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessSection {
    pub kind: Source,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BridgeSection {
    pub horizon: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LiftSection {
    pub horizon: Option<usize>,
    #[serde(default)]
    pub amplified: bool,
    /// Steps compared against the process; `T` plain, `3T` amplified.
    pub verify_horizon: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Deserialize)]
#[serde(untagged)]
pub enum LemmaHorizon {
    Steps(usize),
    Named(String),
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSection {
    /// `"proof"` (default), `"stated"` or a step count.
    pub horizon: Option<LemmaHorizon>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiscaleSection {
    pub n: Option<usize>,
    pub t: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Values of `cycle.n` or `torus.m`.
    pub values: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum PbarSpec {
    Weights(Vec<f64>),
    Named(String),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub kind: Kind,
    pub horizon: Option<usize>,
    #[serde(default = "default_eps")]
    pub eps: Vec<f64>,
    #[serde(default = "default_eps0")]
    pub eps0: f64,
    pub out: Option<PathBuf>,
    pub pbar: Option<PbarSpec>,
    pub cycle: Option<CycleSection>,
    pub torus: Option<TorusSection>,
    pub graph: Option<GraphSection>,
    pub process: Option<ProcessSection>,
    pub bridge: Option<BridgeSection>,
    pub lift: Option<LiftSection>,
    pub lattice: Option<LatticeSection>,
    pub multiscale: Option<MultiscaleSection>,
    pub sweep: Option<SweepSection>,
    /// Directory of the config file, for relative paths.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_eps() -> Vec<f64> {
    vec![0.25]
}

fn default_eps0() -> f64 {
    0.25
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        let mut cfg = Self::parse(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    /// The process a scenario evolves, if any.
    pub fn source(&self) -> Option<Source> {
        Source::of_walk(self.kind).or_else(|| self.process.as_ref().map(|p| p.kind))
    }

    /// Every problem found, in a stable order. Empty means runnable.
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        for &e in &self.eps {
            if !(e > 0.0 && e < 1.0) {
                errs.push(format!("eps: {e} is outside (0, 1)"));
            }
        }
        if self.eps.is_empty() {
            errs.push("eps: list is empty".into());
        }
        if !(self.eps0 > 0.0 && self.eps0 < 0.5) {
            errs.push(format!("eps0: {} is outside (0, 1/2)", self.eps0));
        }
        if self.horizon == Some(0) {
            errs.push("horizon: must be at least 1".into());
        }
        if let Some(PbarSpec::Named(name)) = &self.pbar {
            if name != "uniform" {
                errs.push(format!("pbar: expected \"uniform\" or a weight list, got \"{name}\""));
            }
        }
        if let Some(PbarSpec::Weights(w)) = &self.pbar {
            if w.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) || w.iter().sum::<f64>() <= 0.0 {
                errs.push("pbar: weights must be finite, nonnegative and not all zero".into());
            }
        }

        match self.kind {
            Kind::BridgeBuild | Kind::LiftBuild | Kind::LowerBoundCheck => {
                if self.process.is_none() {
                    errs.push(format!("{}: missing process.kind", self.kind.name()));
                }
            }
            _ => {
                if self.process.is_some() {
                    errs.push(format!("{}: process.* is not used by this kind", self.kind.name()));
                }
            }
        }
        if let Some(src) = self.source() {
            self.validate_source(src, &mut errs);
        }

        match self.kind {
            Kind::BridgeBuild => {
                if self.bridge.as_ref().and_then(|b| b.horizon).unwrap_or(0) == 0 {
                    errs.push("bridge-build: bridge.horizon (≥ 1) is required".into());
                }
            }
            Kind::LiftBuild => {
                let lift = self.lift.clone().unwrap_or_default();
                if lift.horizon.unwrap_or(0) == 0 {
                    errs.push("lift-build: lift.horizon (≥ 1) is required".into());
                }
                if lift.verify_horizon == Some(0) {
                    errs.push("lift-build: lift.verify_horizon must be at least 1".into());
                }
            }
            Kind::Conductance => match &self.graph {
                None => errs.push("conductance: missing graph.kind".into()),
                Some(g) => validate_graph(g, &mut errs),
            },
            Kind::LatticeLemmas => {
                if let Some(LemmaHorizon::Named(s)) =
                    self.lattice.as_ref().and_then(|l| l.horizon.as_ref())
                {
                    if s != "proof" && s != "stated" {
                        errs.push(format!(
                            "lattice.horizon: expected \"proof\", \"stated\" or a step count, got \"{s}\""
                        ));
                    }
                }
                self.validate_torus(&mut errs);
            }
            Kind::Multiscale => {
                let ms = self.multiscale.clone().unwrap_or_default();
                match (ms.n, ms.t) {
                    (Some(n), Some(t)) => {
                        if n < 3 {
                            errs.push(format!("multiscale.n: need N ≥ 3, got {n}"));
                        }
                        if t >= n {
                            errs.push(format!("multiscale.t: need t < N, got t = {t}, N = {n}"));
                        }
                    }
                    _ => errs.push("multiscale: multiscale.n and multiscale.t are required".into()),
                }
            }
            _ => {}
        }

        if let Some(sweep) = &self.sweep {
            if !self.kind.is_walk() {
                errs.push(format!("sweep: not supported for {}", self.kind.name()));
            }
            if sweep.values.len() < 2 {
                errs.push("sweep.values: need at least two sizes".into());
            }
            if sweep.values.iter().any(|&v| v < 2) {
                errs.push("sweep.values: sizes must be at least 2".into());
            }
        }
        errs
    }

    fn validate_source(&self, src: Source, errs: &mut Vec<String>) {
        let swept = self.sweep.is_some();
        match src {
            Source::CycleQw | Source::CycleLmc | Source::ClassicalWalk => {
                let c = self.cycle.clone().unwrap_or_default();
                match c.n {
                    Some(n) if n < 2 => errs.push(format!("cycle.n: need N ≥ 2, got {n}")),
                    None if !swept => errs.push("cycle.n is required".into()),
                    _ => {}
                }
                if let Some(a) = c.alpha {
                    if !(0.0..=1.0).contains(&a) {
                        errs.push(format!("cycle.alpha: {a} is outside [0, 1]"));
                    }
                }
                if let Some(q) = c.q {
                    if !(0.0..=1.0).contains(&q) {
                        errs.push(format!("cycle.q: {q} is outside [0, 1]"));
                    }
                }
            }
            Source::TorusLmc => self.validate_torus(errs),
            Source::RandomReversible => match &self.graph {
                None => errs.push("random-reversible: missing graph.kind".into()),
                Some(g) => validate_graph(g, errs),
            },
        }
    }

    fn validate_torus(&self, errs: &mut Vec<String>) {
        let t = self.torus.clone().unwrap_or_default();
        match t.m {
            Some(m) if m < 2 => errs.push(format!("torus.m: need M ≥ 2, got {m}")),
            None if self.sweep.is_none() => errs.push("torus.m is required".into()),
            _ => {}
        }
        match t.d {
            Some(0) => errs.push("torus.d: need d ≥ 1".into()),
            None => errs.push("torus.d is required".into()),
            _ => {}
        }
        if let Some(a) = t.alpha {
            if !(a > 0.0 && a <= 1.0) {
                errs.push(format!("torus.alpha: {a} is outside (0, 1]"));
            }
        }
    }
}

fn validate_graph(g: &GraphSection, errs: &mut Vec<String>) {
    let need_n = |errs: &mut Vec<String>| match g.n {
        Some(n) if n >= 1 => {}
        _ => errs.push("graph.n (≥ 1) is required".into()),
    };
    match g.kind {
        GraphKind::Cycle | GraphKind::Path | GraphKind::Complete => need_n(errs),
        GraphKind::Torus => {
            if g.m.unwrap_or(0) < 2 || g.d.unwrap_or(0) < 1 {
                errs.push("graph.m (≥ 2) and graph.d (≥ 1) are required for a torus".into());
            }
        }
        GraphKind::Random => {
            need_n(errs);
            match g.p {
                Some(p) if (0.0..=1.0).contains(&p) => {}
                _ => errs.push("graph.p in [0, 1] is required for a random graph".into()),
            }
        }
        GraphKind::File => {
            if g.file.is_none() {
                errs.push("graph.file is required".into());
            }
        }
    }
}
