//! One runner per scenario kind. Each writes its artifacts into the output
//! directory and returns the summary that becomes `results.json`.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use liftwalk::bridge::basis_bridges;
use liftwalk::conductance::{graph_conductance, mixing_lower_bound_check, mixing_lower_bound_check_with, phi_chain, MAX_CUT_NODES};
use liftwalk::io::{fmt12, write_bridges, write_conductance, write_lift, write_trajectory_csv};
use liftwalk::lattice::{
    contraction_horizon, contraction_stated_horizon, cycle_qw_process, lattice_lemma_checks, multiscale_series,
    torus_lmc, CycleParams,
};
use liftwalk::lift::{amplified_lift, clock_lift, verify_simulation};
use liftwalk::mixing::{amplification_bound, default_horizon, fit_exponent, mixing_time_from, tv_trajectory_from, TvTrajectory};
use liftwalk::process::{check_invariance, check_process_locality};
use liftwalk::quantum::validate_channel;
use liftwalk::{tv_distance, Error, Result, StochProcess};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::config::{Config, Kind, LemmaHorizon, Source};
use crate::model::{build, graph_from, pbar_from, torus_params, Built, Model};

/// Residual allowed for bridges and lifts.
pub const SIMULATION_TOL: f64 = 1e-8;
/// Up to this many nodes every basis start is evolved; above it the
/// translation-invariant walks use node 0 alone.
pub const ALL_STARTS_LIMIT: usize = 64;
/// Locality of trajectories is scanned up to this many nodes.
const LOCALITY_SCAN_LIMIT: usize = 20;

pub struct Run<'a> {
    pub cfg: &'a Config,
    pub out: PathBuf,
    pub horizon: Option<usize>,
    pub seed: u64,
    pub verify: bool,
}

/// Summary fields plus the assertions that failed.
#[derive(Default)]
pub struct Outcome {
    pub fields: Map<String, Value>,
    pub failures: Vec<String>,
}

impl Outcome {
    fn set(&mut self, key: &str, value: Value) {
        self.fields.insert(key.into(), value);
    }

    fn check(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.failures.push(what.into());
        }
    }
}

impl Run<'_> {
    fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    fn horizon_for(&self, proc: &dyn StochProcess) -> usize {
        self.horizon
            .or(self.cfg.horizon)
            .unwrap_or_else(|| default_horizon(proc.kind(), proc.node_count()))
    }

    fn source(&self) -> Result<Source> {
        self.cfg
            .source()
            .ok_or_else(|| Error::InvalidParameter("scenario has no process".into()))
    }

    fn built(&self) -> Result<Built> {
        build(self.cfg, self.source()?, None, &mut self.rng())
    }

    pub fn execute(&self) -> Result<Outcome> {
        fs::create_dir_all(&self.out)?;
        let mut o = Outcome::default();
        match self.cfg.kind {
            k if k.is_walk() && self.cfg.sweep.is_some() => self.sweep(&mut o)?,
            k if k.is_walk() => self.walk(&mut o)?,
            Kind::BridgeBuild => self.bridge_build(&mut o)?,
            Kind::LiftBuild => self.lift_build(&mut o)?,
            Kind::Conductance => self.conductance(&mut o)?,
            Kind::LowerBoundCheck => self.lower_bound(&mut o)?,
            Kind::LatticeLemmas => self.lattice(&mut o)?,
            Kind::Multiscale => self.multiscale(&mut o)?,
            _ => unreachable!("walk kinds handled above"),
        }
        Ok(o)
    }

    fn walk(&self, o: &mut Outcome) -> Result<()> {
        let built = self.built()?;
        let proc = built.process();
        let n = proc.node_count();
        let horizon = self.horizon_for(proc);
        let starts: Vec<usize> = if n <= ALL_STARTS_LIMIT { (0..n).collect() } else { vec![0] };
        let traj = tv_trajectory_from(proc, &built.pbar, horizon, &starts)?;
        write_trajectory_csv(&self.out.join("trajectory.csv"), &traj)?;

        o.set("params", built.params.clone());
        o.set("nodes", json!(n));
        o.set("horizon", json!(horizon));
        o.set("starts", json!(if starts.len() == n { "all" } else { "node 1 (translation invariant)" }));
        o.set("mixing", mixing_entries(&traj, &self.cfg.eps)?);

        let tau_bar = mixing_time_from(traj, self.cfg.eps0)?.tau;
        let mut amp = Map::new();
        amp.insert("eps0".into(), json!(self.cfg.eps0));
        amp.insert("tau_bar".into(), json!(tau_bar));
        let bounds = self
            .cfg
            .eps
            .iter()
            .map(|&e| {
                Ok(json!({
                    "eps": e,
                    "bound": tau_bar.map(|tb| amplification_bound(tb, self.cfg.eps0, e)).transpose()?,
                }))
            })
            .collect::<Result<Vec<_>>>()?;
        amp.insert("bounds".into(), Value::Array(bounds));
        o.set("amplification", Value::Object(amp));

        if n <= MAX_CUT_NODES {
            let phi = graph_conductance(&built.graph, &built.pbar)?.phi;
            let rep = mixing_lower_bound_check_with(proc, &built.pbar, &built.graph, phi, horizon)?;
            o.check(rep.holds == Some(true), format!("conductance lower bound: holds = {:?}", rep.holds));
            o.set(
                "lower_bound",
                json!({
                    "phi": rep.phi,
                    "bound": rep.bound,
                    "tau": rep.mixing.tau,
                    "invariant": rep.invariant,
                    "locality": rep.locality,
                    "holds": rep.holds,
                }),
            );
        } else {
            o.set("lower_bound", Value::Null);
        }
        o.set("matrices", json!(built.write_matrices(&self.out)?));
        if self.verify {
            let v = self.verify_built(&built, horizon, o)?;
            o.set("verify", v);
        }
        Ok(())
    }

    fn sweep(&self, o: &mut Outcome) -> Result<()> {
        let src = self.source()?;
        let sizes = &self.cfg.sweep.as_ref().expect("sweep present").values;
        let points: Vec<(usize, usize, TvTrajectory)> = sizes
            .par_iter()
            .map(|&s| {
                let built = build(self.cfg, src, Some(s), &mut self.rng())?;
                let proc = built.process();
                let horizon = self.horizon_for(proc);
                // every sweep family commutes with translations
                let traj = tv_trajectory_from(proc, &built.pbar, horizon, &[0])?;
                Ok((s, proc.node_count(), traj))
            })
            .collect::<Result<_>>()?;

        let mut csv = String::from("size,nodes");
        for &e in &self.cfg.eps {
            write!(csv, ",tau_{}", fmt12(e)).expect("string write");
        }
        csv.push('\n');
        let mut rows = Vec::new();
        let mut taus: Vec<Vec<Option<usize>>> = vec![Vec::new(); self.cfg.eps.len()];
        for (s, n, traj) in &points {
            write!(csv, "{s},{n}").expect("string write");
            let mut row = Map::new();
            row.insert("size".into(), json!(s));
            row.insert("nodes".into(), json!(n));
            row.insert("horizon".into(), json!(traj.horizon()));
            let mut per_eps = Vec::new();
            for (k, &e) in self.cfg.eps.iter().enumerate() {
                let tau = mixing_time_from(traj.clone(), e)?.tau;
                taus[k].push(tau);
                write!(csv, ",{}", tau.map(|t| t.to_string()).unwrap_or_default()).expect("string write");
                per_eps.push(json!({"eps": e, "tau": tau}));
            }
            csv.push('\n');
            row.insert("mixing".into(), Value::Array(per_eps));
            rows.push(Value::Object(row));
            write_trajectory_csv(&self.out.join(format!("trajectory_{s}.csv")), traj)?;
        }
        fs::write(self.out.join("scaling.csv"), csv)?;

        let xs: Vec<f64> = sizes.iter().map(|&s| s as f64).collect();
        let fits = self
            .cfg
            .eps
            .iter()
            .zip(&taus)
            .map(|(&e, ts)| {
                let ys: Option<Vec<f64>> = ts.iter().map(|t| t.filter(|&t| t > 0).map(|t| t as f64)).collect();
                let exponent = ys.map(|ys| fit_exponent(&xs, &ys)).transpose()?;
                Ok(json!({"eps": e, "exponent": exponent}))
            })
            .collect::<Result<Vec<_>>>()?;
        o.set("sweep", Value::Array(rows));
        o.set("fits", Value::Array(fits));
        o.set("starts", json!("node 1 (translation invariant)"));
        Ok(())
    }

    fn bridge_build(&self, o: &mut Outcome) -> Result<()> {
        let built = self.built()?;
        let t = self.cfg.bridge.as_ref().and_then(|b| b.horizon).expect("validated");
        let bridges = basis_bridges(built.process(), &built.graph, t)?;
        let entries = write_bridges(&self.out.join("bridges"), &bridges)?;
        let step = bridges.iter().map(|b| b.step_residual()).fold(0.0, f64::max);
        let product = bridges.iter().map(|b| b.product_residual()).fold(0.0, f64::max);
        let min_flow = bridges
            .iter()
            .flat_map(|b| b.flow_values.iter().copied())
            .fold(f64::INFINITY, f64::min);
        o.check(step <= SIMULATION_TOL, format!("bridge step residual {step:e} > {SIMULATION_TOL:e}"));
        o.check(product <= SIMULATION_TOL, format!("bridge product residual {product:e} > {SIMULATION_TOL:e}"));
        o.set("params", built.params.clone());
        o.set("nodes", json!(built.graph.node_count()));
        o.set("horizon", json!(t));
        o.set("files", json!(entries.len()));
        o.set("manifest", json!("bridges/manifest.json"));
        o.set("max_step_residual", json!(step));
        o.set("max_product_residual", json!(product));
        o.set("min_flow_value", json!(min_flow));
        if self.verify {
            let v = self.verify_built(&built, t, o)?;
            o.set("verify", v);
        }
        Ok(())
    }

    fn lift_build(&self, o: &mut Outcome) -> Result<()> {
        let built = self.built()?;
        let section = self.cfg.lift.clone().unwrap_or_default();
        let t = section.horizon.expect("validated");
        let check_horizon = section
            .verify_horizon
            .unwrap_or(if section.amplified { 3 * t } else { t });
        let bridges = basis_bridges(built.process(), &built.graph, t)?;
        let lift = clock_lift(&bridges, &built.graph)?;
        let lift = if section.amplified { amplified_lift(&lift)? } else { lift };
        let rep = verify_simulation(&lift, built.process(), check_horizon)?;
        write_lift(&self.out, &lift)?;
        o.check(
            rep.max_residual <= SIMULATION_TOL,
            format!("lift residual {:e} > {SIMULATION_TOL:e}", rep.max_residual),
        );
        o.check(rep.local, "lift makes a jump outside the base graph");
        o.set("params", built.params.clone());
        o.set("nodes", json!(lift.node_count()));
        o.set("horizon", json!(t));
        o.set("amplified", json!(lift.is_amplified()));
        o.set("states", json!(lift.chain().space().dim()));
        o.set("transitions", json!(lift.chain().transition().nnz()));
        o.set("verify_horizon", json!(check_horizon));
        o.set("max_residual", json!(rep.max_residual));
        o.set("worst", json!({"start": rep.worst.0 + 1, "t": rep.worst.1}));
        o.set("local", json!(rep.local));
        o.set("triplets", json!("lift_triplets.csv"));
        o.set("layout", json!("lift_layout.json"));
        if self.verify {
            let v = self.verify_built(&built, t, o)?;
            o.set("verify", v);
        }
        Ok(())
    }

    fn conductance(&self, o: &mut Outcome) -> Result<()> {
        let section = self.cfg.graph.as_ref().expect("validated");
        let g = graph_from(section, &self.cfg.base_dir, &mut self.rng())?;
        let pbar = pbar_from(self.cfg, g.node_count())?;
        let gc = graph_conductance(&g, &pbar)?;
        let file = write_conductance(&self.out, &gc)?;
        o.set("nodes", json!(g.node_count()));
        o.set("edges", json!(g.edge_count()));
        o.set("pbar", json!(pbar.as_slice()));
        o.set("phi", json!(file.phi));
        o.set("witness_cut", json!(file.witness_cut));
        o.set("witness_chain", json!(file.witness_chain_path));
        o.set("cuts_used", json!(gc.cuts_used));
        o.set("rounds", json!(gc.rounds));
        if self.verify {
            let mut v = Map::new();
            let local = gc.witness.respects(&g);
            let drift = tv_distance(&gc.witness.apply_dist(&pbar)?, &pbar)?;
            v.insert("witness_local".into(), json!(local));
            v.insert("witness_invariant".into(), json!(drift <= 1e-9));
            o.check(local, "verify: witness chain leaves the graph");
            o.check(drift <= 1e-9, format!("verify: witness moves p̄ by {drift:e}"));
            match phi_chain(&gc.witness, &pbar) {
                Ok(cut) => {
                    let ok = (cut.phi - gc.phi).abs() <= 1e-7;
                    v.insert("witness_attains_phi".into(), json!(ok));
                    o.check(ok, format!("verify: witness conductance {} differs from {}", cut.phi, gc.phi));
                }
                Err(Error::TooLarge { .. }) => {
                    v.insert("witness_attains_phi".into(), Value::Null);
                }
                Err(e) => return Err(e),
            }
            o.set("verify", Value::Object(v));
        }
        Ok(())
    }

    fn lower_bound(&self, o: &mut Outcome) -> Result<()> {
        let built = self.built()?;
        let proc = built.process();
        let horizon = self.horizon_for(proc);
        let rep = mixing_lower_bound_check(proc, &built.pbar, &built.graph, horizon)?;
        write_trajectory_csv(&self.out.join("trajectory.csv"), &rep.mixing.trajectory)?;
        o.check(
            rep.holds == Some(true),
            match rep.holds {
                Some(false) => format!("τ(1/4) = {:?} below 1/(4Φ) - 1 = {}", rep.mixing.tau, rep.bound - 1.0),
                _ => format!(
                    "preconditions not met: invariant = {}, locality = {:?}",
                    rep.invariant, rep.locality
                ),
            },
        );
        o.set("params", built.params.clone());
        o.set("nodes", json!(proc.node_count()));
        o.set("pbar", json!(built.pbar.as_slice()));
        o.set("horizon", json!(horizon));
        o.set("phi", json!(rep.phi));
        o.set("bound", json!(rep.bound));
        o.set("tau", json!(rep.mixing.tau));
        o.set("worst_start", json!(rep.mixing.worst_start + 1));
        o.set("invariant", json!(rep.invariant));
        o.set("locality", json!(rep.locality));
        o.set("holds", json!(rep.holds));
        o.set("matrices", json!(built.write_matrices(&self.out)?));
        if self.verify {
            let v = self.verify_built(&built, horizon, o)?;
            o.set("verify", v);
        }
        Ok(())
    }

    fn lattice(&self, o: &mut Outcome) -> Result<()> {
        let tp = torus_params(self.cfg, None)?;
        let horizon = match (self.horizon, self.cfg.lattice.as_ref().and_then(|l| l.horizon.clone()), self.cfg.horizon) {
            (Some(h), _, _) => h,
            (None, Some(LemmaHorizon::Steps(h)), _) => h,
            (None, Some(LemmaHorizon::Named(s)), _) if s == "stated" => contraction_stated_horizon(tp.m, tp.d),
            (None, Some(LemmaHorizon::Named(_)), _) => contraction_horizon(tp.m, tp.d),
            (None, None, Some(h)) => h,
            (None, None, None) => contraction_horizon(tp.m, tp.d),
        };
        let rep = lattice_lemma_checks(&tp, horizon)?;
        o.check(
            rep.axis_holds,
            format!("axis bound: min {} < {}", rep.axis_min, rep.axis_threshold),
        );
        o.check(
            rep.contraction_holds,
            format!("contraction: min ratio {} < {}", rep.min_ratio, rep.weight),
        );
        o.set("params", json!({"m": tp.m, "d": tp.d, "alpha": tp.alpha(), "lazy": tp.lazy}));
        o.set("report", serde_json::to_value(&rep)?);
        o.set("stated_horizon", json!(contraction_stated_horizon(tp.m, tp.d)));
        o.set("proof_horizon", json!(contraction_horizon(tp.m, tp.d)));
        let chain = torus_lmc(&tp)?;
        let written = if chain.space().dim() <= crate::model::DENSE_LIMIT {
            liftwalk::io::write_chain(&self.out, "transition", &chain)?;
            vec!["transition.csv", "transition.json"]
        } else {
            Vec::new()
        };
        o.set("matrices", json!(written));
        if self.verify {
            let mut v = Map::new();
            let ds = doubly_stochastic(&chain);
            v.insert("doubly_stochastic".into(), json!(ds));
            o.check(ds, "verify: torus chain is not doubly stochastic");
            let local = chain.transition().locality_violation(chain.graph(), chain.space()).is_none();
            v.insert("transition_local".into(), json!(local));
            o.check(local, "verify: torus chain leaves the graph");
            o.set("verify", Value::Object(v));
        }
        Ok(())
    }

    fn multiscale(&self, o: &mut Outcome) -> Result<()> {
        let ms = self.cfg.multiscale.clone().unwrap_or_default();
        let (n, t) = (ms.n.expect("validated"), ms.t.expect("validated"));
        let series = multiscale_series(n, t)?;
        let mut csv = String::from("t,qw_tv,lmc_tv\n");
        for p in &series {
            writeln!(csv, "{},{},{}", p.t, fmt12(p.qw_tv), fmt12(p.lmc_tv)).expect("string write");
        }
        fs::write(self.out.join("multiscale.csv"), csv)?;
        let last = series.last().expect("t + 1 points");
        o.set("n", json!(n));
        o.set("t", json!(t));
        o.set("window", json!("symmetric arc of 2t+1 nodes around the start node"));
        o.set("qw", json!({"alpha": 0.5, "q": 1.0 / n as f64}));
        o.set("lmc", json!({"alpha": 1.0 / n as f64}));
        o.set("qw_tv", json!(last.qw_tv));
        o.set("lmc_tv", json!(last.lmc_tv));
        o.set("series", json!("multiscale.csv"));
        if self.verify {
            let rep = validate_channel(cycle_qw_process(&CycleParams::new(n))?.channel());
            o.check(rep.is_ok(), "verify: cycle walk channel is invalid");
            o.set("verify", json!({"channel_complete": rep.is_complete(), "channel_local": rep.is_local()}));
        }
        Ok(())
    }

    /// Invariant suites on a built process: channel or transition
    /// validity, invariance of `p̄` and (small graphs) trajectory locality.
    fn verify_built(&self, built: &Built, horizon: usize, o: &mut Outcome) -> Result<Value> {
        let mut v = Map::new();
        let record = |v: &mut Map<String, Value>, o: &mut Outcome, name: &str, ok: bool| {
            v.insert(name.into(), json!(ok));
            o.check(ok, format!("verify: {name} failed"));
        };
        match &built.model {
            Model::Walk(p) => {
                let rep = validate_channel(p.channel());
                record(&mut v, o, "channel_complete", rep.is_complete());
                record(&mut v, o, "channel_local", rep.is_local());
            }
            Model::Lifted(c) => {
                let local = c.transition().locality_violation(c.graph(), c.space()).is_none();
                record(&mut v, o, "transition_local", local);
                if built.torus.is_some() {
                    record(&mut v, o, "doubly_stochastic", doubly_stochastic(c));
                }
            }
            Model::Chain(p) => record(&mut v, o, "transition_local", p.respects(&built.graph)),
        }
        let proc = built.process();
        record(&mut v, o, "pbar_invariant", check_invariance(proc, &built.pbar, horizon.min(200))?);
        if proc.node_count() <= LOCALITY_SCAN_LIMIT {
            let local = check_process_locality(proc, &built.graph, horizon.min(20))?.is_none();
            record(&mut v, o, "trajectory_local", local);
        }
        Ok(Value::Object(v))
    }
}

fn mixing_entries(traj: &TvTrajectory, eps: &[f64]) -> Result<Value> {
    eps.iter()
        .map(|&e| {
            let m = mixing_time_from(traj.clone(), e)?;
            Ok(json!({
                "eps": e,
                "tau": m.tau,
                "worst_start": m.worst_start + 1,
            }))
        })
        .collect::<Result<Vec<_>>>()
        .map(Value::Array)
}

fn doubly_stochastic(chain: &liftwalk::LiftedChain) -> bool {
    let p = chain.transition();
    let mut rows = vec![0.0; p.dim()];
    for (to, _, x) in p.triplets() {
        rows[to] += x;
    }
    rows.iter().all(|r| (r - 1.0).abs() <= 1e-12)
}
