//! `liftwalk run <config>`: runs one scenario and writes `results.json`
//! plus its artifacts.
//!
//! Exit status is 1 for configuration or parameter errors, 2 when an
//! assertion of the scenario fails, 0 otherwise.

mod config;
mod model;
mod scenario;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use liftwalk::io::{round12, write_json};
use serde_json::{json, Number, Value};

use crate::config::Config;
use crate::scenario::Run;

#[derive(Parser)]
#[command(name = "liftwalk", version, about = "Quantum walk and lifted Markov chain scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario described by a TOML config file.
    Run {
        config: PathBuf,
        /// Overrides the config's horizon.
        #[arg(long)]
        horizon: Option<usize>,
        /// Output directory (default: the config's `out`, else `out`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed for randomly generated graphs and chains.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also run the invariant suites on the scenario's objects.
        #[arg(long)]
        verify: bool,
    },
}

/// Rounds every float to 12 significant digits so reruns and golden
/// files compare exactly.
fn round_floats(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            Number::from_f64(round12(n.as_f64().expect("f64 number"))).map(Value::Number).unwrap_or(Value::Null)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_floats).collect()),
        Value::Object(m) => Value::Object(m.into_iter().map(|(k, x)| (k, round_floats(x))).collect()),
        other => other,
    }
}

fn run(config: &Path, horizon: Option<usize>, out: Option<PathBuf>, seed: u64, verify: bool) -> ExitCode {
    let cfg = match Config::load(config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let problems = cfg.validate();
    if !problems.is_empty() {
        eprintln!("error: invalid scenario {}:", config.display());
        for p in &problems {
            eprintln!("  - {p}");
        }
        return ExitCode::from(1);
    }
    if horizon == Some(0) {
        eprintln!("error: --horizon must be at least 1");
        return ExitCode::from(1);
    }
    let out = out.or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let runner = Run {
        cfg: &cfg,
        out: out.clone(),
        horizon,
        seed,
        verify,
    };
    log::info!("running {} into {}", cfg.kind.name(), out.display());
    let outcome = match runner.execute() {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            // a process that is not local or not invariant fails the scenario's premise
            return match e {
                liftwalk::Error::Infeasible { .. }
                | liftwalk::Error::NotLocal(_)
                | liftwalk::Error::NotInvariant(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            };
        }
    };
    let mut fields = outcome.fields;
    fields.insert("kind".into(), json!(cfg.kind.name()));
    fields.insert("eps".into(), json!(cfg.eps));
    fields.insert("status".into(), json!(if outcome.failures.is_empty() { "ok" } else { "failed" }));
    fields.insert("failures".into(), json!(outcome.failures));
    if let Err(e) = write_json(&out.join("results.json"), &round_floats(Value::Object(fields))) {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    if outcome.failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        for f in &outcome.failures {
            eprintln!("assertion failed: {f}");
        }
        ExitCode::from(2)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Run {
            config,
            horizon,
            out,
            seed,
            verify,
        } => run(&config, horizon, out, seed, verify),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_rounded_to_twelve_digits() {
        let v = round_floats(json!({"a": 1.0 / 3.0, "b": [0.1 + 0.2, 7], "c": "x"}));
        assert_eq!(v.to_string(), r#"{"a":0.333333333333,"b":[0.3,7],"c":"x"}"#);
    }
}
