//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::time::Instant;

use liftwalk::bridge::{basis_bridges, bridge, build_flow_network, max_flow, BridgeSequence};
use liftwalk::conductance::{
    ergodic_flow, escape_bound_check, graph_conductance, mixing_lower_bound_check_with,
};
use liftwalk::fixtures::{
    random_connected_graph, random_lifted_chain, random_local_channel, random_positive_dist,
    random_reversible_chain, violating_pair,
};
use liftwalk::lattice::{
    classical_walk, contraction_horizon, cycle_lmc, cycle_qw_process, lattice_lemma_checks,
    multiscale_experiment, torus_lmc, translation_invariant_mixing_time, CycleParams, TorusParams,
};
use liftwalk::lift::{amplified_lift, clock_lift, verify_simulation};
use liftwalk::lmc::{induced_chain, stationary};
use liftwalk::mixing::{amplification_bound, default_horizon, fit_exponent, mixing_time};
use liftwalk::process::{induced_process, ProcessKind};
use liftwalk::quantum::{measured_unitary_channel, CMatrix};
use liftwalk::{CoinAssignment, Dist, Graph, LiftedChain, LiftedSpace, NodeSet, StochProcess};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(bool, String), Box<dyn std::error::Error>>;

fn hadamard_memory() -> Outcome {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let h = CMatrix::from_row_slice(2, 2, &[s, s, s, -s].map(|x| Complex64::new(x, 0.0)));
    let space = LiftedSpace::new(1, 2)?;
    let ch = measured_unitary_channel(&h, 0.0, space, Graph::complete(2))?;
    let proc = induced_process(&ch, &CoinAssignment::constant(0, space)?)?;
    let tr = proc.trajectory(&Dist::delta(2, 0)?, 2)?;
    let e1 = (tr[1][0] - 0.5).abs().max((tr[1][1] - 0.5).abs());
    let e2 = (tr[2][0] - 1.0).abs().max(tr[2][1].abs());
    Ok((
        e1 <= 1e-12 && e2 <= 1e-12,
        format!("|p1 - (1/2,1/2)| = {e1:.1e}, |p2 - d1| = {e2:.1e}"),
    ))
}

fn tau_quarter<P: StochProcess + ?Sized>(proc: &P, horizon: usize) -> Result<f64, String> {
    let r = translation_invariant_mixing_time(proc, 0.25, horizon).map_err(|e| e.to_string())?;
    r.tau
        .map(|t| t as f64)
        .ok_or_else(|| format!("tau(1/4) unresolved within horizon {horizon}"))
}

fn cycle_scaling() -> Outcome {
    let ns = [15usize, 31, 63];
    let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let mut qw = Vec::new();
    let mut lmc = Vec::new();
    let mut cl = Vec::new();
    for &n in &ns {
        qw.push(tau_quarter(
            &cycle_qw_process(&CycleParams::new(n))?,
            default_horizon(ProcessKind::QuantumWalk, n),
        )?);
        lmc.push(tau_quarter(
            &cycle_lmc(n, 1.0 / n as f64)?,
            default_horizon(ProcessKind::LiftedChain, n),
        )?);
        cl.push(tau_quarter(&classical_walk(n)?, n * n)?);
    }
    let (a, b, c) = (fit_exponent(&xs, &qw)?, fit_exponent(&xs, &lmc)?, fit_exponent(&xs, &cl)?);
    let ok = (0.8..=1.3).contains(&a) && (0.8..=1.3).contains(&b) && (1.7..=2.3).contains(&c);
    Ok((
        ok,
        format!(
            "exponents qw {a:.3} {qw:?}, lmc {b:.3} {lmc:?}, classical {c:.3} {cl:?}"
        ),
    ))
}

fn q_one_reduction() -> Outcome {
    let mut worst: f64 = 0.0;
    for n in [5usize, 8] {
        for alpha in [0.3, 1.0 / n as f64] {
            let mut p = CycleParams::new(n);
            p.alpha = alpha;
            p.q = 1.0;
            let qw = cycle_qw_process(&p)?;
            let lmc = cycle_lmc(n, alpha)?;
            for v in 0..n {
                let start = Dist::delta(n, v)?;
                let a = qw.trajectory(&start, 100)?;
                let b = lmc.trajectory(&start, 100)?;
                for (x, y) in a.iter().zip(&b) {
                    for i in 0..n {
                        worst = worst.max((x[i] - y[i]).abs());
                    }
                }
            }
        }
    }
    Ok((worst <= 1e-12, format!("max elementwise gap {worst:.2e}")))
}

fn seq_stats(seqs: &[BridgeSequence]) -> (f64, f64) {
    let flow = seqs
        .iter()
        .flat_map(|s| s.flow_values.iter())
        .map(|v| (v - 1.0).abs())
        .fold(0.0, f64::max);
    let step = seqs.iter().map(|s| s.step_residual()).fold(0.0, f64::max);
    (flow, step)
}

fn bridge_soundness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let p = CycleParams {
        q: 1.0 / 8.0,
        ..CycleParams::new(8)
    };
    let qw = cycle_qw_process(&p)?;
    let (mut flow_gap, mut step_res) = seq_stats(&basis_bridges(&qw, &Graph::cycle(8), 16)?);
    for _ in 0..20 {
        let n = rng.gen_range(3..=8);
        let g = random_connected_graph(&mut rng, n, 0.25);
        let coins = rng.gen_range(1..=2);
        let ch = random_local_channel(&mut rng, &g, coins)?;
        let init = CoinAssignment::new((0..n).map(|_| rng.gen_range(0..coins)).collect(), ch.space())?;
        let proc = induced_process(&ch, &init)?;
        let (f, s) = seq_stats(&basis_bridges(&proc, &g, 8)?);
        flow_gap = flow_gap.max(f);
        step_res = step_res.max(s);
    }
    let mut max_violating_flow: f64 = 0.0;
    let mut rejected = 0;
    for _ in 0..20 {
        let n = rng.gen_range(3..=8);
        let g = loop {
            let g = random_connected_graph(&mut rng, n, 0.1);
            if g.edge_count() < n * n {
                break g;
            }
        };
        let (y, z) = violating_pair(&mut rng, &g)?;
        let v = max_flow(&build_flow_network(&y, &z, &g)?).value;
        max_violating_flow = max_violating_flow.max(v);
        rejected += usize::from(bridge(&y, &z, &g).is_err());
    }
    let ok = flow_gap <= 1e-9 && step_res <= 1e-8 && max_violating_flow < 1.0 && rejected == 20;
    Ok((
        ok,
        format!(
            "|flow - 1| <= {flow_gap:.1e}, step residual <= {step_res:.1e}, violating max-flow <= {max_violating_flow:.4}"
        ),
    ))
}

fn clock_lift_criterion() -> Outcome {
    let n = 8;
    let g = Graph::cycle(n);
    let p = CycleParams {
        lazy: true,
        ..CycleParams::new(n)
    };
    let qw = cycle_qw_process(&p)?;
    let tau_bar = mixing_time(&qw, &Dist::uniform(n), 0.25, default_horizon(ProcessKind::QuantumWalk, n))?
        .tau
        .ok_or("source walk does not mix within the horizon")?;
    let lift = clock_lift(&basis_bridges(&qw, &g, tau_bar)?, &g)?;
    let plain = verify_simulation(&lift, &qw, tau_bar)?;
    let amp = amplified_lift(&lift)?;
    let mut detail = format!(
        "T = {tau_bar}, plain residual {:.1e}, local {}",
        plain.max_residual, plain.local
    );
    let mut ok = plain.max_residual <= 1e-8 && plain.local;
    for eps in [1e-2, 1e-3] {
        let bound = amplification_bound(tau_bar, 0.25, eps)?;
        let r = mixing_time(amp.chain(), &Dist::uniform(n), eps, 2 * bound)?;
        ok &= r.tau.is_some_and(|t| t <= bound);
        detail += &format!("; eps {eps}: tau {:?} <= bound {bound}", r.tau);
    }
    Ok((ok, detail))
}

fn conductance_bound() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let c4 = graph_conductance(&Graph::cycle(4), &Dist::uniform(4))?.phi;
    let mut ok = (c4 - 0.5).abs() <= 1e-7;
    let mut checked = 0;
    let mut failures = Vec::new();
    let mut run = |name: String, proc: &dyn StochProcess, g: &Graph, pbar: &Dist, phi: f64, horizon: usize| -> Result<(), Box<dyn std::error::Error>> {
        let rep = mixing_lower_bound_check_with(proc, pbar, g, phi, horizon)?;
        checked += 1;
        if rep.holds != Some(true) {
            failures.push(format!("{name}: {:?} tau {:?} bound {:.3}", rep.holds, rep.mixing.tau, rep.bound));
        }
        Ok(())
    };
    for n in [5usize, 8] {
        let g = Graph::cycle(n);
        let u = Dist::uniform(n);
        let phi = graph_conductance(&g, &u)?.phi;
        let h = default_horizon(ProcessKind::QuantumWalk, n);
        run(format!("cycle qw {n}"), &cycle_qw_process(&CycleParams::new(n))?, &g, &u, phi, h)?;
        run(format!("cycle lmc {n}"), &cycle_lmc(n, 1.0 / n as f64)?, &g, &u, phi, h)?;
        run(format!("classical {n}"), &classical_walk(n)?, &g, &u, phi, h)?;
    }
    let torus = torus_lmc(&TorusParams::new(5, 2))?;
    let u25 = Dist::uniform(25);
    let phi_torus = graph_conductance(torus.graph(), &u25)?.phi;
    run("torus 5x5".into(), &torus, &torus.graph().clone(), &u25, phi_torus, 500)?;
    for i in 0..20 {
        let n = rng.gen_range(3..=8);
        let g = random_connected_graph(&mut rng, n, 0.3);
        if i % 2 == 0 {
            let pbar = random_positive_dist(&mut rng, n);
            let phi = graph_conductance(&g, &pbar)?.phi;
            let p = random_reversible_chain(&mut rng, &g, &pbar);
            let chain = LiftedChain::trivial(g.clone(), p)?;
            run(format!("random chain {i}"), &chain, &g, &pbar, phi, 400)?;
        } else {
            let u = Dist::uniform(n);
            let phi = graph_conductance(&g, &u)?.phi;
            let ch = random_local_channel(&mut rng, &g, 1)?;
            let proc = induced_process(&ch, &CoinAssignment::constant(0, ch.space())?)?;
            run(format!("random qw {i}"), &proc, &g, &u, phi, 400)?;
        }
    }
    ok &= failures.is_empty();
    Ok((
        ok,
        format!(
            "Phi(C4) = {c4:.9}, Phi(torus 5x5) = {phi_torus:.6}, {checked} processes checked, failures {failures:?}"
        ),
    ))
}

fn induced_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst_gap: f64 = 0.0;
    let mut escape_ok = true;
    for _ in 0..20 {
        let n = rng.gen_range(2..=8);
        let coins = rng.gen_range(1..=4);
        let g = random_connected_graph(&mut rng, n, 0.3);
        let chain = random_lifted_chain(&mut rng, &g, coins)?;
        let joint = stationary(chain.transition())?;
        let (pv, pbar) = induced_chain(&chain)?;
        let space = chain.space();
        for mask in 1u64..(1 << n) - 1 {
            let x = NodeSet::from_mask(n, mask);
            let lifted = NodeSet::from_nodes(
                space.dim(),
                (0..space.dim()).filter(|&i| x.contains(space.node_of(i))),
            )?;
            let a = ergodic_flow(&pv, &pbar, &x)? / x.mass(&pbar);
            let b = ergodic_flow(chain.transition(), &joint, &lifted)? / lifted.mass(&joint);
            worst_gap = worst_gap.max((a - b).abs());
            let m = x.mass(&pbar);
            if m > 0.0 && m <= 0.5 + 1e-12 {
                escape_ok &= escape_bound_check(&pv, &pbar, &x, 20)?.holds;
            }
        }
    }
    Ok((
        worst_gap <= 1e-12 && escape_ok,
        format!("max |Phi_X(P_V) - Phi_CxX(P)| = {worst_gap:.2e}, escape bound holds {escape_ok}"),
    ))
}

fn lattice_lemmas() -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    for m in [3usize, 5] {
        for d in [1u32, 2] {
            let t = contraction_horizon(m, d);
            let r = lattice_lemma_checks(&TorusParams::new(m, d), t)?;
            ok &= r.axis_holds && r.contraction_holds;
            detail.push(format!(
                "M={m} d={d}: axis min {:.4} >= {:.4}, T={t} min ratio {:.4} >= {:.4}",
                r.axis_min, r.axis_threshold, r.min_ratio, r.weight
            ));
        }
    }
    let ms = [5usize, 9, 17];
    let xs: Vec<f64> = ms.iter().map(|&m| m as f64).collect();
    for d in [1u32, 2] {
        let taus = ms
            .iter()
            .map(|&m| {
                let chain = torus_lmc(&TorusParams::new(m, d))?;
                let h = default_horizon(ProcessKind::LiftedChain, chain.space().nodes());
                Ok(tau_quarter(&chain, h)?)
            })
            .collect::<Result<Vec<f64>, Box<dyn std::error::Error>>>()?;
        let e = fit_exponent(&xs, &taus)?;
        ok &= (0.8..=1.3).contains(&e);
        detail.push(format!("d={d}: tau {taus:?}, exponent {e:.3}"));
    }
    Ok((ok, detail.join("; ")))
}

fn multiscale() -> Outcome {
    let p = multiscale_experiment(64, 16)?;
    Ok((
        p.qw_tv < p.lmc_tv,
        format!("window TV qw {:.6} < lmc {:.6}", p.qw_tv, p.lmc_tv),
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("1 hadamard memory", hadamard_memory),
        ("2 cycle scaling contrast", cycle_scaling),
        ("3 q=1 reduction", q_one_reduction),
        ("4 bridge soundness", bridge_soundness),
        ("5 clock and amplified lift", clock_lift_criterion),
        ("6 conductance lower bound", conductance_bound),
        ("7 induced-chain identities", induced_identities),
        ("8 lattice lemmas and torus scaling", lattice_lemmas),
        ("9 multiscale contrast", multiscale),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let (ok, detail) = match f() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!ok);
        println!(
            "{} criterion {name} ({:.1}s): {detail}",
            if ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    println!("{} of 9 criteria passed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
