//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any gating criterion fails. Set `OPENCONTROL_NIGHTLY=1` to also
//! run the long, non-gating targets.

use std::panic::{self, AssertUnwindSafe};
use std::time::Instant;

use opencontrol::lindblad::{
    dissipator_matrix, expm, theta_channel_closed_form, theta_generator_closed_form, trotter_decoupled_propagator,
    ThetaChannelParams,
};
use opencontrol::models::{ghz_state, ion_trap_model, ising_chain, NoiseKind};
use opencontrol::optim::{
    error, gradient_with, optimize_restarts, propagate, random_sequence, ControlSequence, FdScheme, InitStyle,
    OptimizeOptions, TransferProblem,
};
use opencontrol::protocols::{
    erase_bound_bitflip_at, erase_protocol_bitflip, init_protocol, simulate_report, SwapTiming,
};
use opencontrol::qops::{
    c, embed_local, frobenius_error, pauli, random_density, CMatrix, DensityOperator, HermitianOperator,
};
use opencontrol::reach::{
    beta_of_theta, fixed_point_theta, hlp_execute, hlp_plan_states, is_majorised_by_tol, lie_closure_dimension,
    HlpExecuteOptions,
};
use opencontrol::schedule::run_schedule;

type Check = fn() -> Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn c1_theta_closed_form() -> Result<String, String> {
    let mut worst = 0.0f64;
    for theta in [0.0, 0.25, 0.5] {
        for gt in [0.1, 1.0, 10.0] {
            let g = 1.0;
            let numeric = expm(&(theta_generator_closed_form(theta) * c(-g * gt))).map_err(|e| e.to_string())?;
            let p = ThetaChannelParams::new(theta, g, gt).map_err(|e| e.to_string())?;
            let closed = theta_channel_closed_form(&p);
            worst = worst.max((numeric - closed).iter().map(|z| z.norm()).fold(0.0, f64::max));
        }
    }
    ensure(worst <= 1e-10, format!("max entry deviation {worst:.2e}"))?;
    Ok(format!("max entry deviation {worst:.2e}"))
}

fn c2_hlp_reproduction() -> Result<String, String> {
    let y: Vec<f64> = (1..=8).map(|k| k as f64 / 36.0).collect();
    let rho0 = DensityOperator::from_diagonal(&y).unwrap();
    let target = DensityOperator::maximally_mixed(3);
    let plan = hlp_plan_states(&rho0, &target, 5.0, 1e-4).map_err(|e| e.to_string())?;
    let t = plan.total_dissipative_time;
    ensure((t - 12.0).abs() <= 0.6, format!("dissipative time {t:.4}/J"))?;
    ensure(plan.residual <= 1.5e-4, format!("plan residual {:.3e}", plan.residual))?;
    let system = ising_chain(3, 1.0, NoiseKind::Bitflip, 3, 5.0, None).unwrap();
    let sched = hlp_execute(&plan, &system, &HlpExecuteOptions { trotter_cycles: 64 }).map_err(|e| e.to_string())?;
    let tr = run_schedule(&system, &rho0, &sched).map_err(|e| e.to_string())?;
    let fin = tr.final_state();
    // HLP acts on spectra and the closing rotation is an ideal unitary, so the
    // execution is compared with the plan on sorted spectra.
    let mut pred = plan.predicted.clone();
    pred.sort_by(|a, b| b.total_cmp(a));
    let mut got = opencontrol::qops::hermitian_spectrum(fin).map_err(|e| e.to_string())?;
    got.sort_by(|a, b| b.total_cmp(a));
    let exec_dev = got.iter().zip(&pred).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let final_err = (fin - target.matrix()).norm();
    ensure(exec_dev <= 2e-4, format!("executed vs plan spectrum {exec_dev:.3e}"))?;
    Ok(format!(
        "T = {t:.4}/J, plan residual {:.3e}, executed-vs-plan spectrum {exec_dev:.3e}, end-to-end {final_err:.3e}",
        plan.residual
    ))
}

fn c3_erasure_floor() -> Result<String, String> {
    let system = ising_chain(3, 1.0, NoiseKind::Bitflip, 3, 5.0, None).unwrap();
    let p = TransferProblem::new(system, DensityOperator::zero_state(3), DensityOperator::maximally_mixed(3), 10.0, 200).unwrap();
    let mut seq = ControlSequence::zeros(200, 0.05, 6, 1);
    seq.gamma.iter_mut().for_each(|g| g[0] = 5.0);
    let tr = propagate(&p, &seq).map_err(|e| e.to_string())?;
    let target = p.target.vectorize();
    let min = tr.states.iter().map(|s| frobenius_error(s, &target).unwrap()).fold(f64::INFINITY, f64::min);
    ensure((min - 0.612).abs() <= 0.002, format!("floor {min:.5}"))?;
    Ok(format!("min_t δ_F = {min:.5} (√(3/8) = {:.5})", 0.375f64.sqrt()))
}

fn c4_protocol_formulas() -> Result<String, String> {
    let mut worst = 0.0f64;
    for n in 1..=3 {
        for t in [0.4, 1.1, 2.7] {
            let r = init_protocol(n, 5.0, 1.0, t, SwapTiming::Charged).map_err(|e| e.to_string())?;
            worst = worst.max((simulate_report(&r).map_err(|e| e.to_string())? - r.predicted_error).abs());
            let r = erase_protocol_bitflip(n, 5.0, 1.0, t, SwapTiming::Charged).map_err(|e| e.to_string())?;
            worst = worst.max((simulate_report(&r).map_err(|e| e.to_string())? - r.predicted_error).abs());
        }
    }
    ensure(worst <= 1e-10, format!("max deviation {worst:.2e}"))?;
    Ok(format!("max |simulated − formula| = {worst:.2e}"))
}

fn c5_gradient() -> Result<String, String> {
    let mut worst = 0.0f64;
    for seed in 0..5u64 {
        let system = ising_chain(2, 1.0, NoiseKind::Amp, 2, 5.0, None).unwrap();
        let p = TransferProblem::new(system, random_density(2, 1000 + seed), random_density(2, 2000 + seed), 2.0, 8).unwrap();
        let mut seq = random_sequence(&p, seed, InitStyle::UniformRandom);
        seq.gamma.iter_mut().for_each(|g| g[0] = g[0].clamp(0.5, 4.5));
        let grad = gradient_with(&p, &seq, FdScheme::Central, None).map_err(|e| e.to_string())?;
        for k in 0..8 {
            for j in 0..5 {
                let eval = |d: f64| {
                    let mut s = seq.clone();
                    if j < 4 {
                        s.u[k][j] += d;
                    } else {
                        s.gamma[k][0] += d;
                    }
                    error(&p, &s).unwrap().powi(2)
                };
                let a = if j < 4 { seq.u[k][j] } else { seq.gamma[k][0] };
                let h = 1e-5 * (1.0 + a.abs());
                let want = (eval(h) - eval(-h)) / (2.0 * h);
                if want.abs() > 1e-8 {
                    worst = worst.max((grad[k][j] - want).abs() / want.abs());
                }
            }
        }
    }
    ensure(worst <= 1e-5, format!("worst relative error {worst:.2e}"))?;
    Ok(format!("worst relative error {worst:.2e} over 5 instances"))
}

fn c6_majorisation_suite() -> Result<String, String> {
    for case in 0..100u64 {
        let n = 2 + (case % 2) as usize;
        let system = ising_chain(n, 1.0, NoiseKind::Bitflip, n, 5.0, None).unwrap();
        let rho0 = random_density(n, 5000 + case);
        let p = TransferProblem::new(system, rho0.clone(), rho0, 1.5, 10).unwrap();
        let seq = random_sequence(&p, case, InitStyle::UniformRandom);
        let tr = propagate(&p, &seq).map_err(|e| e.to_string())?;
        let y = &tr.sorted_eigenvalues[0];
        let mut last = f64::INFINITY;
        for spec in &tr.sorted_eigenvalues {
            ensure(is_majorised_by_tol(spec, y, 1e-9).unwrap(), format!("case {case}: spectrum not majorised"))?;
            let purity: f64 = spec.iter().map(|v| v * v).sum();
            ensure(purity <= last + 1e-9, format!("case {case}: purity increased"))?;
            last = purity;
        }
    }
    Ok("100 random trajectories majorised with non-increasing purity".into())
}

fn transfer_best_of_9(seed: u64, attempt: u64) -> Result<f64, String> {
    let system = ising_chain(2, 1.0, NoiseKind::Amp, 2, 5.0, None).unwrap();
    let p = TransferProblem::new(system, random_density(2, 7000 + seed), random_density(2, 8000 + seed), 6.0, 30).unwrap();
    let opts = OptimizeOptions { max_iters: 400, tol: 1e-4, seed: 100 * seed + 1000 * attempt, ..OptimizeOptions::default() };
    let rep = optimize_restarts(&p, 9, InitStyle::NoiseBlocks(3), &opts).map_err(|e| e.to_string())?;
    Ok(rep.best.final_error)
}

fn c7_transitivity() -> Result<String, String> {
    let errs: Vec<f64> = (0..5).map(|s| transfer_best_of_9(s, 0)).collect::<Result<_, _>>()?;
    let hits = errs.iter().filter(|&&e| e <= 1e-3).count();
    let shown: Vec<String> = errs.iter().map(|e| format!("{e:.1e}")).collect();
    ensure(hits >= 4, format!("{hits}/5 pairs reached 1e-3: [{}]", shown.join(", ")))?;
    Ok(format!("{hits}/5 pairs reached δ_F ≤ 1e-3: [{}]", shown.join(", ")))
}

fn erase_by_optimizer(attempt: u64) -> Result<(f64, f64), String> {
    let system = ising_chain(3, 1.0, NoiseKind::Bitflip, 3, 5.0, None).unwrap();
    let p = TransferProblem::new(system, DensityOperator::zero_state(3), DensityOperator::maximally_mixed(3), 3.0, 12).unwrap();
    let opts = OptimizeOptions { max_iters: 10, tol: 1e-6, seed: 31 + 100 * attempt, ..OptimizeOptions::default() };
    let rep = optimize_restarts(&p, 9, InitStyle::NoiseBlocks(3), &opts).map_err(|e| e.to_string())?;
    let bound = erase_bound_bitflip_at(3, 5.0, 1.0, 3.0).map_err(|e| e.to_string())?;
    Ok((rep.best.final_error, bound))
}

fn c8_optimizer_beats_protocol() -> Result<String, String> {
    let mut last = String::new();
    for attempt in 0..2 {
        let (best, bound) = erase_by_optimizer(attempt)?;
        last = format!("best δ_F {best:.4} vs analytic bound {bound:.4} (attempt {})", attempt + 1);
        if best < bound {
            return Ok(last);
        }
    }
    Err(last)
}

fn c9_fixed_points() -> Result<String, String> {
    let mut worst = 0.0f64;
    for i in 1..=9 {
        let theta = 0.05 * i as f64;
        let fp = fixed_point_theta(theta).map_err(|e| e.to_string())?;
        let v = opencontrol::qops::vec(fp.state.matrix()).into_vector();
        worst = worst.max((theta_generator_closed_form(theta) * v).norm());
    }
    ensure(worst <= 1e-12, format!("generator residual {worst:.2e}"))?;
    ensure(beta_of_theta(0.0, 1.0).unwrap() == f64::INFINITY, "β(0) is not infinite")?;
    ensure(beta_of_theta(0.5, 1.0).unwrap() == 0.0, "β(½) ≠ 0")?;
    let delta = 1.7;
    let half = beta_of_theta(0.25, delta).unwrap() * delta / 2.0;
    ensure((half - 0.8f64.atanh()).abs() <= 1e-12, format!("β(¼)Δ/2 = {half}"))?;
    Ok(format!("max ‖Γ(θ)ρ_∞‖ = {worst:.1e}; β(¼)Δ/2 = {half:.12}"))
}

fn c10_lie_closure() -> Result<String, String> {
    let h = |m: CMatrix| HermitianOperator::new(m).unwrap();
    let a = lie_closure_dimension(&[h(pauli::x())]);
    let b = lie_closure_dimension(&[h(pauli::x()), h(pauli::y())]);
    let two = ising_chain(2, 1.0, NoiseKind::Amp, 2, 5.0, None).unwrap();
    let c2 = lie_closure_dimension(&two.hamiltonians());
    let three = ising_chain(3, 1.0, NoiseKind::Amp, 3, 5.0, None).unwrap();
    let c3 = lie_closure_dimension(&three.hamiltonians());
    let got = [a, b, c2, c3];
    ensure(got == [1, 3, 15, 63], format!("dimensions {got:?}"))?;
    Ok(format!("dimensions {got:?}"))
}

fn c11_trotter() -> Result<String, String> {
    let h02 = HermitianOperator::new(pauli::z() * c(0.5 * std::f64::consts::PI)).unwrap();
    let gen = dissipator_matrix(&embed_local(&pauli::x().scale(0.5), 2, 2).unwrap()) * c(5.0);
    let exact = expm(&(gen * c(-1.0))).unwrap();
    let err = |k| (trotter_decoupled_propagator(&h02, 5.0, 1.0, k).unwrap().matrix() - &exact).norm();
    let mut ratios = Vec::new();
    for k in [4, 8, 16, 32] {
        ratios.push(err(2 * k) / err(k));
    }
    let shown: Vec<String> = ratios.iter().map(|r| format!("{r:.3}")).collect();
    ensure(ratios.iter().all(|r| (0.3..=0.7).contains(r)), format!("ratios [{}]", shown.join(", ")))?;
    Ok(format!("error ratios [{}]", shown.join(", ")))
}

fn n1_ghz_relaxed() -> Result<String, String> {
    let system = ion_trap_model(5.0).unwrap();
    let p = TransferProblem::new(system, DensityOperator::maximally_mixed(4), ghz_state(4).unwrap(), 6.0, 30).unwrap();
    let opts = OptimizeOptions { max_iters: 300, tol: 1e-3, ..OptimizeOptions::default() };
    let rep = optimize_restarts(&p, 3, InitStyle::NoiseBlocks(3), &opts).map_err(|e| e.to_string())?;
    ensure(rep.best.final_error <= 5e-2, format!("GHZ δ_F {:.3e}", rep.best.final_error))?;
    Ok(format!("GHZ δ_F {:.3e}", rep.best.final_error))
}

fn n2_three_qubit_transfer() -> Result<String, String> {
    let system = ising_chain(3, 1.0, NoiseKind::Amp, 3, 5.0, None).unwrap();
    let p = TransferProblem::new(system, random_density(3, 1), random_density(3, 2), 10.0, 40).unwrap();
    let opts = OptimizeOptions { max_iters: 500, tol: 1e-4, ..OptimizeOptions::default() };
    let rep = optimize_restarts(&p, 9, InitStyle::NoiseBlocks(3), &opts).map_err(|e| e.to_string())?;
    ensure(rep.best.final_error <= 1e-3, format!("3-qubit δ_F {:.3e}", rep.best.final_error))?;
    Ok(format!("3-qubit δ_F {:.3e}", rep.best.final_error))
}

fn run(id: &str, name: &str, check: Check) -> bool {
    let start = Instant::now();
    let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
        let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
        Err(format!("panicked: {}", msg.unwrap_or_default()))
    });
    let secs = start.elapsed().as_secs_f64();
    match &outcome {
        Ok(detail) => println!("PASS [{id}] {name}: {detail} ({secs:.1} s)"),
        Err(detail) => println!("FAIL [{id}] {name}: {detail} ({secs:.1} s)"),
    }
    outcome.is_ok()
}

fn main() {
    // `cargo test` passes harness flags such as `--list`; only run on a plain invocation.
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--list") {
        return;
    }
    panic::set_hook(Box::new(|_| {}));
    let gating: [(&str, &str, Check); 11] = [
        ("1", "closed-form θ channel", c1_theta_closed_form),
        ("2", "HLP 12/J reproduction", c2_hlp_reproduction),
        ("3", "bit-flip erasure floor", c3_erasure_floor),
        ("4", "protocol formula exactness", c4_protocol_formulas),
        ("5", "gradient vs central-difference oracle", c5_gradient),
        ("6", "majorisation and purity invariants", c6_majorisation_suite),
        ("7", "2-qubit transitivity", c7_transitivity),
        ("8", "optimizer beats erasure protocol", c8_optimizer_beats_protocol),
        ("9", "θ fixed points and temperature map", c9_fixed_points),
        ("10", "Lie closure dimensions", c10_lie_closure),
        ("11", "Trotter convergence", c11_trotter),
    ];
    let filter: Vec<&String> = args.iter().filter(|a| !a.starts_with('-')).collect();
    let selected = |id: &str| filter.is_empty() || filter.iter().any(|f| f.as_str() == id);
    let mut failed = 0;
    for (id, name, check) in gating {
        if selected(id) && !run(id, name, check) {
            failed += 1;
        }
    }
    if std::env::var("OPENCONTROL_NIGHTLY").is_ok_and(|v| v == "1") {
        run("12a", "nightly: ion-trap GHZ δ_F ≤ 5e-2", n1_ghz_relaxed);
        run("12b", "nightly: 3-qubit random transfer", n2_three_qubit_transfer);
    } else {
        println!("SKIP [12] nightly targets (set OPENCONTROL_NIGHTLY=1)");
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
