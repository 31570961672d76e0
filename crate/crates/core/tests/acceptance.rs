//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use slk_core::experiments::{
    disorder_ensemble, median, run_experiment, EnsembleResult, ExperimentConfig, Plan, PRESETS,
};
use slk_core::{
    dissipation_rate, double_well, gaussian_packet, ground_state, lattice_energy, linear_tilt, propagate_linear,
    run_continuous, run_discrete, sine_packet, toy1_potential, DiscreteSlkParams, DoubleWellParams, Grid1D, Lattice,
    LatticeRunOptions, LinearPropagator, RunOptions, RunResult, SinePacket, SlkParams, TripleGaussianGroundState,
    WaveFunction,
};

const ENERGY_SLACK: f64 = 1e-8;
const ENSEMBLE_SIZE: usize = 20;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn preset_run(name: &str, overrides: &[&str]) -> (slk_core::Resolved, RunResult) {
    let cfg = ExperimentConfig::preset(name)
        .unwrap()
        .with_overrides(overrides)
        .unwrap();
    let resolved = cfg.resolve().unwrap();
    let run = resolved.plan.simulate(true).unwrap();
    (resolved, run)
}

fn arrival(run: &RunResult) -> &[f64] {
    run.series.arrival_prob.as_deref().unwrap()
}

fn overlap(run: &RunResult) -> &[f64] {
    run.series.overlap.as_deref().unwrap()
}

/// Largest drop of a series below its running maximum.
fn max_drop(xs: &[f64]) -> f64 {
    let mut best = f64::NEG_INFINITY;
    let mut drop = 0.0f64;
    for &x in xs {
        best = best.max(x);
        drop = drop.max(best - x);
    }
    drop
}

struct Runs {
    toy1: RunResult,
    toy2: (slk_core::Resolved, RunResult),
    bloch_tilt: RunResult,
    bloch_friction: RunResult,
    anderson_friction: RunResult,
}

fn criterion_1(r: &Runs) -> Outcome {
    let rows = [
        ("toy1", &r.toy1),
        ("toy2", &r.toy2.1),
        ("bloch-friction", &r.bloch_friction),
        ("anderson-friction", &r.anderson_friction),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, run) in rows {
        let inc = run.series.max_energy_increase();
        pass &= inc <= ENERGY_SLACK;
        parts.push(format!("{name} max step increase {inc:.2e}"));
    }
    outcome(pass, format!("{}; slack {ENERGY_SLACK:.0e}", parts.join(", ")))
}

fn criterion_2(r: &Runs) -> Outcome {
    let o = overlap(&r.toy1);
    let fin = *o.last().unwrap();
    let t = &r.toy1.series.times;
    let t_end = *t.last().unwrap();
    let start = t.iter().position(|&s| s >= 0.8 * t_end).unwrap();
    let drop = max_drop(&o[start..]);
    outcome(
        fin > 0.95 && drop <= 1e-4,
        format!("final overlap {fin:.6} (> 0.95), largest drop over last 20% {drop:.2e} (<= 1e-4)"),
    )
}

fn criterion_3() -> Outcome {
    let p = TripleGaussianGroundState::default();
    let e0 = |n: usize| {
        let grid = Grid1D::new(-10.0, 10.0, n).unwrap();
        let v = toy1_potential(&p, 1.0, &grid).unwrap();
        ground_state(&v, 1.0).unwrap().eigenvalues[0]
    };
    let (e1, e2) = (e0(1024), e0(2048));
    let order = (e1 / e2).abs().log2();
    outcome(
        e1.abs() < 1e-4 && e2.abs() < 2.5e-5,
        format!("E0(n=1024) = {e1:.3e} (< 1e-4), E0(n=2048) = {e2:.3e} (< 2.5e-5), observed order {order:.2}"),
    )
}

fn criterion_4(r: &Runs) -> Outcome {
    let (resolved, run) = &r.toy2;
    let snap = run.snapshots.last().unwrap();
    let rho = &snap.density_phase.rho;
    let rho_max = rho.iter().copied().fold(0.0, f64::max);
    let dev = snap
        .w
        .as_ref()
        .unwrap()
        .max_deviation_where(resolved.plan.potential(), rho, 1e-3 * rho_max);
    let fin = *overlap(run).last().unwrap();
    outcome(
        dev < 0.05 && fin > 0.9,
        format!("max |W - V| on rho > 1e-3 max = {dev:.4} (< 0.05), oracle overlap {fin:.6} (> 0.9)"),
    )
}

fn criterion_5(r: &Runs) -> Outcome {
    let a = arrival(&r.bloch_tilt);
    let max = a.iter().copied().fold(0.0, f64::max);
    outcome(
        max < 0.05,
        format!(
            "max arrival over {} steps up to t = 4s: {max:.3e} (< 0.05)",
            a.len() - 1
        ),
    )
}

fn criterion_6(r: &Runs) -> Outcome {
    let tilt = *arrival(&r.bloch_tilt).last().unwrap();
    let fric = *arrival(&r.bloch_friction).last().unwrap();
    outcome(
        fric > 0.3 && fric >= 5.0 * tilt,
        format!("arrival at t = 4s: friction {fric:.6}, tilt only {tilt:.3e} (need > 0.3 and >= 5x)"),
    )
}

fn ensemble(name: &str) -> EnsembleResult {
    disorder_ensemble(&ExperimentConfig::preset(name).unwrap(), ENSEMBLE_SIZE).unwrap()
}

fn criterion_7(free: &EnsembleResult) -> Outcome {
    let maxes = free.max_arrival();
    let med = median(&maxes);
    let localized = maxes.iter().filter(|&&m| m < 0.05).count();
    outcome(
        med < 0.05,
        format!(
            "median over {ENSEMBLE_SIZE} seeds of max arrival for t <= 20s: {med:.4} (< 0.05); {localized}/{ENSEMBLE_SIZE} realizations below 0.05; median final arrival {:.4}",
            median(&free.final_arrival())
        ),
    )
}

fn criterion_8(free: &EnsembleResult, friction: &EnsembleResult) -> Outcome {
    let f = median(&friction.final_arrival());
    let b = median(&free.final_arrival());
    outcome(
        f >= 5.0 * b,
        format!(
            "median arrival at t = 20s: friction {f:.4}, free {b:.4}, ratio {:.2} (>= 5)",
            f / b
        ),
    )
}

/// ℓ² errors at `dt, dt/2, dt/4` against the oracle and the observed order
/// of the last halving.
fn convergence<F: Fn(f64) -> f64>(error: F, dt: f64) -> (Vec<f64>, f64) {
    let errs: Vec<f64> = [dt, dt / 2.0, dt / 4.0].iter().map(|&h| error(h)).collect();
    let order = (errs[1] / errs[2]).log2();
    (errs, order)
}

fn criterion_9() -> Outcome {
    let s = 100;
    let lattice = Lattice::new(s).unwrap();
    let v_lat = linear_tilt(3.0 * 2.0 / s as f64, &lattice);
    let psi_lat = sine_packet(&SinePacket { epsilon: 17, k: 8 }, &lattice).unwrap();
    let horizon = 4.0 * s as f64;
    let exact_lat = LinearPropagator::new(&v_lat, 0.5)
        .unwrap()
        .propagate(&psi_lat, horizon)
        .unwrap();
    let lattice_error = |dt: f64| {
        let p = DiscreteSlkParams {
            beta: 0.0,
            dt,
            t_max: horizon,
            ..DiscreteSlkParams::default()
        };
        let opts = LatticeRunOptions {
            record_every: usize::MAX,
            snapshot_every: None,
            delta: 34,
        };
        run_discrete(&psi_lat, &v_lat, &p, &opts)
            .unwrap()
            .final_state
            .distance(&exact_lat)
            .unwrap()
    };

    let grid = Grid1D::new(-10.0, 10.0, 64).unwrap();
    let v_grid = double_well(&DoubleWellParams::default(), &grid).unwrap();
    let psi_grid = gaussian_packet(&grid, 2.25, 0.5).unwrap();
    let exact_grid = propagate_linear(&psi_grid, &v_grid, 1.0, 10.0).unwrap();
    let grid_error = |dt: f64| {
        let p = SlkParams {
            beta: 0.0,
            dt,
            t_max: 10.0,
            ..SlkParams::default()
        };
        let opts = RunOptions::every(usize::MAX);
        run_continuous(&psi_grid, &v_grid, &p, &opts)
            .unwrap()
            .final_state
            .distance(&exact_grid)
            .unwrap()
    };

    let lat_dist = lattice_error(2.5e-4);
    let grid_dist = grid_error(1e-3);
    let (lat_errs, lat_order) = convergence(lattice_error, 0.02);
    let (grid_errs, grid_order) = convergence(grid_error, 0.01);
    let pass = lat_dist < 1e-5 && grid_dist < 1e-4 && (lat_order - 2.0).abs() <= 0.3 && (grid_order - 2.0).abs() <= 0.3;
    outcome(
        pass,
        format!(
            "lattice s=100 t=400 dt=2.5e-4: {lat_dist:.2e} (< 1e-5); grid n=64 t=10 dt=1e-3: {grid_dist:.2e} (< 1e-4); \
             dt-halving orders (nominal 2): lattice {lat_order:.3} [{:.2e}, {:.2e}, {:.2e}], grid {grid_order:.3} [{:.2e}, {:.2e}, {:.2e}]",
            lat_errs[0], lat_errs[1], lat_errs[2], grid_errs[0], grid_errs[1], grid_errs[2]
        ),
    )
}

fn criterion_10() -> Outcome {
    let cfg = ExperimentConfig::preset("bloch-friction")
        .unwrap()
        .with_overrides(&["lattice.record_every=1", "lattice.snapshot_every=1"])
        .unwrap();
    let resolved = cfg.resolve().unwrap();
    let Plan::Lattice { v, params, .. } = &resolved.plan else {
        unreachable!()
    };
    let run = resolved.plan.simulate(true).unwrap();
    let dt = params.dt;
    let lattice = match v.domain() {
        slk_core::Domain::Lattice(l) => *l,
        slk_core::Domain::Grid(_) => unreachable!(),
    };
    let energy = &run.series.energy;
    let mut rng = ChaCha8Rng::seed_from_u64(2008);
    let mut worst_excess = f64::NEG_INFINITY;
    let mut max_rate = f64::NEG_INFINITY;
    let mut pass = true;
    for idx in sample(&mut rng, energy.len() - 2, 20).into_iter().map(|i| i + 1) {
        let snap = &run.snapshots[idx];
        assert!((snap.t - run.series.times[idx]).abs() < 1e-12);
        let psi = WaveFunction::new(lattice, snap.density_phase.recombine()).unwrap();
        debug_assert!((lattice_energy(&psi, v) - energy[idx]).abs() < 1e-9);
        let rate = dissipation_rate(&psi, params.beta);
        let fd = (energy[idx + 1] - energy[idx - 1]) / (2.0 * dt);
        let tol = f64::max(1e-6, 5.0 * dt * dt * energy[idx].abs());
        let err = (rate - fd).abs();
        pass &= err <= tol && rate <= 0.0;
        worst_excess = worst_excess.max(err / tol);
        max_rate = max_rate.max(rate);
    }
    outcome(
        pass,
        format!(
            "bloch-friction dt={dt}: worst |rate - centered FD| / tolerance = {worst_excess:.3} (<= 1) over 20 sampled times; largest rate {max_rate:.3e} (<= 0)"
        ),
    )
}

fn dir_bytes(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.push((rel, fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn criterion_11() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let mut differing = Vec::new();
    let mut files = 0;
    for (name, _) in PRESETS {
        let mut trees = Vec::new();
        for rep in 0..2 {
            let mut cfg = ExperimentConfig::preset(name).unwrap();
            let dir = tmp.path().join(format!("{name}-{rep}"));
            cfg.output_dir = Some(dir.clone());
            run_experiment(&cfg).unwrap();
            trees.push(dir_bytes(&dir));
        }
        files += trees[0].len();
        if trees[0] != trees[1] {
            differing.push(*name);
        }
    }
    outcome(
        differing.is_empty() && files > 0,
        format!(
            "{} presets run twice, {files} files compared byte for byte; differing presets: {:?}",
            PRESETS.len(),
            differing
        ),
    )
}

fn main() -> ExitCode {
    let start = Instant::now();
    let toy1 = preset_run("toy1", &[]).1;
    let toy2 = preset_run("toy2", &[]);
    let bloch_tilt = preset_run("bloch-tilt", &["lattice.record_every=1"]).1;
    let bloch_friction = preset_run("bloch-friction", &[]).1;
    let anderson_friction = preset_run("anderson-friction", &[]).1;
    let runs = Runs {
        toy1,
        toy2,
        bloch_tilt,
        bloch_friction,
        anderson_friction,
    };
    let free = ensemble("anderson-free");
    let friction = ensemble("anderson-friction");

    let results = [
        ("energy monotonicity", criterion_1(&runs)),
        ("toy model 1 convergence", criterion_2(&runs)),
        ("toy model 1 ground-state identity", criterion_3()),
        ("toy model 2 W overlaps V", criterion_4(&runs)),
        ("Bloch confinement", criterion_5(&runs)),
        ("friction restores transport", criterion_6(&runs)),
        ("Anderson localization", criterion_7(&free)),
        ("friction defeats localization", criterion_8(&free, &friction)),
        ("oracle equivalence", criterion_9()),
        ("dissipation identity", criterion_10()),
        ("determinism", criterion_11()),
    ];
    let mut failed = 0;
    for (i, (name, o)) in results.iter().enumerate() {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!o.pass);
        println!("{tag} criterion {:>2} {name}: {}", i + 1, o.detail);
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.1}s",
        results.len() - failed,
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
