//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.
//!
//! Runs as a plain binary (`harness = false`) so the criteria execute in
//! order and their timings are not distorted by parallel test threads.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use bvoigt::diagnostics::{theta_max_principle_residual, vorticity_bound_residuals_by_p, DiagConfig};
use bvoigt::driver;
use bvoigt::experiments::{blow_up_study, ic_catalog, run_sweep, ErrorNorm, Family, IcSpec, SweepSpec};
use bvoigt::io::RunConfig;
use bvoigt::io::{GridConfig, OutputConfig};
use bvoigt::models::{ModelParams, SimState};
use bvoigt::reduce::set_deterministic;
use bvoigt::spectral::{norms, DealiasFraction, Grid, DEFAULT_P_GRID};
use bvoigt::timestepping::{integrate, Scheme, Stepper, StepperConfig, TimeStep, Trajectory};
use bvoigt::verify::{inequality_constants, operator_oracle, skew_symmetry, spread};

const ORACLE_TOL: f64 = 1e-10;
const SKEW_TOL: f64 = 1e-10;
const THETA_DRIFT_TOL: f64 = 1e-8;
const ENERGY_RESIDUAL_FACTOR: f64 = 1e-6;
const ENERGY_BOUND_SLACK: f64 = 1e-6;
const OVERSHOOT_TOL: f64 = 5e-3;
const VORTICITY_TOL: f64 = 1e-6;
const ORDER_RANGE: (f64, f64) = (3.7, 4.3);
const CONTINUATION_MIN_ORDER: f64 = 1.0;
const BLOW_UP_RATIO: f64 = 1e-4;
const BREZIS_MAX: f64 = 10.0;
const CZ_MAX: f64 = 5.0;
const RESEED_SPREAD: f64 = 0.2;
const SMOKE_BUDGET_TOL: f64 = 1e-5;
const VORTICITY_EXPONENTS: [f64; 3] = [2.0, 4.0, 8.0];

const ALPHAS: [f64; 5] = [0.2, 0.1, 0.05, 0.025, 0.0125];

// Smooth Taylor-Green vortex with a thermal bubble, moderate amplitude.
const U_AMPLITUDE: f64 = 0.5;
const THETA_AMPLITUDE: f64 = 0.5;
const CFL: f64 = 0.5;
const DT_MAX: f64 = 1e-2;

type Outcome = Result<String, String>;

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn ic(grid: &Grid) -> SimState {
    let (u, theta) = ic_catalog("taylor_green", grid, U_AMPLITUDE, THETA_AMPLITUDE, 0).unwrap();
    SimState::new(u, theta, 0.0).unwrap()
}

fn adaptive(t_end: f64, output_every: u64) -> StepperConfig {
    StepperConfig {
        step: TimeStep::Adaptive { cfl: CFL, dt_max: DT_MAX },
        t_end,
        output_every,
        ..Default::default()
    }
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Tags a criterion evaluated on a run shared with another criterion.
fn shared_note(o: Outcome, shared: Duration) -> Outcome {
    let tag = |d: String| format!("{d}; shared run {:.2}s", shared.as_secs_f64());
    o.map(tag).map_err(tag)
}

fn max_over(it: impl Iterator<Item = f64>) -> f64 {
    it.fold(f64::NEG_INFINITY, f64::max)
}

fn operator_oracles() -> Outcome {
    let rows = operator_oracle(2, 8, 5).map_err(|e| e.to_string())?;
    let worst = rows.iter().cloned().fold(("", 0.0), |a, b| if b.1 > a.1 { b } else { a });
    let failing: Vec<_> = rows.iter().filter(|(_, v)| !(*v <= ORACLE_TOL)).map(|(n, _)| *n).collect();
    check(
        failing.is_empty(),
        format!("{} operators, worst {} at {:.2e} (failing: {failing:?})", rows.len(), worst.0, worst.1),
    )
}

fn skew() -> Outcome {
    let (b, s) = skew_symmetry(2, 32, 100).map_err(|e| e.to_string())?;
    check(b <= SKEW_TOL && s <= SKEW_TOL, format!("B {b:.2e}, scalar {s:.2e}"))
}

struct VoigtRun {
    traj: Trajectory,
}

fn inviscid_voigt_run() -> Result<VoigtRun, String> {
    let g = Grid::new(2, 64).unwrap();
    let p = ModelParams::isotropic(2, 0.0, 0.0, 0.1);
    let traj = integrate(ic(&g), &p, &adaptive(1.0, 5), &DiagConfig::default()).map_err(|e| e.to_string())?;
    Ok(VoigtRun { traj })
}

fn theta_conservation(run: &VoigtRun) -> Outcome {
    let r0 = &run.traj.entries[0].record;
    let drift = max_over(run.traj.records().map(|r| (r.l2_theta - r0.l2_theta).abs() / r0.l2_theta));
    check(drift <= THETA_DRIFT_TOL, format!("relative L2 drift {drift:.2e}"))
}

fn voigt_energy(run: &VoigtRun) -> Outcome {
    let r0 = &run.traj.entries[0].record;
    let e0 = r0.voigt_energy;
    let residual = max_over(run.traj.records().map(|r| r.energy_budget_residual));
    let tol = ENERGY_RESIDUAL_FACTOR * (e0 + 1.0);
    let excess = max_over(
        run.traj
            .records()
            .map(|r| r.voigt_energy - (e0 + r.t * r.t * r0.l2_theta.powi(2) + ENERGY_BOUND_SLACK)),
    );
    check(
        residual <= tol && excess <= 0.0 && !run.traj.is_censored(),
        format!("budget residual {residual:.2e} (tol {tol:.2e}), bound margin {:.2e}", -excess),
    )
}

fn anisotropic_run() -> Result<(Trajectory, ModelParams), String> {
    let g = Grid::new(2, 128).unwrap();
    let p = ModelParams::horizontal(2, 1e-2, 0.0, 0.0);
    let traj = integrate(ic(&g), &p, &adaptive(1.0, 5), &DiagConfig::default()).map_err(|e| e.to_string())?;
    Ok((traj, p))
}

fn maximum_principle(traj: &Trajectory) -> Outcome {
    let th0 = traj.entries[0].record.linf_theta();
    let overshoot = theta_max_principle_residual(traj).map_err(|e| e.to_string())? / th0;
    check(overshoot <= OVERSHOOT_TOL, format!("relative overshoot {overshoot:.2e}"))
}

fn vorticity_bounds(traj: &Trajectory, p: &ModelParams) -> Outcome {
    let res = vorticity_bound_residuals_by_p(traj, p, &DEFAULT_P_GRID).map_err(|e| e.to_string())?;
    let r0 = &traj.entries[0].record;
    let mut ok = true;
    let mut parts = Vec::new();
    for (i, &pp) in DEFAULT_P_GRID.iter().enumerate() {
        if !VORTICITY_EXPONENTS.contains(&pp) {
            continue;
        }
        let scale = r0.lp_omega[i].powi(2);
        ok &= res[i] <= VORTICITY_TOL * scale;
        parts.push(format!("p={pp}: {:.2e}", res[i] / scale));
    }
    check(ok, format!("relative residuals {}", parts.join(", ")))
}

fn integrator_order() -> Outcome {
    let g = Grid::new(2, 32).unwrap();
    let s0 = ic(&g);
    let p = ModelParams::isotropic(2, 1e-3, 1e-3, 0.0);
    let t_end = 0.1;
    let solve = |steps: usize| -> Result<SimState, String> {
        let mut stepper = Stepper::new(&s0, &p, Scheme::Ifrk4).map_err(|e| e.to_string())?;
        let mut s = s0.clone();
        for _ in 0..steps {
            s = stepper.step(&s, t_end / steps as f64).map_err(|e| e.to_string())?.0;
        }
        Ok(s)
    };
    let sols = [5, 10, 20, 40, 80].map(solve);
    let sols: Vec<SimState> = sols.into_iter().collect::<Result<_, _>>()?;
    let dist = |a: &SimState, b: &SimState| {
        let du = norms::vector_l2(&a.u.sub(&b.u).unwrap());
        let dt = norms::l2(&a.theta.sub(&b.theta).unwrap());
        (du * du + dt * dt).sqrt()
    };
    let orders: Vec<f64> = (0..sols.len() - 2)
        .map(|i| (dist(&sols[i], &sols[i + 1]) / dist(&sols[i + 1], &sols[i + 2])).log2())
        .collect();
    let ok = orders.iter().all(|o| (ORDER_RANGE.0..=ORDER_RANGE.1).contains(o));
    check(ok, format!("observed orders {orders:.3?}"))
}

fn alpha_spec(nu: f64, n: usize, ic: IcSpec) -> SweepSpec {
    SweepSpec {
        family: Family::Alpha,
        values: ALPHAS.to_vec(),
        base_params: ModelParams::isotropic(2, nu, 0.0, 0.0),
        ic,
        grid: Grid::new(2, n).unwrap(),
        stepper: adaptive(0.5, 10),
        diag: DiagConfig::default(),
        error_norms: vec![ErrorNorm::L2U, ErrorNorm::VU],
    }
}

fn alpha_continuation() -> Outcome {
    let ic = IcSpec {
        amplitude: U_AMPLITUDE,
        theta_amplitude: THETA_AMPLITUDE,
        ..Default::default()
    };
    let res = run_sweep(&alpha_spec(1e-3, 128, ic)).map_err(|e| e.to_string())?;
    let mut ok = res.reference_value == 0.0 && res.runs.iter().all(|r| !r.censored);
    let mut parts = Vec::new();
    for norm in [ErrorNorm::L2U, ErrorNorm::VU] {
        let errs: Vec<f64> = res.runs.iter().map(|r| r.error(norm)).collect();
        let monotone = errs.windows(2).all(|w| w[1] < w[0]);
        let order = res.order(norm).map_or(f64::NAN, |f| f.order);
        ok &= monotone && order >= CONTINUATION_MIN_ORDER;
        parts.push(format!("{}: monotone {monotone}, order {order:.3}", norm.column()));
    }
    check(ok, parts.join("; "))
}

fn blow_up_sanity() -> Outcome {
    let ic = IcSpec {
        amplitude: 0.1,
        theta_amplitude: 0.01,
        ..Default::default()
    };
    let res = blow_up_study(&alpha_spec(0.0, 64, ic)).map_err(|e| e.to_string())?;
    let last = res.blow_up.last().ok_or("no blow-up rows")?;
    let ratio = last.extrapolated_limit.abs() / last.indicators[0];
    let mut worst_budget = 0.0f64;
    let mut budget_ok = true;
    for run in &res.runs {
        let e0 = run.trajectory.entries[0].record.voigt_energy;
        let r = max_over(run.trajectory.records().map(|x| x.energy_budget_residual));
        budget_ok &= r <= ENERGY_RESIDUAL_FACTOR * (e0 + 1.0);
        worst_budget = worst_budget.max(r);
    }
    check(
        ratio <= BLOW_UP_RATIO && budget_ok && res.blow_up_suspected_before().is_none(),
        format!("|limit| / indicator(largest alpha) {ratio:.2e}, worst budget residual {worst_budget:.2e}"),
    )
}

fn inequality_verifiers() -> Outcome {
    let a = inequality_constants(0).map_err(|e| e.to_string())?;
    let b = inequality_constants(1000).map_err(|e| e.to_string())?;
    let finite = [a.brezis, a.c_cz, b.brezis, b.c_cz].iter().all(|v| v.is_finite());
    let sb = spread(a.brezis, b.brezis);
    let sc = spread(a.c_cz, b.c_cz);
    check(
        finite && a.brezis <= BREZIS_MAX && a.c_cz <= CZ_MAX && sb <= RESEED_SPREAD && sc <= RESEED_SPREAD,
        format!("C {:.3} (reseed spread {sb:.3}), C_cz {:.3} (reseed spread {sc:.3})", a.brezis, a.c_cz),
    )
}

fn smoke_3d() -> Outcome {
    let g = Grid::new(3, 16).unwrap();
    let p = ModelParams::isotropic(3, 0.0, 1e-2, 0.2);
    let traj = integrate(ic(&g), &p, &adaptive(0.2, 1), &DiagConfig::default()).map_err(|e| e.to_string())?;
    let thetas: Vec<f64> = traj.records().map(|r| r.l2_theta).collect();
    let monotone = thetas.windows(2).all(|w| w[1] <= w[0]);
    let residual = max_over(traj.records().map(|r| r.energy_budget_residual));
    let finite = traj
        .records()
        .all(|r| r.voigt_energy.is_finite() && r.l2_theta.is_finite());
    check(
        monotone && residual <= SMOKE_BUDGET_TOL && finite,
        format!("{} records, theta nonincreasing {monotone}, budget residual {residual:.2e}", thetas.len()),
    )
}

fn restart_equivalence() -> Outcome {
    set_deterministic(true);
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut cfg = RunConfig {
        grid: GridConfig { dim: 2, n: 32, dealias: DealiasFraction::TWO_THIRDS },
        model: ModelParams::isotropic(2, 1e-3, 1e-3, 0.05),
        stepper: adaptive(0.5, 4),
        ic: IcSpec {
            amplitude: U_AMPLITUDE,
            theta_amplitude: THETA_AMPLITUDE,
            ..Default::default()
        },
        diag: DiagConfig::default(),
        output: OutputConfig {
            directory: dir.path().join("full"),
            snapshot_every: 20,
        },
    };
    let full = driver::run(&cfg, None).map_err(|e| e.to_string())?;
    let total = full.entries.last().unwrap().step;
    let mid = (total / 2 / 20).max(1) * 20;
    cfg.output.directory = dir.path().join("resumed");
    let snap = dir.path().join("full").join(driver::snapshot_name(mid));
    let resumed = driver::resume(&snap, cfg.stepper.t_end, &cfg, Some(&cfg.output.directory))
        .map_err(|e| e.to_string())?;
    let tail: Vec<_> = full.entries.iter().filter(|e| e.step > mid).collect();
    let mut identical = tail.len() == resumed.entries.len() && !tail.is_empty();
    for (a, b) in tail.iter().zip(&resumed.entries) {
        identical &= a.step == b.step
            && a.record.to_row().iter().zip(b.record.to_row()).all(|(x, y)| x.to_bits() == y.to_bits())
            && a.budget.to_array().map(f64::to_bits) == b.budget.to_array().map(f64::to_bits);
    }
    set_deterministic(false);
    check(
        identical,
        format!("resumed at step {mid} of {total}, {} records compared bitwise", resumed.entries.len()),
    )
}

fn main() -> ExitCode {
    let mut failures = 0;
    let mut report = |id: u32, name: &str, budget: Duration, f: &mut dyn FnMut() -> Outcome| {
        let clock = Instant::now();
        let outcome = f();
        let took = clock.elapsed();
        let (ok, detail) = match outcome {
            Ok(d) => (took <= budget, d),
            Err(d) => (false, d),
        };
        if !ok {
            failures += 1;
        }
        println!(
            "{} [{id:>2}] {name}: {detail} ({:.2}s of {}s)",
            if ok { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            budget.as_secs()
        );
    };

    report(1, "operator oracles", secs(10), &mut operator_oracles);
    report(2, "skew symmetry", secs(30), &mut skew);

    let clock = Instant::now();
    let voigt = inviscid_voigt_run();
    let shared = clock.elapsed();
    match &voigt {
        Ok(run) => {
            let budget = secs(60).saturating_sub(shared);
            let note = |o: Outcome| shared_note(o, shared);
            report(3, "theta conservation", budget, &mut || note(theta_conservation(run)));
            report(4, "Voigt energy law and bound", budget, &mut || note(voigt_energy(run)));
        }
        Err(e) => {
            report(3, "theta conservation", secs(60), &mut || Err(e.clone()));
            report(4, "Voigt energy law and bound", secs(60), &mut || Err(e.clone()));
        }
    }

    let clock = Instant::now();
    let aniso = anisotropic_run();
    let shared = clock.elapsed();
    match &aniso {
        Ok((traj, p)) => {
            let budget = secs(180).saturating_sub(shared);
            let note = |o: Outcome| shared_note(o, shared);
            report(5, "maximum principle", budget, &mut || note(maximum_principle(traj)));
            report(6, "anisotropic vorticity bounds", budget, &mut || note(vorticity_bounds(traj, p)));
        }
        Err(e) => {
            report(5, "maximum principle", secs(180), &mut || Err(e.clone()));
            report(6, "anisotropic vorticity bounds", secs(180), &mut || Err(e.clone()));
        }
    }

    report(7, "time-integrator order", secs(120), &mut integrator_order);
    report(8, "alpha continuation", secs(600), &mut alpha_continuation);
    report(9, "blow-up indicator sanity", secs(600), &mut blow_up_sanity);
    report(10, "inequality verifiers", secs(60), &mut inequality_verifiers);
    report(11, "3D smoke test", secs(120), &mut smoke_3d);
    report(12, "restart equivalence", secs(60), &mut restart_equivalence);

    if failures == 0 {
        println!("acceptance: all 12 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failures} of 12 criteria failed");
        ExitCode::FAILURE
    }
}
