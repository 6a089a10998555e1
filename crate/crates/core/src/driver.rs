//! File-level drivers behind the command-line interface.

use std::path::{Path, PathBuf};

use log::{info, warn};

use crate::error::{Error, Result};
use crate::experiments::{blow_up_study, ic_catalog, run_sweep, write_sweep_dir, ErrorNorm, Family, SweepResult, SweepSpec};
use crate::io::config::{serialize_config, RunConfig};
use crate::io::csv::write_diagnostics;
use crate::io::snapshot::{read_snapshot, write_snapshot};
use crate::models::SimState;
use crate::timestepping::{Integrator, IntegrateFailure, Trajectory};

pub const CONFIG_FILE: &str = "run.cfg";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const FINAL_SNAPSHOT: &str = "final.bvs";

pub fn snapshot_name(step: u64) -> String {
    format!("snapshot_{step:08}.bvs")
}

pub fn initial_state(cfg: &RunConfig) -> Result<SimState> {
    let grid = cfg.grid.build()?;
    let (u, theta) = ic_catalog(&cfg.ic.name, &grid, cfg.ic.amplitude, cfg.ic.theta_amplitude, cfg.ic.seed)?;
    SimState::new(u, theta, 0.0)
}

fn drive(
    mut integrator: Integrator,
    cfg: &RunConfig,
    out_dir: &Path,
    csv_name: &str,
) -> Result<Trajectory> {
    let every = cfg.output.snapshot_every;
    let params = cfg.model.clone();
    let result = integrator.run_with(|it| {
        if every > 0 && it.step_index() % every == 0 {
            write_snapshot(&out_dir.join(snapshot_name(it.step_index())), &it.checkpoint(), &params)?;
        }
        Ok(())
    });
    let csv = out_dir.join(csv_name);
    match result {
        Ok(traj) => {
            write_diagnostics(&csv, &cfg.diag.p_grid, traj.records())?;
            write_snapshot(&out_dir.join(FINAL_SNAPSHOT), &integrator.checkpoint(), &cfg.model)?;
            if traj.is_censored() {
                warn!("run stopped early at the velocity guard");
            }
            Ok(traj)
        }
        Err(IntegrateFailure { error, partial }) => {
            write_diagnostics(&csv, &cfg.diag.p_grid, partial.records())?;
            Err(error)
        }
    }
}

/// Runs a configuration, writing `run.cfg`, `diagnostics.csv`, periodic
/// snapshots and `final.bvs` under `out_dir` (the configured directory when `None`).
pub fn run(cfg: &RunConfig, out_dir: Option<&Path>) -> Result<Trajectory> {
    let dir = out_dir.map(Path::to_path_buf).unwrap_or_else(|| cfg.output.directory.clone());
    std::fs::create_dir_all(&dir)?;
    cfg.model.validate()?;
    std::fs::write(dir.join(CONFIG_FILE), serialize_config(cfg))?;
    let state0 = initial_state(cfg)?;
    let integrator = Integrator::new(state0, &cfg.model, &cfg.stepper, &cfg.diag)?;
    info!("running to t = {} in {}", cfg.stepper.t_end, dir.display());
    drive(integrator, cfg, &dir, DIAGNOSTICS_FILE)
}

/// Where `resume` reads its configuration and writes its output by default.
pub fn default_resume_config(snapshot: &Path) -> PathBuf {
    snapshot
        .parent()
        .unwrap_or_else(|| Path::new("."))
        .join(CONFIG_FILE)
}

/// Name of the diagnostics file written by a resumed run.
pub fn resumed_csv_name(step: u64) -> String {
    format!("resume_from_{step:08}.csv")
}

/// Continues a snapshot to `t_end`. Records follow the uninterrupted
/// schedule, so rows at matching steps are bit-identical to the original run.
pub fn resume(snapshot: &Path, t_end: f64, cfg: &RunConfig, out_dir: Option<&Path>) -> Result<Trajectory> {
    let snap = read_snapshot(snapshot)?;
    snap.ensure_params(&cfg.model)?;
    let grid = cfg.grid.build()?;
    if *snap.checkpoint.state.grid() != grid {
        return Err(Error::Snapshot(format!(
            "snapshot grid differs from the configured {}-D n = {} grid",
            grid.dim(),
            grid.n()
        )));
    }
    let dir = out_dir
        .map(Path::to_path_buf)
        .unwrap_or_else(|| snapshot.parent().unwrap_or_else(|| Path::new(".")).to_path_buf());
    std::fs::create_dir_all(&dir)?;
    let step = snap.checkpoint.step_index;
    let mut stepper = cfg.stepper.clone();
    stepper.t_end = t_end;
    let integrator = Integrator::from_checkpoint(snap.checkpoint, &cfg.model, &stepper, &cfg.diag)?;
    info!("resuming from step {step} to t = {t_end}");
    drive(integrator, cfg, &dir, &resumed_csv_name(step))
}

/// Builds the sweep described by a run configuration and a family.
pub fn sweep_spec(cfg: &RunConfig, family: Family, values: Vec<f64>) -> Result<SweepSpec> {
    Ok(SweepSpec {
        family,
        values,
        base_params: cfg.model.clone(),
        ic: cfg.ic.clone(),
        grid: cfg.grid.build()?,
        stepper: cfg.stepper.clone(),
        diag: cfg.diag.clone(),
        error_norms: ErrorNorm::ALL.to_vec(),
    })
}

/// Runs a sweep (the blow-up study when the base system is inviscid and
/// non-diffusive) and writes it under `out_dir`.
pub fn sweep(spec: &SweepSpec, out_dir: &Path) -> Result<SweepResult> {
    let p = &spec.base_params;
    let inviscid = p.kappa == 0.0 && p.nu.iter().all(|&v| v == 0.0);
    let result = if spec.family == Family::Alpha && inviscid && spec.grid.dim() == 2 {
        blow_up_study(spec)?
    } else {
        run_sweep(spec)?
    };
    write_sweep_dir(out_dir, spec, &result)?;
    Ok(result)
}
