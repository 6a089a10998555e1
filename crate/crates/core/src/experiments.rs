//! Initial-condition catalog, parameter sweeps toward the limit systems and
//! the vanishing-regularization blow-up study.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use log::{info, warn};
use rayon::prelude::*;

use crate::diagnostics::DiagConfig;
use crate::error::{Error, Result};
use crate::io::csv::{cell, write_diagnostics, write_table};
use crate::models::{ModelParams, SimState};
use crate::random::{random_scalar, random_solenoidal, BandSpec};
use crate::spectral::{
    dealias, dealias_vector, inverse_laplacian, leray_project, norms, Grid, PhysicalField,
    SpectralField, VectorField,
};
use crate::timestepping::{cfl_dt, integrate, StepperConfig, TimeStep, Trajectory};

pub const IC_NAMES: [&str; 4] = ["taylor_green", "shear_layer", "thermal_bubble_pair", "random_band"];

const TWO_PI: f64 = 2.0 * PI;
/// Width of the thermal bumps.
const BUMP_WIDTH: f64 = 0.1;
/// Thickness of the shear layers.
const SHEAR_THICKNESS: f64 = 0.05;

/// Periodic bump `exp(c sum_j (cos 2 pi (x_j - c_j) - 1))`, close to a Gaussian
/// of width `BUMP_WIDTH` near the centre.
fn bump(x: [f64; 3], centre: [f64; 3], dim: usize) -> f64 {
    let c = 1.0 / (TWO_PI * BUMP_WIDTH).powi(2);
    let s: f64 = (0..dim)
        .map(|j| (TWO_PI * (x[j] - centre[j])).cos() - 1.0)
        .sum();
    (c * s).exp()
}

fn sample(grid: &Grid, f: impl Fn([f64; 3]) -> f64 + Sync) -> SpectralField {
    dealias(&SpectralField::from_physical(&PhysicalField::from_fn(grid, f)))
}

fn finish(u: Vec<SpectralField>, theta: SpectralField) -> Result<(VectorField, SpectralField)> {
    let u = dealias_vector(&leray_project(&VectorField::new(u)?));
    Ok((u, dealias(&theta)))
}

/// Named initial condition. `amplitude` scales the velocity and
/// `theta_amplitude` the scalar; `seed` only matters for `random_band`.
///
/// * `taylor_green`: `u = A(-sin 2pi x cos 2pi y, cos 2pi x sin 2pi y)` (in 3-D
///   `A(sin x cos y cos z, -cos x sin y cos z, 0)` with the same `2pi` scaling),
///   plus a thermal bump centred on the vortex at `(1/4, 1/4[, 1/4])`.
/// * `shear_layer`: double shear layer in the last coordinate with a weak
///   `sin 2pi x` cross-stream kick; `theta = T cos 2pi x sin 2pi y`.
/// * `thermal_bubble_pair`: fluid at rest, a warm bump at `(0.3, 0.3)` and a
///   cold one at `(0.7, 0.7)`.
/// * `random_band`: seeded random solenoidal `u` and scalar with unit norms
///   before scaling.
///
/// Every field is Leray-projected, dealiased and mean-zero.
pub fn ic_catalog(
    name: &str,
    grid: &Grid,
    amplitude: f64,
    theta_amplitude: f64,
    seed: u64,
) -> Result<(VectorField, SpectralField)> {
    let d = grid.dim();
    let a = amplitude;
    let th = theta_amplitude;
    let zero = || SpectralField::zeros(grid);
    match name {
        "taylor_green" => {
            let s = |v: f64| (TWO_PI * v).sin();
            let c = |v: f64| (TWO_PI * v).cos();
            let u = if d == 2 {
                vec![
                    sample(grid, |x| -a * s(x[0]) * c(x[1])),
                    sample(grid, |x| a * c(x[0]) * s(x[1])),
                ]
            } else {
                vec![
                    sample(grid, |x| a * s(x[0]) * c(x[1]) * c(x[2])),
                    sample(grid, |x| -a * c(x[0]) * s(x[1]) * c(x[2])),
                    zero(),
                ]
            };
            let theta = sample(grid, |x| th * bump(x, [0.25; 3], d));
            finish(u, theta)
        }
        "shear_layer" => {
            let last = d - 1;
            let delta = SHEAR_THICKNESS;
            let mut u: Vec<SpectralField> = (0..d).map(|_| zero()).collect();
            u[0] = sample(grid, |x| {
                let z = x[last];
                a * (((z - 0.25) / delta).tanh() - ((z - 0.75) / delta).tanh() - 1.0)
            });
            u[last] = sample(grid, |x| 0.05 * a * (TWO_PI * x[0]).sin());
            let theta = sample(grid, |x| th * (TWO_PI * x[0]).cos() * (TWO_PI * x[1]).sin());
            finish(u, theta)
        }
        "thermal_bubble_pair" => {
            let u = (0..d).map(|_| zero()).collect();
            let theta = sample(grid, |x| th * (bump(x, [0.3; 3], d) - bump(x, [0.7; 3], d)));
            finish(u, theta)
        }
        "random_band" => {
            let band = BandSpec::default();
            let u = random_solenoidal(grid, band, seed).scale(a);
            let theta = random_scalar(grid, band, seed.wrapping_add(1)).scale(th);
            finish(u.into_components(), theta)
        }
        other => Err(Error::Config(format!(
            "unknown initial condition '{other}' (known: {})",
            IC_NAMES.join(", ")
        ))),
    }
}

/// Which coefficient a sweep drives to zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Alpha,
    Kappa,
    /// Viscosity along the last (vertical) axis.
    NuY,
}

impl Family {
    pub fn parse(s: &str) -> Result<Family> {
        match s {
            "alpha" => Ok(Family::Alpha),
            "kappa" => Ok(Family::Kappa),
            "nu_y" => Ok(Family::NuY),
            _ => Err(Error::Config(format!(
                "unknown sweep family '{s}' (expected alpha, kappa or nu_y)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::Alpha => "alpha",
            Family::Kappa => "kappa",
            Family::NuY => "nu_y",
        }
    }

    pub fn apply(&self, base: &ModelParams, v: f64) -> ModelParams {
        let mut p = base.clone();
        match self {
            Family::Alpha => p.alpha = v,
            Family::Kappa => p.kappa = v,
            Family::NuY => p.nu[p.dim - 1] = v,
        }
        p
    }

    /// Whether the `v = 0` member is itself a well-posed, integrable run.
    fn limit_is_stable(&self, base: &ModelParams) -> bool {
        let nu_other = |skip: Option<usize>| {
            base.nu
                .iter()
                .enumerate()
                .any(|(j, &v)| Some(j) != skip && v > 0.0)
        };
        match self {
            Family::Alpha => nu_other(None),
            Family::Kappa => nu_other(None) || base.alpha > 0.0,
            Family::NuY => nu_other(Some(base.dim - 1)) || base.alpha > 0.0,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Distances between a sweep member and the reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorNorm {
    L2U,
    /// `|grad (u - u_ref)|`
    VU,
    L2Theta,
    /// `|grad (xi - xi_ref)|` with `Laplacian(xi) = theta`.
    H1Xi,
}

impl ErrorNorm {
    pub const ALL: [ErrorNorm; 4] = [ErrorNorm::L2U, ErrorNorm::VU, ErrorNorm::L2Theta, ErrorNorm::H1Xi];

    pub fn column(&self) -> &'static str {
        match self {
            ErrorNorm::L2U => "e_L2_u",
            ErrorNorm::VU => "e_V_u",
            ErrorNorm::L2Theta => "e_L2_theta",
            ErrorNorm::H1Xi => "e_H1_xi",
        }
    }

    fn index(&self) -> usize {
        match self {
            ErrorNorm::L2U => 0,
            ErrorNorm::VU => 1,
            ErrorNorm::L2Theta => 2,
            ErrorNorm::H1Xi => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcSpec {
    pub name: String,
    pub amplitude: f64,
    pub theta_amplitude: f64,
    pub seed: u64,
}

impl Default for IcSpec {
    fn default() -> Self {
        IcSpec {
            name: "taylor_green".into(),
            amplitude: 1.0,
            theta_amplitude: 1.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub family: Family,
    /// Strictly decreasing positive values.
    pub values: Vec<f64>,
    pub base_params: ModelParams,
    pub ic: IcSpec,
    pub grid: Grid,
    /// Scheme, step rule, horizon, output cadence and guard shared by all runs.
    pub stepper: StepperConfig,
    pub diag: DiagConfig,
    /// Norms used for the order fit and the monotonicity check.
    pub error_norms: Vec<ErrorNorm>,
}

impl SweepSpec {
    /// Geometric values `start, start/2, ...` (`count` of them).
    pub fn halving(start: f64, count: usize) -> Vec<f64> {
        (0..count).map(|i| start / 2f64.powi(i as i32)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::Config("sweep needs at least one value".into()));
        }
        if self.values.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::Config("sweep values must be positive".into()));
        }
        if self.values.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Config("sweep values must be strictly decreasing".into()));
        }
        if !(self.stepper.t_end > 0.0) {
            return Err(Error::Config("sweep horizon must be > 0".into()));
        }
        if self.base_params.dim != self.grid.dim() {
            return Err(Error::Config("grid and parameter dimensions differ".into()));
        }
        self.base_params.validate()?;
        self.stepper.validate()
    }

    fn initial_state(&self) -> Result<SimState> {
        let (u, theta) = ic_catalog(
            &self.ic.name,
            &self.grid,
            self.ic.amplitude,
            self.ic.theta_amplitude,
            self.ic.seed,
        )?;
        SimState::new(u, theta, 0.0)
    }
}

#[derive(Debug, Clone)]
pub struct SweepRun {
    pub value: f64,
    pub trajectory: Trajectory,
    /// Per [`ErrorNorm::ALL`], max over shared output times.
    pub errors: [f64; 4],
    pub censored: bool,
    /// `sup_t alpha^2 |grad u(t)|^2`
    pub sup_indicator: f64,
}

impl SweepRun {
    pub fn error(&self, norm: ErrorNorm) -> f64 {
        self.errors[norm.index()]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderFit {
    pub norm: ErrorNorm,
    /// Least-squares slope of `log e` against `log v`.
    pub order: f64,
    /// `log2(e(2v) / e(v))` for each consecutive pair with halving values.
    pub pairwise: Vec<f64>,
}

/// One output time of the blow-up study.
#[derive(Debug, Clone, PartialEq)]
pub struct BlowUpRow {
    pub t: f64,
    /// `alpha^2 |grad u^alpha(t)|^2` per sweep value.
    pub indicators: Vec<f64>,
    /// Intercept of a linear fit in `alpha^2` over the three smallest values.
    pub extrapolated_limit: f64,
    pub suspected: bool,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub family: Family,
    pub values: Vec<f64>,
    pub runs: Vec<SweepRun>,
    /// Reference value (0 when the limit system itself was run).
    pub reference_value: f64,
    pub reference: Option<Trajectory>,
    /// `None` when fewer than three usable pairs exist or all errors vanish.
    pub orders: Vec<Option<OrderFit>>,
    /// Human-readable notes on non-monotone error sequences.
    pub monotonicity_violations: Vec<String>,
    pub blow_up: Vec<BlowUpRow>,
    /// Fixed step shared by all members.
    pub dt: f64,
}

impl SweepResult {
    pub fn order(&self, norm: ErrorNorm) -> Option<&OrderFit> {
        self.orders
            .iter()
            .flatten()
            .find(|o| o.norm == norm)
    }

    /// First output time at which blow-up is suspected.
    pub fn blow_up_suspected_before(&self) -> Option<f64> {
        self.blow_up.iter().find(|r| r.suspected).map(|r| r.t)
    }
}

/// Relative plateau width for the blow-up flag.
pub const PLATEAU_RATIO: f64 = 1.2;

fn run_member(
    state0: &SimState,
    params: &ModelParams,
    stepper: &StepperConfig,
    diag: &DiagConfig,
) -> Result<Trajectory> {
    match integrate(state0.clone(), params, stepper, diag) {
        Ok(t) => Ok(t),
        Err(f) => Err(f.error),
    }
}

fn distances(a: &SimState, b: &SimState) -> Result<[f64; 4]> {
    let du = a.u.sub(&b.u)?;
    let dth = a.theta.sub(&b.theta)?;
    let xi = inverse_laplacian(&dth)?;
    Ok([
        norms::vector_l2(&du),
        norms::vector_sobolev(&du, 1),
        norms::l2(&dth),
        norms::sobolev(&xi, 1),
    ])
}

fn max_errors(run: &Trajectory, reference: &Trajectory) -> Result<[f64; 4]> {
    let mut worst = [0.0f64; 4];
    for (a, b) in run.fields.iter().zip(&reference.fields) {
        if (a.t - b.t).abs() > 1e-12 * a.t.abs().max(1.0) {
            return Err(Error::Invariant(format!(
                "sweep members out of step: t = {} vs {}",
                a.t, b.t
            )));
        }
        let e = distances(a, b)?;
        for (w, v) in worst.iter_mut().zip(e) {
            *w = w.max(v);
        }
    }
    Ok(worst)
}

fn fit_order(norm: ErrorNorm, runs: &[SweepRun]) -> Option<OrderFit> {
    let usable: Vec<(f64, f64)> = runs
        .iter()
        .filter(|r| !r.censored && r.error(norm) > 0.0)
        .map(|r| (r.value, r.error(norm)))
        .collect();
    if usable.len() < 4 {
        return None;
    }
    let xs: Vec<f64> = usable.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = usable.iter().map(|p| p.1.ln()).collect();
    let (slope, _) = linear_fit(&xs, &ys);
    let pairwise = usable
        .windows(2)
        .filter(|w| ((w[0].0 / w[1].0) - 2.0).abs() < 1e-12)
        .map(|w| (w[0].1 / w[1].1).log2())
        .collect();
    Some(OrderFit {
        norm,
        order: slope,
        pairwise,
    })
}

/// Least-squares `y = slope x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

fn blow_up_table(values: &[f64], runs: &[SweepRun]) -> Vec<BlowUpRow> {
    let len = runs
        .iter()
        .map(|r| r.trajectory.entries.len())
        .min()
        .unwrap_or(0);
    let mut rows = Vec::with_capacity(len);
    for i in 0..len {
        let t = runs[0].trajectory.entries[i].record.t;
        let indicators: Vec<f64> = runs
            .iter()
            .map(|r| r.trajectory.entries[i].record.blow_up_indicator)
            .collect();
        let m = values.len();
        let (extrapolated_limit, suspected) = if m >= 3 {
            let xs: Vec<f64> = values[m - 3..].iter().map(|a| a * a).collect();
            let ys = &indicators[m - 3..];
            let (_, limit) = linear_fit(&xs, ys);
            let hi = ys.iter().cloned().fold(f64::MIN, f64::max);
            let lo = ys.iter().cloned().fold(f64::MAX, f64::min);
            let plateau = lo > 0.0 && hi / lo <= PLATEAU_RATIO;
            (limit, limit > 0.0 && plateau)
        } else {
            (f64::NAN, false)
        };
        rows.push(BlowUpRow {
            t,
            indicators,
            extrapolated_limit,
            suspected,
        });
    }
    rows
}

/// Runs every member with a common fixed step and measures its distance to
/// the reference (the limit system when that is integrable, otherwise the
/// smallest value).
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let state0 = spec.initial_state()?;
    let dt = match spec.stepper.step {
        TimeStep::Fixed(dt) => dt,
        TimeStep::Adaptive { cfl, dt_max } => cfl_dt(&state0, cfl, dt_max),
    };
    let stepper = StepperConfig {
        step: TimeStep::Fixed(dt),
        keep_fields: true,
        ..spec.stepper.clone()
    };
    info!(
        "{} sweep over {:?} with dt = {dt:e}",
        spec.family, spec.values
    );

    let with_limit = spec.family.limit_is_stable(&spec.base_params);
    let mut members = spec.values.clone();
    if with_limit {
        members.push(0.0);
    }
    let trajectories: Vec<Result<Trajectory>> = members
        .par_iter()
        .map(|&v| {
            let p = spec.family.apply(&spec.base_params, v);
            run_member(&state0, &p, &stepper, &spec.diag)
        })
        .collect();
    let mut trajectories = trajectories.into_iter().collect::<Result<Vec<_>>>()?;

    let (reference_value, reference) = if with_limit {
        (0.0, trajectories.pop().expect("limit member"))
    } else {
        (*spec.values.last().expect("nonempty"), trajectories.last().cloned().expect("nonempty"))
    };
    if reference.is_censored() {
        warn!("reference run hit the velocity guard; errors cover its output times only");
    }

    let mut runs = Vec::with_capacity(spec.values.len());
    for (&value, trajectory) in spec.values.iter().zip(trajectories) {
        let errors = max_errors(&trajectory, &reference)?;
        let censored = trajectory.is_censored();
        let sup_indicator = trajectory
            .records()
            .map(|r| r.blow_up_indicator)
            .fold(0.0, f64::max);
        runs.push(SweepRun {
            value,
            trajectory,
            errors,
            censored,
            sup_indicator,
        });
    }

    let mut monotonicity_violations = Vec::new();
    for norm in &spec.error_norms {
        let seq: Vec<&SweepRun> = runs.iter().filter(|r| !r.censored).collect();
        for w in seq.windows(2) {
            if w[1].error(*norm) > w[0].error(*norm) {
                monotonicity_violations.push(format!(
                    "{}: e({}) = {:e} exceeds e({}) = {:e}",
                    norm.column(),
                    w[1].value,
                    w[1].error(*norm),
                    w[0].value,
                    w[0].error(*norm)
                ));
            }
        }
    }
    for v in &monotonicity_violations {
        warn!("non-monotone sweep error: {v}");
    }

    let orders = spec.error_norms.iter().map(|&n| fit_order(n, &runs)).collect();
    let blow_up = if spec.family == Family::Alpha {
        blow_up_table(&spec.values, &runs)
    } else {
        Vec::new()
    };
    Ok(SweepResult {
        family: spec.family,
        values: spec.values.clone(),
        runs,
        reference_value,
        reference: Some(reference),
        orders,
        monotonicity_violations,
        blow_up,
        dt,
    })
}

/// Alpha sweep of the inviscid, non-diffusive planar system, reporting
/// `alpha^2 |grad u^alpha(t)|^2` and its extrapolated limit at each output time.
/// The `suspected` flag is a heuristic: a positive extrapolated limit while the
/// last three indicators stay within `PLATEAU_RATIO` of each other.
pub fn blow_up_study(spec: &SweepSpec) -> Result<SweepResult> {
    if spec.family != Family::Alpha {
        return Err(Error::UnsupportedConfig("blow-up study sweeps alpha".into()));
    }
    if spec.grid.dim() != 2 {
        return Err(Error::UnsupportedConfig("blow-up study is planar (d = 2)".into()));
    }
    if spec.base_params.kappa != 0.0 || spec.base_params.nu.iter().any(|&v| v != 0.0) {
        return Err(Error::UnsupportedConfig(
            "blow-up study needs nu = kappa = 0".into(),
        ));
    }
    run_sweep(spec)
}

fn value_label(v: f64) -> String {
    crate::io::config::format_f64(v)
}

/// Writes a sweep as a directory: `run_<family>_<value>.csv` per member
/// (plus `run_reference.csv` when the limit system was run), `summary.csv`,
/// `blow_up.csv` for alpha sweeps, and a `manifest.txt` of `key = value` lines.
pub fn write_sweep_dir(dir: &Path, spec: &SweepSpec, result: &SweepResult) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let p_grid = &spec.diag.p_grid;
    for run in &result.runs {
        let name = format!("run_{}_{}.csv", spec.family, value_label(run.value));
        write_diagnostics(&dir.join(name), p_grid, run.trajectory.records())?;
    }
    if let (Some(r), 0.0) = (&result.reference, result.reference_value) {
        write_diagnostics(&dir.join("run_reference.csv"), p_grid, r.records())?;
    }

    let mut header: Vec<String> = vec!["value".into()];
    header.extend(ErrorNorm::ALL.iter().map(|n| n.column().to_string()));
    header.push("sup_indicator".into());
    header.push("censored_flag".into());
    let rows: Vec<Vec<String>> = result
        .runs
        .iter()
        .map(|r| {
            let mut row = vec![cell(r.value)];
            row.extend(r.errors.iter().map(|e| cell(*e)));
            row.push(cell(r.sup_indicator));
            row.push(if r.censored { "1" } else { "0" }.into());
            row
        })
        .collect();
    write_table(&dir.join("summary.csv"), &header, &rows)?;

    if !result.blow_up.is_empty() {
        let mut header: Vec<String> = vec!["t".into()];
        header.extend(result.values.iter().map(|v| format!("indicator_alpha_{}", value_label(*v))));
        header.push("extrapolated_limit".into());
        header.push("suspected".into());
        let rows: Vec<Vec<String>> = result
            .blow_up
            .iter()
            .map(|b| {
                let mut row = vec![cell(b.t)];
                row.extend(b.indicators.iter().map(|v| cell(*v)));
                row.push(cell(b.extrapolated_limit));
                row.push(if b.suspected { "1" } else { "0" }.into());
                row
            })
            .collect();
        write_table(&dir.join("blow_up.csv"), &header, &rows)?;
    }

    let mut m = String::new();
    let mut kv = |k: &str, v: String| {
        m.push_str(&format!("{k} = {v}\n"));
    };
    let list = |v: &[f64]| v.iter().map(|x| value_label(*x)).collect::<Vec<_>>().join(", ");
    kv("family", spec.family.to_string());
    kv("values", list(&spec.values));
    kv("dim", spec.grid.dim().to_string());
    kv("n", spec.grid.n().to_string());
    kv("dealias", spec.grid.dealias_fraction().to_string());
    kv("nu", list(&spec.base_params.nu));
    kv("kappa", value_label(spec.base_params.kappa));
    kv("alpha", value_label(spec.base_params.alpha));
    kv("ic", spec.ic.name.clone());
    kv("ic_amplitude", value_label(spec.ic.amplitude));
    kv("ic_theta_amplitude", value_label(spec.ic.theta_amplitude));
    kv("ic_seed", spec.ic.seed.to_string());
    kv("scheme", spec.stepper.scheme.name().into());
    kv("dt", value_label(result.dt));
    kv("t_end", value_label(spec.stepper.t_end));
    kv("output_every", spec.stepper.output_every.to_string());
    kv("guard", value_label(spec.stepper.guard));
    kv("reference_value", value_label(result.reference_value));
    kv(
        "error_norms",
        spec.error_norms.iter().map(|n| n.column()).collect::<Vec<_>>().join(", "),
    );
    for (norm, fit) in spec.error_norms.iter().zip(&result.orders) {
        let v = fit.as_ref().map(|f| value_label(f.order)).unwrap_or_else(|| "undefined".into());
        kv(&format!("order_{}", norm.column()), v);
    }
    kv("monotonicity_violations", result.monotonicity_violations.len().to_string());
    if spec.family == Family::Alpha {
        kv(
            "blow_up_suspected_before",
            result
                .blow_up_suspected_before()
                .map(value_label)
                .unwrap_or_else(|| "none".into()),
        );
    }
    std::fs::write(dir.join("manifest.txt"), m)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::ops::DIV_FREE_TOL;

    #[test]
    fn catalog_fields_are_admissible() {
        for d in [2, 3] {
            let g = Grid::new(d, 16).unwrap();
            for name in IC_NAMES {
                let (u, theta) = ic_catalog(name, &g, 1.0, 1.0, 7).unwrap();
                assert!(u.divergence_defect() <= DIV_FREE_TOL * norms::vector_sobolev(&u, 1).max(1.0));
                assert_eq!(theta.mean().norm(), 0.0);
                let again = leray_project(&u);
                for (a, b) in again.components().iter().zip(u.components()) {
                    assert!(a.sub(b).unwrap().coeffs().iter().all(|c| c.norm() < 1e-14));
                }
                assert!(SimState::new(u, theta, 0.0).is_ok(), "{name} in {d}-D");
            }
        }
        assert!(ic_catalog("vortex_sheet", &Grid::new(2, 16).unwrap(), 1.0, 1.0, 0).is_err());
    }

    #[test]
    fn taylor_green_matches_closed_form() {
        let g = Grid::new(2, 16).unwrap();
        let (u, _) = ic_catalog("taylor_green", &g, 2.0, 0.0, 0).unwrap();
        // -sin(2 pi x) cos(2 pi y) has coefficients +-i/4 at (+-1, +-1)
        let c = u.component(0).coeff(&[1, 1]).unwrap();
        assert!((c.im - 0.5).abs() < 1e-14 && c.re.abs() < 1e-14);
        assert!((norms::vector_l2(&u) - 2.0 * 0.5 * 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn random_band_is_reproducible() {
        let g = Grid::new(2, 16).unwrap();
        let a = ic_catalog("random_band", &g, 1.0, 1.0, 42).unwrap();
        let b = ic_catalog("random_band", &g, 1.0, 1.0, 42).unwrap();
        assert_eq!(a, b);
        let c = ic_catalog("random_band", &g, 1.0, 1.0, 43).unwrap();
        assert_ne!(a.0, c.0);
    }

    fn small_spec(family: Family, base: ModelParams, ic: IcSpec) -> SweepSpec {
        SweepSpec {
            family,
            values: SweepSpec::halving(0.2, 4),
            base_params: base,
            ic,
            grid: Grid::new(2, 16).unwrap(),
            stepper: StepperConfig {
                step: TimeStep::Fixed(0.01),
                t_end: 0.05,
                output_every: 1,
                ..Default::default()
            },
            diag: DiagConfig::default(),
            error_norms: ErrorNorm::ALL.to_vec(),
        }
    }

    #[test]
    fn zero_data_gives_zero_errors() {
        let ic = IcSpec {
            amplitude: 0.0,
            theta_amplitude: 0.0,
            ..Default::default()
        };
        let spec = small_spec(Family::Alpha, ModelParams::isotropic(2, 0.0, 0.0, 0.0), ic);
        let res = blow_up_study(&spec).unwrap();
        assert!(res.runs.iter().all(|r| r.errors == [0.0; 4]));
        assert!(res.orders.iter().all(|o| o.is_none()));
        assert!(res.blow_up.iter().all(|r| r.indicators.iter().all(|&v| v == 0.0)));
        assert!(res.blow_up_suspected_before().is_none());
    }

    #[test]
    fn kappa_sweep_matches_heat_kernel() {
        let g = Grid::new(2, 16).unwrap();
        let spec = small_spec(
            Family::Kappa,
            ModelParams::isotropic(2, 0.0, 0.0, 0.1),
            IcSpec::default(),
        );
        // theta = cos(2 pi y) with u = 0 forces P(theta e_2) = 0, so u stays 0.
        let theta0 = SpectralField::mode(&g, &[0, 1], 1.0, 0.0).unwrap();
        let state0 = SimState::new(VectorField::zeros(&g), theta0.clone(), 0.0).unwrap();
        let stepper = StepperConfig {
            keep_fields: true,
            ..spec.stepper.clone()
        };
        let rate = (2.0 * PI).powi(2);
        let mut prev: Option<f64> = None;
        for kappa in SweepSpec::halving(1e-3, 4) {
            let p = Family::Kappa.apply(&spec.base_params, kappa);
            let traj = run_member(&state0, &p, &stepper, &spec.diag).unwrap();
            let last = traj.fields.last().unwrap();
            let t = last.t;
            // |theta_kappa - theta_0| = |1 - exp(-kappa rate t)| / sqrt(2)
            let e = norms::l2(&last.theta.sub(&theta0).unwrap());
            let expect = (1.0 - (-kappa * rate * t).exp()) / 2f64.sqrt();
            assert!((e - expect).abs() < 1e-12);
            if let Some(pe) = prev {
                let order: f64 = (pe / e).log2();
                assert!((order - 1.0).abs() < 0.1, "{order}");
            }
            prev = Some(e);
        }
    }

    #[test]
    fn sweep_is_deterministic_and_uses_limit_reference() {
        crate::reduce::set_deterministic(true);
        let spec = small_spec(
            Family::Alpha,
            ModelParams::isotropic(2, 1e-2, 1e-2, 0.0),
            IcSpec {
                amplitude: 0.5,
                theta_amplitude: 0.5,
                ..Default::default()
            },
        );
        let a = run_sweep(&spec).unwrap();
        let b = run_sweep(&spec).unwrap();
        assert_eq!(a.reference_value, 0.0);
        for (x, y) in a.runs.iter().zip(&b.runs) {
            assert_eq!(x.errors, y.errors);
        }
        assert!(a.runs.iter().all(|r| r.errors[0] > 0.0));
        assert!(a.order(ErrorNorm::L2U).is_some());
    }

    #[test]
    fn sweep_directory_layout() {
        let spec = small_spec(
            Family::Alpha,
            ModelParams::isotropic(2, 1e-2, 0.0, 0.0),
            IcSpec::default(),
        );
        let res = run_sweep(&spec).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_sweep_dir(dir.path(), &spec, &res).unwrap();
        let (header, rows) = crate::io::csv::read_table(&dir.path().join("summary.csv")).unwrap();
        assert_eq!(
            header,
            ["value", "e_L2_u", "e_V_u", "e_L2_theta", "e_H1_xi", "sup_indicator", "censored_flag"]
        );
        assert_eq!(rows.len(), 4);
        for file in ["run_alpha_0.2.csv", "run_alpha_0.025.csv", "run_reference.csv", "blow_up.csv"] {
            assert!(dir.path().join(file).exists(), "{file}");
        }
        let manifest = std::fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
        assert!(manifest.contains("family = alpha\n"));
        assert!(manifest.contains("reference_value = 0\n"));
    }

    #[test]
    fn invalid_specs_rejected() {
        let mut spec = small_spec(Family::Alpha, ModelParams::isotropic(2, 0.0, 0.0, 0.0), IcSpec::default());
        spec.values = vec![0.1, 0.2];
        assert!(run_sweep(&spec).is_err());
        spec.values = vec![0.2, 0.1];
        spec.family = Family::Kappa;
        assert!(matches!(blow_up_study(&spec), Err(Error::UnsupportedConfig(_))));
        assert!(Family::parse("beta").is_err());
    }
}
