//! Integrating-factor Runge-Kutta time stepping.
//!
//! The diagonal stiff part (viscosity after the Voigt rescaling, and
//! diffusion) is integrated exactly through `exp(-L dt)`; the explicit part
//! goes through the classical four-stage scheme (Lawson's IFRK4). Budget
//! integrals ride along as extra unknowns with no linear part, so they are
//! integrated to the same order.

use std::fmt;

use log::{debug, info};

use crate::diagnostics::{budget_rates, record, Budget, DiagConfig, DiagRecord, Monitor};
use crate::error::{Error, Result};
use crate::models::{explicit_tendency, linear_rates, LinearRates, ModelParams, SimState};
use crate::spectral::norms::{linf_samples, magnitude};
use crate::spectral::{dealias, dealias_vector, leray_project, SpectralField, VectorField};

/// Floor on the velocity scale in the CFL estimate.
pub const CFL_VELOCITY_FLOOR: f64 = 1e-8;
/// Steps between re-evaluations of an adaptive step.
pub const ADAPT_INTERVAL: u64 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Exact linear part, RK4 on the rest.
    Ifrk4,
    /// Classical RK4 on the full right-hand side.
    Rk4,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Ifrk4 => "ifrk4",
            Scheme::Rk4 => "rk4",
        }
    }

    pub fn parse(s: &str) -> Option<Scheme> {
        match s.to_ascii_lowercase().as_str() {
            "ifrk4" => Some(Scheme::Ifrk4),
            "rk4" => Some(Scheme::Rk4),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeStep {
    Fixed(f64),
    Adaptive { cfl: f64, dt_max: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepperConfig {
    pub scheme: Scheme,
    pub step: TimeStep,
    pub t_end: f64,
    /// Record diagnostics every this many steps (plus the first and last state).
    pub output_every: u64,
    /// Stop gracefully once `max |u|` exceeds this.
    pub guard: f64,
    /// Keep a copy of the state at every record.
    pub keep_fields: bool,
}

impl Default for StepperConfig {
    fn default() -> Self {
        StepperConfig {
            scheme: Scheme::Ifrk4,
            step: TimeStep::Adaptive {
                cfl: 0.5,
                dt_max: 1e-2,
            },
            t_end: 1.0,
            output_every: 10,
            guard: 1e6,
            keep_fields: false,
        }
    }
}

impl StepperConfig {
    pub fn validate(&self) -> Result<()> {
        match self.step {
            TimeStep::Fixed(dt) if !(dt > 0.0 && dt.is_finite()) => {
                return Err(Error::Config(format!("dt must be > 0, got {dt}")))
            }
            TimeStep::Adaptive { cfl, dt_max } => {
                if !(cfl > 0.0 && cfl <= 1.0) {
                    return Err(Error::Config(format!("cfl target must lie in (0, 1], got {cfl}")));
                }
                if !(dt_max > 0.0 && dt_max.is_finite()) {
                    return Err(Error::Config(format!("dt_max must be > 0, got {dt_max}")));
                }
            }
            _ => {}
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::Config(format!("t_end must be >= 0, got {}", self.t_end)));
        }
        if self.output_every == 0 {
            return Err(Error::Config("output_every must be >= 1".into()));
        }
        if !(self.guard > 0.0) {
            return Err(Error::Config("guard must be > 0".into()));
        }
        Ok(())
    }
}

/// Grid max of `|u|`.
pub fn velocity_sup(u: &VectorField) -> f64 {
    linf_samples(&magnitude(&u.to_physical()))
}

/// `cfl * dx / max(max|u|, floor)`, capped at `dt_max`.
pub fn cfl_dt(state: &SimState, cfl_target: f64, dt_max: f64) -> f64 {
    let umax = velocity_sup(&state.u).max(CFL_VELOCITY_FLOOR);
    (cfl_target * state.grid().spacing() / umax).min(dt_max)
}

struct Factors {
    dt_bits: u64,
    u_full: Vec<f64>,
    u_half: Vec<f64>,
    t_full: Vec<f64>,
    t_half: Vec<f64>,
}

/// One-step map for a fixed parameter set.
pub struct Stepper {
    params: ModelParams,
    scheme: Scheme,
    rates: LinearRates,
    factors: Option<Factors>,
}

#[derive(Clone)]
struct Stage {
    u: VectorField,
    theta: SpectralField,
}

impl Stage {
    fn of(state: &SimState) -> Self {
        Stage {
            u: state.u.clone(),
            theta: state.theta.clone(),
        }
    }

    fn state(&self, t: f64) -> SimState {
        SimState {
            u: self.u.clone(),
            theta: self.theta.clone(),
            t,
        }
    }

    fn scaled(&self, fu: &[f64], ft: &[f64]) -> Stage {
        Stage {
            u: self.u.map_modes(|i, c| c * fu[i]),
            theta: self.theta.map_modes(|i, c| c * ft[i]),
        }
    }

    fn axpy(&self, a: f64, other: &Stage) -> Result<Stage> {
        Ok(Stage {
            u: self.u.axpy(a, &other.u)?,
            theta: self.theta.axpy(a, &other.theta)?,
        })
    }
}

impl Stepper {
    pub fn new(state: &SimState, params: &ModelParams, scheme: Scheme) -> Result<Self> {
        params.validate()?;
        if state.grid().dim() != params.dim {
            return Err(Error::Config("state and parameter dimensions differ".into()));
        }
        Ok(Stepper {
            params: params.clone(),
            scheme,
            rates: linear_rates(state.grid(), params),
            factors: None,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    fn factors(&mut self, dt: f64) -> &Factors {
        let bits = dt.to_bits();
        if self.factors.as_ref().map(|f| f.dt_bits) != Some(bits) {
            let ex = |rates: &[f64], h: f64| rates.iter().map(|r| (-r * h).exp()).collect();
            self.factors = Some(Factors {
                dt_bits: bits,
                u_full: ex(&self.rates.velocity, dt),
                u_half: ex(&self.rates.velocity, 0.5 * dt),
                t_full: ex(&self.rates.scalar, dt),
                t_half: ex(&self.rates.scalar, 0.5 * dt),
            });
        }
        self.factors.as_ref().expect("just set")
    }

    fn explicit(&self, s: &Stage, t: f64) -> Result<Stage> {
        let (u, theta) = explicit_tendency(&s.state(t), &self.params)?;
        Ok(Stage { u, theta })
    }

    fn full(&self, s: &Stage, t: f64) -> Result<Stage> {
        let mut k = self.explicit(s, t)?;
        let r = &self.rates;
        k.u = k.u.sub(&s.u.map_modes(|i, c| c * r.velocity[i]))?;
        k.theta = k.theta.sub(&s.theta.map_modes(|i, c| c * r.scalar[i]))?;
        Ok(k)
    }

    /// Advances by `dt`; also returns the budget increment over the step.
    pub fn step(&mut self, state: &SimState, dt: f64) -> Result<(SimState, Budget)> {
        let t = state.t;
        let y = Stage::of(state);
        let (stages, next) = match self.scheme {
            Scheme::Ifrk4 => {
                let (uf, uh, tf, th) = {
                    let f = self.factors(dt);
                    (f.u_full.clone(), f.u_half.clone(), f.t_full.clone(), f.t_half.clone())
                };
                let k1 = self.explicit(&y, t)?;
                let y2 = y.axpy(0.5 * dt, &k1)?.scaled(&uh, &th);
                let k2 = self.explicit(&y2, t + 0.5 * dt)?;
                let y_half = y.scaled(&uh, &th);
                let y3 = y_half.axpy(0.5 * dt, &k2)?;
                let k3 = self.explicit(&y3, t + 0.5 * dt)?;
                let y4 = y.scaled(&uf, &tf).axpy(dt, &k3.scaled(&uh, &th))?;
                let k4 = self.explicit(&y4, t + dt)?;

                let mut acc = k1.scaled(&uf, &tf);
                acc = acc.axpy(2.0, &k2.axpy(1.0, &k3)?.scaled(&uh, &th))?;
                acc = acc.axpy(1.0, &k4)?;
                let next = y.scaled(&uf, &tf).axpy(dt / 6.0, &acc)?;
                ([y, y2, y3, y4], next)
            }
            Scheme::Rk4 => {
                let k1 = self.full(&y, t)?;
                let y2 = y.axpy(0.5 * dt, &k1)?;
                let k2 = self.full(&y2, t + 0.5 * dt)?;
                let y3 = y.axpy(0.5 * dt, &k2)?;
                let k3 = self.full(&y3, t + 0.5 * dt)?;
                let y4 = y.axpy(dt, &k3)?;
                let k4 = self.full(&y4, t + dt)?;
                let acc = k1.axpy(2.0, &k2)?.axpy(2.0, &k3)?.axpy(1.0, &k4)?;
                let next = y.axpy(dt / 6.0, &acc)?;
                ([y, y2, y3, y4], next)
            }
        };

        let weights = [1.0, 2.0, 2.0, 1.0];
        let mut increment = Budget::default();
        for (s, w) in stages.iter().zip(weights) {
            let rates = budget_rates(&s.state(t), &self.params);
            increment = increment.axpy(w * dt / 6.0, &rates);
        }

        let u = dealias_vector(&leray_project(&next.u));
        let theta = dealias(&next.theta);
        Ok((SimState { u, theta, t: t + dt }, increment))
    }
}

/// One IFRK4 step.
pub fn step(state: &SimState, params: &ModelParams, dt: f64) -> Result<SimState> {
    Ok(Stepper::new(state, params, Scheme::Ifrk4)?.step(state, dt)?.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryEntry {
    pub step: u64,
    pub record: DiagRecord,
    pub budget: Budget,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum RunStatus {
    #[default]
    Completed,
    /// Stopped at `t` because `max |u|` exceeded the guard.
    Guarded { t: f64, velocity: f64 },
}

#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub entries: Vec<TrajectoryEntry>,
    /// States at each record when `keep_fields` is set.
    pub fields: Vec<SimState>,
    pub status: RunStatus,
}

impl Trajectory {
    pub fn records(&self) -> impl Iterator<Item = &DiagRecord> {
        self.entries.iter().map(|e| &e.record)
    }

    pub fn last(&self) -> Option<&DiagRecord> {
        self.entries.last().map(|e| &e.record)
    }

    pub fn is_censored(&self) -> bool {
        matches!(self.status, RunStatus::Guarded { .. })
    }
}

/// Failure inside `integrate`, with everything recorded before it.
#[derive(Debug)]
pub struct IntegrateFailure {
    pub error: Error,
    pub partial: Trajectory,
}

impl fmt::Display for IntegrateFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} ({} records kept)",
            self.error,
            self.partial.entries.len()
        )
    }
}

impl std::error::Error for IntegrateFailure {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

impl From<IntegrateFailure> for Error {
    fn from(f: IntegrateFailure) -> Self {
        f.error
    }
}

/// Everything needed to continue a run bit-for-bit.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub state: SimState,
    pub step_index: u64,
    pub dt: f64,
    pub budget: Budget,
    pub initial: DiagRecord,
}

pub struct Integrator {
    stepper: Stepper,
    config: StepperConfig,
    diag: DiagConfig,
    state: SimState,
    step_index: u64,
    dt: f64,
    budget: Budget,
    monitor: Monitor,
}

impl Integrator {
    pub fn new(
        state0: SimState,
        params: &ModelParams,
        config: &StepperConfig,
        diag: &DiagConfig,
    ) -> Result<Self> {
        config.validate()?;
        let stepper = Stepper::new(&state0, params, config.scheme)?;
        let initial = record(&state0, params, &diag.p_grid);
        let dt = match config.step {
            TimeStep::Fixed(dt) => dt,
            TimeStep::Adaptive { cfl, dt_max } => cfl_dt(&state0, cfl, dt_max),
        };
        Ok(Integrator {
            stepper,
            config: config.clone(),
            diag: diag.clone(),
            monitor: Monitor::new(params, &diag.p_grid, initial),
            state: state0,
            step_index: 0,
            dt,
            budget: Budget::default(),
        })
    }

    pub fn from_checkpoint(
        cp: Checkpoint,
        params: &ModelParams,
        config: &StepperConfig,
        diag: &DiagConfig,
    ) -> Result<Self> {
        config.validate()?;
        if cp.initial.lp_theta.len() != diag.p_grid.len() {
            return Err(Error::Snapshot(
                "checkpoint p grid differs from the diagnostics configuration".into(),
            ));
        }
        let stepper = Stepper::new(&cp.state, params, config.scheme)?;
        Ok(Integrator {
            stepper,
            config: config.clone(),
            diag: diag.clone(),
            monitor: Monitor::new(params, &diag.p_grid, cp.initial),
            state: cp.state,
            step_index: cp.step_index,
            dt: cp.dt,
            budget: cp.budget,
        })
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            state: self.state.clone(),
            step_index: self.step_index,
            dt: self.dt,
            budget: self.budget,
            initial: self.monitor.initial().clone(),
        }
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn step_index(&self) -> u64 {
        self.step_index
    }

    pub fn set_t_end(&mut self, t_end: f64) {
        self.config.t_end = t_end;
    }

    fn current_record(&self) -> DiagRecord {
        let base = record(&self.state, self.stepper.params(), &self.diag.p_grid);
        self.monitor.complete(base, &self.budget)
    }

    fn push(&self, traj: &mut Trajectory) {
        traj.entries.push(TrajectoryEntry {
            step: self.step_index,
            record: self.current_record(),
            budget: self.budget,
        });
        if self.config.keep_fields {
            traj.fields.push(self.state.clone());
        }
    }

    /// Runs to `t_end`. `after_step` sees the integrator after every step.
    pub fn run_with<F>(&mut self, mut after_step: F) -> std::result::Result<Trajectory, IntegrateFailure>
    where
        F: FnMut(&Integrator) -> Result<()>,
    {
        let mut traj = Trajectory::default();
        if self.step_index == 0 {
            self.push(&mut traj);
        }
        let t_end = self.config.t_end;
        let tol = 1e-12 * t_end.abs().max(1.0);
        while self.state.t < t_end - tol {
            if let TimeStep::Adaptive { cfl, dt_max } = self.config.step {
                if self.step_index % ADAPT_INTERVAL == 0 {
                    self.dt = cfl_dt(&self.state, cfl, dt_max);
                    debug!("step {}: dt = {:e}", self.step_index, self.dt);
                }
            }
            let remaining = t_end - self.state.t;
            let last = remaining <= self.dt * (1.0 + 1e-9);
            let h = if last { remaining } else { self.dt };

            let result = self.stepper.step(&self.state, h);
            let (mut next, inc) = match result {
                Ok(v) => v,
                Err(e) => return Err(self.fail(e, traj)),
            };
            if last {
                next.t = t_end;
            }
            self.step_index += 1;
            if !next.is_finite() {
                let err = Error::NumericalFault {
                    step: self.step_index,
                    t: next.t,
                    what: "non-finite coefficient after step".into(),
                };
                return Err(self.fail(err, traj));
            }
            self.state = next;
            self.budget = self.budget.axpy(1.0, &inc);

            let umax = velocity_sup(&self.state.u);
            if umax > self.config.guard {
                info!(
                    "velocity guard tripped at t = {} (max |u| = {umax:e})",
                    self.state.t
                );
                self.push(&mut traj);
                traj.status = RunStatus::Guarded {
                    t: self.state.t,
                    velocity: umax,
                };
                return Ok(traj);
            }
            let done = self.state.t >= t_end - tol;
            if done || self.step_index % self.config.output_every == 0 {
                self.push(&mut traj);
            }
            if let Err(e) = after_step(self) {
                return Err(self.fail(e, traj));
            }
        }
        Ok(traj)
    }

    pub fn run(&mut self) -> std::result::Result<Trajectory, IntegrateFailure> {
        self.run_with(|_| Ok(()))
    }

    fn fail(&self, error: Error, partial: Trajectory) -> IntegrateFailure {
        let error = match error {
            Error::NumericalFault { what, .. } => Error::NumericalFault {
                step: self.step_index,
                t: self.state.t,
                what,
            },
            other => other,
        };
        IntegrateFailure { error, partial }
    }
}

/// Integrates from `state0` to `config.t_end`.
pub fn integrate(
    state0: SimState,
    params: &ModelParams,
    config: &StepperConfig,
    diag: &DiagConfig,
) -> std::result::Result<Trajectory, IntegrateFailure> {
    let mut it = Integrator::new(state0, params, config, diag).map_err(|error| IntegrateFailure {
        error,
        partial: Trajectory::default(),
    })?;
    it.run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{norms, Grid};
    use std::f64::consts::PI;

    fn fixed(dt: f64, t_end: f64) -> StepperConfig {
        StepperConfig {
            step: TimeStep::Fixed(dt),
            t_end,
            output_every: 1,
            ..Default::default()
        }
    }

    #[test]
    fn cfl_examples() {
        let g = Grid::new(2, 64).unwrap();
        let zero = SimState::zeros(&g);
        assert_eq!(cfl_dt(&zero, 0.5, 0.02), 0.02);
        // u = (0, cos(2 pi x)) has max |u| = 1 exactly at x = 0
        let c = SpectralField::mode(&g, &[1, 0], 1.0, 0.0).unwrap();
        let u = crate::spectral::ops::certify_div_free(
            VectorField::new(vec![SpectralField::zeros(&g), c]).unwrap(),
        )
        .unwrap();
        let s = SimState::new(u, SpectralField::zeros(&g), 0.0).unwrap();
        let dt = cfl_dt(&s, 0.5, 1.0);
        assert!((dt - 0.5 / 64.0).abs() < 1e-15);
        assert!((cfl_dt(&s, 0.25, 1.0) - dt / 2.0).abs() < 1e-15);
    }

    #[test]
    fn zero_state_is_fixed_point() {
        let g = Grid::new(2, 16).unwrap();
        let s = SimState::zeros(&g);
        let p = ModelParams::isotropic(2, 0.1, 0.1, 0.1);
        let next = step(&s, &p, 0.01).unwrap();
        assert_eq!(next.u, s.u);
        assert_eq!(next.theta, s.theta);
        assert!((next.t - 0.01).abs() < 1e-16);
    }

    #[test]
    fn pure_diffusion_is_exact() {
        let g = Grid::new(2, 16).unwrap();
        let theta = SpectralField::mode(&g, &[0, 2], 1.0, 0.0).unwrap();
        let s = SimState::new(VectorField::zeros(&g), theta.clone(), 0.0).unwrap();
        let kappa = 0.05;
        let p = ModelParams::isotropic(2, 0.0, kappa, 0.0);
        let dt = 0.01;
        let next = step(&s, &p, dt).unwrap();
        let decay = (-kappa * (2.0 * PI * 2.0).powi(2) * dt).exp();
        let expect = theta.scale(decay);
        for (a, b) in next.theta.coeffs().iter().zip(expect.coeffs()) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn zero_horizon_gives_single_record() {
        let g = Grid::new(2, 16).unwrap();
        let s = SimState::zeros(&g);
        let traj = integrate(
            s,
            &ModelParams::isotropic(2, 0.0, 0.0, 0.0),
            &fixed(0.1, 0.0),
            &DiagConfig::default(),
        )
        .unwrap();
        assert_eq!(traj.entries.len(), 1);
    }

    #[test]
    fn heat_decay_at_every_record() {
        let g = Grid::new(2, 16).unwrap();
        let theta = SpectralField::mode(&g, &[1, 1], 1.0, 0.0).unwrap();
        let s = SimState::new(VectorField::zeros(&g), theta.clone(), 0.0).unwrap();
        let kappa = 0.01;
        let p = ModelParams::isotropic(2, 0.0, kappa, 0.0);
        let traj = integrate(s, &p, &fixed(0.01, 0.25), &DiagConfig::default()).unwrap();
        let l0 = norms::l2(&theta);
        let rate = kappa * (2.0 * PI).powi(2) * 2.0;
        assert_eq!(traj.entries.len(), 26);
        for r in traj.records() {
            let expect = l0 * (-rate * r.t).exp();
            assert!((r.l2_theta - expect).abs() <= 1e-10 * l0);
        }
        assert_eq!(traj.last().unwrap().t, 0.25);
    }

    #[test]
    fn times_increase_and_end_on_target() {
        let g = Grid::new(2, 16).unwrap();
        let (u, theta) = crate::experiments::ic_catalog("taylor_green", &g, 1.0, 0.5, 0).unwrap();
        let s = SimState::new(u, theta, 0.0).unwrap();
        let cfg = StepperConfig {
            t_end: 0.137,
            output_every: 3,
            ..Default::default()
        };
        let traj = integrate(s, &ModelParams::isotropic(2, 1e-3, 1e-3, 0.0), &cfg, &DiagConfig::default()).unwrap();
        let ts: Vec<f64> = traj.records().map(|r| r.t).collect();
        assert!(ts.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(*ts.last().unwrap(), 0.137);
    }

    #[test]
    fn guard_stops_gracefully() {
        let g = Grid::new(2, 16).unwrap();
        let (u, theta) = crate::experiments::ic_catalog("taylor_green", &g, 1.0, 0.5, 0).unwrap();
        let s = SimState::new(u, theta, 0.0).unwrap();
        let cfg = StepperConfig {
            guard: 0.5,
            ..fixed(0.01, 1.0)
        };
        let traj = integrate(s, &ModelParams::isotropic(2, 0.0, 0.0, 0.0), &cfg, &DiagConfig::default()).unwrap();
        assert!(traj.is_censored());
        assert_eq!(traj.entries.len(), 2);
    }

    #[test]
    fn bad_configs_rejected() {
        assert!(fixed(0.0, 1.0).validate().is_err());
        let c = StepperConfig {
            step: TimeStep::Adaptive { cfl: 1.5, dt_max: 0.1 },
            ..Default::default()
        };
        assert!(c.validate().is_err());
        let c = StepperConfig {
            output_every: 0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }
}
