//! Monitored functionals and the runtime checks of the a priori estimates.

mod inequalities;

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::models::{ModelParams, SimState};
use crate::spectral::norms::{self, lp_samples, magnitude};
use crate::spectral::{curl2d, curl3d, DEFAULT_P_GRID};
use crate::timestepping::Trajectory;

pub use inequalities::{
    agmon_fit, brezis_required_constant, brezis_verify, cz_sqrt_l_verify, default_corpus,
    default_vorticity_corpus, poincare_ratio, CzFit, DEFAULT_EPS_GRID,
};

const TWO_PI: f64 = 2.0 * PI;

#[derive(Debug, Clone, PartialEq)]
pub struct DiagConfig {
    /// Lebesgue exponents monitored for theta and omega (also the sqrt(L) grid).
    pub p_grid: Vec<f64>,
    /// Admitted grid-max overshoot of |theta|, relative to its initial value.
    pub max_principle_tol: f64,
    /// Admitted relative drift of |theta|_p in non-diffusive runs.
    pub lp_drift_tol: f64,
}

impl Default for DiagConfig {
    fn default() -> Self {
        DiagConfig {
            p_grid: DEFAULT_P_GRID.to_vec(),
            max_principle_tol: 5e-3,
            lp_drift_tol: 1e-3,
        }
    }
}

/// Snapshot of every monitored functional at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagRecord {
    pub t: f64,
    pub l2_u: f64,
    pub h1_u: f64,
    pub h2_u: f64,
    pub l2_theta: f64,
    pub linf_theta_min: f64,
    pub linf_theta_max: f64,
    pub l2_omega: f64,
    pub sqrt_l_omega: f64,
    /// `|u|^2 + alpha^2 |grad u|^2`
    pub voigt_energy: f64,
    pub energy_budget_residual: f64,
    /// `alpha^2 |grad u|^2`
    pub blow_up_indicator: f64,
    pub vort_bound_residual: f64,
    pub theta_bound_residual: f64,
    pub lp_theta: Vec<f64>,
    pub lp_omega: Vec<f64>,
}

pub const SCALAR_COLUMNS: [&str; 14] = [
    "t",
    "l2_u",
    "h1_u",
    "h2_u",
    "l2_theta",
    "linf_theta_min",
    "linf_theta_max",
    "l2_omega",
    "sqrtL_omega",
    "voigt_energy",
    "energy_budget_residual",
    "blow_up_indicator",
    "vort_bound_residual",
    "theta_bound_residual",
];

fn p_label(p: f64) -> String {
    if p.fract() == 0.0 {
        format!("{}", p as i64)
    } else {
        format!("{p}")
    }
}

impl DiagRecord {
    pub fn column_names(p_grid: &[f64]) -> Vec<String> {
        let mut cols: Vec<String> = SCALAR_COLUMNS.iter().map(|s| s.to_string()).collect();
        cols.extend(p_grid.iter().map(|&p| format!("lp_theta_p{}", p_label(p))));
        cols.extend(p_grid.iter().map(|&p| format!("lp_omega_p{}", p_label(p))));
        cols
    }

    /// Values in column order.
    pub fn to_row(&self) -> Vec<f64> {
        let mut row = vec![
            self.t,
            self.l2_u,
            self.h1_u,
            self.h2_u,
            self.l2_theta,
            self.linf_theta_min,
            self.linf_theta_max,
            self.l2_omega,
            self.sqrt_l_omega,
            self.voigt_energy,
            self.energy_budget_residual,
            self.blow_up_indicator,
            self.vort_bound_residual,
            self.theta_bound_residual,
        ];
        row.extend(&self.lp_theta);
        row.extend(&self.lp_omega);
        row
    }

    pub fn from_row(row: &[f64]) -> Result<Self> {
        let base = SCALAR_COLUMNS.len();
        if row.len() < base || (row.len() - base) % 2 != 0 {
            return Err(Error::Config(format!("bad diagnostics row length {}", row.len())));
        }
        let np = (row.len() - base) / 2;
        Ok(DiagRecord {
            t: row[0],
            l2_u: row[1],
            h1_u: row[2],
            h2_u: row[3],
            l2_theta: row[4],
            linf_theta_min: row[5],
            linf_theta_max: row[6],
            l2_omega: row[7],
            sqrt_l_omega: row[8],
            voigt_energy: row[9],
            energy_budget_residual: row[10],
            blow_up_indicator: row[11],
            vort_bound_residual: row[12],
            theta_bound_residual: row[13],
            lp_theta: row[base..base + np].to_vec(),
            lp_omega: row[base + np..].to_vec(),
        })
    }

    /// `max |theta|` on the grid.
    pub fn linf_theta(&self) -> f64 {
        self.linf_theta_max.abs().max(self.linf_theta_min.abs())
    }
}

/// Time integrals accumulated alongside the solution.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Budget {
    /// `int 2 (theta e_d, u) dt`
    pub work: f64,
    /// `int 2 sum_j nu_j |d_j u|^2 dt`
    pub viscous: f64,
    /// `int 2 kappa |grad theta|^2 dt`
    pub thermal: f64,
    /// `int |d_1 omega|^2 dt` (planar runs only)
    pub horizontal_enstrophy: f64,
}

impl Budget {
    pub const LEN: usize = 4;

    pub fn to_array(&self) -> [f64; 4] {
        [self.work, self.viscous, self.thermal, self.horizontal_enstrophy]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Budget {
            work: a[0],
            viscous: a[1],
            thermal: a[2],
            horizontal_enstrophy: a[3],
        }
    }

    pub(crate) fn axpy(&self, a: f64, rate: &Budget) -> Budget {
        Budget {
            work: self.work + a * rate.work,
            viscous: self.viscous + a * rate.viscous,
            thermal: self.thermal + a * rate.thermal,
            horizontal_enstrophy: self.horizontal_enstrophy + a * rate.horizontal_enstrophy,
        }
    }
}

/// Instantaneous rates of the [`Budget`] integrals.
pub fn budget_rates(state: &SimState, params: &ModelParams) -> Budget {
    let g = state.grid();
    let d = g.dim();
    let work = 2.0
        * state
            .theta
            .inner(state.u.component(params.buoyancy_axis))
            .expect("shared grid");

    let mut viscous = 0.0;
    for (j, &nu) in params.nu.iter().enumerate() {
        if nu == 0.0 {
            continue;
        }
        for comp in state.u.components() {
            let c = comp.coeffs();
            viscous += nu
                * crate::reduce::sum_by(c.len(), |i| {
                    let kj = TWO_PI * g.wavevector(i)[j] as f64;
                    kj * kj * c[i].norm_sqr()
                });
        }
    }
    let thermal = if params.kappa == 0.0 {
        0.0
    } else {
        params.kappa * norms::sobolev(&state.theta, 1).powi(2)
    };

    let horizontal_enstrophy = if d == 2 {
        let u1 = state.u.component(0).coeffs();
        let u2 = state.u.component(1).coeffs();
        crate::reduce::sum_by(u1.len(), |i| {
            let k = g.wavevector(i);
            let w = Complex64::new(0.0, TWO_PI)
                * (u2[i] * k[0] as f64 - u1[i] * k[1] as f64);
            (TWO_PI * k[0] as f64).powi(2) * w.norm_sqr()
        })
    } else {
        0.0
    };
    Budget {
        work,
        viscous: 2.0 * viscous,
        thermal: 2.0 * thermal,
        horizontal_enstrophy,
    }
}

/// All norms of a state; residual fields are left at zero.
pub fn record(state: &SimState, params: &ModelParams, p_grid: &[f64]) -> DiagRecord {
    let u = &state.u;
    let l2_u = norms::vector_l2(u);
    let h1_u = norms::vector_sobolev(u, 1);
    let h2_u = norms::vector_sobolev(u, 2);

    let theta_s = state.theta.to_physical();
    let tv = theta_s.values();
    let l2_theta = norms::l2(&state.theta);
    let linf_theta_min = crate::reduce::min_by(tv.len(), |i| tv[i]);
    let linf_theta_max = crate::reduce::max_by(tv.len(), |i| tv[i]);
    let lp_theta: Vec<f64> = p_grid.iter().map(|&p| lp_samples(tv, p)).collect();

    let (l2_omega, omega_abs) = if u.dim() == 2 {
        let w = curl2d(u).expect("planar");
        (norms::l2(&w), w.to_physical().into_values().into_iter().map(f64::abs).collect())
    } else {
        let w = curl3d(u).expect("3-D");
        (norms::vector_l2(&w), magnitude(&w.to_physical()))
    };
    let lp_omega: Vec<f64> = p_grid.iter().map(|&p| lp_samples(&omega_abs, p)).collect();
    let sqrt_l_omega = p_grid
        .iter()
        .zip(&lp_omega)
        .map(|(&p, &v)| if p > 1.0 { v / (p - 1.0).sqrt() } else { 0.0 })
        .fold(0.0, f64::max);

    let a2 = params.alpha * params.alpha;
    DiagRecord {
        t: state.t,
        l2_u,
        h1_u,
        h2_u,
        l2_theta,
        linf_theta_min,
        linf_theta_max,
        l2_omega,
        sqrt_l_omega,
        voigt_energy: l2_u * l2_u + a2 * h1_u * h1_u,
        energy_budget_residual: 0.0,
        blow_up_indicator: a2 * h1_u * h1_u,
        vort_bound_residual: 0.0,
        theta_bound_residual: 0.0,
        lp_theta,
        lp_omega,
    }
}

/// Whether the anisotropic vorticity estimates apply to a parameter set.
pub fn vorticity_bounds_apply(params: &ModelParams) -> bool {
    params.dim == 2 && params.nu[0] > 0.0 && params.alpha == 0.0
}

/// Per-p residual of `|omega(t)|_p^2 <= |omega_0|_p^2 + (p-1)/(2 nu_1) |theta_0|_p^2 t`;
/// for p = 2 additionally of
/// `|omega|^2 + nu_1 int |d_1 omega|^2 <= |omega_0|^2 + t |theta_0|^2 / nu_1`.
pub fn vorticity_residuals(
    rec: &DiagRecord,
    budget: &Budget,
    initial: &DiagRecord,
    params: &ModelParams,
    p_grid: &[f64],
) -> Vec<f64> {
    let nu = params.nu[0];
    let t = rec.t - initial.t;
    p_grid
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let w0 = initial.lp_omega[i];
            let th0 = initial.lp_theta[i];
            let w = rec.lp_omega[i];
            let mut r = w * w - w0 * w0 - (p - 1.0) / (2.0 * nu) * th0 * th0 * t;
            if p == 2.0 {
                let with_dissipation = rec.l2_omega * rec.l2_omega
                    + nu * budget.horizontal_enstrophy
                    - initial.l2_omega * initial.l2_omega
                    - t * initial.l2_theta * initial.l2_theta / nu;
                r = r.max(with_dissipation);
            }
            r.max(0.0)
        })
        .collect()
}

/// Fills residual fields of records against the initial state.
#[derive(Debug, Clone)]
pub struct Monitor {
    params: ModelParams,
    p_grid: Vec<f64>,
    initial: DiagRecord,
}

impl Monitor {
    pub fn new(params: &ModelParams, p_grid: &[f64], initial: DiagRecord) -> Self {
        Monitor {
            params: params.clone(),
            p_grid: p_grid.to_vec(),
            initial,
        }
    }

    pub fn initial(&self) -> &DiagRecord {
        &self.initial
    }

    pub fn complete(&self, mut rec: DiagRecord, budget: &Budget) -> DiagRecord {
        let predicted = self.initial.voigt_energy + budget.work - budget.viscous;
        rec.energy_budget_residual = (rec.voigt_energy - predicted).abs();
        rec.theta_bound_residual = (rec.linf_theta() - self.initial.linf_theta()).max(0.0);
        rec.vort_bound_residual = if vorticity_bounds_apply(&self.params) {
            vorticity_residuals(&rec, budget, &self.initial, &self.params, &self.p_grid)
                .into_iter()
                .fold(0.0, f64::max)
        } else {
            0.0
        };
        rec
    }
}

/// Largest grid-max overshoot `max(0, |theta(t)|_inf - |theta_0|_inf)` along a run.
pub fn theta_max_principle_residual(traj: &Trajectory) -> Result<f64> {
    let first = traj
        .entries
        .first()
        .ok_or_else(|| Error::Config("empty trajectory".into()))?;
    let theta0 = first.record.linf_theta();
    Ok(traj
        .entries
        .iter()
        .map(|e| (e.record.linf_theta() - theta0).max(0.0))
        .fold(0.0, f64::max))
}

fn check_vorticity_config(traj: &Trajectory, params: &ModelParams) -> Result<()> {
    if !vorticity_bounds_apply(params) || params.kappa != 0.0 {
        return Err(Error::UnsupportedConfig(
            "vorticity bounds need d = 2, nu_1 > 0, kappa = 0, alpha = 0".into(),
        ));
    }
    if traj.entries.is_empty() {
        return Err(Error::Config("empty trajectory".into()));
    }
    Ok(())
}

/// Largest residual over all records and all p, per p.
pub fn vorticity_bound_residuals_by_p(
    traj: &Trajectory,
    params: &ModelParams,
    p_grid: &[f64],
) -> Result<Vec<f64>> {
    check_vorticity_config(traj, params)?;
    let initial = &traj.entries[0].record;
    if initial.lp_omega.len() != p_grid.len() {
        return Err(Error::Config("p grid does not match the recorded norms".into()));
    }
    let mut worst = vec![0.0f64; p_grid.len()];
    for e in &traj.entries {
        let r = vorticity_residuals(&e.record, &e.budget, initial, params, p_grid);
        for (w, v) in worst.iter_mut().zip(r) {
            *w = w.max(v);
        }
    }
    Ok(worst)
}

/// Largest vorticity-bound residual over the run (absolute).
pub fn vorticity_bound_residual(traj: &Trajectory, params: &ModelParams) -> Result<f64> {
    check_vorticity_config(traj, params)?;
    let np = traj
        .entries
        .first()
        .map(|e| e.record.lp_omega.len())
        .unwrap_or(0);
    let p_grid = if np == DEFAULT_P_GRID.len() {
        DEFAULT_P_GRID.to_vec()
    } else {
        return Err(Error::Config(
            "use vorticity_bound_residuals_by_p for a custom p grid".into(),
        ));
    };
    Ok(vorticity_bound_residuals_by_p(traj, params, &p_grid)?
        .into_iter()
        .fold(0.0, f64::max))
}

/// Largest relative drift `| |theta(t)|_p - |theta_0|_p | / |theta_0|_p` per p.
pub fn theta_lp_drift(traj: &Trajectory) -> Result<Vec<f64>> {
    let first = traj
        .entries
        .first()
        .ok_or_else(|| Error::Config("empty trajectory".into()))?;
    let base = &first.record.lp_theta;
    let mut worst = vec![0.0f64; base.len()];
    for e in &traj.entries {
        for (i, v) in e.record.lp_theta.iter().enumerate() {
            if base[i] > 0.0 {
                worst[i] = worst[i].max((v - base[i]).abs() / base[i]);
            }
        }
    }
    Ok(worst)
}
