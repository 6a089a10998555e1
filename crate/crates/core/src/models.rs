//! Tendencies for the Boussinesq family with per-axis viscosity `nu_j`,
//! diffusivity `kappa` and Voigt length `alpha`:
//!
//! ```text
//! (I + alpha^2 A) du/dt = -B(u, u) + P(theta e_d) + sum_j nu_j d_j^2 u
//!           dtheta/dt  = -sum_j d_j(u^j theta) + kappa Laplacian(theta)
//! ```
//!
//! On the retained modes this is exactly the Galerkin system. The stiff part
//! is diagonal in Fourier space and is returned separately so that the
//! stepper can integrate it exactly.

use std::f64::consts::PI;

use log::warn;

use crate::error::{Error, Result};
use crate::spectral::{
    advect_scalar, advect_velocity, biot_savart, helmholtz_invert, inverse_laplacian,
    leray_project, nonlinear_flux, norms, partial_derivative, Grid, SpectralField, VectorField,
};

const TWO_PI: f64 = 2.0 * PI;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub dim: usize,
    /// Viscosity per axis, `nu[j]` multiplies `d_j^2 u`.
    pub nu: Vec<f64>,
    pub kappa: f64,
    pub alpha: f64,
    /// 0-based axis of the buoyancy force; always `dim - 1`.
    pub buoyancy_axis: usize,
}

impl ModelParams {
    pub fn isotropic(dim: usize, nu: f64, kappa: f64, alpha: f64) -> Self {
        ModelParams {
            dim,
            nu: vec![nu; dim],
            kappa,
            alpha,
            buoyancy_axis: dim - 1,
        }
    }

    /// Horizontal-only viscosity `nu_x`, the remaining axes inviscid.
    pub fn horizontal(dim: usize, nu_x: f64, kappa: f64, alpha: f64) -> Self {
        let mut nu = vec![0.0; dim];
        nu[0] = nu_x;
        ModelParams {
            dim,
            nu,
            kappa,
            alpha,
            buoyancy_axis: dim - 1,
        }
    }

    pub fn is_isotropic(&self) -> bool {
        self.nu.iter().all(|&v| v == self.nu[0])
    }

    /// Checks every coefficient; returns advisory warnings for valid but
    /// unguaranteed configurations.
    pub fn validate(&self) -> Result<Vec<String>> {
        if self.dim != 2 && self.dim != 3 {
            return Err(Error::Config(format!("dimension must be 2 or 3, got {}", self.dim)));
        }
        if self.nu.len() != self.dim {
            return Err(Error::Config(format!(
                "need {} viscosities, got {}",
                self.dim,
                self.nu.len()
            )));
        }
        for (name, v) in self
            .nu
            .iter()
            .enumerate()
            .map(|(j, v)| (format!("nu{}", j + 1), *v))
            .chain([("kappa".to_string(), self.kappa), ("alpha".to_string(), self.alpha)])
        {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if self.buoyancy_axis != self.dim - 1 {
            return Err(Error::Config(format!(
                "buoyancy acts along the last axis ({}), got {}",
                self.dim - 1,
                self.buoyancy_axis
            )));
        }
        let mut warnings = Vec::new();
        if self.dim == 3 && self.alpha > 0.0 && self.kappa == 0.0 {
            warnings.push(
                "3-D Voigt run without diffusion (kappa = 0): regularity is not guaranteed"
                    .to_string(),
            );
        }
        for w in &warnings {
            warn!("{w}");
        }
        Ok(warnings)
    }
}

/// Velocity and scalar at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub u: VectorField,
    pub theta: SpectralField,
    pub t: f64,
}

impl SimState {
    pub fn new(u: VectorField, theta: SpectralField, t: f64) -> Result<Self> {
        u.grid().ensure_same(theta.grid())?;
        crate::spectral::ops::ensure_div_free(&u)?;
        if theta.mean().norm() > 1e-12 * norms::l2(&theta).max(f64::MIN_POSITIVE) {
            return Err(Error::Invariant("scalar field must be mean-zero".into()));
        }
        Ok(SimState { u, theta, t })
    }

    pub fn zeros(grid: &Grid) -> Self {
        SimState {
            u: VectorField::zeros(grid),
            theta: SpectralField::zeros(grid),
            t: 0.0,
        }
    }

    pub fn grid(&self) -> &Grid {
        self.theta.grid()
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.theta.is_finite()
    }
}

/// Diagonal decay rates of the stiff linear part.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearRates {
    /// `sum_j nu_j (2 pi k_j)^2 / (1 + alpha^2 (2 pi |k|)^2)` per mode.
    pub velocity: Vec<f64>,
    /// `kappa (2 pi |k|)^2` per mode.
    pub scalar: Vec<f64>,
}

pub fn linear_rates(grid: &Grid, params: &ModelParams) -> LinearRates {
    let mut velocity = Vec::with_capacity(grid.len());
    let mut scalar = Vec::with_capacity(grid.len());
    for flat in 0..grid.len() {
        let k = grid.wavevector(flat);
        let visc: f64 = (0..grid.dim())
            .map(|j| {
                let kj = TWO_PI * k[j] as f64;
                params.nu[j] * kj * kj
            })
            .sum();
        let k2 = TWO_PI * TWO_PI * grid.k_squared(flat) as f64;
        velocity.push(visc / (1.0 + params.alpha * params.alpha * k2));
        scalar.push(params.kappa * k2);
    }
    LinearRates { velocity, scalar }
}

/// Right-hand side split into the explicit (nonlinear and forcing) part and
/// the total. `du_dt = explicit_u - L_u u`, `dtheta_dt = explicit_theta - L_theta theta`.
#[derive(Debug, Clone)]
pub struct Tendency {
    pub du_dt: VectorField,
    pub dtheta_dt: SpectralField,
    pub explicit_u: VectorField,
    pub explicit_theta: SpectralField,
}

fn check_state(state: &SimState, params: &ModelParams) -> Result<()> {
    if state.u.dim() != params.dim || state.grid().dim() != params.dim {
        return Err(Error::Config(format!(
            "state is {}-D, parameters are {}-D",
            state.grid().dim(),
            params.dim
        )));
    }
    state.u.grid().ensure_same(state.theta.grid())?;
    if !state.is_finite() {
        return Err(Error::NumericalFault {
            step: 0,
            t: state.t,
            what: "non-finite coefficient in state".into(),
        });
    }
    Ok(())
}

/// `P(theta e_d)`.
pub fn buoyancy(theta: &SpectralField, axis: usize) -> VectorField {
    let g = theta.grid();
    let comps = (0..g.dim())
        .map(|j| {
            if j == axis {
                theta.clone()
            } else {
                SpectralField::zeros(g)
            }
        })
        .collect();
    leray_project(&VectorField::new(comps).expect("shared grid"))
}

/// Explicit part `(I + alpha^2 A)^{-1}(-B(u,u) + P(theta e_d))` and `-sum_j d_j(u^j theta)`.
pub fn explicit_tendency(
    state: &SimState,
    params: &ModelParams,
) -> Result<(VectorField, SpectralField)> {
    check_state(state, params)?;
    let b = advect_velocity(&state.u, &state.u)?;
    let force = buoyancy(&state.theta, params.buoyancy_axis);
    let mut nu = force.sub(&b)?;
    nu = helmholtz_invert(&nu, params.alpha)?;
    let nt = advect_scalar(&state.u, &state.theta)?.scale(-1.0);
    Ok((nu, nt))
}

pub fn rhs(state: &SimState, params: &ModelParams) -> Result<Tendency> {
    let (explicit_u, explicit_theta) = explicit_tendency(state, params)?;
    let rates = linear_rates(state.grid(), params);
    let lu = state.u.map_modes(|i, c| c * rates.velocity[i]);
    let lt = state.theta.map_modes(|i, c| c * rates.scalar[i]);
    let du_dt = explicit_u.sub(&lu)?;
    let dtheta_dt = explicit_theta.sub(&lt)?;
    if !(du_dt.is_finite() && dtheta_dt.is_finite()) {
        return Err(Error::NumericalFault {
            step: 0,
            t: state.t,
            what: "non-finite tendency".into(),
        });
    }
    Ok(Tendency {
        du_dt,
        dtheta_dt,
        explicit_u,
        explicit_theta,
    })
}

/// Planar vorticity form:
/// `domega/dt = -sum_j d_j(u^j omega) + nu_1 d_1^2 omega + nu_2 d_2^2 omega + d_1 theta`.
pub fn rhs_vorticity(
    omega: &SpectralField,
    theta: &SpectralField,
    params: &ModelParams,
) -> Result<(SpectralField, SpectralField)> {
    if params.dim != 2 || omega.grid().dim() != 2 {
        return Err(Error::UnsupportedConfig(
            "vorticity form is planar only (d = 2)".into(),
        ));
    }
    if params.alpha > 0.0 {
        return Err(Error::UnsupportedConfig(
            "vorticity form does not support alpha > 0".into(),
        ));
    }
    omega.grid().ensure_same(theta.grid())?;
    let u = biot_savart(omega)?;
    let g = omega.grid().clone();
    let mut domega = advect_scalar(&u, omega)?.scale(-1.0);
    domega = domega.add(&omega.map_modes(|i, c| {
        let k = g.wavevector(i);
        let k1 = TWO_PI * k[0] as f64;
        let k2 = TWO_PI * k[1] as f64;
        c * (-(params.nu[0] * k1 * k1 + params.nu[1] * k2 * k2))
    }))?;
    domega = domega.add(&partial_derivative(theta, 0)?)?;
    let dtheta = advect_scalar(&u, theta)?
        .scale(-1.0)
        .add(&theta.map_modes(|i, c| {
            c * (-params.kappa * TWO_PI * TWO_PI * g.k_squared(i) as f64)
        }))?;
    Ok((domega, dtheta))
}

/// Mean-zero pressure with `-Laplacian(p) = div(sum_j d_j(u^j u)) - d_d theta`.
pub fn recover_pressure(state: &SimState, params: &ModelParams) -> Result<SpectralField> {
    if params.alpha > 0.0 {
        return Err(Error::UnsupportedConfig(
            "pressure recovery is only defined for alpha = 0".into(),
        ));
    }
    check_state(state, params)?;
    let flux = nonlinear_flux(&state.u, &state.u)?;
    let div = crate::spectral::divergence(&flux);
    let source = div.sub(&partial_derivative(&state.theta, params.buoyancy_axis)?)?;
    Ok(inverse_laplacian(&source)?.scale(-1.0))
}

/// Momentum tendency before projection, `-sum_j d_j(u^j u) + theta e_d + sum_j nu_j d_j^2 u`.
pub fn unprojected_momentum(state: &SimState, params: &ModelParams) -> Result<VectorField> {
    check_state(state, params)?;
    let flux = nonlinear_flux(&state.u, &state.u)?;
    let comps = (0..params.dim)
        .map(|i| {
            let mut c = flux.component(i).scale(-1.0);
            if i == params.buoyancy_axis {
                c = c.add(&state.theta)?;
            }
            for j in 0..params.dim {
                if params.nu[j] != 0.0 {
                    let d2 = crate::spectral::second_derivative(state.u.component(i), j)?;
                    c = c.axpy(params.nu[j], &d2)?;
                }
            }
            Ok(c)
        })
        .collect::<Result<Vec<_>>>()?;
    VectorField::new(comps)
}
