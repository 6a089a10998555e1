//! Fourier representation of mean-zero periodic fields on the unit torus.

mod field;
mod grid;
pub mod norms;
pub mod ops;

pub use field::{PhysicalField, SpectralField, VectorField};
pub use grid::{wavenumber, DealiasFraction, Grid};
pub use norms::{norm, vector_norm, NormKind, DEFAULT_P_GRID};
pub use ops::{
    advect_scalar, advect_velocity, biot_savart, curl2d, curl3d, dealias, dealias_vector,
    divergence, gradient, helmholtz_apply, helmholtz_invert, inverse_laplacian, laplacian,
    leray_project, nonlinear_flux, partial_derivative, second_derivative, transform_to_physical,
    transform_to_spectral,
};
