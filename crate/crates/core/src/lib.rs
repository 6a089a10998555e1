//! Pseudo-spectral solver for the Boussinesq family with anisotropic
//! viscosity, diffusivity and Voigt regularization on the periodic box
//! `[0,1]^d`, `d = 2, 3`.

pub mod error;
pub mod reduce;
pub mod spectral;

pub use error::{Error, Result};
pub mod models;
pub mod oracle;
pub mod random;
pub mod diagnostics;
pub mod experiments;
pub mod timestepping;
pub mod io;
pub mod verify;
pub mod driver;
