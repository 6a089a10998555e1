//! Seeded random band-limited fields.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::spectral::{leray_project, Grid, SpectralField, VectorField};

/// Shape of the random spectrum: modes with `1 <= |k|_inf <= k_max`,
/// amplitude `|k|^{-decay}` times a uniform factor, uniform phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandSpec {
    pub k_max: i64,
    pub decay: f64,
}

impl Default for BandSpec {
    fn default() -> Self {
        BandSpec { k_max: 6, decay: 1.0 }
    }
}

fn fill_scalar(grid: &Grid, band: BandSpec, rng: &mut ChaCha8Rng) -> SpectralField {
    let k_max = band.k_max.min(grid.cutoff());
    let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.len()];
    // Visit each conjugate pair once, in flat order, so the stream is reproducible.
    for flat in 0..grid.len() {
        let k = grid.wavevector(flat);
        if k.iter().any(|ki| ki.abs() > k_max) || grid.k_squared(flat) == 0 {
            continue;
        }
        let neg: Vec<i64> = k[..grid.dim()].iter().map(|v| -v).collect();
        let partner = grid.index_of(&neg).expect("band inside grid");
        if partner < flat {
            continue;
        }
        let amp = rng.random::<f64>() * (grid.k_squared(flat) as f64).sqrt().powf(-band.decay);
        let c = Complex64::from_polar(amp, 2.0 * PI * rng.random::<f64>());
        coeffs[flat] = c;
        coeffs[partner] = c.conj();
    }
    SpectralField::from_coeffs(grid, coeffs).expect("sized")
}

/// Random mean-zero real scalar field, normalized to unit L2 norm.
pub fn random_scalar(grid: &Grid, band: BandSpec, seed: u64) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    normalize(fill_scalar(grid, band, &mut rng))
}

/// Random vector field with independent components (not divergence-free).
pub fn random_vector(grid: &Grid, band: BandSpec, seed: u64) -> VectorField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let comps = (0..grid.dim())
        .map(|_| fill_scalar(grid, band, &mut rng))
        .collect();
    VectorField::new(comps).expect("shared grid")
}

/// Random divergence-free field with unit L2 norm.
pub fn random_solenoidal(grid: &Grid, band: BandSpec, seed: u64) -> VectorField {
    let v = leray_project(&random_vector(grid, band, seed));
    let n = crate::spectral::norms::vector_l2(&v);
    if n > 0.0 {
        v.scale(1.0 / n)
    } else {
        v
    }
}

fn normalize(f: SpectralField) -> SpectralField {
    let n = crate::spectral::norms::l2(&f);
    if n > 0.0 {
        f.scale(1.0 / n)
    } else {
        f
    }
}
