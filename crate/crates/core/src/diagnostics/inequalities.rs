//! Numerical fits of the constants in the two-dimensional functional
//! inequalities used by the energy estimates. None of these constants is
//! known explicitly, so each verifier returns the smallest constant that
//! makes the inequality hold over a corpus.

use crate::error::{Error, Result};
use crate::random::{random_scalar, random_solenoidal, BandSpec};
use crate::spectral::norms::{self, lp_samples, magnitude};
use crate::spectral::{biot_savart, partial_derivative, Grid, SpectralField, VectorField};

pub const DEFAULT_EPS_GRID: [f64; 3] = [1e-1, 1e-2, 1e-3];

/// Band used for the default corpora.
pub const CORPUS_BAND: BandSpec = BandSpec { k_max: 8, decay: 1.0 };

/// `count` random divergence-free fields with seeds `seed..seed+count`.
pub fn default_corpus(grid: &Grid, seed: u64, count: usize) -> Vec<VectorField> {
    (0..count as u64)
        .map(|i| random_solenoidal(grid, CORPUS_BAND, seed + i))
        .collect()
}

/// `count` random mean-zero vorticities.
pub fn default_vorticity_corpus(grid: &Grid, seed: u64, count: usize) -> Vec<SpectralField> {
    (0..count as u64)
        .map(|i| random_scalar(grid, CORPUS_BAND, seed + i))
        .collect()
}

fn linf(v: &VectorField) -> f64 {
    norms::linf_samples(&magnitude(&v.to_physical()))
}

/// Constant needed by `|w|_inf <= C (|grad w| eps^{-1/4} + |A w| exp(-eps^{-1/4}))`
/// for one field and one `eps`.
pub fn brezis_required_constant(w: &VectorField, eps: f64) -> f64 {
    let sup = linf(w);
    if sup == 0.0 {
        return 0.0;
    }
    let root = eps.powf(-0.25);
    let bound = norms::vector_sobolev(w, 1) * root + norms::vector_sobolev(w, 2) * (-root).exp();
    sup / bound
}

/// Smallest constant valid for every field and every `eps`.
pub fn brezis_verify(corpus: &[VectorField], eps_grid: &[f64]) -> Result<f64> {
    if corpus.is_empty() {
        return Err(Error::Config("empty corpus".into()));
    }
    if eps_grid.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
        return Err(Error::Config("eps values must lie in (0, 1)".into()));
    }
    Ok(corpus
        .iter()
        .flat_map(|w| eps_grid.iter().map(move |&e| brezis_required_constant(w, e)))
        .fold(0.0, f64::max))
}

/// Fitted constants of `|grad u|_p <= C_cz p |omega|_p` and
/// `|u|_p <= C_sqrt sqrt(p - 1) |u|_{H^1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CzFit {
    pub c_cz: f64,
    pub c_sqrt: f64,
    /// `(p, C_cz(p), C_sqrt(p))`
    pub per_p: Vec<(f64, f64, f64)>,
}

/// Sweeps a corpus of planar vorticities over a p grid.
pub fn cz_sqrt_l_verify(corpus: &[SpectralField], p_grid: &[f64]) -> Result<CzFit> {
    if p_grid.iter().any(|&p| p < 2.0) {
        return Err(Error::Config("p grid must satisfy p >= 2".into()));
    }
    let mut per_p: Vec<(f64, f64, f64)> = p_grid.iter().map(|&p| (p, 0.0, 0.0)).collect();
    for omega in corpus {
        let u = biot_savart(omega)?;
        let mut grads = Vec::with_capacity(4);
        for comp in u.components() {
            for axis in 0..2 {
                grads.push(partial_derivative(comp, axis)?.to_physical());
            }
        }
        let grad_abs = magnitude(&grads);
        let u_abs = magnitude(&u.to_physical());
        let w_s = omega.to_physical();
        let h1 = norms::vector_sobolev(&u, 1);
        for entry in per_p.iter_mut() {
            let p = entry.0;
            let wp = lp_samples(w_s.values(), p);
            if wp > 0.0 {
                entry.1 = entry.1.max(lp_samples(&grad_abs, p) / (p * wp));
            }
            if h1 > 0.0 {
                entry.2 = entry.2.max(lp_samples(&u_abs, p) / ((p - 1.0).sqrt() * h1));
            }
        }
    }
    Ok(CzFit {
        c_cz: per_p.iter().map(|e| e.1).fold(0.0, f64::max),
        c_sqrt: per_p.iter().map(|e| e.2).fold(0.0, f64::max),
        per_p,
    })
}

/// Smallest `C` with `|w|_inf <= C |w|^{1/2} |A w|^{1/2}` over the corpus.
pub fn agmon_fit(corpus: &[VectorField]) -> Result<f64> {
    if corpus.is_empty() {
        return Err(Error::Config("empty corpus".into()));
    }
    Ok(corpus
        .iter()
        .map(|w| {
            let denom = (norms::vector_l2(w) * norms::vector_sobolev(w, 2)).sqrt();
            if denom == 0.0 {
                0.0
            } else {
                linf(w) / denom
            }
        })
        .fold(0.0, f64::max))
}

/// `|f| / |grad f|`, bounded by `1 / (2 pi)` on the unit torus.
pub fn poincare_ratio(f: &SpectralField) -> f64 {
    let g = norms::sobolev(f, 1);
    if g == 0.0 {
        0.0
    } else {
        norms::l2(f) / g
    }
}
