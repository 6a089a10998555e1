//! Slow reference implementations used to cross-check the spectral operators.
//!
//! Nothing here touches the FFT or the per-mode operator code: linear
//! operators go through dense DFT sums in physical space, and quadratic
//! terms through exact convolution of Fourier coefficients. Cost is
//! O(N^2) in the number of modes, so keep grids small (n <= 16).

use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::spectral::{Grid, SpectralField, VectorField};

const TWO_PI: f64 = 2.0 * PI;
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

type Wave = [i64; 3];

fn phase(k: &Wave, x: &[f64; 3]) -> f64 {
    TWO_PI * (k[0] as f64 * x[0] + k[1] as f64 * x[1] + k[2] as f64 * x[2])
}

/// Samples of `sum_k c_k exp(2 pi i k.x)` by direct summation.
pub fn synthesize(grid: &Grid, coeffs: &[Complex64]) -> Vec<f64> {
    (0..grid.len())
        .map(|p| {
            let x = grid.point(p);
            let mut acc = ZERO;
            for (m, c) in coeffs.iter().enumerate() {
                if *c != ZERO {
                    acc += c * Complex64::from_polar(1.0, phase(&grid.wavevector(m), &x));
                }
            }
            acc.re
        })
        .collect()
}

/// Fourier coefficients of grid samples by direct summation.
pub fn analyze(grid: &Grid, samples: &[f64]) -> Vec<Complex64> {
    let scale = 1.0 / grid.len() as f64;
    (0..grid.len())
        .map(|m| {
            let k = grid.wavevector(m);
            let mut acc = ZERO;
            for (p, v) in samples.iter().enumerate() {
                acc += Complex64::from_polar(*v, -phase(&k, &grid.point(p)));
            }
            acc * scale
        })
        .collect()
}

/// Samples of `d/dx_axis f`, differentiating the trigonometric polynomial term by term.
pub fn derivative_samples(grid: &Grid, coeffs: &[Complex64], axis: usize) -> Vec<f64> {
    let n = grid.n() as i64;
    let d: Vec<Complex64> = coeffs
        .iter()
        .enumerate()
        .map(|(m, c)| {
            let k = grid.wavevector(m)[axis];
            if k == -n / 2 {
                ZERO
            } else {
                c * Complex64::new(0.0, TWO_PI * k as f64)
            }
        })
        .collect();
    synthesize(grid, &d)
}

fn k2(k: &Wave) -> f64 {
    (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64
}

/// Coefficient map over integer wavevectors, unrestricted by the grid band.
#[derive(Debug, Clone, Default)]
pub struct ModeMap(HashMap<Wave, Complex64>);

impl ModeMap {
    pub fn from_field(f: &SpectralField) -> Self {
        let g = f.grid();
        let mut m = HashMap::new();
        for (i, c) in f.coeffs().iter().enumerate() {
            if *c != ZERO {
                m.insert(g.wavevector(i), *c);
            }
        }
        ModeMap(m)
    }

    /// Exact product of two trigonometric polynomials.
    pub fn convolve(&self, other: &ModeMap) -> ModeMap {
        let mut out: HashMap<Wave, Complex64> = HashMap::new();
        for (p, a) in &self.0 {
            for (q, b) in &other.0 {
                let k = [p[0] + q[0], p[1] + q[1], p[2] + q[2]];
                *out.entry(k).or_insert(ZERO) += a * b;
            }
        }
        ModeMap(out)
    }

    pub fn derivative(&self, axis: usize) -> ModeMap {
        ModeMap(
            self.0
                .iter()
                .map(|(k, c)| (*k, c * Complex64::new(0.0, TWO_PI * k[axis] as f64)))
                .collect(),
        )
    }

    pub fn add(&self, other: &ModeMap) -> ModeMap {
        let mut out = self.0.clone();
        for (k, c) in &other.0 {
            *out.entry(*k).or_insert(ZERO) += c;
        }
        ModeMap(out)
    }

    /// Restricts to modes with every |k_i| <= cutoff and no mean, on `grid`.
    pub fn truncate(&self, grid: &Grid) -> SpectralField {
        let mut coeffs = vec![ZERO; grid.len()];
        let cut = grid.cutoff();
        for (k, c) in &self.0 {
            if k2(k) == 0.0 || k.iter().any(|ki| ki.abs() > cut) {
                continue;
            }
            let idx = grid.index_of(&k[..grid.dim()]).expect("within band");
            coeffs[idx] += c;
        }
        SpectralField::from_coeffs(grid, coeffs).expect("sized")
    }
}

fn vector_modes(v: &VectorField) -> Vec<ModeMap> {
    v.components().iter().map(ModeMap::from_field).collect()
}

/// `P (I - grad Laplacian^{-1} div)` written out as the complement of the
/// gradient part, on coefficient maps.
fn project(parts: &[ModeMap], dim: usize) -> Vec<ModeMap> {
    let mut keys: Vec<Wave> = parts.iter().flat_map(|p| p.0.keys().copied()).collect();
    keys.sort();
    keys.dedup();
    let mut out = vec![ModeMap::default(); dim];
    for k in keys {
        let kk = k2(&k);
        let comp: Vec<Complex64> = parts
            .iter()
            .map(|p| p.0.get(&k).copied().unwrap_or(ZERO))
            .collect();
        if kk == 0.0 {
            continue;
        }
        // divergence and the potential of the gradient part
        let mut div = ZERO;
        for j in 0..dim {
            div += comp[j] * Complex64::new(0.0, TWO_PI * k[j] as f64);
        }
        let potential = div / (-(TWO_PI * TWO_PI) * kk);
        for j in 0..dim {
            let grad = potential * Complex64::new(0.0, TWO_PI * k[j] as f64);
            out[j].0.insert(k, comp[j] - grad);
        }
    }
    out
}

/// Reference `B(u, w)` via exact convolution, truncated to retained modes.
pub fn advect_velocity(u: &VectorField, w: &VectorField) -> Vec<SpectralField> {
    let g = u.grid().clone();
    let d = g.dim();
    let um = vector_modes(u);
    let wm = vector_modes(w);
    let mut flux = Vec::with_capacity(d);
    for i in 0..d {
        let mut acc = ModeMap::default();
        for j in 0..d {
            acc = acc.add(&um[j].convolve(&wm[i]).derivative(j));
        }
        flux.push(acc);
    }
    project(&flux, d)
        .iter()
        .map(|m| m.truncate(&g))
        .collect()
}

/// Reference `sum_j d_j(u^j theta)` via exact convolution.
pub fn advect_scalar(u: &VectorField, theta: &SpectralField) -> SpectralField {
    let g = u.grid().clone();
    let tm = ModeMap::from_field(theta);
    let mut acc = ModeMap::default();
    for (j, uj) in vector_modes(u).iter().enumerate() {
        acc = acc.add(&uj.convolve(&tm).derivative(j));
    }
    acc.truncate(&g)
}

/// Reference Leray projection.
pub fn leray_project(v: &VectorField) -> Vec<SpectralField> {
    let g = v.grid().clone();
    project(&vector_modes(v), g.dim())
        .iter()
        .map(|m| {
            let mut coeffs = vec![ZERO; g.len()];
            for (k, c) in &m.0 {
                coeffs[g.index_of(&k[..g.dim()]).expect("on grid")] = *c;
            }
            SpectralField::from_coeffs(&g, coeffs).expect("sized")
        })
        .collect()
}

/// Samples of `sum_j d_j q_j` from a dense differentiation of samples.
pub fn divergence_samples(grid: &Grid, parts: &[Vec<f64>]) -> Vec<f64> {
    let mut out = vec![0.0; grid.len()];
    for (j, p) in parts.iter().enumerate() {
        let c = analyze(grid, p);
        for (o, v) in out.iter_mut().zip(derivative_samples(grid, &c, j)) {
            *o += v;
        }
    }
    out
}

/// Samples of the Biot-Savart velocity, from the stream function series
/// `psi_k = -omega_k / (2 pi |k|)^2`.
pub fn biot_savart_samples(grid: &Grid, omega: &[Complex64]) -> [Vec<f64>; 2] {
    let psi: Vec<Complex64> = omega
        .iter()
        .enumerate()
        .map(|(m, c)| {
            let kk = k2(&grid.wavevector(m));
            if kk == 0.0 {
                ZERO
            } else {
                -c / (TWO_PI * TWO_PI * kk)
            }
        })
        .collect();
    let u1: Vec<f64> = derivative_samples(grid, &psi, 1)
        .into_iter()
        .map(|v| -v)
        .collect();
    let u2 = derivative_samples(grid, &psi, 0);
    [u1, u2]
}

/// Largest absolute difference between two sample vectors.
pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).fold(0.0, f64::max)
}
