use num_complex::Complex64;
use rayon::prelude::*;

use super::grid::Grid;
use crate::error::{Error, Result};
use crate::reduce;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Real samples of a field on the collocation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalField {
    grid: Grid,
    values: Vec<f64>,
}

impl PhysicalField {
    pub fn new(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Config(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(PhysicalField {
            grid: grid.clone(),
            values,
        })
    }

    pub fn zeros(grid: &Grid) -> Self {
        PhysicalField {
            grid: grid.clone(),
            values: vec![0.0; grid.len()],
        }
    }

    /// Samples `f(x)` at every grid point.
    pub fn from_fn<F>(grid: &Grid, f: F) -> Self
    where
        F: Fn([f64; 3]) -> f64 + Sync,
    {
        let values = (0..grid.len())
            .into_par_iter()
            .map(|i| f(grid.point(i)))
            .collect();
        PhysicalField {
            grid: grid.clone(),
            values,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn mean(&self) -> f64 {
        reduce::sum_by(self.values.len(), |i| self.values[i]) / self.values.len() as f64
    }
}

/// Mean-zero real periodic scalar field stored as Fourier coefficients.
///
/// `coeffs[m]` multiplies `exp(2 pi i k(m) . x)`, so the samples are
/// `f(x_j) = sum_k coeff(k) exp(2 pi i k . x_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: &Grid) -> Self {
        SpectralField {
            grid: grid.clone(),
            coeffs: vec![ZERO; grid.len()],
        }
    }

    /// Wraps raw coefficients. The mean mode is kept as given so that
    /// operations with a mean-zero precondition can detect violations.
    pub fn from_coeffs(grid: &Grid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::Config(format!(
                "expected {} coefficients, got {}",
                grid.len(),
                coeffs.len()
            )));
        }
        Ok(SpectralField {
            grid: grid.clone(),
            coeffs,
        })
    }

    /// A real field `amp * cos(2 pi k.x + phase)` built from a conjugate mode pair.
    pub fn mode(grid: &Grid, k: &[i64], amp: f64, phase: f64) -> Result<Self> {
        let mut f = Self::zeros(grid);
        let plus = grid.index_of(k)?;
        let neg: Vec<i64> = k.iter().map(|v| -v).collect();
        let minus = grid.index_of(&neg)?;
        if plus == minus {
            return Err(Error::Config(
                "mode must not be the mean or a pure Nyquist mode".into(),
            ));
        }
        f.coeffs[plus] += Complex64::from_polar(0.5 * amp, phase);
        f.coeffs[minus] += Complex64::from_polar(0.5 * amp, -phase);
        Ok(f)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn coeff(&self, k: &[i64]) -> Result<Complex64> {
        Ok(self.coeffs[self.grid.index_of(k)?])
    }

    pub fn mean(&self) -> Complex64 {
        self.coeffs[0]
    }

    pub(crate) fn zero_mean(&mut self) {
        self.coeffs[0] = ZERO;
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Applies a per-mode multiplier `m(flat)`.
    pub fn map_modes<F>(&self, m: F) -> SpectralField
    where
        F: Fn(usize, Complex64) -> Complex64 + Sync,
    {
        let coeffs = self
            .coeffs
            .par_iter()
            .enumerate()
            .map(|(i, &c)| m(i, c))
            .collect();
        SpectralField {
            grid: self.grid.clone(),
            coeffs,
        }
    }

    pub fn scale(&self, a: f64) -> SpectralField {
        self.map_modes(|_, c| c * a)
    }

    /// `self + a * other`
    pub fn axpy(&self, a: f64, other: &SpectralField) -> Result<SpectralField> {
        self.grid.ensure_same(&other.grid)?;
        Ok(self.map_modes(|i, c| c + other.coeffs[i] * a))
    }

    pub fn add(&self, other: &SpectralField) -> Result<SpectralField> {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &SpectralField) -> Result<SpectralField> {
        self.axpy(-1.0, other)
    }

    /// L2 inner product over the unit torus, `sum_k Re(conj(f_k) g_k)`.
    pub fn inner(&self, other: &SpectralField) -> Result<f64> {
        self.grid.ensure_same(&other.grid)?;
        Ok(reduce::sum_by(self.coeffs.len(), |i| {
            let a = self.coeffs[i];
            let b = other.coeffs[i];
            a.re * b.re + a.im * b.im
        }))
    }

    /// Largest |coeff(k) - conj(coeff(-k))|.
    pub fn hermitian_defect(&self) -> f64 {
        let g = &self.grid;
        let n = g.n() as i64;
        reduce::max_by(self.coeffs.len(), |i| {
            let k = g.wavevector(i);
            let mut neg = 0usize;
            for &ki in k.iter().take(g.dim()) {
                neg = neg * g.n() + (-ki).rem_euclid(n) as usize;
            }
            (self.coeffs[i] - self.coeffs[neg].conj()).norm()
        })
    }

    /// Samples of the field on the collocation grid.
    pub fn to_physical(&self) -> PhysicalField {
        let mut buf = self.coeffs.clone();
        self.grid.fft_in_place(&mut buf, true);
        PhysicalField {
            grid: self.grid.clone(),
            values: buf.into_par_iter().map(|c| c.re).collect(),
        }
    }

    /// Fourier coefficients of grid samples; the mean is removed.
    pub fn from_physical(s: &PhysicalField) -> SpectralField {
        let scale = 1.0 / s.values.len() as f64;
        let mut buf: Vec<Complex64> = s
            .values
            .par_iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        s.grid.fft_in_place(&mut buf, false);
        buf.par_iter_mut().for_each(|c| *c *= scale);
        let mut f = SpectralField {
            grid: s.grid.clone(),
            coeffs: buf,
        };
        f.zero_mean();
        f
    }
}

/// A d-tuple of scalar fields on one grid, with an optional divergence-free certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    components: Vec<SpectralField>,
    div_free: bool,
}

impl VectorField {
    pub fn zeros(grid: &Grid) -> Self {
        VectorField {
            components: (0..grid.dim()).map(|_| SpectralField::zeros(grid)).collect(),
            div_free: true,
        }
    }

    /// Builds an uncertified vector field.
    pub fn new(components: Vec<SpectralField>) -> Result<Self> {
        let Some(first) = components.first() else {
            return Err(Error::Config("vector field needs components".into()));
        };
        let grid = first.grid().clone();
        if components.len() != grid.dim() {
            return Err(Error::Config(format!(
                "vector field on a {}-D grid needs {} components, got {}",
                grid.dim(),
                grid.dim(),
                components.len()
            )));
        }
        for c in &components[1..] {
            grid.ensure_same(c.grid())?;
        }
        Ok(VectorField {
            components,
            div_free: false,
        })
    }

    pub(crate) fn from_parts(components: Vec<SpectralField>, div_free: bool) -> Self {
        VectorField {
            components,
            div_free,
        }
    }

    pub fn grid(&self) -> &Grid {
        self.components[0].grid()
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[SpectralField] {
        &self.components
    }

    pub fn component(&self, axis: usize) -> &SpectralField {
        &self.components[axis]
    }

    pub fn into_components(self) -> Vec<SpectralField> {
        self.components
    }

    /// Whether the field carries a divergence-free certificate.
    pub fn is_div_free(&self) -> bool {
        self.div_free
    }

    pub fn is_finite(&self) -> bool {
        self.components.iter().all(|c| c.is_finite())
    }

    pub fn scale(&self, a: f64) -> VectorField {
        VectorField {
            components: self.components.iter().map(|c| c.scale(a)).collect(),
            div_free: self.div_free,
        }
    }

    /// `self + a * other`; the certificate survives when both inputs carry it.
    pub fn axpy(&self, a: f64, other: &VectorField) -> Result<VectorField> {
        if self.dim() != other.dim() {
            return Err(Error::Config("vector dimension mismatch".into()));
        }
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(x, y)| x.axpy(a, y))
            .collect::<Result<Vec<_>>>()?;
        Ok(VectorField {
            components,
            div_free: self.div_free && other.div_free,
        })
    }

    pub fn add(&self, other: &VectorField) -> Result<VectorField> {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &VectorField) -> Result<VectorField> {
        self.axpy(-1.0, other)
    }

    /// Applies the same per-mode multiplier to every component.
    pub fn map_modes<F>(&self, m: F) -> VectorField
    where
        F: Fn(usize, Complex64) -> Complex64 + Sync,
    {
        VectorField {
            components: self.components.iter().map(|c| c.map_modes(&m)).collect(),
            div_free: self.div_free,
        }
    }

    pub fn inner(&self, other: &VectorField) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::Config("vector dimension mismatch".into()));
        }
        let mut acc = 0.0;
        for (a, b) in self.components.iter().zip(&other.components) {
            acc += a.inner(b)?;
        }
        Ok(acc)
    }

    /// Largest |sum_j 2 pi k_j u_j(k)| over all modes.
    pub fn divergence_defect(&self) -> f64 {
        let g = self.grid().clone();
        let two_pi = 2.0 * std::f64::consts::PI;
        reduce::max_by(g.len(), |i| {
            let k = g.wavevector(i);
            let mut s = Complex64::new(0.0, 0.0);
            for (j, c) in self.components.iter().enumerate() {
                s += c.coeffs()[i] * (two_pi * k[j] as f64);
            }
            s.norm()
        })
    }

    pub fn to_physical(&self) -> Vec<PhysicalField> {
        self.components.iter().map(|c| c.to_physical()).collect()
    }

    pub(crate) fn set_div_free(&mut self, on: bool) {
        self.div_free = on;
    }
}
