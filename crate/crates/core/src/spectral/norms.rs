//! Lebesgue, Sobolev and sqrt(L) norms.
//!
//! Sobolev norms are homogeneous: `|f|_{H^s}^2 = sum_k (2 pi |k|)^{2s} |f_k|^2`,
//! which on mean-zero fields is equivalent to the inhomogeneous norm.
//! Lebesgue norms use quadrature on the collocation grid; `p = inf` is the
//! grid max-abs. Vector norms act on the pointwise Euclidean magnitude.

use std::f64::consts::PI;

use super::field::{PhysicalField, SpectralField, VectorField};
use crate::error::{Error, Result};
use crate::reduce;

/// Default p values over which the sqrt(L) supremum is taken.
pub const DEFAULT_P_GRID: [f64; 6] = [2.0, 4.0, 8.0, 16.0, 32.0, 64.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormKind {
    /// `L^p` for finite `p >= 1`.
    Lp(f64),
    LInf,
    /// Homogeneous `H^s`, `s` in `-2..=3`.
    Sobolev(i32),
    /// `sup_p |f|_p / sqrt(p - 1)` over [`DEFAULT_P_GRID`].
    SqrtL,
}

pub fn norm(f: &SpectralField, kind: NormKind) -> Result<f64> {
    match kind {
        NormKind::Lp(p) => {
            check_p(p)?;
            Ok(lp_samples(f.to_physical().values(), p))
        }
        NormKind::LInf => Ok(linf_samples(f.to_physical().values())),
        NormKind::Sobolev(s) => {
            check_s(s)?;
            Ok(sobolev(f, s))
        }
        NormKind::SqrtL => Ok(sqrt_l_samples(f.to_physical().values(), &DEFAULT_P_GRID)),
    }
}

pub fn vector_norm(v: &VectorField, kind: NormKind) -> Result<f64> {
    match kind {
        NormKind::Sobolev(s) => {
            check_s(s)?;
            Ok(vector_sobolev(v, s))
        }
        NormKind::Lp(p) => {
            check_p(p)?;
            Ok(lp_samples(&magnitude(&v.to_physical()), p))
        }
        NormKind::LInf => Ok(linf_samples(&magnitude(&v.to_physical()))),
        NormKind::SqrtL => Ok(sqrt_l_samples(
            &magnitude(&v.to_physical()),
            &DEFAULT_P_GRID,
        )),
    }
}

fn check_p(p: f64) -> Result<()> {
    if p.is_finite() && p >= 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("unsupported Lebesgue exponent {p}")))
    }
}

fn check_s(s: i32) -> Result<()> {
    if (-2..=3).contains(&s) {
        Ok(())
    } else {
        Err(Error::Config(format!("unsupported Sobolev index {s}")))
    }
}

/// `(sum_k |f_k|^2)^{1/2}`, equal to the L2 norm on the unit torus.
pub fn l2(f: &SpectralField) -> f64 {
    let c = f.coeffs();
    reduce::sum_by(c.len(), |i| c[i].norm_sqr()).sqrt()
}

/// Homogeneous Sobolev norm of any integer order; the mean mode is skipped.
pub fn sobolev(f: &SpectralField, s: i32) -> f64 {
    sobolev_sq(f, s).sqrt()
}

pub(crate) fn sobolev_sq(f: &SpectralField, s: i32) -> f64 {
    let g = f.grid();
    let c = f.coeffs();
    let w = (2.0 * PI) * (2.0 * PI);
    reduce::sum_by(c.len(), |i| {
        let k2 = g.k_squared(i);
        if k2 == 0 {
            0.0
        } else {
            (w * k2 as f64).powi(s) * c[i].norm_sqr()
        }
    })
}

pub fn vector_sobolev(v: &VectorField, s: i32) -> f64 {
    v.components()
        .iter()
        .map(|c| sobolev_sq(c, s))
        .sum::<f64>()
        .sqrt()
}

pub fn vector_l2(v: &VectorField) -> f64 {
    vector_sobolev(v, 0)
}

/// Pointwise Euclidean magnitude of sampled components.
pub fn magnitude(parts: &[PhysicalField]) -> Vec<f64> {
    let len = parts[0].values().len();
    (0..len)
        .map(|i| {
            parts
                .iter()
                .map(|p| p.values()[i] * p.values()[i])
                .sum::<f64>()
                .sqrt()
        })
        .collect()
}

/// Grid-quadrature `L^p` norm of samples on the unit torus.
pub fn lp_samples(values: &[f64], p: f64) -> f64 {
    let m = linf_samples(values);
    if m == 0.0 {
        return 0.0;
    }
    if p == 2.0 {
        let s = reduce::sum_by(values.len(), |i| values[i] * values[i]);
        return (s / values.len() as f64).sqrt();
    }
    let s = reduce::sum_by(values.len(), |i| (values[i].abs() / m).powf(p));
    m * (s / values.len() as f64).powf(1.0 / p)
}

pub fn linf_samples(values: &[f64]) -> f64 {
    reduce::max_by(values.len(), |i| values[i].abs()).max(0.0)
}

pub fn sqrt_l_samples(values: &[f64], p_grid: &[f64]) -> f64 {
    p_grid
        .iter()
        .map(|&p| lp_samples(values, p) / (p - 1.0).sqrt())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Grid;

    #[test]
    fn sine_norms() {
        let g = Grid::new(2, 32).unwrap();
        let s = SpectralField::mode(&g, &[1, 0], 1.0, -PI / 2.0).unwrap();
        let r2 = 1.0 / 2f64.sqrt();
        assert!((norm(&s, NormKind::Lp(2.0)).unwrap() - r2).abs() < 1e-14);
        assert!((l2(&s) - r2).abs() < 1e-15);
        assert!((norm(&s, NormKind::Sobolev(1)).unwrap() - 2.0 * PI * r2).abs() < 1e-13);
        assert!((norm(&s, NormKind::LInf).unwrap() - 1.0).abs() < 1e-14);
        // |sin|_4^4 = 3/8
        let l4 = norm(&s, NormKind::Lp(4.0)).unwrap();
        assert!((l4 - 0.375f64.powf(0.25)).abs() < 1e-13);
    }

    #[test]
    fn unsupported_indices() {
        let g = Grid::new(2, 8).unwrap();
        let f = SpectralField::zeros(&g);
        assert!(matches!(norm(&f, NormKind::Sobolev(4)), Err(Error::Config(_))));
        assert!(matches!(norm(&f, NormKind::Sobolev(-3)), Err(Error::Config(_))));
        assert!(norm(&f, NormKind::Lp(0.5)).is_err());
        assert_eq!(norm(&f, NormKind::SqrtL).unwrap(), 0.0);
    }

    #[test]
    fn negative_sobolev_index() {
        let g = Grid::new(2, 16).unwrap();
        let f = SpectralField::mode(&g, &[1, 1], 2.0, 0.0).unwrap();
        let expect = 2f64.sqrt() / (2.0 * PI * 2f64.sqrt()).powi(2);
        assert!((sobolev(&f, -2) - expect).abs() < 1e-15);
    }
}
