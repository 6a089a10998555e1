//! Linear and bilinear operators on mean-zero periodic fields.
//!
//! All outputs have a zero mean mode. Nonlinear outputs are additionally
//! truncated to the retained (dealiased) modes.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use super::field::{PhysicalField, SpectralField, VectorField};
use super::grid::Grid;
use super::norms;
use crate::error::{Error, Result};

const TWO_PI: f64 = 2.0 * PI;
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Divergence residual admitted by the certificate, relative to the H1 norm.
pub const DIV_FREE_TOL: f64 = 1e-12;

pub fn transform_to_physical(f: &SpectralField) -> PhysicalField {
    f.to_physical()
}

pub fn transform_to_spectral(grid: &Grid, s: &PhysicalField) -> Result<SpectralField> {
    grid.ensure_same(s.grid())?;
    Ok(SpectralField::from_physical(s))
}

/// Galerkin truncation: zeroes every mode with some |k_i| above the cutoff.
pub fn dealias(f: &SpectralField) -> SpectralField {
    let g = f.grid().clone();
    let mut out = f.map_modes(|i, c| if g.is_retained(i) { c } else { ZERO });
    out.zero_mean();
    out
}

pub fn dealias_vector(v: &VectorField) -> VectorField {
    VectorField::from_parts(v.components().iter().map(dealias).collect(), v.is_div_free())
}

/// Whether every non-retained coefficient is exactly zero.
pub fn is_dealiased(f: &SpectralField) -> bool {
    let g = f.grid();
    f.coeffs()
        .iter()
        .enumerate()
        .all(|(i, c)| g.is_retained(i) || *c == ZERO)
}

fn check_axis(grid: &Grid, axis: usize) -> Result<()> {
    if axis >= grid.dim() {
        return Err(Error::Config(format!(
            "axis {axis} out of range for a {}-D grid (axes are 0-based)",
            grid.dim()
        )));
    }
    Ok(())
}

/// `d/dx_axis` with a 0-based axis index. Nyquist modes map to zero.
pub fn partial_derivative(f: &SpectralField, axis: usize) -> Result<SpectralField> {
    let g = f.grid().clone();
    check_axis(&g, axis)?;
    let mut out = f.map_modes(|i, c| {
        if g.is_nyquist(i, axis) {
            ZERO
        } else {
            c * Complex64::new(0.0, TWO_PI * g.wavevector(i)[axis] as f64)
        }
    });
    out.zero_mean();
    Ok(out)
}

/// `d^2/dx_axis^2`.
pub fn second_derivative(f: &SpectralField, axis: usize) -> Result<SpectralField> {
    let g = f.grid().clone();
    check_axis(&g, axis)?;
    let mut out = f.map_modes(|i, c| {
        let k = TWO_PI * g.wavevector(i)[axis] as f64;
        c * (-k * k)
    });
    out.zero_mean();
    Ok(out)
}

pub fn laplacian(f: &SpectralField) -> SpectralField {
    let g = f.grid().clone();
    let mut out = f.map_modes(|i, c| c * (-(TWO_PI * TWO_PI) * g.k_squared(i) as f64));
    out.zero_mean();
    out
}

pub fn gradient(f: &SpectralField) -> VectorField {
    let comps = (0..f.grid().dim())
        .map(|a| partial_derivative(f, a).expect("axis in range"))
        .collect();
    VectorField::from_parts(comps, false)
}

pub fn divergence(v: &VectorField) -> SpectralField {
    let g = v.grid().clone();
    let mut out = SpectralField::zeros(&g);
    for (axis, comp) in v.components().iter().enumerate() {
        let d = partial_derivative(comp, axis).expect("axis in range");
        out = out.add(&d).expect("shared grid");
    }
    out
}

/// Mean-zero solution `xi` of `Laplacian(xi) = theta`.
pub fn inverse_laplacian(theta: &SpectralField) -> Result<SpectralField> {
    let mean = theta.mean().norm();
    if mean > 0.0 && mean > 1e-12 * norms::l2(theta) {
        return Err(Error::Invariant(format!(
            "inverse Laplacian needs a mean-zero field, mean mode is {mean:e}"
        )));
    }
    let g = theta.grid().clone();
    let mut out = theta.map_modes(|i, c| {
        let k2 = g.k_squared(i);
        if k2 == 0 {
            ZERO
        } else {
            c / (-(TWO_PI * TWO_PI) * k2 as f64)
        }
    });
    out.zero_mean();
    Ok(out)
}

/// Leray-Helmholtz projection onto divergence-free, mean-zero fields.
pub fn leray_project(v: &VectorField) -> VectorField {
    let g = v.grid().clone();
    let d = g.dim();
    let n = g.len();
    let src: Vec<&[Complex64]> = v.components().iter().map(|c| c.coeffs()).collect();
    let mut out: Vec<Vec<Complex64>> = vec![vec![ZERO; n]; d];

    let projected: Vec<[Complex64; 3]> = (0..n)
        .into_par_iter()
        .map(|i| {
            let k = g.wavevector(i);
            let k2 = g.k_squared(i);
            let mut r = [ZERO; 3];
            if k2 == 0 {
                return r;
            }
            let mut kdotu = ZERO;
            for j in 0..d {
                kdotu += src[j][i] * k[j] as f64;
            }
            let s = kdotu / k2 as f64;
            for j in 0..d {
                r[j] = src[j][i] - s * k[j] as f64;
            }
            r
        })
        .collect();
    for (i, r) in projected.iter().enumerate() {
        for j in 0..d {
            out[j][i] = r[j];
        }
    }
    let comps = out
        .into_iter()
        .map(|c| SpectralField::from_coeffs(&g, c).expect("sized"))
        .collect();
    VectorField::from_parts(comps, true)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::Config(format!("alpha must be finite and >= 0, got {alpha}")));
    }
    Ok(())
}

/// Per-mode symbol `1 + alpha^2 (2 pi |k|)^2` of `I + alpha^2 A`.
pub fn helmholtz_symbol(grid: &Grid, flat: usize, alpha: f64) -> f64 {
    1.0 + alpha * alpha * TWO_PI * TWO_PI * grid.k_squared(flat) as f64
}

/// Applies `(I + alpha^2 A)^{-1}`.
pub fn helmholtz_invert(v: &VectorField, alpha: f64) -> Result<VectorField> {
    check_alpha(alpha)?;
    if alpha == 0.0 {
        return Ok(v.clone());
    }
    let g = v.grid().clone();
    Ok(v.map_modes(|i, c| c / helmholtz_symbol(&g, i, alpha)))
}

/// Applies `I + alpha^2 A`.
pub fn helmholtz_apply(v: &VectorField, alpha: f64) -> Result<VectorField> {
    check_alpha(alpha)?;
    let g = v.grid().clone();
    Ok(v.map_modes(|i, c| c * helmholtz_symbol(&g, i, alpha)))
}

/// Scalar vorticity `d1 u2 - d2 u1` of a planar field.
pub fn curl2d(u: &VectorField) -> Result<SpectralField> {
    if u.dim() != 2 {
        return Err(Error::UnsupportedDimension(u.dim()));
    }
    let d1u2 = partial_derivative(u.component(1), 0)?;
    let d2u1 = partial_derivative(u.component(0), 1)?;
    d1u2.sub(&d2u1)
}

/// Vorticity vector of a 3-D field.
pub fn curl3d(u: &VectorField) -> Result<VectorField> {
    if u.dim() != 3 {
        return Err(Error::Config("curl3d needs a 3-D field".into()));
    }
    let d = |c: usize, a: usize| partial_derivative(u.component(c), a);
    let w1 = d(2, 1)?.sub(&d(1, 2)?)?;
    let w2 = d(0, 2)?.sub(&d(2, 0)?)?;
    let w3 = d(1, 0)?.sub(&d(0, 1)?)?;
    Ok(VectorField::from_parts(vec![w1, w2, w3], true))
}

/// Mean-zero divergence-free velocity with `curl2d(u) = omega`.
///
/// With stream function `psi = Laplacian^{-1} omega`, `u = (-d2 psi, d1 psi)`.
pub fn biot_savart(omega: &SpectralField) -> Result<VectorField> {
    let g = omega.grid().clone();
    if g.dim() != 2 {
        return Err(Error::UnsupportedDimension(g.dim()));
    }
    let psi = inverse_laplacian(omega)?;
    let u1 = partial_derivative(&psi, 1)?.scale(-1.0);
    let u2 = partial_derivative(&psi, 0)?;
    Ok(VectorField::from_parts(vec![u1, u2], true))
}

/// Checks the divergence-free precondition of the transport operators.
pub fn ensure_div_free(u: &VectorField) -> Result<()> {
    if u.is_div_free() {
        return Ok(());
    }
    let defect = u.divergence_defect();
    let h1 = norms::vector_sobolev(u, 1);
    if defect <= DIV_FREE_TOL * h1 {
        Ok(())
    } else {
        Err(Error::Invariant(format!(
            "advecting velocity is not divergence-free (defect {defect:e}, H1 norm {h1:e})"
        )))
    }
}

/// Certifies `u` as divergence-free after a numerical check.
pub fn certify_div_free(mut u: VectorField) -> Result<VectorField> {
    u.set_div_free(false);
    ensure_div_free(&u)?;
    u.set_div_free(true);
    Ok(u)
}

fn pointwise_product(a: &PhysicalField, b: &PhysicalField) -> PhysicalField {
    let values: Vec<f64> = a
        .values()
        .par_iter()
        .zip(b.values().par_iter())
        .map(|(x, y)| x * y)
        .collect();
    PhysicalField::new(a.grid(), values).expect("sized")
}

/// Accumulates `sum_j d_j (a_j)` in spectral space, from physical fluxes.
fn flux_divergence(fluxes: &[PhysicalField]) -> SpectralField {
    let g = fluxes[0].grid().clone();
    let spectra: Vec<SpectralField> = fluxes.iter().map(SpectralField::from_physical).collect();
    let mut acc = vec![ZERO; g.len()];
    acc.par_iter_mut().enumerate().for_each(|(i, out)| {
        if !g.is_retained(i) {
            return;
        }
        let k = g.wavevector(i);
        let mut s = ZERO;
        for (j, f) in spectra.iter().enumerate() {
            s += f.coeffs()[i] * Complex64::new(0.0, TWO_PI * k[j] as f64);
        }
        *out = s;
    });
    let mut out = SpectralField::from_coeffs(&g, acc).expect("sized");
    out.zero_mean();
    out
}

/// Dealiased `sum_j d_j(u^j w)` without the Leray projection.
pub fn nonlinear_flux(u: &VectorField, w: &VectorField) -> Result<VectorField> {
    u.grid().ensure_same(w.grid())?;
    if u.dim() != w.dim() {
        return Err(Error::Config("vector dimension mismatch".into()));
    }
    let d = u.dim();
    let up = u.to_physical();
    let same = std::ptr::eq(u, w) || u == w;
    let wp = if same { up.clone() } else { w.to_physical() };

    // products[j][i] = u^j w^i
    let mut products: Vec<Vec<Option<PhysicalField>>> = vec![vec![None; d]; d];
    for j in 0..d {
        for i in 0..d {
            if same && i < j {
                products[j][i] = products[i][j].clone();
            } else {
                products[j][i] = Some(pointwise_product(&up[j], &wp[i]));
            }
        }
    }
    let comps = (0..d)
        .map(|i| {
            let fluxes: Vec<PhysicalField> =
                (0..d).map(|j| products[j][i].take().expect("filled")).collect();
            flux_divergence(&fluxes)
        })
        .collect();
    Ok(VectorField::from_parts(comps, false))
}

/// `B(u, w) = P_sigma sum_j d_j(u^j w)`, dealiased.
pub fn advect_velocity(u: &VectorField, w: &VectorField) -> Result<VectorField> {
    ensure_div_free(u)?;
    Ok(leray_project(&nonlinear_flux(u, w)?))
}

/// Conservative scalar transport `sum_j d_j(u^j theta)`, dealiased.
pub fn advect_scalar(u: &VectorField, theta: &SpectralField) -> Result<SpectralField> {
    ensure_div_free(u)?;
    u.grid().ensure_same(theta.grid())?;
    let tp = theta.to_physical();
    let fluxes: Vec<PhysicalField> = u
        .to_physical()
        .iter()
        .map(|uj| pointwise_product(uj, &tp))
        .collect();
    Ok(flux_divergence(&fluxes))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Grid {
        Grid::new(2, n).unwrap()
    }

    fn sin_mode(g: &Grid, k: &[i64], amp: f64) -> SpectralField {
        SpectralField::mode(g, k, amp, -PI / 2.0).unwrap()
    }

    fn max_diff(a: &SpectralField, b: &SpectralField) -> f64 {
        a.coeffs()
            .iter()
            .zip(b.coeffs())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn dealias_examples() {
        let g = grid(16);
        let low = SpectralField::mode(&g, &[1, 0], 1.0, 0.3).unwrap();
        assert_eq!(dealias(&low), low);
        let high = SpectralField::mode(&g, &[7, 0], 1.0, 0.3).unwrap();
        assert!(dealias(&high).coeffs().iter().all(|c| *c == ZERO));
        let edge = SpectralField::mode(&g, &[5, -5], 1.0, 0.3).unwrap();
        assert_eq!(dealias(&edge), edge);
        let over = SpectralField::mode(&g, &[6, 1], 1.0, 0.3).unwrap();
        assert!(dealias(&over).coeffs().iter().all(|c| *c == ZERO));
    }

    #[test]
    fn derivative_of_sine() {
        let g = grid(16);
        let s = sin_mode(&g, &[1, 0], 1.0);
        let ds = partial_derivative(&s, 0).unwrap();
        let expect = SpectralField::mode(&g, &[1, 0], TWO_PI, 0.0).unwrap();
        assert!(max_diff(&ds, &expect) < 1e-14);
        assert!(matches!(partial_derivative(&s, 2), Err(Error::Config(_))));
    }

    #[test]
    fn laplacian_of_cosine() {
        let g = grid(16);
        let c = SpectralField::mode(&g, &[0, 1], 1.0, 0.0).unwrap();
        let expect = c.scale(-4.0 * PI * PI);
        assert!(max_diff(&laplacian(&c), &expect) < 1e-13);
    }

    #[test]
    fn inverse_laplacian_of_cosine() {
        let g = grid(16);
        let c = SpectralField::mode(&g, &[1, 0], 1.0, 0.0).unwrap();
        let xi = inverse_laplacian(&c).unwrap();
        let expect = c.scale(-1.0 / (4.0 * PI * PI));
        assert!(max_diff(&xi, &expect) < 1e-16);
        let z = inverse_laplacian(&SpectralField::zeros(&g)).unwrap();
        assert!(z.coeffs().iter().all(|c| *c == ZERO));
    }

    #[test]
    fn inverse_laplacian_rejects_mean() {
        let g = grid(8);
        let mut f = SpectralField::zeros(&g);
        f.coeffs_mut()[0] = Complex64::new(1.0, 0.0);
        assert!(matches!(inverse_laplacian(&f), Err(Error::Invariant(_))));
    }

    #[test]
    fn leray_kills_gradient_and_keeps_rotational() {
        let g = grid(16);
        let phi = sin_mode(&g, &[1, 0], 1.0);
        let grad = gradient(&phi);
        let p = leray_project(&grad);
        assert!(p.components().iter().all(|c| c.coeffs().iter().all(|z| z.norm() < 1e-15)));
        assert!(p.is_div_free());

        let psi = SpectralField::mode(&g, &[2, 3], 1.0, 0.4).unwrap();
        let u = VectorField::new(vec![
            partial_derivative(&psi, 1).unwrap().scale(-1.0),
            partial_derivative(&psi, 0).unwrap(),
        ])
        .unwrap();
        let pu = leray_project(&u);
        for (a, b) in pu.components().iter().zip(u.components()) {
            assert!(max_diff(a, b) < 1e-14);
        }
    }

    #[test]
    fn helmholtz_examples() {
        let g = grid(16);
        let u = VectorField::new(vec![
            SpectralField::mode(&g, &[1, 0], 1.0, 0.0).unwrap(),
            SpectralField::zeros(&g),
        ])
        .unwrap();
        assert_eq!(helmholtz_invert(&u, 0.0).unwrap(), u);
        let h = helmholtz_invert(&u, 1.0).unwrap();
        let expect = u.component(0).scale(1.0 / (1.0 + 4.0 * PI * PI));
        assert!(max_diff(h.component(0), &expect) < 1e-16);
        assert!(helmholtz_invert(&u, -1.0).is_err());
    }

    #[test]
    fn curl_of_shear() {
        let g = grid(16);
        let u = VectorField::new(vec![sin_mode(&g, &[0, 1], 1.0), SpectralField::zeros(&g)]).unwrap();
        let w = curl2d(&u).unwrap();
        let expect = SpectralField::mode(&g, &[0, 1], -TWO_PI, 0.0).unwrap();
        assert!(max_diff(&w, &expect) < 1e-14);
        let back = biot_savart(&w).unwrap();
        assert!(max_diff(back.component(0), u.component(0)) < 1e-15);
        assert!(max_diff(back.component(1), u.component(1)) < 1e-15);
    }

    #[test]
    fn curl_rejects_3d() {
        let g = Grid::new(3, 8).unwrap();
        assert!(matches!(
            curl2d(&VectorField::zeros(&g)),
            Err(Error::UnsupportedDimension(3))
        ));
        assert!(matches!(
            biot_savart(&SpectralField::zeros(&g)),
            Err(Error::UnsupportedDimension(3))
        ));
    }

    #[test]
    fn transport_of_zero_is_zero() {
        let g = grid(16);
        let psi = SpectralField::mode(&g, &[1, 2], 1.0, 0.1).unwrap();
        let u = leray_project(&VectorField::new(vec![psi.clone(), psi.scale(0.5)]).unwrap());
        let b = advect_velocity(&u, &VectorField::zeros(&g)).unwrap();
        assert!(b.components().iter().all(|c| c.coeffs().iter().all(|z| *z == ZERO)));
        let s = advect_scalar(&u, &SpectralField::zeros(&g)).unwrap();
        assert!(s.coeffs().iter().all(|z| *z == ZERO));
    }

    #[test]
    fn transport_needs_div_free() {
        let g = grid(16);
        let phi = sin_mode(&g, &[1, 0], 1.0);
        let grad = gradient(&phi);
        assert!(matches!(
            advect_scalar(&grad, &phi),
            Err(Error::Invariant(_))
        ));
        assert!(matches!(
            advect_velocity(&grad, &grad),
            Err(Error::Invariant(_))
        ));
    }

    #[test]
    fn transform_grid_mismatch() {
        let a = grid(8);
        let b = grid(16);
        let s = PhysicalField::zeros(&b);
        assert!(matches!(transform_to_spectral(&a, &s), Err(Error::Config(_))));
    }
}
