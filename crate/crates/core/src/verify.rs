//! Self-check suites behind the `verify` command: spectral operators against
//! the dense oracles, the skew-symmetry of the transport terms, and the
//! fitted functional-inequality constants.

use std::fmt;
use std::time::Instant;

use crate::diagnostics::{
    brezis_verify, cz_sqrt_l_verify, default_corpus, default_vorticity_corpus, poincare_ratio,
    DEFAULT_EPS_GRID,
};
use crate::error::Result;
use crate::oracle;
use crate::random::{random_scalar, random_solenoidal, random_vector, BandSpec};
use crate::spectral::{
    advect_scalar, advect_velocity, biot_savart, dealias, dealias_vector, helmholtz_invert,
    inverse_laplacian, leray_project, norms, partial_derivative, Grid, SpectralField,
    DEFAULT_P_GRID,
};

pub const ORACLE_TOL: f64 = 1e-10;
pub const SKEW_TOL: f64 = 1e-10;
pub const BREZIS_MAX: f64 = 10.0;
pub const CZ_MAX: f64 = 5.0;
pub const RESEED_SPREAD: f64 = 0.2;

/// Size of each inequality corpus.
pub const CORPUS_SIZE: usize = 20;
/// Resolution of the inequality corpora.
pub const CORPUS_N: usize = 64;

fn rel(diff: f64, scale: f64) -> f64 {
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

fn coeff_rel(a: &[SpectralField], b: &[SpectralField]) -> f64 {
    let mut diff = 0.0f64;
    let mut scale = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        for (p, q) in x.coeffs().iter().zip(y.coeffs()) {
            diff = diff.max((p - q).norm());
            scale = scale.max(q.norm());
        }
    }
    rel(diff, scale)
}

fn samples_rel(ours: &[f64], reference: &[f64]) -> f64 {
    rel(oracle::max_abs_diff(ours, reference), oracle::max_abs(reference))
}

/// Dense second derivative of grid samples along one axis.
fn dense_second(grid: &Grid, samples: &[f64], axis: usize) -> Vec<f64> {
    let first = oracle::derivative_samples(grid, &oracle::analyze(grid, samples), axis);
    oracle::derivative_samples(grid, &oracle::analyze(grid, &first), axis)
}

fn dense_laplacian(grid: &Grid, samples: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; samples.len()];
    for axis in 0..grid.dim() {
        for (o, v) in out.iter_mut().zip(dense_second(grid, samples, axis)) {
            *o += v;
        }
    }
    out
}

/// Largest relative deviation of each operator from its oracle, over `trials`
/// random inputs on an `n^d` grid.
pub fn operator_oracle(dim: usize, n: usize, trials: u64) -> Result<Vec<(&'static str, f64)>> {
    let g = Grid::new(dim, n)?;
    let band = BandSpec {
        k_max: g.cutoff(),
        decay: 0.5,
    };
    let mut worst: Vec<(&'static str, f64)> = vec![
        ("derivative", 0.0),
        ("leray", 0.0),
        ("helmholtz_inverse", 0.0),
        ("inverse_laplacian", 0.0),
        ("advect_velocity", 0.0),
        ("advect_scalar", 0.0),
    ];
    if dim == 2 {
        worst.push(("biot_savart", 0.0));
    }
    let mut bump = |name: &str, v: f64| {
        let slot = worst.iter_mut().find(|(n, _)| *n == name).expect("known name");
        slot.1 = slot.1.max(v);
    };
    for seed in 0..trials {
        let f = random_scalar(&g, band, 100 + seed);
        for axis in 0..dim {
            let ours = partial_derivative(&f, axis)?.to_physical();
            bump(
                "derivative",
                samples_rel(ours.values(), &oracle::derivative_samples(&g, f.coeffs(), axis)),
            );
        }

        let v = random_vector(&g, band, 200 + seed);
        let projected = leray_project(&v);
        bump(
            "leray",
            coeff_rel(projected.components(), &oracle::leray_project(&v)),
        );

        let alpha = 0.3;
        let h = helmholtz_invert(&v, alpha)?;
        for (hc, vc) in h.components().iter().zip(v.components()) {
            let hs = oracle::synthesize(&g, hc.coeffs());
            let lap = dense_laplacian(&g, &hs);
            let applied: Vec<f64> = hs
                .iter()
                .zip(&lap)
                .map(|(a, l)| a - alpha * alpha * l)
                .collect();
            bump(
                "helmholtz_inverse",
                samples_rel(&applied, &oracle::synthesize(&g, vc.coeffs())),
            );
        }

        let psi = inverse_laplacian(&f)?;
        let lap = dense_laplacian(&g, &oracle::synthesize(&g, psi.coeffs()));
        bump(
            "inverse_laplacian",
            samples_rel(&lap, &oracle::synthesize(&g, f.coeffs())),
        );

        let u = dealias_vector(&random_solenoidal(&g, band, 300 + seed));
        let w = dealias_vector(&random_vector(&g, band, 400 + seed));
        let b = advect_velocity(&u, &w)?;
        bump(
            "advect_velocity",
            coeff_rel(b.components(), &oracle::advect_velocity(&u, &w)),
        );
        let theta = dealias(&f);
        let s = advect_scalar(&u, &theta)?;
        bump(
            "advect_scalar",
            coeff_rel(&[s], &[oracle::advect_scalar(&u, &theta)]),
        );

        if dim == 2 {
            let bs = biot_savart(&f)?;
            let reference = oracle::biot_savart_samples(&g, f.coeffs());
            let mut diff = 0.0f64;
            let mut scale = 0.0f64;
            for (c, r) in bs.components().iter().zip(&reference) {
                diff = diff.max(oracle::max_abs_diff(c.to_physical().values(), r));
                scale = scale.max(oracle::max_abs(r));
            }
            bump("biot_savart", rel(diff, scale));
        }
    }
    Ok(worst)
}

/// Largest `|(B(u,w),w)| / (|grad u| |grad w|^2)` and
/// `|(div(u theta),theta)| / (|grad u| |grad theta|^2)` over `count` random
/// dealiased inputs.
pub fn skew_symmetry(dim: usize, n: usize, count: u64) -> Result<(f64, f64)> {
    let g = Grid::new(dim, n)?;
    let band = BandSpec {
        k_max: g.cutoff(),
        decay: 1.0,
    };
    let mut worst_b = 0.0f64;
    let mut worst_s = 0.0f64;
    for seed in 0..count {
        let u = dealias_vector(&random_solenoidal(&g, band, 3 * seed));
        let w = dealias_vector(&random_solenoidal(&g, band, 3 * seed + 1));
        let theta = dealias(&random_scalar(&g, band, 3 * seed + 2));
        let hu = norms::vector_sobolev(&u, 1);
        let hw = norms::vector_sobolev(&w, 1);
        let ht = norms::sobolev(&theta, 1);
        let b = advect_velocity(&u, &w)?.inner(&w)?;
        let s = advect_scalar(&u, &theta)?.inner(&theta)?;
        worst_b = worst_b.max(b.abs() / (hu * hw * hw));
        worst_s = worst_s.max(s.abs() / (hu * ht * ht));
    }
    Ok((worst_b, worst_s))
}

/// Fitted constants on the default corpora for one seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InequalityConstants {
    pub brezis: f64,
    pub c_cz: f64,
    pub c_sqrt: f64,
    pub poincare: f64,
}

pub fn inequality_constants(seed: u64) -> Result<InequalityConstants> {
    let g = Grid::new(2, CORPUS_N)?;
    let corpus = default_corpus(&g, seed, CORPUS_SIZE);
    let vort = default_vorticity_corpus(&g, seed, CORPUS_SIZE);
    let brezis = brezis_verify(&corpus, &DEFAULT_EPS_GRID)?;
    let cz = cz_sqrt_l_verify(&vort, &DEFAULT_P_GRID)?;
    let poincare = vort.iter().map(poincare_ratio).fold(0.0, f64::max);
    Ok(InequalityConstants {
        brezis,
        c_cz: cz.c_cz,
        c_sqrt: cz.c_sqrt,
        poincare,
    })
}

/// Relative spread `|a - b| / max(a, b)`.
pub fn spread(a: f64, b: f64) -> f64 {
    let m = a.abs().max(b.abs());
    if m == 0.0 {
        0.0
    } else {
        (a - b).abs() / m
    }
}

#[derive(Debug, Clone)]
pub struct SuiteRow {
    pub suite: String,
    pub check: String,
    pub value: f64,
    pub limit: f64,
    pub passed: bool,
    pub seconds: f64,
}

impl fmt::Display for SuiteRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<5} {:<12} {:<36} {:>11.3e} <= {:<9.1e} ({:.2}s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.suite,
            self.check,
            self.value,
            self.limit,
            self.seconds
        )
    }
}

fn row(suite: &str, check: &str, value: f64, limit: f64, seconds: f64) -> SuiteRow {
    SuiteRow {
        suite: suite.into(),
        check: check.into(),
        value,
        limit,
        passed: value.is_finite() && value <= limit,
        seconds,
    }
}

/// Runs every suite and returns one row per check.
pub fn run_all() -> Result<Vec<SuiteRow>> {
    let mut rows = Vec::new();
    for dim in [2, 3] {
        let clock = Instant::now();
        let res = operator_oracle(dim, 8, 3)?;
        let secs = clock.elapsed().as_secs_f64();
        for (name, v) in res {
            rows.push(row(&format!("oracle-{dim}d"), name, v, ORACLE_TOL, secs));
        }
    }

    let clock = Instant::now();
    let (b, s) = skew_symmetry(2, 32, 100)?;
    let secs = clock.elapsed().as_secs_f64();
    rows.push(row("skew", "(B(u,w),w)", b, SKEW_TOL, secs));
    rows.push(row("skew", "(div(u theta),theta)", s, SKEW_TOL, secs));

    let clock = Instant::now();
    let a = inequality_constants(0)?;
    let b = inequality_constants(1000)?;
    let secs = clock.elapsed().as_secs_f64();
    rows.push(row("inequality", "Brezis-Gallouet constant", a.brezis, BREZIS_MAX, secs));
    rows.push(row("inequality", "Calderon-Zygmund constant", a.c_cz, CZ_MAX, secs));
    rows.push(row("inequality", "Brezis-Gallouet reseed spread", spread(a.brezis, b.brezis), RESEED_SPREAD, secs));
    rows.push(row("inequality", "Calderon-Zygmund reseed spread", spread(a.c_cz, b.c_cz), RESEED_SPREAD, secs));
    rows.push(row(
        "inequality",
        "Poincare ratio",
        a.poincare,
        1.0 / (2.0 * std::f64::consts::PI) * (1.0 + 1e-12),
        secs,
    ));
    // Reported, not bounded: the sqrt(p) Sobolev constant.
    rows.push(row("inequality", "sqrt(p) embedding constant (info)", a.c_sqrt, f64::INFINITY, secs));
    Ok(rows)
}
