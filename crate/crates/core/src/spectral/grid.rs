use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Fraction of the resolved band kept by the dealiasing filter, as `num/den`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DealiasFraction {
    pub num: u32,
    pub den: u32,
}

impl DealiasFraction {
    pub const TWO_THIRDS: DealiasFraction = DealiasFraction { num: 2, den: 3 };

    pub fn new(num: u32, den: u32) -> Result<Self> {
        if den == 0 || num == 0 || num > den {
            return Err(Error::Config(format!(
                "dealias fraction {num}/{den} must lie in (0, 1]"
            )));
        }
        Ok(DealiasFraction { num, den })
    }

    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl Default for DealiasFraction {
    fn default() -> Self {
        Self::TWO_THIRDS
    }
}

impl fmt::Display for DealiasFraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

struct GridInner {
    dim: usize,
    n: usize,
    dealias: DealiasFraction,
    cutoff: i64,
    /// Integer wavevector of every flat mode index (unused axes are 0).
    wavevectors: Vec<[i64; 3]>,
    retained: Vec<bool>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// Uniform collocation grid on the unit torus `[0,1]^d`.
///
/// Modes and samples share one row-major layout: the flat index of
/// `(i_1, .., i_d)` is `((i_1 * n) + i_2) * n + i_3`, with axis 1 slowest.
/// Sample `i` sits at `x = i / n`; mode index `i` carries the integer
/// wavenumber `i` for `i < n/2` and `i - n` otherwise, so the physical
/// wavenumber is `2 pi k`.
#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridInner>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.inner.dim)
            .field("n", &self.inner.n)
            .field("dealias", &self.inner.dealias)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.dim == other.inner.dim
                && self.inner.n == other.inner.n
                && self.inner.dealias == other.inner.dealias)
    }
}

impl Grid {
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        Self::with_dealias(dim, n, DealiasFraction::default())
    }

    pub fn with_dealias(dim: usize, n: usize, dealias: DealiasFraction) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::Config(format!("dimension must be 2 or 3, got {dim}")));
        }
        if n < 8 || n % 2 != 0 {
            return Err(Error::Config(format!(
                "modes per axis must be even and >= 8, got {n}"
            )));
        }
        // Keep |k_i| strictly below fraction * n / 2.
        let numer = dealias.num as i64 * n as i64;
        let denom = 2 * dealias.den as i64;
        let cutoff = (numer + denom - 1) / denom - 1;

        let total = n.pow(dim as u32);
        let mut wavevectors = Vec::with_capacity(total);
        let mut retained = Vec::with_capacity(total);
        for flat in 0..total {
            let mut k = [0i64; 3];
            let mut rem = flat;
            for axis in (0..dim).rev() {
                k[axis] = wavenumber(rem % n, n);
                rem /= n;
            }
            retained.push(k.iter().all(|ki| ki.abs() <= cutoff));
            wavevectors.push(k);
        }

        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        Ok(Grid {
            inner: Arc::new(GridInner {
                dim,
                n,
                dealias,
                cutoff,
                wavevectors,
                retained,
                forward,
                inverse,
            }),
        })
    }

    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    pub fn n(&self) -> usize {
        self.inner.n
    }

    pub fn dealias_fraction(&self) -> DealiasFraction {
        self.inner.dealias
    }

    /// Largest retained |k_i| after dealiasing.
    pub fn cutoff(&self) -> i64 {
        self.inner.cutoff
    }

    /// Number of modes (equivalently, of samples).
    pub fn len(&self) -> usize {
        self.inner.wavevectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inner.wavevectors.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.inner.n as f64
    }

    pub fn wavevector(&self, flat: usize) -> [i64; 3] {
        self.inner.wavevectors[flat]
    }

    pub fn wavevectors(&self) -> &[[i64; 3]] {
        &self.inner.wavevectors
    }

    pub fn is_retained(&self, flat: usize) -> bool {
        self.inner.retained[flat]
    }

    pub fn retained_mask(&self) -> &[bool] {
        &self.inner.retained
    }

    /// Whether mode `flat` has a Nyquist component along `axis`.
    pub fn is_nyquist(&self, flat: usize, axis: usize) -> bool {
        self.inner.wavevectors[flat][axis] == -(self.inner.n as i64 / 2)
    }

    /// Integer |k|^2 of a mode.
    pub fn k_squared(&self, flat: usize) -> i64 {
        let k = &self.inner.wavevectors[flat];
        k[0] * k[0] + k[1] * k[1] + k[2] * k[2]
    }

    /// Flat index of an integer wavevector, wrapping negative entries.
    pub fn index_of(&self, k: &[i64]) -> Result<usize> {
        if k.len() != self.inner.dim {
            return Err(Error::Config(format!(
                "wavevector has {} entries, grid dimension is {}",
                k.len(),
                self.inner.dim
            )));
        }
        let n = self.inner.n as i64;
        let mut flat = 0usize;
        for &ki in k {
            if ki < -n / 2 || ki >= n / 2 {
                return Err(Error::Config(format!(
                    "wavenumber {ki} outside [-{}, {})",
                    n / 2,
                    n / 2
                )));
            }
            flat = flat * self.inner.n + ki.rem_euclid(n) as usize;
        }
        Ok(flat)
    }

    /// Physical coordinates of sample `flat`.
    pub fn point(&self, flat: usize) -> [f64; 3] {
        let n = self.inner.n;
        let mut x = [0.0; 3];
        let mut rem = flat;
        for axis in (0..self.inner.dim).rev() {
            x[axis] = (rem % n) as f64 / n as f64;
            rem /= n;
        }
        x
    }

    pub(crate) fn ensure_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "grid mismatch: {:?} vs {:?}",
                self, other
            )))
        }
    }

    /// Unnormalized multidimensional FFT in place. `inverse` uses `e^{+i..}`.
    pub(crate) fn fft_in_place(&self, data: &mut [Complex64], inverse: bool) {
        let plan = if inverse {
            &self.inner.inverse
        } else {
            &self.inner.forward
        };
        let n = self.inner.n;
        let dim = self.inner.dim;
        let lines_per_task = (4096 / n).max(1);

        // last axis is contiguous
        data.par_chunks_mut(n * lines_per_task)
            .for_each(|chunk| plan.process(chunk));

        let mut buf = vec![Complex64::new(0.0, 0.0); data.len()];
        for axis in 0..dim - 1 {
            let stride = n.pow((dim - 1 - axis) as u32);
            // gather lines along `axis` into contiguous rows
            {
                let src: &[Complex64] = data;
                buf.par_chunks_mut(n).enumerate().for_each(|(line, row)| {
                    let outer = line / stride;
                    let inner = line % stride;
                    let base = outer * n * stride + inner;
                    for (i, v) in row.iter_mut().enumerate() {
                        *v = src[base + i * stride];
                    }
                });
            }
            buf.par_chunks_mut(n * lines_per_task)
                .for_each(|chunk| plan.process(chunk));
            {
                let src: &[Complex64] = &buf;
                data.par_iter_mut().enumerate().for_each(|(pos, v)| {
                    let outer = pos / (n * stride);
                    let rem = pos % (n * stride);
                    let i = rem / stride;
                    let inner = rem % stride;
                    *v = src[(outer * stride + inner) * n + i];
                });
            }
        }
    }
}

/// Signed integer wavenumber of FFT index `i` on an `n`-point axis.
pub fn wavenumber(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sizes() {
        assert!(Grid::new(2, 6).is_err());
        assert!(Grid::new(2, 9).is_err());
        assert!(Grid::new(4, 16).is_err());
        assert!(Grid::new(1, 16).is_err());
        assert!(Grid::new(3, 8).is_ok());
    }

    #[test]
    fn cutoff_follows_two_thirds_rule() {
        assert_eq!(Grid::new(2, 16).unwrap().cutoff(), 5);
        assert_eq!(Grid::new(2, 8).unwrap().cutoff(), 2);
        assert_eq!(Grid::new(2, 64).unwrap().cutoff(), 21);
        assert_eq!(Grid::new(2, 128).unwrap().cutoff(), 42);
        // n divisible by 3: the boundary mode is dropped so products stay alias-free
        assert_eq!(Grid::new(2, 48).unwrap().cutoff(), 15);
        let full = Grid::with_dealias(2, 16, DealiasFraction::new(1, 1).unwrap()).unwrap();
        assert_eq!(full.cutoff(), 7);
    }

    #[test]
    fn index_roundtrip() {
        let g = Grid::new(3, 8).unwrap();
        for flat in 0..g.len() {
            let k = g.wavevector(flat);
            assert_eq!(g.index_of(&k[..3]).unwrap(), flat);
        }
        assert!(g.index_of(&[4, 0, 0]).is_err());
        assert!(g.index_of(&[1, 0]).is_err());
    }

    #[test]
    fn fft_matches_direct_sum_3d() {
        let g = Grid::new(3, 8).unwrap();
        let n = g.n();
        let data: Vec<Complex64> = (0..g.len())
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let mut fast = data.clone();
        g.fft_in_place(&mut fast, false);
        for m in [0usize, 1, 9, 77, 300, 511] {
            let k = g.wavevector(m);
            let mut acc = Complex64::new(0.0, 0.0);
            for (p, v) in data.iter().enumerate() {
                let x = g.point(p);
                let phase = -2.0
                    * std::f64::consts::PI
                    * (k[0] as f64 * x[0] + k[1] as f64 * x[1] + k[2] as f64 * x[2]);
                acc += v * Complex64::from_polar(1.0, phase);
            }
            assert!((acc - fast[m]).norm() < 1e-10 * n as f64, "mode {m}");
        }
    }
}
