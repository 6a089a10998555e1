//! Binary snapshots for exact restarts.
//!
//! Layout, all integers and floats little-endian:
//!
//! | field | type |
//! |---|---|
//! | magic `BVSN1` | 5 bytes |
//! | d, n, dealias numerator, dealias denominator | 4 x u32 |
//! | t | f64 |
//! | SHA-256 digest of the model parameters | 32 bytes |
//! | step index | u64 |
//! | current dt | f64 |
//! | budget integrals (work, viscous, thermal, horizontal enstrophy) | 4 x f64 |
//! | length m of the initial diagnostics row, then the row | u32, m x f64 |
//! | coefficients of u_1 .. u_d, then theta, each in flat grid order | (re f64, im f64) per mode |
//!
//! Coefficients are spectral, so a restart is bit-exact.

use std::path::Path;

use num_complex::Complex64;
use sha2::{Digest, Sha256};

use crate::diagnostics::{Budget, DiagRecord};
use crate::error::{Error, Result};
use crate::models::{ModelParams, SimState};
use crate::spectral::ops::certify_div_free;
use crate::spectral::{DealiasFraction, Grid, SpectralField, VectorField};
use crate::timestepping::Checkpoint;

pub const MAGIC: &[u8; 5] = b"BVSN1";

/// Digest of the exact bit patterns of every model coefficient.
pub fn params_digest(p: &ModelParams) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update((p.dim as u64).to_le_bytes());
    for v in &p.nu {
        h.update(v.to_bits().to_le_bytes());
    }
    h.update(p.kappa.to_bits().to_le_bytes());
    h.update(p.alpha.to_bits().to_le_bytes());
    h.update((p.buoyancy_axis as u64).to_le_bytes());
    h.finalize().into()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub checkpoint: Checkpoint,
    pub params_digest: [u8; 32],
}

impl Snapshot {
    /// Refuses parameters other than the ones the snapshot was written with.
    pub fn ensure_params(&self, params: &ModelParams) -> Result<()> {
        if params_digest(params) != self.params_digest {
            return Err(Error::Snapshot(
                "model parameters differ from the ones the snapshot was written with".into(),
            ));
        }
        Ok(())
    }
}

pub fn encode(cp: &Checkpoint, params: &ModelParams) -> Vec<u8> {
    let g = cp.state.grid();
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    let frac = g.dealias_fraction();
    for v in [g.dim() as u32, g.n() as u32, frac.num, frac.den] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&cp.state.t.to_le_bytes());
    out.extend_from_slice(&params_digest(params));
    out.extend_from_slice(&cp.step_index.to_le_bytes());
    out.extend_from_slice(&cp.dt.to_le_bytes());
    for v in cp.budget.to_array() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let row = cp.initial.to_row();
    out.extend_from_slice(&(row.len() as u32).to_le_bytes());
    for v in row {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for f in cp.state.u.components().iter().chain([&cp.state.theta]) {
        for c in f.coeffs() {
            out.extend_from_slice(&c.re.to_le_bytes());
            out.extend_from_slice(&c.im.to_le_bytes());
        }
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Snapshot("truncated snapshot".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

pub fn decode(bytes: &[u8]) -> Result<Snapshot> {
    let mut c = Cursor { bytes, pos: 0 };
    if c.take(MAGIC.len())? != MAGIC {
        return Err(Error::Snapshot("not a snapshot (bad magic)".into()));
    }
    let dim = c.u32()? as usize;
    let n = c.u32()? as usize;
    let (num, den) = (c.u32()?, c.u32()?);
    let grid = Grid::with_dealias(dim, n, DealiasFraction::new(num, den)?)
        .map_err(|e| Error::Snapshot(format!("bad grid in header: {e}")))?;
    let t = c.f64()?;
    let digest: [u8; 32] = c.take(32)?.try_into().expect("32 bytes");
    let step_index = c.u64()?;
    let dt = c.f64()?;
    let budget = Budget::from_array([c.f64()?, c.f64()?, c.f64()?, c.f64()?]);
    let m = c.u32()? as usize;
    let row = (0..m).map(|_| c.f64()).collect::<Result<Vec<_>>>()?;
    let initial = DiagRecord::from_row(&row).map_err(|e| Error::Snapshot(e.to_string()))?;
    let mut fields = Vec::with_capacity(dim + 1);
    for _ in 0..=dim {
        let coeffs = (0..grid.len())
            .map(|_| Ok(Complex64::new(c.f64()?, c.f64()?)))
            .collect::<Result<Vec<_>>>()?;
        fields.push(SpectralField::from_coeffs(&grid, coeffs)?);
    }
    if c.pos != bytes.len() {
        return Err(Error::Snapshot(format!(
            "{} trailing bytes after the coefficients",
            bytes.len() - c.pos
        )));
    }
    let theta = fields.pop().expect("dim + 1 fields");
    let u = certify_div_free(VectorField::new(fields)?)
        .map_err(|e| Error::Snapshot(format!("stored velocity is not admissible: {e}")))?;
    let state = SimState::new(u, theta, t).map_err(|e| Error::Snapshot(e.to_string()))?;
    Ok(Snapshot {
        checkpoint: Checkpoint {
            state,
            step_index,
            dt,
            budget,
            initial,
        },
        params_digest: digest,
    })
}

pub fn write_snapshot(path: &Path, cp: &Checkpoint, params: &ModelParams) -> Result<()> {
    std::fs::write(path, encode(cp, params))?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    decode(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::record;
    use crate::experiments::ic_catalog;
    use crate::spectral::DEFAULT_P_GRID;

    fn checkpoint(dim: usize) -> (Checkpoint, ModelParams) {
        let g = Grid::new(dim, 16).unwrap();
        let (u, theta) = ic_catalog("random_band", &g, 1.0, 0.3, 5).unwrap();
        let state = SimState::new(u, theta, 0.125).unwrap();
        let p = ModelParams::isotropic(dim, 1e-3, 0.0, 0.1);
        let initial = record(&state, &p, &DEFAULT_P_GRID);
        let cp = Checkpoint {
            state,
            step_index: 17,
            dt: 1.0 / 3.0,
            budget: Budget::from_array([0.1, 0.2, 0.0, 1e-300]),
            initial,
        };
        (cp, p)
    }

    #[test]
    fn roundtrip_is_bit_exact() {
        for dim in [2, 3] {
            let (cp, p) = checkpoint(dim);
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("s.bvs");
            write_snapshot(&path, &cp, &p).unwrap();
            let back = read_snapshot(&path).unwrap();
            assert_eq!(back.checkpoint, cp);
            back.ensure_params(&p).unwrap();
            assert_eq!(encode(&back.checkpoint, &p), encode(&cp, &p));
        }
    }

    #[test]
    fn corruption_and_param_changes_refused() {
        let (cp, p) = checkpoint(2);
        let bytes = encode(&cp, &p);
        assert!(decode(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode(&bad).is_err());
        let mut longer = bytes.clone();
        longer.push(0);
        assert!(decode(&longer).is_err());
        let snap = decode(&bytes).unwrap();
        let mut q = p.clone();
        q.alpha = 0.1000000001;
        assert!(matches!(snap.ensure_params(&q), Err(Error::Snapshot(_))));
    }
}
