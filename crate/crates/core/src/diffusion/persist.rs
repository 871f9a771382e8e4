//! Trajectory files and accumulator dumps.
//!
//! Trajectory layout (little endian): magic `WDIF1`, `u32 d`, `f64 L`,
//! `f64 dt`, `u32 record_stride`, `u64 n_records`, then `n_records·d` `f64`
//! coordinates.

use std::io::{Read, Write};

use serde::Serialize;

use super::ReplicaResult;
use crate::error::{Error, Result};
use crate::spectral::{ModeSet, TorusGeometry};

pub const TRAJECTORY_MAGIC: &[u8; 5] = b"WDIF1";

/// Recorded states of one replica, flattened as `n_records × d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub geometry: TorusGeometry,
    pub dt: f64,
    pub record_stride: u64,
    pub positions: Vec<f64>,
}

impl Trajectory {
    pub fn n_records(&self) -> usize {
        self.positions.len() / self.geometry.dim()
    }

    pub fn record(&self, i: usize) -> &[f64] {
        let d = self.geometry.dim();
        &self.positions[i * d..(i + 1) * d]
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(TRAJECTORY_MAGIC)?;
        w.write_all(&(self.geometry.dim() as u32).to_le_bytes())?;
        w.write_all(&self.geometry.side().to_le_bytes())?;
        w.write_all(&self.dt.to_le_bytes())?;
        w.write_all(&(self.record_stride as u32).to_le_bytes())?;
        w.write_all(&(self.n_records() as u64).to_le_bytes())?;
        for v in &self.positions {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 5];
        r.read_exact(&mut magic)?;
        if &magic != TRAJECTORY_MAGIC {
            return Err(Error::Format("not a WDIF1 trajectory".into()));
        }
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b4)?;
        let d = u32::from_le_bytes(b4) as usize;
        r.read_exact(&mut b8)?;
        let side = f64::from_le_bytes(b8);
        r.read_exact(&mut b8)?;
        let dt = f64::from_le_bytes(b8);
        r.read_exact(&mut b4)?;
        let record_stride = u32::from_le_bytes(b4) as u64;
        r.read_exact(&mut b8)?;
        let n = u64::from_le_bytes(b8) as usize;
        let geometry = TorusGeometry::new(d, side).map_err(|e| Error::Format(e.to_string()))?;
        let mut positions = Vec::with_capacity(n * d);
        for _ in 0..n * d {
            r.read_exact(&mut b8)?;
            let v = f64::from_le_bytes(b8);
            if !(0.0..side).contains(&v) {
                return Err(Error::Format(format!("coordinate {v} outside [0, {side})")));
            }
            positions.push(v);
        }
        Ok(Self { geometry, dt, record_stride, positions })
    }
}

#[derive(Serialize)]
struct PsiRow<'a> {
    replica: u64,
    k_vector: String,
    parity: &'a str,
    psi: f64,
}

/// CSV with columns `replica, k_vector, parity, psi`.
pub fn write_psi_csv<W: Write>(w: W, mode_set: &ModeSet, results: &[ReplicaResult]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let d = mode_set.geometry.dim();
    for r in results {
        for (p, psi) in mode_set.pairs.iter().zip(&r.psi) {
            let k: Vec<String> = p.k.0[..d].iter().map(|c| c.to_string()).collect();
            let parity = match p.parity {
                crate::spectral::Parity::Cos => "cos",
                crate::spectral::Parity::Sin => "sin",
            };
            out.serialize(PsiRow { replica: r.replica, k_vector: k.join(" "), parity, psi: *psi })
                .map_err(|e| Error::Format(e.to_string()))?;
        }
    }
    out.flush()?;
    Ok(())
}
