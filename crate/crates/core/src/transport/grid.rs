//! Periodic grid densities for transport computations.
//!
//! On disk a density is a flat little-endian `f64` array of cell masses plus
//! a JSON sidecar `{"d", "L", "n"}`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::spectral::TorusGeometry;

/// Largest negative mass that is clamped away instead of rejected.
pub const NEGATIVE_MASS_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity {
    pub geometry: TorusGeometry,
    pub n: usize,
    /// Nonnegative cell masses summing to one, row-major with axis 0 slowest.
    pub cells: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    d: usize,
    #[serde(rename = "L")]
    side: f64,
    n: usize,
}

impl GridDensity {
    pub fn uniform(geometry: TorusGeometry, n: usize) -> Self {
        let cells = n.pow(geometry.dim() as u32);
        Self { geometry, n, cells: vec![1.0 / cells as f64; cells] }
    }

    /// From point values of a density w.r.t. normalised measure.
    ///
    /// Negative values are clamped (and the rest renormalised) only when their
    /// total mass is below [`NEGATIVE_MASS_TOLERANCE`].
    pub fn from_values(geometry: TorusGeometry, n: usize, values: &[f64]) -> Result<Self> {
        let count = n.pow(geometry.dim() as u32);
        if values.len() != count {
            return Err(invalid(format!("expected {count} grid values, got {}", values.len())));
        }
        let inv = 1.0 / count as f64;
        let negative_mass: f64 = values.iter().filter(|v| **v < 0.0).map(|v| -v * inv).sum();
        if negative_mass > NEGATIVE_MASS_TOLERANCE {
            return Err(Error::NegativeDensity { negative_mass });
        }
        let mut cells: Vec<f64> = values.iter().map(|v| v.max(0.0) * inv).collect();
        let total: f64 = cells.iter().sum();
        if !(total > 0.0) {
            return Err(invalid("grid density has no mass"));
        }
        for c in &mut cells {
            *c /= total;
        }
        Ok(Self { geometry, n, cells })
    }

    pub fn total_mass(&self) -> f64 {
        self.cells.iter().sum()
    }

    /// Cell masses divided by the uniform mass (a density w.r.t. μ).
    pub fn density_values(&self) -> Vec<f64> {
        let c = self.cells.len() as f64;
        self.cells.iter().map(|m| m * c).collect()
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.geometry == other.geometry && self.n == other.n
    }

    /// Writes `<stem>.f64` and `<stem>.json`.
    pub fn save(&self, stem: &Path) -> Result<()> {
        let mut bytes = Vec::with_capacity(8 * self.cells.len());
        for c in &self.cells {
            bytes.extend_from_slice(&c.to_le_bytes());
        }
        fs::write(stem.with_extension("f64"), bytes)?;
        let side = Sidecar { d: self.geometry.dim(), side: self.geometry.side(), n: self.n };
        fs::write(stem.with_extension("json"), serde_json::to_vec_pretty(&side)?)?;
        Ok(())
    }

    pub fn load(stem: &Path) -> Result<Self> {
        let side: Sidecar = serde_json::from_slice(&fs::read(stem.with_extension("json"))?)?;
        let geometry = TorusGeometry::new(side.d, side.side)?;
        let bytes = fs::read(stem.with_extension("f64"))?;
        let count = side.n.pow(side.d as u32);
        if bytes.len() != 8 * count {
            return Err(Error::Format(format!("expected {} bytes, found {}", 8 * count, bytes.len())));
        }
        let cells: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")))
            .collect();
        if cells.iter().any(|c| !(*c >= 0.0)) {
            return Err(Error::Format("negative or NaN cell mass".into()));
        }
        if (cells.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::Format("cell masses do not sum to one".into()));
        }
        Ok(Self { geometry, n: side.n, cells })
    }
}
