use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{PointCloud, SpatialIndex};
use crate::{Error, Execution, Result};

/// Squared Euclidean distance. Every neighbor predicate in the crate uses
/// it, and indexed and brute-force queries agree bit for bit.
#[inline]
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    sq_dist(a, b).sqrt()
}

/// Symmetric Hausdorff distance between two finite point sets.
pub fn hausdorff(a: &PointCloud, b: &PointCloud) -> Result<f64> {
    hausdorff_with(a, b, Execution::default())
}

pub fn hausdorff_with(a: &PointCloud, b: &PointCloud, exec: Execution) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput);
    }
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    let ab = directed_sq(a, &SpatialIndex::build(b)?, exec)?;
    let ba = directed_sq(b, &SpatialIndex::build(a)?, exec)?;
    Ok(ab.max(ba).sqrt())
}

fn directed_sq(from: &PointCloud, to: &SpatialIndex, exec: Execution) -> Result<f64> {
    let mins = exec.try_map(from.len(), |i| to.nearest_sq_dist(from.point(i)))?;
    Ok(mins.into_iter().fold(0.0, f64::max))
}

/// Signal-to-noise ratio `‖noisy‖_F / ‖original − noisy‖_F`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum Snr {
    Finite(f64),
    /// The residual is exactly zero.
    Infinite,
}

impl Snr {
    pub fn value(self) -> f64 {
        match self {
            Snr::Finite(v) => v,
            Snr::Infinite => f64::INFINITY,
        }
    }
}

pub fn snr(original: &DMatrix<f64>, noisy: &DMatrix<f64>) -> Result<Snr> {
    if original.shape() != noisy.shape() {
        return Err(Error::invalid(
            "noisy",
            format!(
                "shape {:?} does not match original {:?}",
                noisy.shape(),
                original.shape()
            ),
        ));
    }
    let signal: f64 = noisy.iter().map(|v| v * v).sum::<f64>().sqrt();
    let residual: f64 = original
        .iter()
        .zip(noisy.iter())
        .map(|(o, n)| (o - n) * (o - n))
        .sum::<f64>()
        .sqrt();
    if residual == 0.0 {
        Ok(Snr::Infinite)
    } else {
        Ok(Snr::Finite(signal / residual))
    }
}
