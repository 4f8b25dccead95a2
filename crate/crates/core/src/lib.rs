//! Denoising of point clouds sampled near a low-dimensional manifold.
//!
//! The pipeline has two stages:
//!
//! 1. [`subsample`] walks the cloud in seeded-random batches and keeps a point
//!    as an *anchor* only when its local heat-kernel measure
//!    ([`spectral::local_measure`]) exceeds a threshold, which yields a roughly
//!    evenly separated anchor set.
//! 2. [`fit`] projects every point onto a local moving-least-squares
//!    polynomial fitted over a PCA chart of its nearest anchors.
//!
//! [`geometry`] carries the point-cloud model, neighbor queries and distance
//! metrics shared by both stages, and [`diagnostics`] evaluates the
//! tangent-angle bounds and sampling statistics used to reason about fit
//! quality.
//!
//! Data-parallel inner loops (per-point projection, Hausdorff sweeps, kernel
//! matrix assembly) run on rayon when the `parallel` feature is enabled; see
//! [`Execution`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod fit;
pub mod geometry;
mod par;
pub mod spectral;
pub mod subsample;

pub use error::{Error, Result};
pub use geometry::{PointCloud, SpatialIndex, Subspace};
pub use par::Execution;
