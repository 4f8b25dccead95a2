//! Point-cloud data model, neighbor queries and the distance metrics shared
//! by the subsampling and fitting stages.

mod cloud;
mod index;
mod metrics;
mod subspace;

pub use cloud::PointCloud;
pub use index::SpatialIndex;
pub use metrics::{dist, hausdorff, hausdorff_with, snr, sq_dist, Snr};
pub use subspace::{principal_angles, subspace_angle, Subspace};
