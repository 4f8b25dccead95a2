//! Local PCA charts and moving-least-squares projection onto the fitted
//! manifold.
//!
//! For every query point the `k` nearest anchors define a chart: their mean
//! is the base point and their top `m` principal directions span the tangent
//! plane. A vector-valued polynomial of degree `q` is then fitted from chart
//! coordinates to ambient positions by weighted least squares, with weights
//! centred on the query's own chart coordinate, and the query is replaced by
//! the polynomial's value there.

mod chart;
mod mls;
mod project;
mod weight;

pub use chart::{local_chart, LocalChart};
pub use mls::{mls_fit, MlsModel, MonomialBasis};
pub use project::{fit_manifold, fit_manifold_traced, mls_project, FitConfig, FitTrace, PassStats, Projection, RankPolicy};
pub use weight::{WeightKind, WeightSpec};
