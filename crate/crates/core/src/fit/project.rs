use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::chart::local_chart;
use super::mls::{mls_fit, MonomialBasis};
use super::weight::WeightSpec;
use crate::geometry::{sq_dist, PointCloud, SpatialIndex};
use crate::{Error, Execution, Result};

/// What to do when a neighborhood cannot support the requested degree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RankPolicy {
    /// Lower the degree until the weighted design has full column rank.
    ShrinkDegree,
    Fail,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub k_neighbors: usize,
    pub degree: usize,
    pub weight: WeightSpec,
    pub iterations: usize,
    pub min_rank_policy: RankPolicy,
    #[serde(skip)]
    pub execution: Execution,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            k_neighbors: 20,
            degree: 2,
            weight: WeightSpec::default(),
            iterations: 1,
            min_rank_policy: RankPolicy::ShrinkDegree,
            execution: Execution::default(),
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_neighbors < 2 {
            return Err(Error::invalid("k_neighbors", "must be >= 2"));
        }
        if self.degree < 1 {
            return Err(Error::invalid("degree", "must be >= 1"));
        }
        if self.iterations < 1 {
            return Err(Error::invalid("iterations", "must be >= 1"));
        }
        self.weight.validate()
    }

    /// Checks `k_neighbors` against the basis size for intrinsic dimension `m`
    /// when the policy forbids shrinking.
    pub fn validate_for_dim(&self, m: usize) -> Result<()> {
        self.validate()?;
        let needed = MonomialBasis::size_for(m, self.degree);
        if self.min_rank_policy == RankPolicy::Fail && self.k_neighbors < needed {
            return Err(Error::invalid(
                "k_neighbors",
                format!("{} neighbors cannot determine {needed} coefficients", self.k_neighbors),
            ));
        }
        Ok(())
    }
}

/// Result of projecting one point.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub point: Vec<f64>,
    pub degree_used: usize,
    pub chart_rank_deficient: bool,
}

/// Projects `x` onto the MLS polynomial fitted over its `k` nearest anchors.
pub fn mls_project(x: &[f64], anchors: &SpatialIndex, config: &FitConfig, m: usize) -> Result<Projection> {
    config.validate_for_dim(m)?;
    let cloud = anchors.cloud();
    if cloud.len() < config.k_neighbors {
        return Err(Error::TooFewPoints {
            required: config.k_neighbors,
            got: cloud.len(),
        });
    }
    let nbrs = anchors.knn_query(x, config.k_neighbors)?;
    let local = cloud.select(&nbrs);
    let chart = local_chart(&local, m)?;
    if chart.rank_deficient() && config.min_rank_policy == RankPolicy::Fail {
        return Err(Error::RankDeficient {
            rank: chart.singular_values().iter().filter(|&&s| s > 0.0).count().min(m),
            required: m,
            degree: config.degree,
        });
    }
    let k = local.len();
    let mut coords = DMatrix::zeros(k, m);
    for (i, p) in local.iter().enumerate() {
        for (j, c) in chart.coords(p).into_iter().enumerate() {
            coords[(i, j)] = c;
        }
    }
    let targets = local.to_matrix();
    let eval = chart.coords(x);
    let model = mls_fit(&coords, &targets, &eval, config)?;
    Ok(Projection {
        point: model.evaluate(&eval),
        degree_used: model.degree(),
        chart_rank_deficient: chart.rank_deficient(),
    })
}

/// Per-pass statistics of [`fit_manifold_traced`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassStats {
    pub mean_displacement: f64,
    pub max_displacement: f64,
    /// Points whose fit used a lower degree than requested.
    pub degree_shrinks: usize,
    pub rank_deficient_charts: usize,
}

#[derive(Debug, Clone)]
pub struct FitTrace {
    pub cloud: PointCloud,
    pub passes: Vec<PassStats>,
}

/// Projects every point of `cloud` through anchor-based MLS charts,
/// `config.iterations` times. Output order matches input order.
///
/// When `anchors == cloud` each pass uses the previous pass's output as its
/// anchor set (self-projection); otherwise the anchors stay fixed and only
/// the projected points move.
pub fn fit_manifold(cloud: &PointCloud, anchors: &PointCloud, config: &FitConfig, m: usize) -> Result<PointCloud> {
    Ok(fit_manifold_traced(cloud, anchors, config, m)?.cloud)
}

pub fn fit_manifold_traced(
    cloud: &PointCloud,
    anchors: &PointCloud,
    config: &FitConfig,
    m: usize,
) -> Result<FitTrace> {
    config.validate_for_dim(m)?;
    if cloud.is_empty() || anchors.is_empty() {
        return Err(Error::EmptyInput);
    }
    if cloud.dim() != anchors.dim() {
        return Err(Error::DimensionMismatch {
            expected: anchors.dim(),
            got: cloud.dim(),
        });
    }
    if anchors.len() < config.k_neighbors {
        return Err(Error::TooFewPoints {
            required: config.k_neighbors,
            got: anchors.len(),
        });
    }
    let self_projection = cloud == anchors;
    let mut index = SpatialIndex::from_shared(Arc::new(anchors.clone()))?;
    let mut current = cloud.clone();
    let mut passes = Vec::with_capacity(config.iterations);
    for pass in 0..config.iterations {
        if self_projection && pass > 0 {
            index = SpatialIndex::build(&current)?;
        }
        let results = config
            .execution
            .try_map(current.len(), |i| mls_project(current.point(i), &index, config, m))?;
        let mut next = Vec::with_capacity(current.as_flat().len());
        let mut total = 0.0;
        let mut max: f64 = 0.0;
        let mut shrinks = 0;
        let mut thin = 0;
        for (i, r) in results.iter().enumerate() {
            let d = sq_dist(current.point(i), &r.point).sqrt();
            total += d;
            max = max.max(d);
            shrinks += usize::from(r.degree_used < config.degree);
            thin += usize::from(r.chart_rank_deficient);
            next.extend_from_slice(&r.point);
        }
        passes.push(PassStats {
            mean_displacement: total / current.len() as f64,
            max_displacement: max,
            degree_shrinks: shrinks,
            rank_deficient_charts: thin,
        });
        current = PointCloud::from_flat(cloud.dim(), next)?;
    }
    Ok(FitTrace {
        cloud: current,
        passes,
    })
}
