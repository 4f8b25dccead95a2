//! Spectral subsampling: pick anchors whose local heat-kernel measure exceeds
//! a threshold.
//!
//! The cloud is consumed in batches. Each batch starts from a seeded-random
//! unexamined center `x`; its candidates are the unexamined points within
//! `r` of `x` and its references are the already accepted points within `r`.
//! Candidates are visited in ascending index order and accepted when their
//! measure relative to the current references exceeds `ε`; an accepted
//! candidate immediately becomes a reference for the rest of the batch.
//! Every candidate is marked examined whether or not it was accepted.
//!
//! A single accepted reference at chart distance `d` gives measure
//! `1 − exp(−d² / (2t))`, and adding references can only lower the measure,
//! so two anchors accepted with each other in view are at least
//! `√(−2t ln(1 − ε))` apart in chart coordinates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::fit::local_chart;
use crate::geometry::{PointCloud, SpatialIndex};
use crate::spectral::{local_measure, MeasureParams, MeasureValue};
use crate::{Error, Result};

/// Coordinates in which measures are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChartMode {
    /// Project each batch onto a PCA tangent chart of its candidates and
    /// references, standing in for the log map at the batch center.
    #[default]
    TangentChart,
    /// Raw ambient coordinates.
    Ambient,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubsampleConfig {
    pub radius: f64,
    pub threshold: f64,
    pub measure_params: MeasureParams,
    pub seed: u64,
    pub chart_mode: ChartMode,
}

impl SubsampleConfig {
    /// Config with heat time `(r/3)²`, default ridge and tangent charts.
    pub fn new(radius: f64, threshold: f64, intrinsic_dim: usize, seed: u64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::invalid("radius", format!("must be positive, got {radius}")));
        }
        let measure_params = MeasureParams::new(intrinsic_dim, MeasureParams::default_heat_time(radius))?;
        let cfg = Self {
            radius,
            threshold,
            measure_params,
            seed,
            chart_mode: ChartMode::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_heat_time(mut self, t: f64) -> Result<Self> {
        self.measure_params = MeasureParams::new(self.measure_params.intrinsic_dim, t)?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::invalid("radius", format!("must be positive, got {}", self.radius)));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::invalid(
                "threshold",
                format!("must lie in (0, 1), got {}", self.threshold),
            ));
        }
        self.measure_params.validate()
    }

    /// Chart-coordinate separation guaranteed between anchors that see each
    /// other as references: `√(−2t ln(1 − ε))`.
    pub fn separation_bound(&self) -> f64 {
        (-2.0 * self.measure_params.heat_time * (1.0 - self.threshold).ln()).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureRecord {
    pub index: usize,
    pub batch: usize,
    pub measure: MeasureValue,
    /// Number of references the measure was computed against.
    pub references: usize,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Batch {
    pub center: usize,
    /// Candidates in visiting order.
    pub candidates: Vec<usize>,
    /// Accepted points within `r` of the center when the batch started.
    pub prior_references: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsampleResult {
    /// Accepted indices in acceptance order.
    pub accepted: Vec<usize>,
    /// One record per input point, in examination order.
    pub measures: Vec<MeasureRecord>,
    /// Every input index exactly once, in examination order.
    pub order: Vec<usize>,
    pub batches: Vec<Batch>,
}

impl SubsampleResult {
    pub fn accepted_sorted(&self) -> Vec<usize> {
        let mut v = self.accepted.clone();
        v.sort_unstable();
        v
    }

    pub fn batch_centers(&self) -> Vec<usize> {
        self.batches.iter().map(|b| b.center).collect()
    }

    pub fn clamp_events(&self) -> usize {
        self.measures.iter().filter(|r| r.measure.was_clamped()).count()
    }

    pub fn ill_conditioned(&self) -> usize {
        self.measures.iter().filter(|r| r.measure.condition_flag).count()
    }
}

/// Runs the subsampler with centers drawn from a ChaCha8 stream seeded by
/// `config.seed`.
pub fn subsample(cloud: &PointCloud, config: &SubsampleConfig, index: &SpatialIndex) -> Result<SubsampleResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    run(cloud, config, index, |remaining: &[usize]| {
        Ok(remaining[rng.gen_range(0..remaining.len())])
    })
}

/// Re-runs the subsampler with a recorded sequence of batch centers, e.g.
/// [`SubsampleResult::batch_centers`] from an earlier run.
///
/// Batches depend only on the centers and the radius, so replaying a trace
/// with a different threshold compares acceptance over identical batches.
pub fn subsample_replay(
    cloud: &PointCloud,
    config: &SubsampleConfig,
    index: &SpatialIndex,
    centers: &[usize],
) -> Result<SubsampleResult> {
    let mut it = centers.iter().copied();
    run(cloud, config, index, |remaining: &[usize]| {
        let c = it
            .next()
            .ok_or_else(|| Error::invalid("centers", "trace exhausted before the cloud"))?;
        if !remaining.contains(&c) {
            return Err(Error::invalid("centers", format!("center {c} was already examined")));
        }
        Ok(c)
    })
}

fn run<F>(cloud: &PointCloud, config: &SubsampleConfig, index: &SpatialIndex, mut next_center: F) -> Result<SubsampleResult>
where
    F: FnMut(&[usize]) -> Result<usize>,
{
    config.validate()?;
    if cloud.is_empty() {
        return Err(Error::EmptyInput);
    }
    if index.len() != cloud.len() || index.cloud() != cloud {
        return Err(Error::invalid("index", "spatial index was built over a different cloud"));
    }
    let n = cloud.len();
    let params = &config.measure_params;
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut slot: Vec<usize> = (0..n).collect();
    let mut examined = vec![false; n];
    let mut is_accepted = vec![false; n];

    let mut accepted = Vec::new();
    let mut measures = Vec::with_capacity(n);
    let mut order = Vec::with_capacity(n);
    let mut batches = Vec::new();

    while !remaining.is_empty() {
        let center = next_center(&remaining)?;
        let ball = index.radius_query(cloud.point(center), config.radius)?;
        let candidates: Vec<usize> = ball.iter().copied().filter(|&i| !examined[i]).collect();
        let prior: Vec<usize> = ball.iter().copied().filter(|&i| is_accepted[i]).collect();
        let batch_id = batches.len();

        for &i in &candidates {
            examined[i] = true;
            let s = slot[i];
            remaining.swap_remove(s);
            if s < remaining.len() {
                slot[remaining[s]] = s;
            }
        }

        if candidates.len() == 1 && prior.is_empty() {
            is_accepted[center] = true;
            accepted.push(center);
            order.push(center);
            measures.push(MeasureRecord {
                index: center,
                batch: batch_id,
                measure: local_measure::<&[f64]>(cloud.point(center), &[], params)?,
                references: 0,
                accepted: true,
            });
        } else {
            let coords = batch_coords(cloud, &candidates, &prior, config)?;
            let (cand_coords, prior_coords) = coords.split_at(candidates.len());
            let mut refs: Vec<&[f64]> = prior_coords.iter().map(Vec::as_slice).collect();
            for (&j, cj) in candidates.iter().zip(cand_coords) {
                let measure = local_measure(cj, &refs, params)?;
                let take = measure.value > config.threshold;
                measures.push(MeasureRecord {
                    index: j,
                    batch: batch_id,
                    measure,
                    references: refs.len(),
                    accepted: take,
                });
                order.push(j);
                if take {
                    is_accepted[j] = true;
                    accepted.push(j);
                    refs.push(cj);
                }
            }
        }
        batches.push(Batch {
            center,
            candidates,
            prior_references: prior,
        });
    }

    Ok(SubsampleResult {
        accepted,
        measures,
        order,
        batches,
    })
}

// Measure coordinates for candidates followed by prior references.
fn batch_coords(
    cloud: &PointCloud,
    candidates: &[usize],
    prior: &[usize],
    config: &SubsampleConfig,
) -> Result<Vec<Vec<f64>>> {
    let all: Vec<usize> = candidates.iter().chain(prior).copied().collect();
    let m = config.measure_params.intrinsic_dim;
    let use_chart = config.chart_mode == ChartMode::TangentChart && m < cloud.dim() && all.len() >= 2;
    if !use_chart {
        return Ok(all.iter().map(|&i| cloud.point(i).to_vec()).collect());
    }
    let local = cloud.select(&all);
    let chart = local_chart(&local, m)?;
    Ok(local.iter().map(|p| chart.coords(p)).collect())
}

/// Minimum pairwise Euclidean distance among `accepted`.
pub fn verify_separation(cloud: &PointCloud, accepted: &[usize]) -> Result<f64> {
    if accepted.len() < 2 {
        return Err(Error::TooFewPoints {
            required: 2,
            got: accepted.len(),
        });
    }
    let sub = cloud.select(accepted);
    let index = SpatialIndex::build(&sub)?;
    let mut best = f64::INFINITY;
    for (i, p) in sub.iter().enumerate() {
        for (j, d2) in index.knn_with_sq_dist(p, 2)? {
            if j != i {
                best = best.min(d2);
            }
        }
    }
    Ok(best.sqrt())
}
