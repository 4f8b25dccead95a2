//! Subsample → fit pipeline with a JSON run report.

use std::path::{Path, PathBuf};
use std::time::Instant;

use heatfit::fit::{fit_manifold_traced, FitConfig, PassStats, WeightKind, WeightSpec};
use heatfit::spectral::MeasureParams;
use heatfit::subsample::{subsample, verify_separation, ChartMode, SubsampleConfig, SubsampleResult};
use heatfit::{PointCloud, SpatialIndex};
use serde::{Deserialize, Serialize};

use crate::io::{read_cloud, write_cloud, write_tidy};
use crate::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub input: PathBuf,
    pub output: PathBuf,
    pub report: Option<PathBuf>,
    pub plot: Option<PathBuf>,
    pub radius: f64,
    pub epsilon: f64,
    /// Heat time; `(radius / 3)²` when absent.
    pub heat_time: Option<f64>,
    pub intrinsic_dim: usize,
    pub k_neighbors: usize,
    pub degree: usize,
    pub iterations: usize,
    pub seed: u64,
    pub chart_mode: ChartMode,
    pub weight: WeightKind,
    /// Records wall-clock seconds per stage; off by default so reports are
    /// reproducible byte for byte.
    pub timings: bool,
}

impl RunConfig {
    pub fn new(input: impl Into<PathBuf>, output: impl Into<PathBuf>, radius: f64, epsilon: f64, m: usize) -> Self {
        Self {
            input: input.into(),
            output: output.into(),
            report: None,
            plot: None,
            radius,
            epsilon,
            heat_time: None,
            intrinsic_dim: m,
            k_neighbors: 20,
            degree: 2,
            iterations: 5,
            seed: 0,
            chart_mode: ChartMode::default(),
            weight: WeightKind::Gaussian,
            timings: false,
        }
    }

    pub fn subsample_config(&self) -> Result<SubsampleConfig, HarnessError> {
        let mut cfg = SubsampleConfig::new(self.radius, self.epsilon, self.intrinsic_dim, self.seed)?;
        if let Some(t) = self.heat_time {
            cfg = cfg.with_heat_time(t)?;
        }
        cfg.chart_mode = self.chart_mode;
        Ok(cfg)
    }

    pub fn fit_config(&self) -> Result<FitConfig, HarnessError> {
        let cfg = FitConfig {
            k_neighbors: self.k_neighbors,
            degree: self.degree,
            iterations: self.iterations,
            weight: WeightSpec {
                kind: self.weight,
                ..WeightSpec::default()
            },
            ..FitConfig::default()
        };
        cfg.validate_for_dim(self.intrinsic_dim)?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.subsample_config().map_err(|e| e.in_stage("config"))?;
        self.fit_config().map_err(|e| e.in_stage("config"))?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub name: String,
    pub points_in: usize,
    pub points_out: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub input_points: usize,
    pub ambient_dim: usize,
    pub heat_time: f64,
    pub accepted: usize,
    /// Minimum pairwise Euclidean distance among anchors.
    pub min_separation: Option<f64>,
    /// Single-reference separation implied by the threshold.
    pub separation_bound: f64,
    pub clamp_events: usize,
    pub ill_conditioned: usize,
    pub passes: Vec<PassStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config: RunConfig,
    pub stages: Vec<StageReport>,
    pub metrics: Metrics,
}

impl Report {
    pub fn mean_displacements(&self) -> Vec<f64> {
        self.metrics.passes.iter().map(|p| p.mean_displacement).collect()
    }

    pub fn to_json(&self) -> Result<String, HarnessError> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

struct Stopwatch {
    enabled: bool,
    start: Instant,
}

impl Stopwatch {
    fn start(enabled: bool) -> Self {
        Self {
            enabled,
            start: Instant::now(),
        }
    }

    fn stage(&mut self, name: &str, points_in: usize, points_out: usize) -> StageReport {
        let seconds = self.enabled.then(|| self.start.elapsed().as_secs_f64());
        self.start = Instant::now();
        StageReport {
            name: name.to_string(),
            points_in,
            points_out,
            seconds,
        }
    }
}

/// Runs the subsampler and returns the anchor cloud (rows in ascending input
/// order) with the full subsampling record.
pub fn subsample_stage(
    cloud: &PointCloud,
    config: &SubsampleConfig,
) -> Result<(PointCloud, SubsampleResult), HarnessError> {
    let index = SpatialIndex::build(cloud)?;
    let result = subsample(cloud, config, &index)?;
    Ok((cloud.select(&result.accepted_sorted()), result))
}

/// In-memory pipeline: subsample, then project every input point through
/// the anchors `iterations` times.
pub fn denoise(cloud: &PointCloud, config: &RunConfig) -> Result<(PointCloud, Report), HarnessError> {
    let sub_cfg = config.subsample_config().map_err(|e| e.in_stage("config"))?;
    let fit_cfg = config.fit_config().map_err(|e| e.in_stage("config"))?;
    let mut watch = Stopwatch::start(config.timings);
    let mut stages = Vec::new();

    let (anchors, sub) = subsample_stage(cloud, &sub_cfg).map_err(|e| e.in_stage("subsample"))?;
    stages.push(watch.stage("subsample", cloud.len(), anchors.len()));
    let min_separation = if anchors.len() >= 2 {
        Some(verify_separation(cloud, &sub.accepted).map_err(|e| HarnessError::from(e).in_stage("subsample"))?)
    } else {
        None
    };

    let trace = fit_manifold_traced(cloud, &anchors, &fit_cfg, config.intrinsic_dim)
        .map_err(|e| HarnessError::from(e).in_stage("fit"))?;
    stages.push(watch.stage("fit", cloud.len(), trace.cloud.len()));

    let metrics = Metrics {
        input_points: cloud.len(),
        ambient_dim: cloud.dim(),
        heat_time: sub_cfg.measure_params.heat_time,
        accepted: anchors.len(),
        min_separation,
        separation_bound: sub_cfg.separation_bound(),
        clamp_events: sub.clamp_events(),
        ill_conditioned: sub.ill_conditioned(),
        passes: trace.passes,
    };
    let report = Report {
        config: config.clone(),
        stages,
        metrics,
    };
    Ok((trace.cloud, report))
}

/// Reads `config.input`, denoises it, writes `config.output` and, when set,
/// the JSON report and the tidy displacement plot.
pub fn run_pipeline(config: &RunConfig) -> Result<Report, HarnessError> {
    config.validate()?;
    let mut watch = Stopwatch::start(config.timings);
    let cloud = read_cloud(&config.input).map_err(|e| e.in_stage("read"))?;
    let read_stage = watch.stage("read", cloud.len(), cloud.len());

    let (fitted, mut report) = denoise(&cloud, config)?;
    let mut watch = Stopwatch::start(config.timings);
    write_cloud(&fitted, &config.output).map_err(|e| e.in_stage("write"))?;
    let write_stage = watch.stage("write", fitted.len(), fitted.len());
    report.stages.insert(0, read_stage);
    report.stages.push(write_stage);

    if let Some(path) = &config.plot {
        write_tidy(&displacement_series(&report), path).map_err(|e| e.in_stage("write"))?;
    }
    if let Some(path) = &config.report {
        write_text(path, &report.to_json()?).map_err(|e| e.in_stage("write"))?;
    }
    Ok(report)
}

pub fn displacement_series(report: &Report) -> Vec<(String, f64, f64)> {
    let mut rows = Vec::new();
    for (i, p) in report.metrics.passes.iter().enumerate() {
        let x = (i + 1) as f64;
        rows.push(("mean_displacement".to_string(), x, p.mean_displacement));
        rows.push(("max_displacement".to_string(), x, p.max_displacement));
    }
    rows
}

pub fn write_text(path: &Path, text: &str) -> Result<(), HarnessError> {
    std::fs::write(path, text).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Default heat time for a subsampling radius.
pub fn default_heat_time(radius: f64) -> f64 {
    MeasureParams::default_heat_time(radius)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plane_grid() -> PointCloud {
        let mut rows = Vec::new();
        for i in 0..20 {
            for j in 0..20 {
                rows.push([i as f64 * 0.05, j as f64 * 0.05, 0.0]);
            }
        }
        PointCloud::from_rows(&rows).unwrap()
    }

    #[test]
    fn flat_plane_is_fixed() {
        let cloud = plane_grid();
        let cfg = RunConfig {
            degree: 1,
            iterations: 2,
            chart_mode: ChartMode::Ambient,
            ..RunConfig::new("in.csv", "out.csv", 0.2, 0.3, 2)
        };
        let (out, report) = denoise(&cloud, &cfg).unwrap();
        for (a, b) in out.iter().zip(cloud.iter()) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() < 1e-9);
            }
        }
        assert!(report.mean_displacements().iter().all(|d| *d < 1e-9));
        assert_eq!(report.metrics.passes.len(), 2);
        assert!(report.metrics.accepted >= 20);
        assert!(report.stages.iter().all(|s| s.seconds.is_none()));
    }

    #[test]
    fn stage_errors_carry_labels() {
        let cloud = plane_grid();
        let cfg = RunConfig {
            k_neighbors: 10_000,
            ..RunConfig::new("in.csv", "out.csv", 0.2, 0.3, 2)
        };
        let err = denoise(&cloud, &cfg).unwrap_err().to_string();
        assert!(err.starts_with("fit:"), "{err}");
        let bad = RunConfig::new("in.csv", "out.csv", 0.2, 1.5, 2);
        assert!(denoise(&cloud, &bad).unwrap_err().to_string().starts_with("config:"));
    }

    #[test]
    fn report_has_documented_keys() {
        let cfg = RunConfig {
            timings: true,
            iterations: 1,
            ..RunConfig::new("in.csv", "out.csv", 0.2, 0.3, 2)
        };
        let (_, report) = denoise(&plane_grid(), &cfg).unwrap();
        let v: serde_json::Value = serde_json::from_str(&report.to_json().unwrap()).unwrap();
        for key in ["config", "stages", "metrics"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert!(v["stages"][0]["seconds"].is_number());
        assert_eq!(v["config"]["radius"], 0.2);
    }
}
