use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use heatfit::diagnostics::{bound_finite, bound_infinite, BoundInputs, FiniteSample, Structure};
use heatfit::fit::{fit_manifold_traced, WeightKind};
use heatfit::geometry::{hausdorff, snr, Snr};
use heatfit::spectral::{heat_spectrum, MeasureParams};
use heatfit::subsample::{verify_separation, ChartMode, SubsampleConfig};
use heatfit::PointCloud;
use heatfit_cli::io::{read_cloud, write_cloud, write_tidy};
use heatfit_cli::pipeline::{run_pipeline, subsample_stage, write_text, RunConfig};
use heatfit_cli::shapes::{add_masked_noise, gen_shape, oracle_for, parse_noise, NoiseMask, ParamDist, ShapeKind, ShapeSpec};
use heatfit_cli::HarnessError;
use serde_json::json;

#[derive(Parser)]
#[command(name = "heatfit", version, about = "Heat-kernel subsampling and MLS manifold fitting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic test manifold, or add noise to a CSV matrix.
    Gen(GenArgs),
    /// Select an ε-separated anchor set.
    Subsample(SubsampleArgs),
    /// Project points through MLS charts built on a given anchor set.
    Fit(FitArgs),
    /// Subsample then fit: the full denoising pipeline.
    Denoise(DenoiseArgs),
    /// Compare or summarize point clouds.
    Eval(EvalArgs),
    /// Heat-kernel matrix spectrum of a point cloud.
    Spectrum(SpectrumArgs),
    /// Evaluate the tangent-angle bounds for given constants.
    Bounds(BoundsArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ChartArg {
    TangentChart,
    Ambient,
}

impl From<ChartArg> for ChartMode {
    fn from(c: ChartArg) -> Self {
        match c {
            ChartArg::TangentChart => ChartMode::TangentChart,
            ChartArg::Ambient => ChartMode::Ambient,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightArg {
    Gaussian,
    Wendland,
}

impl From<WeightArg> for WeightKind {
    fn from(w: WeightArg) -> Self {
        match w {
            WeightArg::Gaussian => WeightKind::Gaussian,
            WeightArg::Wendland => WeightKind::Wendland,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum StructureArg {
    Diagonal,
    Dense,
}

#[derive(Clone, Copy, ValueEnum)]
enum Metric {
    Hausdorff,
    Snr,
    Meandist,
    Separation,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum, required_unless_present = "from")]
    kind: Option<ShapeKind>,
    /// Noisy samples are written here.
    #[arg(long)]
    output: PathBuf,
    /// Noiseless samples are written here.
    #[arg(long)]
    clean: Option<PathBuf>,
    #[arg(long)]
    count: Option<usize>,
    /// Noise sd, or a preset level1..level4 (variances 0.01, 0.025, 0.05, 0.075).
    #[arg(long, default_value = "0.05")]
    noise: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// uniform, grid or gaussian:<sd> (sd as a fraction of each range).
    #[arg(long, default_value = "uniform")]
    param_dist: String,
    /// Icosphere subdivision level (3 → 642 vertices, 4 → 2562).
    #[arg(long)]
    subdivisions: Option<u32>,
    /// Six-fold curve lobe amplitude.
    #[arg(long, default_value_t = heatfit_cli::shapes::SIXFOLD_AMPLITUDE)]
    amplitude: f64,
    /// Add noise to the rows of this CSV matrix instead of generating a shape.
    #[arg(long, conflicts_with = "kind")]
    from: Option<PathBuf>,
    /// all, or band:<first>-<last> to perturb only those pixel rows of each frame.
    #[arg(long, default_value = "all", requires = "from")]
    noise_mask: String,
    #[arg(long)]
    frame_width: Option<usize>,
}

#[derive(Args)]
struct SubsampleArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    radius: f64,
    #[arg(long, default_value_t = 0.3)]
    epsilon: f64,
    #[arg(long)]
    heat_time: Option<f64>,
    #[arg(long)]
    intrinsic_dim: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "tangent-chart")]
    chart_mode: ChartArg,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    anchors: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    intrinsic_dim: usize,
    #[arg(long, default_value_t = 20)]
    k_neighbors: usize,
    #[arg(long, default_value_t = 2)]
    degree: usize,
    #[arg(long, default_value_t = 5)]
    iterations: usize,
    #[arg(long, value_enum, default_value = "gaussian")]
    weight: WeightArg,
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Args)]
struct DenoiseArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    radius: f64,
    #[arg(long, default_value_t = 0.3)]
    epsilon: f64,
    #[arg(long)]
    heat_time: Option<f64>,
    #[arg(long)]
    intrinsic_dim: usize,
    #[arg(long, default_value_t = 20)]
    k_neighbors: usize,
    #[arg(long, default_value_t = 2)]
    degree: usize,
    #[arg(long, default_value_t = 5)]
    iterations: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "tangent-chart")]
    chart_mode: ChartArg,
    #[arg(long, value_enum, default_value = "gaussian")]
    weight: WeightArg,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Tidy series,x,y CSV of per-iteration displacements.
    #[arg(long)]
    plot: Option<PathBuf>,
    /// Record wall-clock seconds per stage (makes reports non-reproducible).
    #[arg(long)]
    timings: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long, value_enum)]
    metric: Metric,
    #[arg(long)]
    input: PathBuf,
    /// Second cloud for hausdorff; the clean original for snr.
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Shape whose analytic distance oracle meandist uses.
    #[arg(long, value_enum)]
    shape: Option<ShapeKind>,
    #[arg(long, default_value_t = heatfit_cli::shapes::SIXFOLD_AMPLITUDE)]
    amplitude: f64,
    #[arg(long)]
    report: Option<PathBuf>,
    /// Tidy series,x,y CSV of per-point oracle distances (meandist only).
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Args)]
struct SpectrumArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    intrinsic_dim: usize,
    #[arg(long)]
    heat_time: f64,
    /// Only report the largest `top` eigenvalues.
    #[arg(long)]
    top: Option<usize>,
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long)]
    m: usize,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    c_s: f64,
    #[arg(long)]
    k_max: f64,
    #[arg(long, value_enum, default_value = "diagonal")]
    structure: StructureArg,
    /// Half-width of the chart sampling window.
    #[arg(long)]
    width: f64,
    #[arg(long, default_value_t = 0.0)]
    e_norm: f64,
    /// Finite-sample constants; all three select the finite-sample bound.
    #[arg(long, requires_all = ["s2", "s3"])]
    s1: Option<f64>,
    #[arg(long, requires_all = ["s1", "s3"])]
    s2: Option<f64>,
    #[arg(long, requires_all = ["s1", "s2"])]
    s3: Option<f64>,
    #[arg(long)]
    report: Option<PathBuf>,
}

fn emit(value: &serde_json::Value, report: Option<&Path>) -> Result<(), HarnessError> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match report {
        Some(path) => write_text(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn gen(a: GenArgs) -> Result<(), HarnessError> {
    let sd = parse_noise(&a.noise)?;
    if let Some(from) = &a.from {
        let data = read_cloud(from)?;
        let mask: NoiseMask = a.noise_mask.parse()?;
        let noisy = add_masked_noise(&data, sd, a.seed, &mask, a.frame_width)?;
        if let Some(path) = &a.clean {
            write_cloud(&data, path)?;
        }
        return write_cloud(&noisy, &a.output);
    }
    let kind = a.kind.ok_or_else(|| HarnessError::Usage("--kind is required".into()))?;
    let spec = ShapeSpec {
        param_dist: a.param_dist.parse::<ParamDist>()?,
        subdivisions: a.subdivisions,
        amplitude: a.amplitude,
        ..ShapeSpec::new(kind, a.count.unwrap_or(kind.default_count()), sd, a.seed)
    };
    let shape = gen_shape(&spec)?;
    if let Some(path) = &a.clean {
        write_cloud(&shape.clean, path)?;
    }
    write_cloud(&shape.noisy, &a.output)
}

fn subsample_cmd(a: SubsampleArgs) -> Result<(), HarnessError> {
    let cloud = read_cloud(&a.input)?;
    let mut cfg = SubsampleConfig::new(a.radius, a.epsilon, a.intrinsic_dim, a.seed)?;
    if let Some(t) = a.heat_time {
        cfg = cfg.with_heat_time(t)?;
    }
    cfg.chart_mode = a.chart_mode.into();
    let (anchors, result) = subsample_stage(&cloud, &cfg)?;
    write_cloud(&anchors, &a.output)?;
    let min_separation = if anchors.len() >= 2 {
        Some(verify_separation(&cloud, &result.accepted)?)
    } else {
        None
    };
    emit(
        &json!({
            "config": cfg,
            "metrics": {
                "input_points": cloud.len(),
                "accepted": anchors.len(),
                "batches": result.batches.len(),
                "min_separation": min_separation,
                "separation_bound": cfg.separation_bound(),
                "clamp_events": result.clamp_events(),
                "ill_conditioned": result.ill_conditioned(),
            }
        }),
        a.report.as_deref(),
    )
}

fn fit_cmd(a: FitArgs) -> Result<(), HarnessError> {
    let cloud = read_cloud(&a.input)?;
    let anchors = read_cloud(&a.anchors)?;
    let mut rc = RunConfig::new(&a.input, &a.output, 1.0, 0.5, a.intrinsic_dim);
    rc.k_neighbors = a.k_neighbors;
    rc.degree = a.degree;
    rc.iterations = a.iterations;
    rc.weight = a.weight.into();
    let cfg = rc.fit_config()?;
    let trace = fit_manifold_traced(&cloud, &anchors, &cfg, a.intrinsic_dim)?;
    write_cloud(&trace.cloud, &a.output)?;
    if let Some(path) = &a.plot {
        let rows: Vec<_> = trace
            .passes
            .iter()
            .enumerate()
            .map(|(i, p)| ("mean_displacement".to_string(), (i + 1) as f64, p.mean_displacement))
            .collect();
        write_tidy(&rows, path)?;
    }
    emit(
        &json!({
            "config": cfg,
            "metrics": { "points": cloud.len(), "anchors": anchors.len(), "passes": trace.passes },
        }),
        a.report.as_deref(),
    )
}

fn denoise_cmd(a: DenoiseArgs) -> Result<(), HarnessError> {
    let config = RunConfig {
        report: a.report.clone(),
        plot: a.plot,
        heat_time: a.heat_time,
        k_neighbors: a.k_neighbors,
        degree: a.degree,
        iterations: a.iterations,
        seed: a.seed,
        chart_mode: a.chart_mode.into(),
        weight: a.weight.into(),
        timings: a.timings,
        ..RunConfig::new(a.input, a.output, a.radius, a.epsilon, a.intrinsic_dim)
    };
    let report = run_pipeline(&config)?;
    if a.report.is_none() {
        print!("{}", report.to_json()?);
    }
    Ok(())
}

fn eval_cmd(a: EvalArgs) -> Result<(), HarnessError> {
    let input = read_cloud(&a.input)?;
    let need_reference = || -> Result<PointCloud, HarnessError> {
        let path = a
            .reference
            .as_ref()
            .ok_or_else(|| HarnessError::Usage("this metric needs --reference".into()))?;
        read_cloud(path)
    };
    let value = match a.metric {
        Metric::Hausdorff => {
            let reference = need_reference()?;
            json!({ "metric": "hausdorff", "value": hausdorff(&input, &reference)? })
        }
        Metric::Snr => {
            let reference = need_reference()?;
            let v = match snr(&reference.to_matrix(), &input.to_matrix())? {
                Snr::Finite(v) => json!(v),
                Snr::Infinite => json!("infinite"),
            };
            json!({ "metric": "snr", "value": v })
        }
        Metric::Meandist => {
            let kind = a
                .shape
                .ok_or_else(|| HarnessError::Usage("meandist needs --shape".into()))?;
            let oracle = oracle_for(kind, a.amplitude);
            let dists: Vec<f64> = input.iter().map(|p| oracle(p)).collect();
            if let Some(path) = &a.plot {
                let rows: Vec<_> = dists
                    .iter()
                    .enumerate()
                    .map(|(i, d)| ("oracle_distance".to_string(), i as f64, *d))
                    .collect();
                write_tidy(&rows, path)?;
            }
            let mean = dists.iter().sum::<f64>() / dists.len() as f64;
            let max = dists.iter().copied().fold(0.0, f64::max);
            json!({ "metric": "meandist", "shape": kind, "value": mean, "max": max })
        }
        Metric::Separation => {
            let all: Vec<usize> = (0..input.len()).collect();
            json!({ "metric": "separation", "value": verify_separation(&input, &all)? })
        }
    };
    emit(&value, a.report.as_deref())
}

fn spectrum_cmd(a: SpectrumArgs) -> Result<(), HarnessError> {
    let cloud = read_cloud(&a.input)?;
    let params = MeasureParams::new(a.intrinsic_dim, a.heat_time)?;
    let rows: Vec<&[f64]> = cloud.iter().collect();
    let mut eig = heat_spectrum(&rows, &params)?;
    if let Some(top) = a.top {
        eig.truncate(top);
    }
    if let Some(path) = &a.plot {
        let tidy: Vec<_> = eig
            .iter()
            .enumerate()
            .map(|(i, v)| ("eigenvalue".to_string(), (i + 1) as f64, *v))
            .collect();
        write_tidy(&tidy, path)?;
    }
    emit(&json!({ "params": params, "eigenvalues": eig }), a.report.as_deref())
}

fn bounds_cmd(a: BoundsArgs) -> Result<(), HarnessError> {
    let finite = match (a.s1, a.s2, a.s3) {
        (Some(s1), Some(s2), Some(s3)) => Some(FiniteSample { s1, s2, s3 }),
        _ => None,
    };
    let inputs = BoundInputs {
        m: a.m,
        n: a.n,
        c_s: a.c_s,
        k_max: a.k_max,
        structure: match a.structure {
            StructureArg::Diagonal => Structure::Diagonal,
            StructureArg::Dense => Structure::Dense,
        },
        v: a.width,
        e_norm: a.e_norm,
        finite,
    };
    let report = if finite.is_some() {
        bound_finite(&inputs)?
    } else {
        bound_infinite(&inputs)?
    };
    emit(&json!({ "inputs": inputs, "bound": report }), a.report.as_deref())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Subsample(a) => subsample_cmd(a),
        Command::Fit(a) => fit_cmd(a),
        Command::Denoise(a) => denoise_cmd(a),
        Command::Eval(a) => eval_cmd(a),
        Command::Spectrum(a) => spectrum_cmd(a),
        Command::Bounds(a) => bounds_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("heatfit: error: {e}");
            ExitCode::FAILURE
        }
    }
}
