//! Synthetic test manifolds with seeded sampling, ambient Gaussian noise and
//! analytic distance-to-manifold oracles.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use heatfit::PointCloud;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ShapeKind {
    /// `(sin t, cos t, t)`, `t ∈ [−π, π]`.
    Helix,
    /// Six-lobed closed curve on the unit sphere.
    Sixfold,
    /// `(t cos t, t sin t, h)`, `t ∈ [3π/2, 9π/2]`, `h ∈ [0, 11]`.
    Swissroll,
    /// Subdivided icosahedron projected to the unit sphere.
    Icosphere,
    /// Unit circle in the plane.
    Circle,
    /// Unit square `[0, 1]²` in the `z = 0` plane of `R³`.
    Plane,
}

impl ShapeKind {
    pub fn intrinsic_dim(self) -> usize {
        match self {
            ShapeKind::Helix | ShapeKind::Sixfold | ShapeKind::Circle => 1,
            ShapeKind::Swissroll | ShapeKind::Icosphere | ShapeKind::Plane => 2,
        }
    }

    pub fn ambient_dim(self) -> usize {
        match self {
            ShapeKind::Circle => 2,
            _ => 3,
        }
    }

    /// Sample count used in the reference experiments.
    pub fn default_count(self) -> usize {
        match self {
            ShapeKind::Helix => 7500,
            ShapeKind::Sixfold => 6284,
            ShapeKind::Swissroll => 5000,
            ShapeKind::Icosphere => 2562,
            ShapeKind::Circle => 400,
            ShapeKind::Plane => 2000,
        }
    }
}

impl fmt::Display for ShapeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ShapeKind::Helix => "helix",
            ShapeKind::Sixfold => "sixfold",
            ShapeKind::Swissroll => "swissroll",
            ShapeKind::Icosphere => "icosphere",
            ShapeKind::Circle => "circle",
            ShapeKind::Plane => "plane",
        };
        f.write_str(s)
    }
}

impl FromStr for ShapeKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "helix" => ShapeKind::Helix,
            "sixfold" => ShapeKind::Sixfold,
            "swissroll" => ShapeKind::Swissroll,
            "icosphere" => ShapeKind::Icosphere,
            "circle" => ShapeKind::Circle,
            "plane" => ShapeKind::Plane,
            other => return Err(HarnessError::Usage(format!("unknown shape kind `{other}`"))),
        })
    }
}

/// How curve/surface parameters are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ParamDist {
    #[default]
    Uniform,
    /// Gaussian centred on the middle of each parameter range with the given
    /// standard deviation (as a fraction of the range), truncated to it.
    Gaussian { sd: f64 },
    /// Evenly spaced parameters (closed curves skip the duplicate endpoint).
    Grid,
}

impl FromStr for ParamDist {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uniform" => Ok(ParamDist::Uniform),
            "grid" => Ok(ParamDist::Grid),
            _ => {
                let sd = s
                    .strip_prefix("gaussian:")
                    .and_then(|v| v.parse::<f64>().ok())
                    .filter(|v| *v > 0.0)
                    .ok_or_else(|| {
                        HarnessError::Usage(format!(
                            "bad parameter distribution `{s}` (expected uniform, grid or gaussian:<sd>)"
                        ))
                    })?;
                Ok(ParamDist::Gaussian { sd })
            }
        }
    }
}

/// Six-fold curve: `θ(φ) = π/2 + A sin(6φ)`.
pub const SIXFOLD_AMPLITUDE: f64 = 0.5;
pub const SWISSROLL_T: (f64, f64) = (1.5 * PI, 4.5 * PI);
pub const SWISSROLL_H: (f64, f64) = (0.0, 11.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeSpec {
    pub kind: ShapeKind,
    pub count: usize,
    pub noise_sd: f64,
    pub seed: u64,
    pub param_dist: ParamDist,
    /// Icosphere subdivision level; overrides `count` when set.
    pub subdivisions: Option<u32>,
    /// Six-fold lobe amplitude.
    pub amplitude: f64,
}

impl ShapeSpec {
    pub fn new(kind: ShapeKind, count: usize, noise_sd: f64, seed: u64) -> Self {
        Self {
            kind,
            count,
            noise_sd,
            seed,
            param_dist: ParamDist::default(),
            subdivisions: None,
            amplitude: SIXFOLD_AMPLITUDE,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.count == 0 && !(self.kind == ShapeKind::Icosphere && self.subdivisions.is_some()) {
            return Err(HarnessError::Usage("count must be >= 1".into()));
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return Err(HarnessError::Usage(format!("noise sd must be >= 0, got {}", self.noise_sd)));
        }
        if !(self.amplitude.abs() < PI / 2.0) {
            return Err(HarnessError::Usage("six-fold amplitude must lie in (−π/2, π/2)".into()));
        }
        if let Some(l) = self.subdivisions {
            if l > 7 {
                return Err(HarnessError::Usage(format!("subdivision level {l} too large (max 7)")));
            }
        }
        Ok(())
    }
}

/// Distance from an ambient point to the clean manifold.
pub type DistanceOracle = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

pub struct GeneratedShape {
    pub clean: PointCloud,
    pub noisy: PointCloud,
    pub oracle: DistanceOracle,
}

pub fn gen_shape(spec: &ShapeSpec) -> Result<GeneratedShape, HarnessError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let clean = match spec.kind {
        ShapeKind::Icosphere => {
            let level = match spec.subdivisions {
                Some(l) => l,
                None => icosphere_level_for(spec.count)?,
            };
            icosphere(level)
        }
        _ => sample_parametric(spec, &mut rng)?,
    };
    let noisy = add_noise(&clean, spec.noise_sd, &mut rng)?;
    Ok(GeneratedShape {
        clean,
        noisy,
        oracle: oracle_for(spec.kind, spec.amplitude),
    })
}

pub fn oracle_for(kind: ShapeKind, amplitude: f64) -> DistanceOracle {
    match kind {
        ShapeKind::Helix => Arc::new(helix_distance),
        ShapeKind::Sixfold => Arc::new(move |p: &[f64]| sixfold_distance(p, amplitude)),
        ShapeKind::Swissroll => Arc::new(swissroll_distance),
        ShapeKind::Icosphere => Arc::new(|p: &[f64]| (norm(p) - 1.0).abs()),
        ShapeKind::Circle => Arc::new(|p: &[f64]| (norm(p) - 1.0).abs()),
        ShapeKind::Plane => Arc::new(plane_distance),
    }
}

/// `10·4^L + 2` vertices at level `L`.
pub fn icosphere_vertex_count(level: u32) -> usize {
    10 * 4usize.pow(level) + 2
}

fn icosphere_level_for(count: usize) -> Result<u32, HarnessError> {
    (0..=7)
        .find(|&l| icosphere_vertex_count(l) == count)
        .ok_or_else(|| {
            HarnessError::Usage(format!(
                "icosphere vertex count must be 10·4^L + 2 (12, 42, 162, 642, 2562, …), got {count}"
            ))
        })
}

fn norm(p: &[f64]) -> f64 {
    p.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn draw(rng: &mut ChaCha8Rng, dist: ParamDist, lo: f64, hi: f64, i: usize, n: usize, closed: bool) -> f64 {
    match dist {
        ParamDist::Uniform => rng.gen_range(lo..=hi),
        ParamDist::Grid => {
            let denom = if closed { n } else { n.saturating_sub(1).max(1) };
            lo + (hi - lo) * i as f64 / denom as f64
        }
        ParamDist::Gaussian { sd } => {
            let normal = Normal::new((lo + hi) / 2.0, sd * (hi - lo)).expect("positive sd");
            loop {
                let v = normal.sample(rng);
                if (lo..=hi).contains(&v) {
                    return v;
                }
            }
        }
    }
}

fn sample_parametric(spec: &ShapeSpec, rng: &mut ChaCha8Rng) -> Result<PointCloud, HarnessError> {
    let n = spec.count;
    let d = spec.param_dist;
    let mut out = PointCloud::empty(spec.kind.ambient_dim());
    for i in 0..n {
        let p: Vec<f64> = match spec.kind {
            ShapeKind::Helix => {
                let t = draw(rng, d, -PI, PI, i, n, false);
                vec![t.sin(), t.cos(), t]
            }
            ShapeKind::Sixfold => {
                let phi = if d == ParamDist::Uniform {
                    rng.gen_range(0.0..TAU)
                } else {
                    draw(rng, d, 0.0, TAU, i, n, true)
                };
                sixfold_point(phi, spec.amplitude).to_vec()
            }
            ShapeKind::Swissroll => {
                let (t, h) = if d == ParamDist::Grid {
                    let side = (n as f64).sqrt().ceil() as usize;
                    let (a, b) = (i % side, i / side);
                    (
                        SWISSROLL_T.0 + (SWISSROLL_T.1 - SWISSROLL_T.0) * a as f64 / (side - 1).max(1) as f64,
                        SWISSROLL_H.0 + (SWISSROLL_H.1 - SWISSROLL_H.0) * b as f64 / (side - 1).max(1) as f64,
                    )
                } else {
                    (
                        draw(rng, d, SWISSROLL_T.0, SWISSROLL_T.1, i, n, false),
                        draw(rng, d, SWISSROLL_H.0, SWISSROLL_H.1, i, n, false),
                    )
                };
                vec![t * t.cos(), t * t.sin(), h]
            }
            ShapeKind::Circle => {
                let t = if d == ParamDist::Uniform {
                    rng.gen_range(0.0..TAU)
                } else {
                    draw(rng, d, 0.0, TAU, i, n, true)
                };
                vec![t.cos(), t.sin()]
            }
            ShapeKind::Plane => {
                if d == ParamDist::Grid {
                    let side = (n as f64).sqrt().ceil() as usize;
                    let s = (side - 1).max(1) as f64;
                    vec![(i % side) as f64 / s, (i / side) as f64 / s, 0.0]
                } else {
                    vec![draw(rng, d, 0.0, 1.0, i, n, false), draw(rng, d, 0.0, 1.0, i, n, false), 0.0]
                }
            }
            ShapeKind::Icosphere => unreachable!("icosphere is not parametric"),
        };
        out.push(&p)?;
    }
    Ok(out)
}

/// Adds i.i.d. `N(0, sd²)` noise to every coordinate.
pub fn add_noise(clean: &PointCloud, sd: f64, rng: &mut ChaCha8Rng) -> Result<PointCloud, HarnessError> {
    if sd == 0.0 {
        return Ok(clean.clone());
    }
    let normal = Normal::new(0.0, sd).map_err(|e| HarnessError::Usage(e.to_string()))?;
    let coords = clean.as_flat().iter().map(|c| c + normal.sample(rng)).collect();
    Ok(PointCloud::from_flat(clean.dim(), coords)?)
}

pub fn sixfold_point(phi: f64, amplitude: f64) -> [f64; 3] {
    let theta = PI / 2.0 + amplitude * (6.0 * phi).sin();
    [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
}

/// Minimizes `f` over `[lo, hi]`: grid scan followed by golden-section
/// refinement around the best grid cell.
pub fn minimize_scalar<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, grid: usize) -> (f64, f64) {
    let step = (hi - lo) / grid as f64;
    let mut best = (lo, f(lo));
    for i in 1..=grid {
        let x = lo + step * i as f64;
        let v = f(x);
        if v < best.1 {
            best = (x, v);
        }
    }
    let (mut a, mut b) = ((best.0 - step).max(lo), (best.0 + step).min(hi));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..100 {
        if (b - a).abs() < 1e-15 * (1.0 + a.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let x = (a + b) / 2.0;
    let v = f(x);
    if v <= best.1 {
        (x, v)
    } else {
        best
    }
}

pub fn helix_distance(p: &[f64]) -> f64 {
    let f = |t: f64| (p[0] - t.sin()).powi(2) + (p[1] - t.cos()).powi(2) + (p[2] - t).powi(2);
    // the closest point lies within √(x²+y²)+1 of z along the axis
    let reach = (p[0] * p[0] + p[1] * p[1]).sqrt() + 1.0;
    let lo = (p[2] - reach).clamp(-PI, PI);
    let hi = (p[2] + reach).clamp(-PI, PI);
    let grid = (((hi - lo) / 0.01).ceil() as usize).max(8);
    minimize_scalar(f, lo, hi, grid).1.sqrt()
}

pub fn sixfold_distance(p: &[f64], amplitude: f64) -> f64 {
    let f = |phi: f64| {
        let q = sixfold_point(phi, amplitude);
        (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)
    };
    minimize_scalar(f, 0.0, TAU, 2400).1.sqrt()
}

pub fn swissroll_distance(p: &[f64]) -> f64 {
    let dz = if p[2] < SWISSROLL_H.0 {
        SWISSROLL_H.0 - p[2]
    } else if p[2] > SWISSROLL_H.1 {
        p[2] - SWISSROLL_H.1
    } else {
        0.0
    };
    let f = |t: f64| (p[0] - t * t.cos()).powi(2) + (p[1] - t * t.sin()).powi(2);
    let (lo, hi) = SWISSROLL_T;
    let grid = ((hi - lo) / 0.005).ceil() as usize;
    (minimize_scalar(f, lo, hi, grid).1 + dz * dz).sqrt()
}

pub fn plane_distance(p: &[f64]) -> f64 {
    let dx = (-p[0]).max(p[0] - 1.0).max(0.0);
    let dy = (-p[1]).max(p[1] - 1.0).max(0.0);
    (dx * dx + dy * dy + p[2] * p[2]).sqrt()
}

/// Vertices of the level-`level` icosphere on the unit sphere.
pub fn icosphere(level: u32) -> PointCloud {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<[f64; 3]> = vec![
        [-1.0, phi, 0.0],
        [1.0, phi, 0.0],
        [-1.0, -phi, 0.0],
        [1.0, -phi, 0.0],
        [0.0, -1.0, phi],
        [0.0, 1.0, phi],
        [0.0, -1.0, -phi],
        [0.0, 1.0, -phi],
        [phi, 0.0, -1.0],
        [phi, 0.0, 1.0],
        [-phi, 0.0, -1.0],
        [-phi, 0.0, 1.0],
    ];
    for v in &mut verts {
        normalize(v);
    }
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        for f in &faces {
            let mut m = [0usize; 3];
            for e in 0..3 {
                let (a, b) = (f[e], f[(e + 1) % 3]);
                let key = (a.min(b), a.max(b));
                m[e] = *mid.entry(key).or_insert_with(|| {
                    let mut v = [
                        (verts[a][0] + verts[b][0]) / 2.0,
                        (verts[a][1] + verts[b][1]) / 2.0,
                        (verts[a][2] + verts[b][2]) / 2.0,
                    ];
                    normalize(&mut v);
                    verts.push(v);
                    verts.len() - 1
                });
            }
            next.push([f[0], m[0], m[2]]);
            next.push([f[1], m[1], m[0]]);
            next.push([f[2], m[2], m[1]]);
            next.push([m[0], m[1], m[2]]);
        }
        faces = next;
    }
    PointCloud::from_rows(&verts).expect("finite icosphere vertices")
}

fn normalize(v: &mut [f64; 3]) {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    v.iter_mut().for_each(|x| *x /= n);
}


/// Noise presets named by variance.
pub const NOISE_LEVELS: [(&str, f64); 4] =
    [("level1", 0.01), ("level2", 0.025), ("level3", 0.05), ("level4", 0.075)];

/// Parses a noise standard deviation, accepting `level1`…`level4` presets
/// (given as variances) or a plain non-negative number.
pub fn parse_noise(s: &str) -> Result<f64, HarnessError> {
    if let Some((_, var)) = NOISE_LEVELS.iter().find(|(name, _)| *name == s) {
        return Ok(var.sqrt());
    }
    s.parse::<f64>()
        .ok()
        .filter(|v| *v >= 0.0 && v.is_finite())
        .ok_or_else(|| HarnessError::Usage(format!("bad noise `{s}` (expected level1..level4 or a sd >= 0)")))
}

/// Which entries of each row receive noise.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum NoiseMask {
    #[default]
    All,
    /// Rows are flattened row-major frames of the given pixel width; only
    /// pixel rows `first..=last` are perturbed.
    Band { first: usize, last: usize },
}

impl FromStr for NoiseMask {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "all" {
            return Ok(NoiseMask::All);
        }
        let bad = || HarnessError::Usage(format!("bad noise mask `{s}` (expected all or band:<first>-<last>)"));
        let rows = s.strip_prefix("band:").ok_or_else(bad)?;
        let (a, b) = rows.split_once('-').unwrap_or((rows, rows));
        let first: usize = a.parse().map_err(|_| bad())?;
        let last: usize = b.parse().map_err(|_| bad())?;
        if last < first {
            return Err(bad());
        }
        Ok(NoiseMask::Band { first, last })
    }
}

/// Adds seeded Gaussian noise to the masked entries of every row.
pub fn add_masked_noise(
    data: &PointCloud,
    sd: f64,
    seed: u64,
    mask: &NoiseMask,
    frame_width: Option<usize>,
) -> Result<PointCloud, HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = match mask {
        NoiseMask::All => (0, data.dim()),
        NoiseMask::Band { first, last } => {
            let w = frame_width
                .filter(|w| *w > 0)
                .ok_or_else(|| HarnessError::Usage("a band mask needs --frame-width".into()))?;
            if !data.dim().is_multiple_of(w) {
                return Err(HarnessError::Usage(format!(
                    "row length {} is not a multiple of frame width {w}",
                    data.dim()
                )));
            }
            let height = data.dim() / w;
            if *last >= height {
                return Err(HarnessError::Usage(format!("band row {last} outside frame height {height}")));
            }
            (first * w, (last + 1) * w)
        }
    };
    if sd == 0.0 {
        return Ok(data.clone());
    }
    let normal = Normal::new(0.0, sd).map_err(|e| HarnessError::Usage(e.to_string()))?;
    let mut coords = data.as_flat().to_vec();
    for row in coords.chunks_mut(data.dim()) {
        for v in &mut row[lo..hi] {
            *v += normal.sample(&mut rng);
        }
    }
    Ok(PointCloud::from_flat(data.dim(), coords)?)
}
