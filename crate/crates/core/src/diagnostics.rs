//! Tangent-angle bounds for PCA charts of noisy samples and sampling-quality
//! statistics (fill distance, density, separation).
//!
//! The bound evaluators are plain arithmetic over caller-supplied constants:
//! the curvature magnitude `K_max`, the third-order Taylor constant `C_s`, the
//! sampling half-width `v` of the chart window `[−v, v]^m`, and the Frobenius
//! norm of the noise contribution to the covariance.

use serde::{Deserialize, Serialize};

use crate::geometry::{PointCloud, SpatialIndex};
use crate::{Error, Execution, Result};

/// Shape of the normal-space block of the limiting covariance; selects the
/// factor `R` in the spectral-radius bound `ρ(D) < R·L·v⁴`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Structure {
    /// `R = 1`.
    Diagonal,
    /// `R = n − m`.
    Dense,
}

/// Finite-sample constants: `s1 ∈ (0, 1)`, `s2 > e`, `s3 > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiniteSample {
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub m: usize,
    pub n: usize,
    pub c_s: f64,
    pub k_max: f64,
    pub structure: Structure,
    pub v: f64,
    pub e_norm: f64,
    pub finite: Option<FiniteSample>,
}

impl BoundInputs {
    pub fn r_factor(&self) -> f64 {
        match self.structure {
            Structure::Diagonal => 1.0,
            Structure::Dense => (self.n - self.m) as f64,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.m >= self.n {
            return Err(Error::invalid("m", format!("need 1 <= m < n, got m={}, n={}", self.m, self.n)));
        }
        for (name, v) in [("c_s", self.c_s), ("k_max", self.k_max), ("v", self.v)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: match name {
                        "c_s" => "c_s",
                        "k_max" => "k_max",
                        _ => "v",
                    },
                    reason: format!("must be positive, got {v}"),
                });
            }
        }
        if !(self.e_norm >= 0.0 && self.e_norm.is_finite()) {
            return Err(Error::invalid("e_norm", format!("must be >= 0, got {}", self.e_norm)));
        }
        Ok(())
    }

    fn validate_finite(&self) -> Result<FiniteSample> {
        let f = self
            .finite
            .ok_or_else(|| Error::invalid("finite", "s1, s2 and s3 are required"))?;
        if !(f.s1 > 0.0 && f.s1 < 1.0) {
            return Err(Error::invalid("s1", format!("must lie in (0, 1), got {}", f.s1)));
        }
        if !(f.s2 > std::f64::consts::E && f.s2.is_finite()) {
            return Err(Error::invalid("s2", format!("must exceed e, got {}", f.s2)));
        }
        if !(f.s3 > 0.0 && f.s3.is_finite()) {
            return Err(Error::invalid("s3", format!("must be positive, got {}", f.s3)));
        }
        Ok(f)
    }
}

/// Why a bound does not apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Vacuity {
    /// `v ≤ (24‖E‖_F)^(1/2)`.
    WidthBelowNoiseFloor,
    /// `v ≥ α`.
    WidthAboveCap,
    /// The denominator of σ is not positive.
    NonPositiveDenominator,
    /// `m σ² ≥ 1`.
    SigmaTooLarge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub beta2: f64,
    pub beta3: f64,
    pub beta4: f64,
    /// `L = m(5m+4) K_max² / 180`.
    pub l: f64,
    pub r: f64,
    pub alpha: f64,
    pub v_lower: f64,
    pub b1_bound: f64,
    pub d1_bound: f64,
    pub sigma: f64,
    /// Bound on the largest principal angle, in radians.
    pub angle_bound: Option<f64>,
    pub vacuous: Vec<Vacuity>,
}

struct Common {
    beta2: f64,
    beta3: f64,
    beta4: f64,
    l: f64,
    r: f64,
    v_lower: f64,
    b1: f64,
    d1: f64,
}

fn common(inp: &BoundInputs) -> Common {
    let m = inp.m as f64;
    let nm = (inp.n - inp.m) as f64;
    let cs = inp.c_s;
    let k = inp.k_max;
    let v = inp.v;
    let root = m.powf(1.5) * (m * nm).sqrt();
    Common {
        beta2: 4.0 * cs * root,
        beta3: 2.0 * nm * cs * m.powf(2.5) * k,
        beta4: 2.0 * nm * cs * cs * m.powi(3),
        l: m * (5.0 * m + 4.0) * k * k / 180.0,
        r: inp.r_factor(),
        v_lower: (24.0 * inp.e_norm).sqrt(),
        b1: cs * root * v.powi(4),
        d1: nm * (cs * cs * m.powi(3) * v.powi(6) + cs * m.powf(2.5) * v.powi(5) * k),
    }
}

fn finish(inp: &BoundInputs, c: Common, alpha: f64, numer: f64, denom: f64) -> BoundReport {
    let mut vacuous = Vec::new();
    if !(inp.v > c.v_lower) {
        vacuous.push(Vacuity::WidthBelowNoiseFloor);
    }
    if !(inp.v < alpha) {
        vacuous.push(Vacuity::WidthAboveCap);
    }
    let sigma = numer / denom;
    if !(denom > 0.0) {
        vacuous.push(Vacuity::NonPositiveDenominator);
    } else if !(inp.m as f64 * sigma * sigma < 1.0) {
        vacuous.push(Vacuity::SigmaTooLarge);
    }
    let angle_bound = vacuous.is_empty().then(|| {
        let m = inp.m as f64;
        (1.0 - m * sigma * sigma).powf(m).sqrt().acos()
    });
    BoundReport {
        beta2: c.beta2,
        beta3: c.beta3,
        beta4: c.beta4,
        l: c.l,
        r: c.r,
        alpha,
        v_lower: c.v_lower,
        b1_bound: c.b1,
        d1_bound: c.d1,
        sigma,
        angle_bound,
        vacuous,
    }
}

fn alpha(rl: f64, c: &Common) -> f64 {
    (12.0 * (rl + c.beta2))
        .powf(-0.5)
        .min((12.0 * c.beta3).powf(-1.0 / 3.0))
        .min((12.0 * c.beta4).powf(-0.25))
}

/// Tangent-angle bound in the infinite-sample limit.
pub fn bound_infinite(inputs: &BoundInputs) -> Result<BoundReport> {
    inputs.validate()?;
    let c = common(inputs);
    let v = inputs.v;
    let a = alpha(c.r * c.l, &c);
    let numer = c.b1 + v * v / 24.0;
    let denom = v * v / 4.0 - c.r * c.l * v.powi(4) - 2.0 * (c.b1 + c.d1);
    Ok(finish(inputs, c, a, numer, denom))
}

/// Tangent-angle bound for finitely many samples, holding with high
/// probability under the finite-sample constants.
pub fn bound_finite(inputs: &BoundInputs) -> Result<BoundReport> {
    inputs.validate()?;
    let f = inputs.validate_finite()?;
    let c = common(inputs);
    let v = inputs.v;
    let a = alpha(f.s2 * c.r * c.l, &c);
    let numer = f.s3 + c.b1 + v * v / 24.0;
    let denom = f.s1 * v * v / 3.0 - f.s2 * c.r * c.l * v.powi(4) - v * v / 24.0 - 2.0 * (c.b1 + c.d1);
    Ok(finish(inputs, c, a, numer, denom))
}

/// Fill distance, density and separation of a sample set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingStats {
    /// `max_probe min_sample ‖probe − sample‖`.
    pub h: f64,
    /// `max` over probe centers `y` and `k ∈ {1, 2, 4}` of
    /// `#(samples ∩ B̄(y, k·h)) / k^d`.
    pub rho: f64,
    /// Minimum pairwise sample distance divided by `h`; `None` for a single
    /// sample or `h = 0`.
    pub delta: Option<f64>,
    pub min_separation: Option<f64>,
    pub probes: usize,
}

pub const DENSITY_SCALES: [f64; 3] = [1.0, 2.0, 4.0];

pub fn h_rho_delta(samples: &PointCloud, probes: &PointCloud, intrinsic_dim: usize) -> Result<SamplingStats> {
    h_rho_delta_with(samples, probes, intrinsic_dim, Execution::default())
}

pub fn h_rho_delta_with(
    samples: &PointCloud,
    probes: &PointCloud,
    intrinsic_dim: usize,
    exec: Execution,
) -> Result<SamplingStats> {
    if samples.is_empty() || probes.is_empty() {
        return Err(Error::EmptyInput);
    }
    if samples.dim() != probes.dim() {
        return Err(Error::DimensionMismatch {
            expected: samples.dim(),
            got: probes.dim(),
        });
    }
    let index = SpatialIndex::build(samples)?;
    let nearest = exec.try_map(probes.len(), |i| index.nearest_sq_dist(probes.point(i)))?;
    let h = nearest.into_iter().fold(0.0, f64::max).sqrt();

    let d = intrinsic_dim as i32;
    let counts = exec.try_map(probes.len(), |i| {
        let mut best: f64 = 0.0;
        for k in DENSITY_SCALES {
            let c = index.radius_query(probes.point(i), k * h)?.len() as f64;
            best = best.max(c / k.powi(d));
        }
        Ok::<f64, Error>(best)
    })?;
    let rho = counts.into_iter().fold(0.0, f64::max);

    let min_separation = if samples.len() >= 2 {
        let all: Vec<usize> = (0..samples.len()).collect();
        Some(crate::subsample::verify_separation(samples, &all)?)
    } else {
        None
    };
    let delta = min_separation.filter(|_| h > 0.0).map(|s| s / h);
    Ok(SamplingStats {
        h,
        rho,
        delta,
        min_separation,
        probes: probes.len(),
    })
}
