use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightKind {
    /// `exp(−s² / (2 b²))`, truncated at the support radius.
    Gaussian,
    /// `(1 − s/S)⁴ (4 s/S + 1)` for `s < S`.
    Wendland,
}

/// Non-increasing, non-negative radial weight with finite support.
///
/// `None` bandwidth means "derive from the neighborhood": half the mean
/// distance from the evaluation point to its neighbors. `None` support means
/// three bandwidths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub kind: WeightKind,
    pub bandwidth: Option<f64>,
    pub support: Option<f64>,
}

impl Default for WeightSpec {
    fn default() -> Self {
        Self {
            kind: WeightKind::Gaussian,
            bandwidth: None,
            support: None,
        }
    }
}

const SUPPORT_PER_BANDWIDTH: f64 = 3.0;

impl WeightSpec {
    pub fn fixed(kind: WeightKind, bandwidth: f64) -> Self {
        Self {
            kind,
            bandwidth: Some(bandwidth),
            support: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("bandwidth", self.bandwidth), ("support", self.support)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::invalid(
                        if name == "bandwidth" { "bandwidth" } else { "support" },
                        format!("must be positive, got {v}"),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Bandwidth and support radius for a neighborhood with the given
    /// distances from the evaluation point.
    pub fn resolve(&self, dists: &[f64]) -> (f64, f64) {
        let bw = self.bandwidth.unwrap_or_else(|| {
            let mean = dists.iter().sum::<f64>() / dists.len().max(1) as f64;
            mean / 2.0
        });
        let support = self.support.unwrap_or(SUPPORT_PER_BANDWIDTH * bw);
        (bw, support)
    }

    /// Weights for `dists`. A degenerate neighborhood (all distances zero)
    /// gets uniform weights.
    pub fn weights(&self, dists: &[f64]) -> Vec<f64> {
        let (bw, support) = self.resolve(dists);
        if !(bw > 0.0) {
            return vec![1.0; dists.len()];
        }
        dists.iter().map(|&s| self.eval(s, bw, support)).collect()
    }

    pub fn eval(&self, s: f64, bandwidth: f64, support: f64) -> f64 {
        match self.kind {
            WeightKind::Gaussian => {
                if s <= support {
                    (-s * s / (2.0 * bandwidth * bandwidth)).exp()
                } else {
                    0.0
                }
            }
            WeightKind::Wendland => {
                let u = s / support;
                if u < 1.0 {
                    (1.0 - u).powi(4) * (4.0 * u + 1.0)
                } else {
                    0.0
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn auto_bandwidth() {
        let w = WeightSpec::default();
        let (bw, sup) = w.resolve(&[0.0, 1.0, 2.0, 3.0]);
        assert_eq!(bw, 0.75);
        assert_eq!(sup, 2.25);
        let ws = w.weights(&[0.0, 1.0, 2.0, 3.0]);
        assert_eq!(ws[0], 1.0);
        assert_eq!(ws[3], 0.0);
    }

    #[test]
    fn degenerate_neighborhood_is_uniform() {
        assert_eq!(WeightSpec::default().weights(&[0.0, 0.0]), vec![1.0, 1.0]);
    }

    #[test]
    fn rejects_bad_bandwidth() {
        assert!(WeightSpec::fixed(WeightKind::Gaussian, 0.0).validate().is_err());
        assert!(WeightSpec::fixed(WeightKind::Gaussian, 1.0).validate().is_ok());
    }

    proptest! {
        #[test]
        fn non_increasing_nonnegative(
            a in 0.0..5.0f64,
            b in 0.0..5.0f64,
            bw in 0.05..2.0f64,
            wendland in any::<bool>(),
        ) {
            let kind = if wendland { WeightKind::Wendland } else { WeightKind::Gaussian };
            let w = WeightSpec::fixed(kind, bw);
            let (bw, sup) = w.resolve(&[]);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let wl = w.eval(lo, bw, sup);
            let wh = w.eval(hi, bw, sup);
            prop_assert!(wl >= wh && wh >= 0.0);
            prop_assert_eq!(w.eval(sup * 1.0001, bw, sup), 0.0);
        }
    }
}
