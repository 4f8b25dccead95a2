use heatfit::diagnostics::{bound_finite, bound_infinite, BoundInputs, FiniteSample, Structure};
use heatfit::fit::local_chart;
use heatfit::geometry::{subspace_angle, Subspace};
use heatfit::PointCloud;
use proptest::prelude::*;

/// Unit circle: `m = 1`, `n = 2`, unit curvature. The graph over the tangent
/// line is `1 − √(1 − u²)`, whose third-order Taylor constant is bounded by
/// 1 on the windows used here.
fn circle_inputs(v: f64) -> BoundInputs {
    BoundInputs {
        m: 1,
        n: 2,
        c_s: 1.0,
        k_max: 1.0,
        structure: Structure::Diagonal,
        v,
        e_norm: 0.0,
        finite: None,
    }
}

/// Points on the unit circle whose tangent coordinate at angle `theta`
/// lies in `[−v, v]`, drawn from `fractions` of the window.
fn window(theta: f64, v: f64, fractions: &[f64]) -> PointCloud {
    let rows: Vec<[f64; 2]> = fractions
        .iter()
        .map(|f| {
            let a = theta + (f * v).asin();
            [a.cos(), a.sin()]
        })
        .collect();
    PointCloud::from_rows(&rows).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn measured_angle_within_bound(
        theta in -3.1f64..3.1,
        v in prop::sample::select(vec![0.02, 0.05]),
        fractions in prop::collection::vec(-1.0f64..1.0, 8..60),
    ) {
        let report = bound_infinite(&circle_inputs(v)).unwrap();
        prop_assume!(report.vacuous.is_empty());
        let chart = local_chart(&window(theta, v, &fractions), 1);
        prop_assume!(chart.is_ok());
        let chart = chart.unwrap();
        prop_assume!(!chart.rank_deficient());
        let tangent = Subspace::span(&[&[-theta.sin(), theta.cos()]]).unwrap();
        let angle = subspace_angle(chart.tangent(), &tangent).unwrap();
        prop_assert!(angle <= report.angle_bound.unwrap(), "{angle} > {:?}", report.angle_bound);
    }
}

#[test]
fn circle_instance_is_not_vacuous() {
    for v in [0.02, 0.05] {
        let r = bound_infinite(&circle_inputs(v)).unwrap();
        assert!(r.vacuous.is_empty(), "{:?}", r.vacuous);
        assert!(r.angle_bound.unwrap() > 0.0);
    }
}

#[test]
fn finite_bound_limit_matches_transcription() {
    let v: f64 = 0.05;
    let base = circle_inputs(v);
    let inf = bound_infinite(&base).unwrap();
    let e = std::f64::consts::E;
    let fin = bound_finite(&BoundInputs {
        finite: Some(FiniteSample {
            s1: 1.0 - 1e-12,
            s2: e + 1e-12,
            s3: 1e-15,
        }),
        ..base
    })
    .unwrap();
    // one noise term in the finite denominator against two in the limit one
    let (b1, d1, rl) = (inf.b1_bound, inf.d1_bound, inf.r * inf.l);
    let expect = (b1 + v * v / 24.0) / (7.0 * v * v / 24.0 - e * rl * v.powi(4) - 2.0 * (b1 + d1));
    assert!((fin.sigma - expect).abs() <= 1e-9 * expect, "{} vs {expect}", fin.sigma);
    let limit = (b1 + v * v / 24.0) / (v * v / 4.0 - rl * v.powi(4) - 2.0 * (b1 + d1));
    assert!((inf.sigma - limit).abs() <= 1e-12 * limit);
    assert!(fin.sigma < inf.sigma);
}
