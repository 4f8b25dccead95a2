use std::f64::consts::PI;

use approx::assert_abs_diff_eq;
use heatfit::fit::{local_chart, mls_project, FitConfig};
use heatfit::geometry::{subspace_angle, Subspace};
use heatfit::{PointCloud, SpatialIndex};
use nalgebra::{DMatrix, Rotation3, Vector3};
use proptest::prelude::*;

fn arc(center_angle: f64, half_width: f64, count: usize) -> PointCloud {
    let rows: Vec<[f64; 2]> = (0..count)
        .map(|i| {
            let a = center_angle - half_width + 2.0 * half_width * i as f64 / (count - 1) as f64;
            [a.cos(), a.sin()]
        })
        .collect();
    PointCloud::from_rows(&rows).unwrap()
}

#[test]
fn circle_chart_is_tangent() {
    for theta in [0.0, 0.7, 2.0, -2.5] {
        let chart = local_chart(&arc(theta, 0.05, 41), 1).unwrap();
        let tangent = Subspace::span(&[&[-f64::sin(theta), f64::cos(theta)]]).unwrap();
        assert!(subspace_angle(chart.tangent(), &tangent).unwrap() < 1e-10);
        assert_eq!(chart.dim(), 1);
        assert!(!chart.rank_deficient());
    }
}

#[test]
fn sphere_cap_chart_is_tangent() {
    let mut rows = Vec::new();
    for i in 0..15 {
        for j in 0..15 {
            let (a, b) = (-0.1 + 0.2 * i as f64 / 14.0, -0.1 + 0.2 * j as f64 / 14.0);
            let p = Vector3::new(a, b, 1.0).normalize();
            rows.push([p.x, p.y, p.z]);
        }
    }
    let chart = local_chart(&PointCloud::from_rows(&rows).unwrap(), 2).unwrap();
    let plane = Subspace::span(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]).unwrap();
    assert!(subspace_angle(chart.tangent(), &plane).unwrap() < 1e-10);
}

fn rotate(cloud: &PointCloud, rot: &Rotation3<f64>, shift: &Vector3<f64>) -> PointCloud {
    let rows: Vec<[f64; 3]> = cloud
        .iter()
        .map(|p| {
            let q = rot * Vector3::new(p[0], p[1], p[2]) + shift;
            [q.x, q.y, q.z]
        })
        .collect();
    PointCloud::from_rows(&rows).unwrap()
}

fn helix_anchors() -> PointCloud {
    let rows: Vec<[f64; 3]> = (0..300)
        .map(|i| {
            let t = -PI + 2.0 * PI * i as f64 / 299.0;
            [t.sin() + 0.01 * (7.0 * t).sin(), t.cos(), t]
        })
        .collect();
    PointCloud::from_rows(&rows).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn projection_commutes_with_rigid_motion(
        axis in prop::array::uniform3(-1.0f64..1.0),
        angle in -PI..PI,
        shift in prop::array::uniform3(-5.0f64..5.0),
        t in -2.5f64..2.5,
        offset in prop::array::uniform3(-0.05f64..0.05),
    ) {
        prop_assume!(axis.iter().map(|a| a * a).sum::<f64>() > 1e-3);
        let rot = Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(Vector3::from(axis)), angle);
        let shift = Vector3::from(shift);
        let anchors = helix_anchors();
        let moved = rotate(&anchors, &rot, &shift);
        let x = [t.sin() + offset[0], t.cos() + offset[1], t + offset[2]];
        let cfg = FitConfig { k_neighbors: 15, ..FitConfig::default() };
        let p = mls_project(&x, &SpatialIndex::build(&anchors).unwrap(), &cfg, 1).unwrap();
        let xm = rot * Vector3::from(x) + shift;
        let pm = mls_project(xm.as_slice(), &SpatialIndex::build(&moved).unwrap(), &cfg, 1).unwrap();
        let expect = rot * Vector3::from_column_slice(&p.point) + shift;
        for i in 0..3 {
            prop_assert!((expect[i] - pm.point[i]).abs() < 1e-8, "{:?} vs {:?}", expect, pm.point);
        }
    }
}

#[test]
fn chart_coordinates_round_trip_in_plane() {
    let data = DMatrix::from_row_slice(4, 3, &[0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 0.0, 2.0, 1.0, 1.0, 2.0, 1.0]);
    let chart = local_chart(&PointCloud::from_matrix(&data).unwrap(), 2).unwrap();
    let p = [0.3, 1.7, 1.0];
    let lifted = chart.lift(&chart.coords(&p));
    for i in 0..3 {
        assert_abs_diff_eq!(lifted[i], p[i], epsilon = 1e-12);
    }
}
