use nalgebra::DMatrix;

use crate::geometry::{PointCloud, Subspace};
use crate::{Error, Result};

/// Relative singular-value cutoff below which a principal direction is
/// considered absent.
const RANK_TOL: f64 = 1e-12;

/// A PCA chart over a neighborhood: `coords(p) = tangentᵀ (p − base)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalChart {
    base: Vec<f64>,
    tangent: Subspace,
    singular_values: Vec<f64>,
    rank_deficient: bool,
}

impl LocalChart {
    /// Neighborhood mean.
    pub fn base(&self) -> &[f64] {
        &self.base
    }

    pub fn tangent(&self) -> &Subspace {
        &self.tangent
    }

    pub fn dim(&self) -> usize {
        self.tangent.dim()
    }

    /// Singular values of the centred neighborhood, descending.
    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    /// True when the neighborhood spans fewer than `m` directions; the
    /// missing basis vectors are then an arbitrary orthonormal completion.
    pub fn rank_deficient(&self) -> bool {
        self.rank_deficient
    }

    pub fn coords(&self, p: &[f64]) -> Vec<f64> {
        let b = self.tangent.basis();
        (0..b.ncols())
            .map(|j| {
                b.column(j)
                    .iter()
                    .zip(p.iter().zip(&self.base))
                    .map(|(u, (x, c))| u * (x - c))
                    .sum()
            })
            .collect()
    }

    /// `base + tangent · c`.
    pub fn lift(&self, c: &[f64]) -> Vec<f64> {
        let b = self.tangent.basis();
        let mut out = self.base.clone();
        for (j, cj) in c.iter().enumerate() {
            for (o, u) in out.iter_mut().zip(b.column(j).iter()) {
                *o += u * cj;
            }
        }
        out
    }

    /// Orthogonal projection of `p` onto the chart plane.
    pub fn project(&self, p: &[f64]) -> Vec<f64> {
        self.lift(&self.coords(p))
    }
}

/// Fits an `m`-dimensional PCA chart to `neighbors`.
///
/// Basis vectors are ordered by decreasing variance and signed so that each
/// one's largest-magnitude coordinate is positive.
pub fn local_chart(neighbors: &PointCloud, m: usize) -> Result<LocalChart> {
    let n = neighbors.dim();
    if m == 0 || m >= n {
        return Err(Error::invalid(
            "m",
            format!("intrinsic dimension must satisfy 1 <= m < {n}, got {m}"),
        ));
    }
    if neighbors.len() < 2 {
        return Err(Error::TooFewPoints {
            required: 2,
            got: neighbors.len(),
        });
    }
    let base = neighbors.centroid();
    let k = neighbors.len();
    let centered = DMatrix::from_fn(k, n, |i, j| neighbors.point(i)[j] - base[j]);
    let svd = centered.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let sv: Vec<f64> = svd.singular_values.iter().copied().collect();

    let top = sv.first().copied().unwrap_or(0.0);
    let rank = sv.iter().filter(|&&s| top > 0.0 && s > RANK_TOL * top).count();

    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(m);
    for r in 0..rank.min(m) {
        cols.push(v_t.row(r).iter().copied().collect());
    }
    complete_basis(&mut cols, m, n);
    for c in &mut cols {
        orient(c);
    }
    let basis = DMatrix::from_fn(n, m, |i, j| cols[j][i]);
    Ok(LocalChart {
        base,
        tangent: Subspace::from_orthonormal(basis)?,
        singular_values: sv,
        rank_deficient: rank < m,
    })
}

// Fills `cols` up to `m` orthonormal vectors using coordinate axes.
fn complete_basis(cols: &mut Vec<Vec<f64>>, m: usize, n: usize) {
    let mut axis = 0;
    while cols.len() < m && axis < n {
        let mut v = vec![0.0; n];
        v[axis] = 1.0;
        axis += 1;
        for _ in 0..2 {
            for c in cols.iter() {
                let d: f64 = c.iter().zip(&v).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(c).for_each(|(x, y)| *x -= d * y);
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            v.iter_mut().for_each(|x| *x /= norm);
            cols.push(v);
        }
    }
}

fn orient(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::subspace_angle;
    use approx::assert_abs_diff_eq;

    #[test]
    fn line_in_r3() {
        let pts = PointCloud::from_rows(&[[-2.0, 0.0, 0.0], [0.5, 0.0, 0.0], [3.0, 0.0, 0.0]]).unwrap();
        let chart = local_chart(&pts, 1).unwrap();
        let b = chart.tangent().basis();
        assert_abs_diff_eq!(b[(0, 0)], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(b[(1, 0)], 0.0, epsilon = 1e-14);
        assert!(!chart.rank_deficient());
        assert_abs_diff_eq!(chart.coords(chart.base())[0], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn plane_z5() {
        let pts = PointCloud::from_rows(&[
            [0.0, 0.0, 5.0],
            [1.0, 0.0, 5.0],
            [0.0, 1.0, 5.0],
            [1.0, 2.0, 5.0],
            [-1.0, 0.5, 5.0],
        ])
        .unwrap();
        let chart = local_chart(&pts, 2).unwrap();
        assert_abs_diff_eq!(chart.base()[2], 5.0, epsilon = 1e-14);
        let xy = Subspace::span(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]).unwrap();
        assert_abs_diff_eq!(subspace_angle(chart.tangent(), &xy).unwrap(), 0.0, epsilon = 1e-12);
        let p = chart.project(&[0.3, -0.7, 9.0]);
        assert_abs_diff_eq!(p[0], 0.3, epsilon = 1e-13);
        assert_abs_diff_eq!(p[1], -0.7, epsilon = 1e-13);
        assert_abs_diff_eq!(p[2], 5.0, epsilon = 1e-13);
    }

    #[test]
    fn sign_convention() {
        let pts = PointCloud::from_rows(&[[0.0, 0.0], [-1.0, -2.0], [-2.0, -4.0]]).unwrap();
        let chart = local_chart(&pts, 1).unwrap();
        let b = chart.tangent().basis();
        assert!(b[(1, 0)] > 0.0);
    }

    #[test]
    fn rank_flag_on_collinear_points_for_plane() {
        let pts = PointCloud::from_rows(&[[0.0, 0.0, 0.0], [1.0, 1.0, 0.0], [2.0, 2.0, 0.0]]).unwrap();
        let chart = local_chart(&pts, 2).unwrap();
        assert!(chart.rank_deficient());
        assert_eq!(chart.dim(), 2);
    }

    #[test]
    fn identical_points_are_flagged() {
        let pts = PointCloud::from_rows(&[[1.0, 1.0], [1.0, 1.0]]).unwrap();
        let chart = local_chart(&pts, 1).unwrap();
        assert!(chart.rank_deficient());
    }

    #[test]
    fn rejects_bad_inputs() {
        let pts = PointCloud::from_rows(&[[1.0, 1.0]]).unwrap();
        assert!(matches!(local_chart(&pts, 1), Err(Error::TooFewPoints { .. })));
        let pts = PointCloud::from_rows(&[[1.0, 1.0], [0.0, 0.0]]).unwrap();
        assert!(local_chart(&pts, 2).is_err());
        assert!(local_chart(&pts, 0).is_err());
    }

    #[test]
    fn high_dimensional_few_points() {
        let mut rows = Vec::new();
        for i in 0..6 {
            let mut r = vec![0.0; 50];
            r[3] = i as f64;
            r[10] = (i as f64) * 0.01;
            rows.push(r);
        }
        let chart = local_chart(&PointCloud::from_rows(&rows).unwrap(), 1).unwrap();
        let b = chart.tangent().basis();
        assert!(b[(3, 0)] > 0.99);
    }
}
