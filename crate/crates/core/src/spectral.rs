//! Euclidean heat kernel on chart coordinates, the discrete heat matrix and
//! the local measure function driving the subsampler.
//!
//! For coordinates `x, y` in an `m`-dimensional chart the kernel is
//!
//! ```text
//! K(x, y, t) = (4πt)^(-m/2) · exp(-‖x − y‖² / (4t))
//! ```
//!
//! and the measure of `x` relative to reference points `y_1..y_k` is
//! `1 − hᵀ H⁻¹ h / K(x, x, t)` with `H_ij = K(y_i, y_j, t)` and
//! `h_i = K(x, y_i, t)`. It is the fraction of `K(x, x, t)` that the
//! references fail to explain: 1 with no references, 0 for an exact duplicate.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::geometry::sq_dist;
use crate::{Error, Execution, Result};

/// Relative diagonal jitter applied by [`MeasureParams::new`].
pub const DEFAULT_RIDGE_FACTOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureParams {
    /// Intrinsic dimension `m`.
    pub intrinsic_dim: usize,
    /// Heat time `t`.
    pub heat_time: f64,
    /// Absolute value added to the diagonal of the heat matrix.
    pub ridge: f64,
}

impl MeasureParams {
    /// Parameters with the default ridge `1e-10 · K(x, x, t)`, which equals
    /// `1e-10 · trace(H) / size(H)` for any heat matrix.
    pub fn new(intrinsic_dim: usize, heat_time: f64) -> Result<Self> {
        let mut p = Self {
            intrinsic_dim,
            heat_time,
            ridge: 0.0,
        };
        p.validate()?;
        p.ridge = DEFAULT_RIDGE_FACTOR * p.self_kernel();
        Ok(p)
    }

    /// Default heat time for a subsampling radius `r`: `(r / 3)²`.
    pub fn default_heat_time(radius: f64) -> f64 {
        (radius / 3.0).powi(2)
    }

    pub fn with_ridge(mut self, ridge: f64) -> Self {
        self.ridge = ridge;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.intrinsic_dim == 0 {
            return Err(Error::invalid("intrinsic_dim", "must be >= 1"));
        }
        if !(self.heat_time > 0.0 && self.heat_time.is_finite()) {
            return Err(Error::invalid(
                "heat_time",
                format!("must be positive and finite, got {}", self.heat_time),
            ));
        }
        if !(self.ridge >= 0.0 && self.ridge.is_finite()) {
            return Err(Error::invalid("ridge", format!("must be >= 0, got {}", self.ridge)));
        }
        Ok(())
    }

    /// `K(x, x, t) = (4πt)^(-m/2)`.
    pub fn self_kernel(&self) -> f64 {
        (4.0 * std::f64::consts::PI * self.heat_time).powf(-(self.intrinsic_dim as f64) / 2.0)
    }

    #[inline]
    fn kernel_sq(&self, d2: f64) -> f64 {
        self.self_kernel() * (-d2 / (4.0 * self.heat_time)).exp()
    }
}

pub fn heat_kernel(x1: &[f64], x2: &[f64], params: &MeasureParams) -> Result<f64> {
    params.validate()?;
    check_len(x1.len(), x2.len())?;
    Ok(params.kernel_sq(sq_dist(x1, x2)))
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

fn check_coords<C: AsRef<[f64]>>(coords: &[C], len: usize) -> Result<()> {
    for c in coords {
        check_len(len, c.as_ref().len())?;
    }
    Ok(())
}

/// Heat matrix `H_ij = K(c_i, c_j, t)` over a coordinate list, plus
/// `ridge · I`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatMatrix {
    pub entries: DMatrix<f64>,
    pub params: MeasureParams,
}

pub fn heat_matrix<C: AsRef<[f64]> + Sync>(coords: &[C], params: &MeasureParams) -> Result<HeatMatrix> {
    heat_matrix_with(coords, params, Execution::default())
}

pub fn heat_matrix_with<C: AsRef<[f64]> + Sync>(
    coords: &[C],
    params: &MeasureParams,
    exec: Execution,
) -> Result<HeatMatrix> {
    params.validate()?;
    let first = coords.first().ok_or(Error::EmptyInput)?;
    check_coords(coords, first.as_ref().len())?;
    let k = coords.len();
    let rows = exec.map(k, |i| {
        let ci = coords[i].as_ref();
        (0..k)
            .map(|j| {
                let v = params.kernel_sq(sq_dist(ci, coords[j].as_ref()));
                if i == j {
                    v + params.ridge
                } else {
                    v
                }
            })
            .collect::<Vec<f64>>()
    });
    let entries = DMatrix::from_row_iterator(k, k, rows.into_iter().flatten());
    Ok(HeatMatrix {
        entries,
        params: *params,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureValue {
    /// The measure clamped to `[0, 1]`.
    pub value: f64,
    /// The unclamped value `1 − hᵀH⁻¹h / K(x, x, t)`.
    pub raw: f64,
    /// Set when the heat matrix could not be factored and a least-squares
    /// pseudo-solution was used instead.
    pub condition_flag: bool,
}

impl MeasureValue {
    fn from_raw(raw: f64, condition_flag: bool) -> Self {
        Self {
            value: raw.clamp(0.0, 1.0),
            raw,
            condition_flag,
        }
    }

    pub fn was_clamped(&self) -> bool {
        self.value != self.raw
    }
}

/// Local measure of `x` relative to `refs`.
pub fn local_measure<C: AsRef<[f64]>>(x: &[f64], refs: &[C], params: &MeasureParams) -> Result<MeasureValue> {
    params.validate()?;
    check_coords(refs, x.len())?;
    if refs.is_empty() {
        return Ok(MeasureValue::from_raw(1.0, false));
    }
    let k = refs.len();
    let mut gram = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..=i {
            let v = params.kernel_sq(sq_dist(refs[i].as_ref(), refs[j].as_ref()));
            gram[(i, j)] = v;
            gram[(j, i)] = v;
        }
        gram[(i, i)] += params.ridge;
    }
    let h = DVector::from_iterator(k, refs.iter().map(|r| params.kernel_sq(sq_dist(x, r.as_ref()))));
    Ok(measure_from_parts(gram, &h, params.self_kernel()))
}

fn measure_from_parts(gram: DMatrix<f64>, h: &DVector<f64>, k_self: f64) -> MeasureValue {
    if let Some(chol) = gram.clone().cholesky() {
        let y = chol.solve(h);
        let q = h.dot(&y);
        if q.is_finite() {
            return MeasureValue::from_raw(1.0 - q / k_self, false);
        }
    }
    let svd = gram.svd(true, true);
    let tol = svd.singular_values.max() * 1e-13;
    let q = svd
        .solve(h, tol)
        .map(|y| h.dot(&y))
        .unwrap_or(k_self);
    MeasureValue::from_raw(1.0 - q / k_self, true)
}

/// Eigenvalues of the heat matrix, descending.
pub fn heat_spectrum<C: AsRef<[f64]> + Sync>(coords: &[C], params: &MeasureParams) -> Result<Vec<f64>> {
    let hm = heat_matrix(coords, params)?;
    let mut ev: Vec<f64> = SymmetricEigen::new(hm.entries).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    Ok(ev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn exact(m: usize, t: f64) -> MeasureParams {
        MeasureParams::new(m, t).unwrap().with_ridge(0.0)
    }

    #[test]
    fn kernel_unit_prefactor() {
        let p = exact(2, 1.0 / (4.0 * PI));
        assert_abs_diff_eq!(heat_kernel(&[0.3, 0.1], &[0.3, 0.1], &p).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn kernel_direct_value() {
        let p = exact(1, 0.25);
        let expected = PI.powf(-0.5) * (-1.0f64).exp();
        assert_abs_diff_eq!(heat_kernel(&[0.0], &[1.0], &p).unwrap(), expected, epsilon = 1e-15);
        assert_abs_diff_eq!(expected, 0.20755, epsilon = 1e-5);
    }

    #[test]
    fn kernel_length_mismatch() {
        let p = exact(1, 0.25);
        assert!(heat_kernel(&[0.0], &[1.0, 2.0], &p).is_err());
    }

    #[test]
    fn invalid_params() {
        assert!(MeasureParams::new(0, 1.0).is_err());
        assert!(MeasureParams::new(1, 0.0).is_err());
        assert!(MeasureParams::new(1, -1.0).is_err());
        assert!(exact(1, 1.0).with_ridge(-1.0).validate().is_err());
    }

    #[test]
    fn heat_matrix_shapes() {
        let p = exact(2, 0.1);
        let single = heat_matrix(&[[0.0, 0.0]], &p).unwrap();
        assert_eq!(single.entries.shape(), (1, 1));
        assert_abs_diff_eq!(single.entries[(0, 0)], p.self_kernel(), epsilon = 0.0);

        let dup = heat_matrix(&[[0.5, 0.5], [0.5, 0.5]], &p).unwrap();
        assert_abs_diff_eq!(dup.entries.determinant(), 0.0, epsilon = 1e-12);

        assert!(matches!(heat_matrix::<[f64; 2]>(&[], &p), Err(Error::EmptyInput)));
    }

    #[test]
    fn heat_matrix_matches_elementwise_kernel() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let coords: Vec<Vec<f64>> = (0..3).map(|_| (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let p = exact(2, 0.3);
        let hm = heat_matrix(&coords, &p).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let d2: f64 = coords[i].iter().zip(&coords[j]).map(|(a, b)| (a - b).powi(2)).sum();
                let oracle = (4.0 * PI * 0.3).powf(-1.0) * (-d2 / 1.2).exp();
                assert_abs_diff_eq!(hm.entries[(i, j)], oracle, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn heat_matrix_ridge_on_diagonal() {
        let p = exact(1, 0.1).with_ridge(0.5);
        let hm = heat_matrix(&[[0.0], [10.0]], &p).unwrap();
        assert_abs_diff_eq!(hm.entries[(0, 0)], p.self_kernel() + 0.5, epsilon = 1e-15);
    }

    #[test]
    fn measure_conventions() {
        let p = exact(2, 0.01);
        let none: [[f64; 2]; 0] = [];
        let empty = local_measure(&[0.1, 0.2], &none, &p).unwrap();
        assert_eq!(empty.value, 1.0);
        let dup = local_measure(&[0.1, 0.2], &[[0.1, 0.2]], &p).unwrap();
        assert_eq!(dup.value, 0.0);
        assert!(!dup.condition_flag);
    }

    #[test]
    fn single_reference_closed_form() {
        let p = exact(1, 0.01);
        let s = local_measure(&[0.0], &[[0.1]], &p).unwrap();
        assert_abs_diff_eq!(s.value, 1.0 - (-0.5f64).exp(), epsilon = 1e-12);
        assert_abs_diff_eq!(s.value, 0.39347, epsilon = 1e-5);
    }

    #[test]
    fn singular_matrix_sets_flag() {
        let p = exact(1, 0.5);
        let s = local_measure(&[0.3], &[[0.0], [0.0], [1e-9]], &p).unwrap();
        assert!(s.condition_flag);
        assert!((0.0..=1.0).contains(&s.value));
    }

    #[test]
    fn spectrum_closed_forms() {
        let p = exact(2, 0.05);
        let k0 = p.self_kernel();
        assert_abs_diff_eq!(heat_spectrum(&[[1.0, 1.0]], &p).unwrap()[0], k0, epsilon = 1e-14);
        let dup = heat_spectrum(&[[1.0, 1.0], [1.0, 1.0]], &p).unwrap();
        assert_abs_diff_eq!(dup[1], 0.0, epsilon = 1e-10);
        let d: f64 = 0.3;
        let two = heat_spectrum(&[[0.0, 0.0], [d, 0.0]], &p).unwrap();
        let off = k0 * (-d * d / (4.0 * 0.05)).exp();
        assert_abs_diff_eq!(two[0], k0 + off, epsilon = 1e-12);
        assert_abs_diff_eq!(two[1], k0 - off, epsilon = 1e-12);
    }

    #[test]
    fn heat_matrix_execution_modes_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let coords: Vec<Vec<f64>> = (0..40).map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let p = MeasureParams::new(2, 0.1).unwrap();
        let a = heat_matrix_with(&coords, &p, Execution::Sequential).unwrap();
        let b = heat_matrix_with(&coords, &p, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn measure_in_unit_interval(
            x in prop::collection::vec(-1.0..1.0f64, 2),
            refs in prop::collection::vec(prop::collection::vec(-1.0..1.0f64, 2), 0..8),
            t in 0.001..1.0f64,
        ) {
            let p = MeasureParams::new(2, t).unwrap();
            let s = local_measure(&x, &refs, &p).unwrap();
            prop_assert!((0.0..=1.0).contains(&s.value));
        }

        #[test]
        fn single_reference_formula(d in 0.0..1.0f64, t in 0.001..1.0f64, m in 1usize..4) {
            let p = exact(m, t);
            let mut y = vec![0.0; m];
            y[0] = d;
            let s = local_measure(&vec![0.0; m], &[y], &p).unwrap();
            prop_assert!((s.raw - (1.0 - (-d * d / (2.0 * t)).exp())).abs() <= 1e-12);
        }

        #[test]
        fn distance_monotone(d1 in 0.0..0.5f64, gap in 1e-3..0.5f64) {
            let p = exact(1, 0.02);
            let a = local_measure(&[0.0], &[[d1]], &p).unwrap().raw;
            let b = local_measure(&[0.0], &[[d1 + gap]], &p).unwrap().raw;
            prop_assert!(b > a);
        }

        #[test]
        fn nested_references_monotone(
            pts in prop::collection::vec(prop::collection::vec(-1.0..1.0f64, 2), 1..10),
            x in prop::collection::vec(-1.0..1.0f64, 2),
        ) {
            let p = MeasureParams::new(2, 0.05).unwrap();
            let mut prev = f64::INFINITY;
            for k in 1..=pts.len() {
                let s = local_measure(&x, &pts[..k], &p).unwrap().raw;
                prop_assert!(s <= prev + 1e-10);
                prev = s;
            }
        }

        #[test]
        fn heat_matrix_psd(pts in prop::collection::vec(prop::collection::vec(-1.0..1.0f64, 3), 1..20), t in 0.01..1.0f64) {
            let p = exact(2, t);
            let hm = heat_matrix(&pts, &p).unwrap();
            prop_assert!((&hm.entries - hm.entries.transpose()).amax() <= 1e-12);
            let ev = heat_spectrum(&pts, &p).unwrap();
            prop_assert!(*ev.last().unwrap() >= -1e-10);
        }
    }
}
