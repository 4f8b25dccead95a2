use nalgebra::DMatrix;

use crate::{Error, Result};

const ORTHO_TOL: f64 = 1e-10;

/// A linear subspace of `R^n` with an orthonormal basis stored as the
/// columns of an `n × m` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    basis: DMatrix<f64>,
}

impl Subspace {
    /// Wraps an already orthonormal basis (columns), checked to `1e-10`.
    pub fn from_orthonormal(basis: DMatrix<f64>) -> Result<Self> {
        if basis.ncols() == 0 || basis.ncols() > basis.nrows() {
            return Err(Error::invalid(
                "basis",
                format!("need 1 <= m <= n, got {}x{}", basis.nrows(), basis.ncols()),
            ));
        }
        let gram = basis.transpose() * &basis;
        let m = basis.ncols();
        let off = (&gram - DMatrix::<f64>::identity(m, m)).amax();
        if !(off <= ORTHO_TOL) {
            return Err(Error::invalid(
                "basis",
                format!("columns not orthonormal (max deviation {off:e})"),
            ));
        }
        Ok(Self { basis })
    }

    /// Orthonormalizes the columns of `spanning` (thin QR).
    pub fn from_spanning(spanning: DMatrix<f64>) -> Result<Self> {
        let m = spanning.ncols();
        if m == 0 || m > spanning.nrows() {
            return Err(Error::invalid("basis", "need 1 <= m <= n spanning vectors"));
        }
        let scale = spanning.amax();
        let qr = spanning.qr();
        let r = qr.r();
        if (0..m).any(|i| !(r[(i, i)].abs() > 1e-12 * scale)) {
            return Err(Error::invalid("basis", "spanning vectors are linearly dependent"));
        }
        Ok(Self { basis: qr.q() })
    }

    /// Builds `span(vectors)` from row slices.
    pub fn span(vectors: &[&[f64]]) -> Result<Self> {
        let n = vectors.first().ok_or(Error::EmptyInput)?.len();
        let mut m = DMatrix::zeros(n, vectors.len());
        for (j, v) in vectors.iter().enumerate() {
            if v.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: v.len(),
                });
            }
            m.column_mut(j).copy_from_slice(v);
        }
        Self::from_spanning(m)
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }
}

/// All principal angles between `u` and `v`, ascending, in `[0, π/2]`.
pub fn principal_angles(u: &Subspace, v: &Subspace) -> Result<Vec<f64>> {
    if u.ambient_dim() != v.ambient_dim() {
        return Err(Error::DimensionMismatch {
            expected: u.ambient_dim(),
            got: v.ambient_dim(),
        });
    }
    if u.dim() != v.dim() {
        return Err(Error::DimensionMismatch {
            expected: u.dim(),
            got: v.dim(),
        });
    }
    let cross = u.basis.transpose() * &v.basis;
    let mut cosines: Vec<f64> = cross.singular_values().iter().map(|s| s.clamp(0.0, 1.0)).collect();
    cosines.sort_by(|a, b| b.total_cmp(a));

    // acos loses all precision near 1; recover small angles from the sines,
    // i.e. the singular values of the part of V orthogonal to U.
    let resid = &v.basis - &u.basis * &cross;
    let mut sines: Vec<f64> = resid.singular_values().iter().map(|s| s.clamp(0.0, 1.0)).collect();
    sines.sort_by(|a, b| a.total_cmp(b));

    Ok(cosines
        .iter()
        .zip(&sines)
        .map(|(&c, &s)| if c > std::f64::consts::FRAC_1_SQRT_2 { s.asin() } else { c.acos() })
        .collect())
}

/// Largest principal angle between two equal-dimensional subspaces.
pub fn subspace_angle(u: &Subspace, v: &Subspace) -> Result<f64> {
    Ok(principal_angles(u, v)?.last().copied().unwrap_or(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    #[test]
    fn identical() {
        let u = Subspace::span(&[&[1.0, 2.0, 3.0], &[0.0, 1.0, -1.0]]).unwrap();
        assert_abs_diff_eq!(subspace_angle(&u, &u).unwrap(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn orthogonal_axes() {
        let u = Subspace::span(&[&[1.0, 0.0]]).unwrap();
        let v = Subspace::span(&[&[0.0, 1.0]]).unwrap();
        assert_abs_diff_eq!(subspace_angle(&u, &v).unwrap(), FRAC_PI_2, epsilon = 1e-15);
    }

    #[test]
    fn diagonal() {
        let u = Subspace::span(&[&[1.0, 0.0]]).unwrap();
        let h = 0.5f64.sqrt();
        let v = Subspace::from_orthonormal(DMatrix::from_column_slice(2, 1, &[h, h])).unwrap();
        assert_abs_diff_eq!(subspace_angle(&u, &v).unwrap(), FRAC_PI_4, epsilon = 1e-15);
    }

    #[test]
    fn small_angle_is_accurate() {
        let eps = 1e-9f64;
        let u = Subspace::span(&[&[1.0, 0.0, 0.0]]).unwrap();
        let v = Subspace::span(&[&[eps.cos(), eps.sin(), 0.0]]).unwrap();
        assert_abs_diff_eq!(subspace_angle(&u, &v).unwrap(), eps, epsilon = 1e-20);
    }

    #[test]
    fn dim_mismatch() {
        let u = Subspace::span(&[&[1.0, 0.0, 0.0]]).unwrap();
        let v = Subspace::span(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]).unwrap();
        assert!(subspace_angle(&u, &v).is_err());
    }

    #[test]
    fn rejects_non_orthonormal() {
        let b = DMatrix::from_column_slice(2, 1, &[1.0, 1.0]);
        assert!(Subspace::from_orthonormal(b).is_err());
    }

    #[test]
    fn invariant_under_reparameterization() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let n = 6;
            let m = 3;
            let a = DMatrix::from_fn(n, m, |_, _| rng.gen_range(-1.0..1.0));
            let b = DMatrix::from_fn(n, m, |_, _| rng.gen_range(-1.0..1.0));
            let u = Subspace::from_spanning(a).unwrap();
            let v = Subspace::from_spanning(b).unwrap();
            // random m×m orthogonal mixing of v's basis
            let mix = DMatrix::from_fn(m, m, |_, _| rng.gen_range(-1.0..1.0)).qr().q();
            let v2 = Subspace::from_orthonormal(v.basis() * mix).unwrap();
            let a1 = subspace_angle(&u, &v).unwrap();
            let a2 = subspace_angle(&u, &v2).unwrap();
            assert_abs_diff_eq!(a1, a2, epsilon = 1e-10);
            let angles = principal_angles(&u, &v).unwrap();
            assert!(angles.windows(2).all(|w| w[0] <= w[1]));
            assert!(angles.iter().all(|&t| (0.0..=FRAC_PI_2).contains(&t)));
        }
    }
}
