use nalgebra::DMatrix;

use super::project::{FitConfig, RankPolicy};
use crate::{Error, Result};

/// Relative singular-value cutoff for the equilibrated design matrix.
const DESIGN_RANK_TOL: f64 = 1e-11;

/// Monomials in `m` variables of total degree `≤ degree`, graded then
/// lexicographic (`1, u₁, u₂, u₁², u₁u₂, u₂², …`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonomialBasis {
    vars: usize,
    degree: usize,
    exponents: Vec<Vec<u32>>,
}

impl MonomialBasis {
    pub fn new(vars: usize, degree: usize) -> Self {
        let mut exponents = Vec::new();
        for d in 0..=degree {
            let mut cur = vec![0u32; vars];
            push_exponents(&mut exponents, &mut cur, 0, d as u32);
        }
        Self {
            vars,
            degree,
            exponents,
        }
    }

    /// `C(vars + degree, degree)`.
    pub fn size_for(vars: usize, degree: usize) -> usize {
        let mut num = 1usize;
        for i in 1..=degree {
            num = num * (vars + i) / i;
        }
        num
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn exponents(&self) -> &[Vec<u32>] {
        &self.exponents
    }

    pub fn eval_into(&self, u: &[f64], out: &mut [f64]) {
        for (o, e) in out.iter_mut().zip(&self.exponents) {
            *o = e.iter().zip(u).map(|(&p, &x)| x.powi(p as i32)).product();
        }
    }
}

fn push_exponents(out: &mut Vec<Vec<u32>>, cur: &mut [u32], var: usize, left: u32) {
    if var + 1 == cur.len() {
        cur[var] = left;
        out.push(cur.to_vec());
        return;
    }
    for e in (0..=left).rev() {
        cur[var] = e;
        push_exponents(out, cur, var + 1, left - e);
    }
    cur[var] = 0;
}

/// A vector-valued polynomial from chart coordinates (`R^m`) to `R^n`.
///
/// The polynomial is expressed in the shifted, scaled variable
/// `u = (c − center) / scale`; row `j` of `coefficients` multiplies the
/// `j`-th monomial of [`basis`](Self::basis).
#[derive(Debug, Clone, PartialEq)]
pub struct MlsModel {
    basis: MonomialBasis,
    requested_degree: usize,
    coefficients: DMatrix<f64>,
    center: Vec<f64>,
    scale: f64,
}

impl MlsModel {
    /// Degree actually fitted.
    pub fn degree(&self) -> usize {
        self.basis.degree()
    }

    pub fn requested_degree(&self) -> usize {
        self.requested_degree
    }

    pub fn degree_shrunk(&self) -> bool {
        self.degree() < self.requested_degree
    }

    pub fn basis(&self) -> &MonomialBasis {
        &self.basis
    }

    pub fn coefficients(&self) -> &DMatrix<f64> {
        &self.coefficients
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn evaluate(&self, coord: &[f64]) -> Vec<f64> {
        let u: Vec<f64> = coord
            .iter()
            .zip(&self.center)
            .map(|(c, z)| (c - z) / self.scale)
            .collect();
        let mut phi = vec![0.0; self.basis.len()];
        self.basis.eval_into(&u, &mut phi);
        (0..self.coefficients.ncols())
            .map(|j| {
                phi.iter()
                    .zip(self.coefficients.column(j).iter())
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }
}

/// Weighted least-squares polynomial fit from chart coordinates to targets.
///
/// `coords` is `k × m`, `targets` is `k × n`. Weights are
/// `config.weight` evaluated at `‖eval_coord − coords_i‖`. The `n` target
/// columns share one factorization of the equilibrated design matrix.
pub fn mls_fit(
    coords: &DMatrix<f64>,
    targets: &DMatrix<f64>,
    eval_coord: &[f64],
    config: &FitConfig,
) -> Result<MlsModel> {
    let k = coords.nrows();
    let m = coords.ncols();
    if targets.nrows() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: targets.nrows(),
        });
    }
    if eval_coord.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: eval_coord.len(),
        });
    }
    if k == 0 {
        return Err(Error::EmptyInput);
    }
    config.validate()?;

    let dists: Vec<f64> = coords
        .row_iter()
        .map(|r| {
            r.iter()
                .zip(eval_coord)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    let weights = config.weight.weights(&dists);
    let active = weights.iter().filter(|&&w| w > 0.0).count();
    let scale = dists
        .iter()
        .zip(&weights)
        .filter(|(_, &w)| w > 0.0)
        .map(|(d, _)| *d)
        .fold(0.0, f64::max);
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let u: Vec<Vec<f64>> = coords
        .row_iter()
        .map(|r| r.iter().zip(eval_coord).map(|(c, z)| (c - z) / scale).collect())
        .collect();

    let lowest = match config.min_rank_policy {
        RankPolicy::Fail => config.degree,
        RankPolicy::ShrinkDegree => 0,
    };
    let mut last_err = None;
    for degree in (lowest..=config.degree).rev() {
        let basis = MonomialBasis::new(m, degree);
        match solve(&basis, &u, &weights, active, targets) {
            Ok(coefficients) => {
                return Ok(MlsModel {
                    basis,
                    requested_degree: config.degree,
                    coefficients,
                    center: eval_coord.to_vec(),
                    scale,
                })
            }
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.expect("at least one degree attempted"))
}

fn solve(
    basis: &MonomialBasis,
    u: &[Vec<f64>],
    weights: &[f64],
    active: usize,
    targets: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let b = basis.len();
    let deficient = |rank| Error::RankDeficient {
        rank,
        required: b,
        degree: basis.degree(),
    };
    if active < b {
        return Err(deficient(active));
    }
    let k = u.len();
    let mut design = DMatrix::zeros(k, b);
    let mut phi = vec![0.0; b];
    for (i, ui) in u.iter().enumerate() {
        basis.eval_into(ui, &mut phi);
        let sw = weights[i].sqrt();
        for (j, p) in phi.iter().enumerate() {
            design[(i, j)] = sw * p;
        }
    }
    let norms: Vec<f64> = (0..b).map(|j| design.column(j).norm()).collect();
    if norms.iter().any(|&nrm| !(nrm > 0.0)) {
        return Err(deficient(norms.iter().filter(|&&nrm| nrm > 0.0).count()));
    }
    for (j, nrm) in norms.iter().enumerate() {
        design.column_mut(j).unscale_mut(*nrm);
    }
    let rhs = DMatrix::from_fn(k, targets.ncols(), |i, j| weights[i].sqrt() * targets[(i, j)]);

    let svd = design.svd(true, true);
    let top = svd.singular_values.max();
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > DESIGN_RANK_TOL * top)
        .count();
    if rank < b {
        return Err(deficient(rank));
    }
    let mut coef = svd
        .solve(&rhs, 0.0)
        .map_err(|_| deficient(rank))?;
    for (j, nrm) in norms.iter().enumerate() {
        coef.row_mut(j).unscale_mut(*nrm);
    }
    Ok(coef)
}

/// Relative gradient of the weighted normal equations,
/// `‖Vᵀ W (V c − y)‖ / (‖Vᵀ W‖ ‖y‖)`, for checking a fitted model.
#[cfg(test)]
pub(crate) fn normal_equation_residual(
    model: &MlsModel,
    coords: &DMatrix<f64>,
    targets: &DMatrix<f64>,
    weights: &[f64],
) -> f64 {
    let b = model.basis.len();
    let k = coords.nrows();
    let mut v = DMatrix::zeros(k, b);
    let mut phi = vec![0.0; b];
    for i in 0..k {
        let ui: Vec<f64> = coords
            .row(i)
            .iter()
            .zip(&model.center)
            .map(|(c, z)| (c - z) / model.scale)
            .collect();
        model.basis.eval_into(&ui, &mut phi);
        for j in 0..b {
            v[(i, j)] = phi[j];
        }
    }
    let w = nalgebra::DVector::from_column_slice(weights);
    let vtw = DMatrix::from_fn(b, k, |j, i| v[(i, j)] * w[i]);
    let resid = &v * &model.coefficients - targets;
    let grad = &vtw * resid;
    grad.norm() / (vtw.norm() * targets.norm()).max(f64::MIN_POSITIVE)
}
