use nalgebra::{DMatrix, DVector};

use super::{ReachError, TrajectoryDataset};
use crate::setalg::{IntervalVector, MatrixZonotope, Zonotope};
use crate::Scalar;

/// Relative singular-value cutoff of the pseudoinverse.
pub const PINV_CUTOFF: f64 = 1e-10;

/// Affine model `x⁺ ≈ M̃ [1; x − x*; u − u*]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquaresModel<T: Scalar = f64> {
    pub m: DMatrix<T>,
    pub x_star: DVector<T>,
    pub u_star: DVector<T>,
}

impl<T: Scalar> LeastSquaresModel<T> {
    pub fn state_dim(&self) -> usize {
        self.x_star.len()
    }

    pub fn input_dim(&self) -> usize {
        self.u_star.len()
    }

    pub fn offset(&self) -> DVector<T> {
        self.m.column(0).into_owned()
    }

    pub fn state_block(&self) -> DMatrix<T> {
        self.m.columns(1, self.state_dim()).into_owned()
    }

    pub fn input_block(&self) -> DMatrix<T> {
        self.m.columns(1 + self.state_dim(), self.input_dim()).into_owned()
    }

    pub fn predict(&self, x: &DVector<T>, u: &DVector<T>) -> DVector<T> {
        self.offset() + self.state_block() * (x - &self.x_star) + self.input_block() * (u - &self.u_star)
    }
}

/// `Z_w` repeated over `columns` columns (`γ_w · columns` generator matrices).
pub fn build_noise_matrix_zonotope<T: Scalar>(zw: &Zonotope<T>, columns: usize) -> MatrixZonotope<T> {
    MatrixZonotope::from_repeated_columns(zw, columns)
}

fn regressor<T: Scalar>(xm: &DMatrix<T>, um: &DMatrix<T>, x_star: &DVector<T>, u_star: &DVector<T>) -> DMatrix<T> {
    let (n, m, t) = (xm.nrows(), um.nrows(), xm.ncols());
    let mut phi = DMatrix::zeros(1 + n + m, t);
    for j in 0..t {
        phi[(0, j)] = T::one();
        for i in 0..n {
            phi[(1 + i, j)] = xm[(i, j)] - x_star[i];
        }
        for i in 0..m {
            phi[(1 + n + i, j)] = um[(i, j)] - u_star[i];
        }
    }
    phi
}

fn pseudo_inverse<T: Scalar>(a: DMatrix<T>) -> DMatrix<T> {
    let svd = a.svd(true, true);
    let smax = svd.singular_values.iter().fold(T::zero(), |acc, s| acc.max(*s));
    let cutoff = smax * T::lit(PINV_CUTOFF);
    svd.pseudo_inverse(cutoff).expect("both factors were computed")
}

/// Least-squares fit `M̃ = (X₊ − C_Mw) [1; X₋ − x*; U₋ − u*]†`.
pub fn fit_model<T: Scalar>(
    d: &TrajectoryDataset<T>,
    x_star: &DVector<T>,
    u_star: &DVector<T>,
    mw: &MatrixZonotope<T>,
) -> Result<LeastSquaresModel<T>, ReachError> {
    let t = d.num_points();
    if t == 0 {
        return Err(ReachError::EmptyDataset);
    }
    if x_star.len() != d.state_dim() || u_star.len() != d.input_dim() {
        return Err(ReachError::InvalidConfig(
            "linearization point has the wrong dimension".into(),
        ));
    }
    if mw.shape() != (d.state_dim(), t) {
        return Err(ReachError::InvalidConfig(format!(
            "noise matrix zonotope is {:?}, data matrices are {}x{t}",
            mw.shape(),
            d.state_dim()
        )));
    }
    let (xm, xp, um) = d.matrices();
    let phi = regressor(&xm, &um, x_star, u_star);
    let m = (xp - mw.center()) * pseudo_inverse(phi);
    Ok(LeastSquaresModel {
        m,
        x_star: x_star.clone(),
        u_star: u_star.clone(),
    })
}

/// Residual box of the fit, minus the noise: per-axis bounds of
/// `X₊ − M̃ [1; X₋ − x*; U₋ − u*]`, shifted by `−c_w` and shrunk by the
/// interval radius of `Z_w` (never below zero).
pub fn residual_zonotope<T: Scalar>(
    d: &TrajectoryDataset<T>,
    model: &LeastSquaresModel<T>,
    zw: &Zonotope<T>,
) -> Result<Zonotope<T>, ReachError> {
    if d.num_points() == 0 {
        return Err(ReachError::EmptyDataset);
    }
    let (xm, xp, um) = d.matrices();
    let phi = regressor(&xm, &um, &model.x_star, &model.u_star);
    let res = xp - &model.m * phi;
    let n = res.nrows();
    let row_bound = |i: usize, pick: fn(T, T) -> T| {
        let row = res.row(i);
        row.iter().skip(1).fold(row[0], |a, v| pick(a, *v))
    };
    let upper = DVector::from_fn(n, |i, _| row_bound(i, |a, b| a.max(b)));
    let lower = DVector::from_fn(n, |i, _| row_bound(i, |a, b| a.min(b)));
    let hull = IntervalVector::new(lower, upper)?;
    let wr = zw.generator_radius();
    let center = hull.center() - zw.center();
    let radius = (hull.radius() - wr).map(|v| v.max(T::zero()));
    Ok(Zonotope::from_interval(&IntervalVector::new(
        &center - &radius,
        &center + &radius,
    )?))
}

/// `⟨0, L*·δ·I⟩`.
pub fn lipschitz_zonotope<T: Scalar>(lipschitz: T, delta: T, n: usize) -> Result<Zonotope<T>, ReachError> {
    if !(lipschitz >= T::zero()) || !(delta >= T::zero()) {
        return Err(ReachError::InvalidConfig("L* and δ must be nonnegative".into()));
    }
    let g = DMatrix::from_diagonal_element(n, n, lipschitz * delta);
    Ok(Zonotope::new(DVector::zeros(n), g)?.pruned())
}

/// Simple sample-based estimates: `L*` is the largest ratio
/// `‖x⁺_i − x⁺_j‖ / ‖z_i − z_j‖` over distinct pairs `z = (x, u)`, and `δ`
/// the largest nearest-neighbour distance among the `z`. Both are only
/// representative of the sampled region; with noisy data `L*` also absorbs
/// noise differences and is usually pessimistic.
pub fn estimate_lipschitz_and_radius<T: Scalar>(d: &TrajectoryDataset<T>) -> Result<(f64, f64), ReachError> {
    let (xm, xp, um) = d.matrices();
    let t = xm.ncols();
    if t < 2 {
        return Err(ReachError::InvalidDataset("need at least two transitions".into()));
    }
    let z: Vec<Vec<f64>> = (0..t)
        .map(|j| {
            xm.column(j)
                .iter()
                .chain(um.column(j).iter())
                .map(|v| v.to_f64_lossy())
                .collect()
        })
        .collect();
    let xplus: Vec<Vec<f64>> = (0..t)
        .map(|j| xp.column(j).iter().map(|v| v.to_f64_lossy()).collect())
        .collect();
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
    let mut lipschitz: Option<f64> = None;
    let mut nearest = vec![f64::INFINITY; t];
    for i in 0..t {
        for j in (i + 1)..t {
            let dz = dist(&z[i], &z[j]);
            if dz == 0.0 {
                continue;
            }
            nearest[i] = nearest[i].min(dz);
            nearest[j] = nearest[j].min(dz);
            let ratio = dist(&xplus[i], &xplus[j]) / dz;
            lipschitz = Some(lipschitz.map_or(ratio, |l| l.max(ratio)));
        }
    }
    let lipschitz = lipschitz.ok_or(ReachError::AllDuplicates)?;
    let delta = nearest.into_iter().filter(|v| v.is_finite()).fold(0.0, f64::max);
    Ok((lipschitz, delta))
}
