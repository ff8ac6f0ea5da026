use nalgebra::{DMatrix, DVector};

use super::{check_dim, convex_hull_2d, IntervalVector, Polygon, SetError, Zonotope, MEMBERSHIP_TOLERANCE};
use crate::lp::{BoxLp, LpOutcome};
use crate::Scalar;

/// Constrained zonotope `{ c + G β : A β = b, β ∈ [-1, 1]^{n_g} }`.
///
/// Emptiness is only decided when asked for ([`Self::is_empty`]); operations
/// that append constraints never check it themselves.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstrainedZonotope<T: Scalar = f64> {
    center: DVector<T>,
    generators: DMatrix<T>,
    a: DMatrix<T>,
    b: DVector<T>,
}

impl<T: Scalar> ConstrainedZonotope<T> {
    pub fn new(center: DVector<T>, generators: DMatrix<T>, a: DMatrix<T>, b: DVector<T>) -> Result<Self, SetError> {
        check_dim("constrained zonotope generator rows", center.len(), generators.nrows())?;
        check_dim("constraint matrix columns", generators.ncols(), a.ncols())?;
        check_dim("constraint vector length", a.nrows(), b.len())?;
        Ok(Self {
            center,
            generators,
            a,
            b,
        })
    }

    pub fn from_zonotope(z: &Zonotope<T>) -> Self {
        Self {
            center: z.center().clone(),
            generators: z.generators().clone(),
            a: DMatrix::zeros(0, z.num_generators()),
            b: DVector::zeros(0),
        }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn num_generators(&self) -> usize {
        self.generators.ncols()
    }

    pub fn num_constraints(&self) -> usize {
        self.a.nrows()
    }

    pub fn center(&self) -> &DVector<T> {
        &self.center
    }

    pub fn generators(&self) -> &DMatrix<T> {
        &self.generators
    }

    pub fn constraint_matrix(&self) -> &DMatrix<T> {
        &self.a
    }

    pub fn constraint_vector(&self) -> &DVector<T> {
        &self.b
    }

    /// The zonotope `⟨c, G⟩` obtained by dropping the constraints.
    pub fn enclosing_zonotope(&self) -> Zonotope<T> {
        Zonotope::new(self.center.clone(), self.generators.clone())
            .expect("constrained zonotope keeps consistent dimensions")
    }

    /// Interval hull of the enclosing zonotope (constraints ignored).
    pub fn interval_hull(&self) -> IntervalVector<T> {
        self.enclosing_zonotope().interval_hull()
    }

    /// Appends `k` new factors and `p` constraint rows:
    /// `G ← [G  new_generators]`, `A ← [A 0; rows_existing rows_new]`,
    /// `b ← [b; rhs]`.
    pub fn extend(
        &self,
        new_generators: &DMatrix<T>,
        rows_existing: &DMatrix<T>,
        rows_new: &DMatrix<T>,
        rhs: &DVector<T>,
    ) -> Result<Self, SetError> {
        let (n, ng, nc) = (self.dim(), self.num_generators(), self.num_constraints());
        let k = new_generators.ncols();
        let p = rhs.len();
        check_dim("appended generator rows", n, new_generators.nrows())?;
        check_dim("constraint rows over existing factors", ng, rows_existing.ncols())?;
        check_dim("constraint rows over new factors", k, rows_new.ncols())?;
        check_dim("appended constraint row count", p, rows_existing.nrows())?;
        check_dim("appended constraint row count", p, rows_new.nrows())?;
        let mut generators = DMatrix::zeros(n, ng + k);
        generators.columns_mut(0, ng).copy_from(&self.generators);
        generators.columns_mut(ng, k).copy_from(new_generators);
        let mut a = DMatrix::zeros(nc + p, ng + k);
        a.view_mut((0, 0), (nc, ng)).copy_from(&self.a);
        a.view_mut((nc, 0), (p, ng)).copy_from(rows_existing);
        a.view_mut((nc, ng), (p, k)).copy_from(rows_new);
        let mut b = DVector::zeros(nc + p);
        b.rows_mut(0, nc).copy_from(&self.b);
        b.rows_mut(nc, p).copy_from(rhs);
        Ok(Self {
            center: self.center.clone(),
            generators,
            a,
            b,
        }
        .pruned())
    }

    /// Drops factors whose generator column and constraint column are both zero.
    pub fn pruned(self) -> Self {
        let keep: Vec<usize> = (0..self.num_generators())
            .filter(|&j| {
                self.generators.column(j).iter().any(|v| *v != T::zero())
                    || self.a.column(j).iter().any(|v| *v != T::zero())
            })
            .collect();
        if keep.len() == self.num_generators() {
            return self;
        }
        Self {
            generators: self.generators.select_columns(keep.iter()),
            a: self.a.select_columns(keep.iter()),
            center: self.center,
            b: self.b,
        }
    }

    pub fn linear_map(&self, l: &DMatrix<T>) -> Result<Self, SetError> {
        check_dim("linear map columns", self.dim(), l.ncols())?;
        Ok(Self {
            center: l * &self.center,
            generators: l * &self.generators,
            a: self.a.clone(),
            b: self.b.clone(),
        }
        .pruned())
    }

    pub fn translate(&self, offset: &DVector<T>) -> Result<Self, SetError> {
        check_dim("translation", self.dim(), offset.len())?;
        let mut out = self.clone();
        out.center += offset;
        Ok(out)
    }

    /// Minkowski sum with a plain zonotope: its generators join as
    /// unconstrained factors.
    pub fn minkowski_sum_zonotope(&self, z: &Zonotope<T>) -> Result<Self, SetError> {
        check_dim("minkowski sum", self.dim(), z.dim())?;
        let k = z.num_generators();
        let mut out = self.extend(
            z.generators(),
            &DMatrix::zeros(0, self.num_generators()),
            &DMatrix::zeros(0, k),
            &DVector::zeros(0),
        )?;
        out.center += z.center();
        Ok(out)
    }

    /// `self × z`: the zonotope's coordinates are appended after the
    /// constrained ones.
    pub fn cartesian_product_zonotope(&self, z: &Zonotope<T>) -> Self {
        let (n1, n2) = (self.dim(), z.dim());
        let (g1, g2) = (self.num_generators(), z.num_generators());
        let mut center = DVector::zeros(n1 + n2);
        center.rows_mut(0, n1).copy_from(&self.center);
        center.rows_mut(n1, n2).copy_from(z.center());
        let mut generators = DMatrix::zeros(n1 + n2, g1 + g2);
        generators.view_mut((0, 0), (n1, g1)).copy_from(&self.generators);
        generators.view_mut((n1, g1), (n2, g2)).copy_from(z.generators());
        let mut a = DMatrix::zeros(self.num_constraints(), g1 + g2);
        a.columns_mut(0, g1).copy_from(&self.a);
        Self {
            center,
            generators,
            a,
            b: self.b.clone(),
        }
    }

    /// `z × self`, the zonotope's coordinates first.
    pub fn cartesian_product_zonotope_front(&self, z: &Zonotope<T>) -> Self {
        let (n1, n2) = (z.dim(), self.dim());
        let (g1, g2) = (z.num_generators(), self.num_generators());
        let mut center = DVector::zeros(n1 + n2);
        center.rows_mut(0, n1).copy_from(z.center());
        center.rows_mut(n1, n2).copy_from(&self.center);
        let mut generators = DMatrix::zeros(n1 + n2, g1 + g2);
        generators.view_mut((0, 0), (n1, g1)).copy_from(z.generators());
        generators.view_mut((n1, g1), (n2, g2)).copy_from(&self.generators);
        let mut a = DMatrix::zeros(self.num_constraints(), g1 + g2);
        a.columns_mut(g1, g2).copy_from(&self.a);
        Self {
            center,
            generators,
            a,
            b: self.b.clone(),
        }
    }

    fn base_lp(&self, tol: f64) -> BoxLp {
        let mut lp = BoxLp::new(self.num_generators());
        for i in 0..self.num_constraints() {
            let row = self.a.row(i).iter().map(|v| v.to_f64_lossy()).collect();
            let rhs = self.b[i].to_f64_lossy();
            lp.add_row(row, rhs - tol, rhs + tol);
        }
        lp
    }

    /// True iff no factor vector in the unit box satisfies `A β = b`
    /// (up to [`MEMBERSHIP_TOLERANCE`] on the residuals).
    pub fn is_empty(&self) -> Result<bool, SetError> {
        if self.num_constraints() == 0 {
            return Ok(false);
        }
        self.base_lp(MEMBERSHIP_TOLERANCE)
            .feasible()
            .map(|f| !f)
            .map_err(SetError::Solver)
    }

    pub fn contains_point(&self, x: &DVector<T>) -> Result<bool, SetError> {
        self.contains_point_tol(x, MEMBERSHIP_TOLERANCE)
    }

    pub fn contains_point_tol(&self, x: &DVector<T>, tol: f64) -> Result<bool, SetError> {
        check_dim("membership point", self.dim(), x.len())?;
        if !self.interval_hull().contains(x, T::lit(tol)) {
            return Ok(false);
        }
        let mut lp = self.base_lp(tol);
        for i in 0..self.dim() {
            let rhs = (x[i] - self.center[i]).to_f64_lossy();
            let row = self.generators.row(i).iter().map(|g| g.to_f64_lossy()).collect();
            lp.add_row(row, rhs - tol, rhs + tol);
        }
        lp.feasible().map_err(SetError::Solver)
    }

    /// A point of the set maximizing `direction · x`, or `None` when empty.
    pub fn support_point(&self, direction: &[f64]) -> Result<Option<Vec<f64>>, SetError> {
        check_dim("support direction", self.dim(), direction.len())?;
        let objective: Vec<f64> = (0..self.num_generators())
            .map(|j| {
                (0..self.dim())
                    .map(|i| direction[i] * self.generators[(i, j)].to_f64_lossy())
                    .sum()
            })
            .collect();
        match self
            .base_lp(MEMBERSHIP_TOLERANCE)
            .maximize(&objective)
            .map_err(SetError::Solver)?
        {
            LpOutcome::Infeasible => Ok(None),
            LpOutcome::Optimal { point, .. } => Ok(Some(
                (0..self.dim())
                    .map(|i| {
                        self.center[i].to_f64_lossy()
                            + (0..self.num_generators())
                                .map(|j| self.generators[(i, j)].to_f64_lossy() * point[j])
                                .sum::<f64>()
                    })
                    .collect(),
            )),
        }
    }

    /// Tightest axis-aligned box of the constrained set, computed with `2n`
    /// linear programs. `None` when the set is empty.
    pub fn tight_interval_hull(&self) -> Result<Option<IntervalVector<T>>, SetError> {
        if self.num_constraints() == 0 {
            return Ok(Some(self.interval_hull()));
        }
        let n = self.dim();
        let mut lower = DVector::zeros(n);
        let mut upper = DVector::zeros(n);
        for i in 0..n {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            let Some(hi) = self.support_point(&e)? else {
                return Ok(None);
            };
            e[i] = -1.0;
            let Some(lo) = self.support_point(&e)? else {
                return Ok(None);
            };
            lower[i] = T::lit(lo[i].min(hi[i]));
            upper[i] = T::lit(hi[i].max(lo[i]));
        }
        // Support points carry solver residuals; pad outward so the box stays
        // an enclosure.
        let pad = DVector::from_element(n, T::lit(MEMBERSHIP_TOLERANCE));
        Ok(Some(IntervalVector::new(lower - &pad, upper + pad)?))
    }

    /// Counter-clockwise polygon of a planar constrained zonotope by
    /// support-point refinement; empty when the set is empty.
    pub fn polygon(&self) -> Result<Polygon, SetError> {
        if self.dim() != 2 {
            return Err(SetError::NotTwoDimensional(self.dim()));
        }
        if self.num_constraints() == 0 {
            return self.enclosing_zonotope().vertices_2d();
        }
        let mut points: Vec<[f64; 2]> = Vec::new();
        for k in 0..8 {
            let angle = k as f64 * std::f64::consts::FRAC_PI_4;
            match self.support_point(&[angle.cos(), angle.sin()])? {
                Some(p) => points.push([p[0], p[1]]),
                None => return Ok(Vec::new()),
            }
        }
        let scale = 1.0
            + self
                .interval_hull()
                .radius()
                .iter()
                .map(|r| r.to_f64_lossy())
                .fold(0.0, f64::max);
        let tol = 1e-9 * scale;
        let mut hull = convex_hull_2d(&points);
        for _ in 0..256 {
            let mut added = false;
            let m = hull.len();
            if m < 2 {
                break;
            }
            let edges: Vec<([f64; 2], [f64; 2])> = if m == 2 {
                vec![(hull[0], hull[1]), (hull[1], hull[0])]
            } else {
                (0..m).map(|i| (hull[i], hull[(i + 1) % m])).collect()
            };
            for (a, b) in edges {
                let normal = [b[1] - a[1], a[0] - b[0]];
                let len = (normal[0] * normal[0] + normal[1] * normal[1]).sqrt();
                if len == 0.0 {
                    continue;
                }
                let dir = [normal[0] / len, normal[1] / len];
                if let Some(q) = self.support_point(&dir)? {
                    let gain = dir[0] * (q[0] - a[0]) + dir[1] * (q[1] - a[1]);
                    if gain > tol {
                        points.push([q[0], q[1]]);
                        added = true;
                    }
                }
            }
            if !added {
                break;
            }
            hull = convex_hull_2d(&points);
        }
        Ok(hull)
    }
}

impl<T: Scalar> From<&Zonotope<T>> for ConstrainedZonotope<T> {
    fn from(z: &Zonotope<T>) -> Self {
        Self::from_zonotope(z)
    }
}
