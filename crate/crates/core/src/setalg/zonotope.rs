use nalgebra::{DMatrix, DVector};

use super::{check_dim, ConstrainedZonotope, IntervalVector, SetError, MEMBERSHIP_TOLERANCE};
use crate::lp::BoxLp;
use crate::Scalar;

/// Zonotope `⟨c, G⟩ = { c + G β : β ∈ [-1, 1]^γ }`.
///
/// The generator matrix has one column per generator and exactly `n` rows;
/// a zonotope with no generators is a single point.
#[derive(Debug, Clone, PartialEq)]
pub struct Zonotope<T: Scalar = f64> {
    center: DVector<T>,
    generators: DMatrix<T>,
}

impl<T: Scalar> Zonotope<T> {
    pub fn new(center: DVector<T>, generators: DMatrix<T>) -> Result<Self, SetError> {
        check_dim("zonotope generator rows", center.len(), generators.nrows())?;
        Ok(Self { center, generators })
    }

    pub fn point(center: DVector<T>) -> Self {
        let n = center.len();
        Self {
            center,
            generators: DMatrix::zeros(n, 0),
        }
    }

    /// Zero-centered zonotope with the given generators.
    pub fn centered(generators: DMatrix<T>) -> Self {
        Self {
            center: DVector::zeros(generators.nrows()),
            generators,
        }
    }

    /// Box zonotope `zonotope(lower, upper)`: center at the midpoint and a
    /// diagonal generator matrix of half-widths.
    pub fn from_interval(iv: &IntervalVector<T>) -> Self {
        Self {
            center: iv.center(),
            generators: DMatrix::from_diagonal(&iv.radius()),
        }
        .pruned()
    }

    pub(crate) fn from_parts(center: DVector<T>, generators: DMatrix<T>) -> Self {
        debug_assert_eq!(center.len(), generators.nrows());
        Self { center, generators }.pruned()
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn num_generators(&self) -> usize {
        self.generators.ncols()
    }

    pub fn center(&self) -> &DVector<T> {
        &self.center
    }

    pub fn generators(&self) -> &DMatrix<T> {
        &self.generators
    }

    /// Generator count divided by dimension.
    pub fn order(&self) -> f64 {
        if self.dim() == 0 {
            0.0
        } else {
            self.num_generators() as f64 / self.dim() as f64
        }
    }

    /// Drops generator columns that are exactly zero.
    pub fn pruned(self) -> Self {
        let keep: Vec<usize> = (0..self.generators.ncols())
            .filter(|&j| self.generators.column(j).iter().any(|v| *v != T::zero()))
            .collect();
        if keep.len() == self.generators.ncols() {
            return self;
        }
        let generators = self.generators.select_columns(keep.iter());
        Self {
            center: self.center,
            generators,
        }
    }

    /// `L Z = ⟨L c, L G⟩`.
    pub fn linear_map(&self, l: &DMatrix<T>) -> Result<Self, SetError> {
        check_dim("linear map columns", self.dim(), l.ncols())?;
        Ok(Self::from_parts(l * &self.center, l * &self.generators))
    }

    pub fn translate(&self, offset: &DVector<T>) -> Result<Self, SetError> {
        check_dim("translation", self.dim(), offset.len())?;
        Ok(Self {
            center: &self.center + offset,
            generators: self.generators.clone(),
        })
    }

    /// Scales the generators (not the center) by `factor`.
    pub fn scale_generators(&self, factor: T) -> Self {
        Self::from_parts(self.center.clone(), &self.generators * factor)
    }

    /// Exact Minkowski sum `⟨c1 + c2, [G1 G2]⟩`.
    pub fn minkowski_sum(&self, other: &Self) -> Result<Self, SetError> {
        check_dim("minkowski sum", self.dim(), other.dim())?;
        let n = self.dim();
        let (g1, g2) = (self.num_generators(), other.num_generators());
        let mut generators = DMatrix::zeros(n, g1 + g2);
        generators.columns_mut(0, g1).copy_from(&self.generators);
        generators.columns_mut(g1, g2).copy_from(&other.generators);
        Ok(Self::from_parts(&self.center + &other.center, generators))
    }

    /// Cartesian product with stacked centers and block-diagonal generators.
    pub fn cartesian_product(&self, other: &Self) -> Self {
        let (n1, n2) = (self.dim(), other.dim());
        let (g1, g2) = (self.num_generators(), other.num_generators());
        let mut center = DVector::zeros(n1 + n2);
        center.rows_mut(0, n1).copy_from(&self.center);
        center.rows_mut(n1, n2).copy_from(&other.center);
        let mut generators = DMatrix::zeros(n1 + n2, g1 + g2);
        generators.view_mut((0, 0), (n1, g1)).copy_from(&self.generators);
        generators.view_mut((n1, g1), (n2, g2)).copy_from(&other.generators);
        Self::from_parts(center, generators)
    }

    /// Per-coordinate sum of absolute generator entries.
    pub fn generator_radius(&self) -> DVector<T> {
        DVector::from_iterator(
            self.dim(),
            (0..self.dim()).map(|i| self.generators.row(i).iter().fold(T::zero(), |a, g| a + g.abs())),
        )
    }

    /// Tightest axis-aligned box containing the zonotope.
    pub fn interval_hull(&self) -> IntervalVector<T> {
        let r = self.generator_radius();
        IntervalVector::new(&self.center - &r, &self.center + &r)
            .expect("center ± nonnegative radius is a valid interval")
    }

    /// Box over-approximation of the smallest generators so that at most
    /// `⌈max_order · n⌉` generators remain. The result contains `self`.
    pub fn reduce_order(&self, max_order: f64) -> Result<Self, SetError> {
        if !(max_order >= 1.0) {
            return Err(SetError::InvalidArgument(format!(
                "max_order must be at least 1, got {max_order}"
            )));
        }
        let n = self.dim();
        let budget = (max_order * n as f64).ceil() as usize;
        if self.num_generators() <= budget {
            return Ok(self.clone().pruned());
        }
        let mut order: Vec<(usize, T)> = (0..self.num_generators())
            .map(|j| (j, self.generators.column(j).norm()))
            .collect();
        // Largest first; stable so equal norms keep their original order.
        order.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal));
        let kept = budget - n;
        let mut generators = DMatrix::zeros(n, kept + n);
        for (slot, (j, _)) in order.iter().take(kept).enumerate() {
            generators.set_column(slot, &self.generators.column(*j));
        }
        for (j, _) in order.iter().skip(kept) {
            for i in 0..n {
                generators[(i, kept + i)] += self.generators[(i, *j)].abs();
            }
        }
        Ok(Self::from_parts(self.center.clone(), generators))
    }

    /// `c + G β` for a factor vector `β`.
    pub fn point_at(&self, factors: &DVector<T>) -> DVector<T> {
        &self.center + &self.generators * factors
    }

    /// Membership with the default tolerance [`MEMBERSHIP_TOLERANCE`].
    pub fn contains_point(&self, x: &DVector<T>) -> Result<bool, SetError> {
        self.contains_point_tol(x, MEMBERSHIP_TOLERANCE)
    }

    /// True iff some `β ∈ [-1, 1]^γ` satisfies `|c + Gβ - x| ≤ tol`
    /// componentwise.
    pub fn contains_point_tol(&self, x: &DVector<T>, tol: f64) -> Result<bool, SetError> {
        check_dim("membership point", self.dim(), x.len())?;
        if !self.interval_hull().contains(x, T::lit(tol)) {
            return Ok(false);
        }
        match self.dim() {
            0 | 1 => Ok(true),
            2 => Ok(self.contains_planar(x, tol)),
            _ => self.contains_lp(x, tol),
        }
    }

    /// Planar test against the facet normals of `Z ⊕ tol·[-1, 1]^2`; every
    /// edge of a planar zonotope is parallel to one of its generators.
    fn contains_planar(&self, x: &DVector<T>, tol: f64) -> bool {
        let d = [
            (x[0] - self.center[0]).to_f64_lossy(),
            (x[1] - self.center[1]).to_f64_lossy(),
        ];
        let mut gens: Vec<[f64; 2]> = (0..self.num_generators())
            .map(|j| {
                [
                    self.generators[(0, j)].to_f64_lossy(),
                    self.generators[(1, j)].to_f64_lossy(),
                ]
            })
            .collect();
        gens.push([tol, 0.0]);
        gens.push([0.0, tol]);
        gens.iter().all(|g| {
            let normal = [-g[1], g[0]];
            let support: f64 = gens.iter().map(|h| (normal[0] * h[0] + normal[1] * h[1]).abs()).sum();
            let proj = (normal[0] * d[0] + normal[1] * d[1]).abs();
            proj <= support * (1.0 + 4.0 * f64::EPSILON)
        })
    }

    fn contains_lp(&self, x: &DVector<T>, tol: f64) -> Result<bool, SetError> {
        let mut lp = BoxLp::new(self.num_generators());
        for i in 0..self.dim() {
            let rhs = (x[i] - self.center[i]).to_f64_lossy();
            let row = self.generators.row(i).iter().map(|g| g.to_f64_lossy()).collect();
            lp.add_row(row, rhs - tol, rhs + tol);
        }
        lp.feasible().map_err(SetError::Solver)
    }

    /// Lifts to a constrained zonotope with no constraints.
    pub fn to_constrained(&self) -> ConstrainedZonotope<T> {
        ConstrainedZonotope::from_zonotope(self)
    }

    /// Polygon vertices (counter-clockwise) of a planar zonotope.
    pub fn vertices_2d(&self) -> Result<Vec<[f64; 2]>, SetError> {
        if self.dim() != 2 {
            return Err(SetError::NotTwoDimensional(self.dim()));
        }
        let c = [self.center[0].to_f64_lossy(), self.center[1].to_f64_lossy()];
        let mut gens: Vec<[f64; 2]> = (0..self.num_generators())
            .map(|j| {
                let g = [
                    self.generators[(0, j)].to_f64_lossy(),
                    self.generators[(1, j)].to_f64_lossy(),
                ];
                // Orient into the upper half-plane so the angle sweep is monotone.
                if g[1] < 0.0 || (g[1] == 0.0 && g[0] < 0.0) {
                    [-g[0], -g[1]]
                } else {
                    g
                }
            })
            .filter(|g| g[0] != 0.0 || g[1] != 0.0)
            .collect();
        if gens.is_empty() {
            return Ok(vec![c]);
        }
        gens.sort_by(|a, b| {
            a[1].atan2(a[0])
                .partial_cmp(&b[1].atan2(b[0]))
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let sum = gens.iter().fold([0.0, 0.0], |acc, g| [acc[0] + g[0], acc[1] + g[1]]);
        let mut p = [c[0] - sum[0], c[1] - sum[1]];
        let mut vertices = Vec::with_capacity(2 * gens.len());
        for (i, g) in gens.iter().chain(gens.iter()).enumerate() {
            vertices.push(p);
            let sign = if i < gens.len() { 2.0 } else { -2.0 };
            p = [p[0] + sign * g[0], p[1] + sign * g[1]];
        }
        Ok(super::convex_hull_2d(&vertices))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_factors(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
        DVector::from_fn(n, |_, _| rng.gen_range(-1.0..=1.0))
    }

    #[test]
    fn identity_map_leaves_zonotope_unchanged() {
        let z = Zonotope::new(dvector![1.0, 2.0], DMatrix::identity(2, 2)).unwrap();
        assert_eq!(z.linear_map(&DMatrix::identity(2, 2)).unwrap(), z);
    }

    #[test]
    fn zero_map_gives_origin_point() {
        let z = Zonotope::new(dvector![1.0, 2.0], dmatrix![1.0, 3.0; 0.5, 1.0]).unwrap();
        let p = z.linear_map(&DMatrix::zeros(2, 2)).unwrap();
        assert_eq!(p.num_generators(), 0);
        assert_eq!(p.center(), &dvector![0.0, 0.0]);
    }

    #[test]
    fn diagonal_map_matches_formula_and_sampling() {
        let z = Zonotope::new(dvector![1.0, 1.0], DMatrix::identity(2, 2)).unwrap();
        let l = dmatrix![2.0, 0.0; 0.0, 3.0];
        let mapped = z.linear_map(&l).unwrap();
        assert_eq!(mapped.center(), &dvector![2.0, 3.0]);
        assert_eq!(mapped.generators(), &dmatrix![2.0, 0.0; 0.0, 3.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let x = z.point_at(&random_factors(&mut rng, 2));
            assert!(mapped.contains_point(&(&l * x)).unwrap());
        }
    }

    #[test]
    fn linear_map_dimension_error() {
        let z = Zonotope::point(dvector![0.0, 0.0]);
        assert!(matches!(
            z.linear_map(&DMatrix::zeros(2, 3)),
            Err(SetError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn minkowski_sum_concatenates() {
        let z1 = Zonotope::new(dvector![0.0, 0.0], DMatrix::identity(2, 2)).unwrap();
        let z2 = Zonotope::new(dvector![1.0, 1.0], DMatrix::identity(2, 2) * 0.5).unwrap();
        let s = z1.minkowski_sum(&z2).unwrap();
        assert_eq!(s.center(), &dvector![1.0, 1.0]);
        assert_eq!(s.generators(), &dmatrix![1.0, 0.0, 0.5, 0.0; 0.0, 1.0, 0.0, 0.5]);
        let origin = Zonotope::point(dvector![0.0, 0.0]);
        assert_eq!(z1.minkowski_sum(&origin).unwrap(), z1);
    }

    #[test]
    fn cartesian_product_of_intervals() {
        let a = Zonotope::new(dvector![0.0], dmatrix![1.0]).unwrap();
        let b = Zonotope::new(dvector![5.0], dmatrix![2.0]).unwrap();
        let p = a.cartesian_product(&b);
        assert_eq!(p.center(), &dvector![0.0, 5.0]);
        assert_eq!(p.generators(), &dmatrix![1.0, 0.0; 0.0, 2.0]);
        let lifted = a.cartesian_product(&Zonotope::point(dvector![7.0, 8.0]));
        assert_eq!(lifted.center(), &dvector![0.0, 7.0, 8.0]);
        assert_eq!(lifted.generators(), &dmatrix![1.0; 0.0; 0.0]);
    }

    #[test]
    fn from_interval_cases() {
        let unit = IntervalVector::from_slices(&[-1.0, -1.0], &[1.0, 1.0]).unwrap();
        let z = Zonotope::from_interval(&unit);
        assert_eq!(z.center(), &dvector![0.0, 0.0]);
        assert_eq!(z.generators(), &DMatrix::<f64>::identity(2, 2));
        let point = IntervalVector::from_slices(&[3.0], &[3.0]).unwrap();
        let z = Zonotope::from_interval(&point);
        assert_eq!(z.num_generators(), 0);
        assert_eq!(z.center()[0], 3.0);
        let iv = IntervalVector::from_slices(&[0.0, -4.0], &[2.0, 0.0]).unwrap();
        let z = Zonotope::from_interval(&iv);
        assert_eq!(z.center(), &dvector![1.0, -2.0]);
        assert_eq!(z.generators(), &dmatrix![1.0, 0.0; 0.0, 2.0]);
    }

    #[test]
    fn interval_hull_matches_vertex_enumeration() {
        let z = Zonotope::new(dvector![1.0, 1.0], dmatrix![1.0, 1.0; 1.0, -1.0]).unwrap();
        let hull = z.interval_hull();
        // Enumerate the four sign patterns independently.
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for s1 in [-1.0, 1.0] {
            for s2 in [-1.0, 1.0] {
                let v = z.point_at(&dvector![s1, s2]);
                for i in 0..2 {
                    lo[i] = lo[i].min(v[i]);
                    hi[i] = hi[i].max(v[i]);
                }
            }
        }
        assert_eq!(hull.lower(), &dvector![lo[0], lo[1]]);
        assert_eq!(hull.upper(), &dvector![hi[0], hi[1]]);
        assert_eq!(hull.lower(), &dvector![-1.0, -1.0]);
        assert_eq!(hull.upper(), &dvector![3.0, 3.0]);
    }

    #[test]
    fn reduce_order_is_superset() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = DMatrix::from_fn(2, 10, |_, _| rng.gen_range(-1.0..1.0));
        let z = Zonotope::new(dvector![0.5, -0.5], g).unwrap();
        let r = z.reduce_order(2.0).unwrap();
        assert!(r.num_generators() <= 4);
        for _ in 0..1000 {
            let x = z.point_at(&random_factors(&mut rng, 10));
            assert!(r.contains_point(&x).unwrap());
        }
        assert_eq!(z.reduce_order(5.0).unwrap(), z);
        let zero = Zonotope::new(dvector![1.0, 1.0], DMatrix::zeros(2, 30)).unwrap();
        assert_eq!(zero.reduce_order(1.0).unwrap().num_generators(), 0);
        assert!(z.reduce_order(0.5).is_err());
    }

    #[test]
    fn membership_basics() {
        let z = Zonotope::new(dvector![0.0, 0.0, 0.0], DMatrix::identity(3, 3)).unwrap();
        assert!(z.contains_point(&dvector![0.0, 0.0, 0.0]).unwrap());
        assert!(!z.contains_point(&dvector![1.5, 0.0, 0.0]).unwrap());
        let skew = Zonotope::new(dvector![0.0, 0.0], dmatrix![1.0, 1.0; 1.0, -1.0]).unwrap();
        // Inside the hull but outside the diamond.
        assert!(!skew.contains_point(&dvector![1.9, 1.9]).unwrap());
        assert!(skew.contains_point(&dvector![1.0, 1.0]).unwrap());
    }

    #[test]
    fn planar_and_lp_membership_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let g = DMatrix::from_fn(2, 5, |_, _| rng.gen_range(-1.0..1.0));
            let z = Zonotope::new(dvector![0.0, 0.0], g).unwrap();
            for _ in 0..40 {
                let x = dvector![rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
                assert_eq!(
                    z.contains_planar(&x, MEMBERSHIP_TOLERANCE),
                    z.contains_lp(&x, MEMBERSHIP_TOLERANCE).unwrap()
                );
            }
        }
    }

    #[test]
    fn vertices_of_box() {
        let z = Zonotope::new(dvector![1.0, 0.0], DMatrix::identity(2, 2)).unwrap();
        let v = z.vertices_2d().unwrap();
        assert_eq!(v.len(), 4);
        assert!((super::super::polygon_area(&v) - 4.0).abs() < 1e-12);
    }
}
