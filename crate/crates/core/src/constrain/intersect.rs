use nalgebra::{DMatrix, DVector};

use super::gain::{optimal_gain, Gain};
use super::remainder::{lagrange_remainder, LagrangeRemainder};
use super::ConstrainError;
use crate::expr::{Expr, ExprError, IntervalScalar};
use crate::setalg::{ConstrainedZonotope, IntervalVector, VolumeMethod, Zonotope};
use crate::stl::{Predicate, PredicateKind};
use crate::Scalar;

fn check_dim(p: &Predicate, n: usize) -> Result<(), ConstrainError> {
    if p.dim() == n {
        Ok(())
    } else {
        Err(ConstrainError::PredicateDimension {
            name: p.name().to_string(),
            expected: n,
            found: p.dim(),
        })
    }
}

fn named(p: &Predicate) -> impl Fn(ExprError) -> ConstrainError + '_ {
    move |source| ConstrainError::Predicate {
        name: p.name().to_string(),
        source,
    }
}

fn with_name(p: &Predicate, e: ConstrainError) -> ConstrainError {
    match e {
        ConstrainError::Expr(source) => ConstrainError::Predicate {
            name: p.name().to_string(),
            source,
        },
        other => other,
    }
}

fn to_t<T: Scalar>(m: &DMatrix<f64>) -> DMatrix<T> {
    m.map(T::lit)
}

fn select_rows<T: Scalar>(m: &DMatrix<T>, rows: &[usize]) -> DMatrix<T> {
    m.select_rows(rows.iter())
}

/// A linear strip in the working scalar type, restricted to the rows that
/// actually cut the given range.
struct LinearRows<T: Scalar> {
    h: DMatrix<T>,
    y: DVector<T>,
    r: Vec<T>,
}

fn linear_parts<T: Scalar>(p: &Predicate) -> Option<(DMatrix<T>, DVector<T>, Vec<T>)> {
    match p.kind() {
        PredicateKind::Linear { h, y, r } => Some((to_t(h), y.map(T::lit), r.iter().map(|v| T::lit(*v)).collect())),
        PredicateKind::Nonlinear { .. } => None,
    }
}

/// Rows whose strip does not already contain `[lo_i, hi_i]`.
fn cutting_rows<T: Scalar>(ranges: &[IntervalScalar<T>], y: &[T], r: &[T]) -> Vec<usize> {
    (0..ranges.len())
        .filter(|&i| !(ranges[i].lower >= y[i] - r[i] && ranges[i].upper <= y[i] + r[i]))
        .collect()
}

fn projection_ranges<T: Scalar>(z: &Zonotope<T>, h: &DMatrix<T>) -> Vec<IntervalScalar<T>> {
    let c = h * z.center();
    let hg = h * z.generators();
    (0..h.nrows())
        .map(|i| {
            let rad = hg.row(i).iter().fold(T::zero(), |a, v| a + v.abs());
            IntervalScalar::new(c[i] - rad, c[i] + rad)
        })
        .collect()
}

fn check_gain<T: Scalar>(g: &DMatrix<T>, n: usize, p: usize) -> Result<(), ConstrainError> {
    if g.shape() == (n, p) {
        Ok(())
    } else {
        Err(ConstrainError::GainShape {
            expected: (n, p),
            found: g.shape(),
        })
    }
}

/// Size used to compare a gain-based enclosure with its input: exact area
/// in the plane, interval-hull volume otherwise.
fn size<T: Scalar>(z: &Zonotope<T>) -> f64 {
    if z.dim() == 2 {
        z.volume(VolumeMethod::Exact2d).unwrap_or(f64::INFINITY)
    } else {
        z.interval_hull().volume().to_f64_lossy()
    }
}

/// With an automatic gain the input itself (λ = 0) is always a valid
/// answer; keep it when the Frobenius-optimal enclosure came out larger.
fn no_larger<T: Scalar>(input: &Zonotope<T>, out: Zonotope<T>, gain: &Gain<T>) -> Zonotope<T> {
    if matches!(gain, Gain::Auto) && size(&out) > size(input) {
        input.clone()
    } else {
        out
    }
}

fn append_columns<T: Scalar>(blocks: &[DMatrix<T>], n: usize) -> DMatrix<T> {
    let total: usize = blocks.iter().map(DMatrix::ncols).sum();
    let mut out = DMatrix::zeros(n, total);
    let mut at = 0;
    for b in blocks {
        out.columns_mut(at, b.ncols()).copy_from(b);
        at += b.ncols();
    }
    out
}

/// Zonotope enclosure of `Z̄ ∩ {x : |Hx − y| ≤ r}`:
/// `⟨c + λ(y − Hc), [(I − λH)G, λ diag(r)]⟩`.
///
/// With [`Gain::Auto`], rows whose strip already contains the projection of
/// `Z̄` are left out (their gain is zero) and `λ` minimizes the Frobenius
/// norm of the new generator matrix for the remaining rows; if that
/// enclosure is larger than `Z̄` itself, `Z̄` is returned.
pub fn intersect_zono_linear<T: Scalar>(
    z: &Zonotope<T>,
    pred: &Predicate,
    gain: &Gain<T>,
) -> Result<Zonotope<T>, ConstrainError> {
    check_dim(pred, z.dim())?;
    let Some((h, y, r)) = linear_parts::<T>(pred) else {
        return intersect_zono_nonlinear(z, pred, gain);
    };
    let n = z.dim();
    let g = z.generators();
    let (h, y, r, lambda) = match gain {
        Gain::Fixed(l) => {
            check_gain(l, n, h.nrows())?;
            (h, y, r, l.clone())
        }
        Gain::Auto => {
            let rows = cutting_rows(&projection_ranges(z, &h), y.as_slice(), &r);
            let rows = LinearRows {
                h: select_rows(&h, &rows),
                y: DVector::from_iterator(rows.len(), rows.iter().map(|&i| y[i])),
                r: rows.iter().map(|&i| r[i]).collect(),
            };
            let l = optimal_gain(g, &rows.h, &rows.r, None);
            (rows.h, rows.y, rows.r, l)
        }
    };
    let p = h.nrows();
    if p == 0 {
        return Ok(z.clone());
    }
    let center = z.center() + &lambda * (&y - &h * z.center());
    let shrunk = (DMatrix::identity(n, n) - &lambda * &h) * g;
    let slack = &lambda * DMatrix::from_diagonal(&DVector::from_vec(r));
    let out = Zonotope::new(center, append_columns(&[shrunk, slack], n))?.pruned();
    Ok(no_larger(z, out, gain))
}

struct Linearized<T: Scalar> {
    rows: Vec<usize>,
    values: DVector<T>,
    jacobian: DMatrix<T>,
    radii: Vec<T>,
    remainder: LagrangeRemainder<T>,
}

/// `h(x*)`, `∂h/∂x(x*)` and the remainder over `bx` for the rows of `h`
/// that cut the range of `bx` (all rows when `prune` is false).
fn linearize<T: Scalar>(
    pred: &Predicate,
    h: &[Expr],
    r: &DVector<f64>,
    x_star: &DVector<T>,
    bx: &IntervalVector<T>,
    prune: bool,
) -> Result<Linearized<T>, ConstrainError> {
    let mut rows = Vec::new();
    for (i, e) in h.iter().enumerate() {
        let ri = T::lit(r[i]);
        let redundant = prune
            && e.eval_interval(bx)
                .is_ok_and(|range| range.lower >= -ri && range.upper <= ri);
        if !redundant {
            rows.push(i);
        }
    }
    let n = x_star.len();
    let p = rows.len();
    let mut values = DVector::zeros(p);
    let mut jacobian = DMatrix::zeros(p, n);
    let exprs: Vec<Expr> = rows.iter().map(|&i| h[i].clone()).collect();
    for (q, e) in exprs.iter().enumerate() {
        let (v, grad) = e.value_and_gradient(x_star.as_slice()).map_err(named(pred))?;
        values[q] = v;
        for (j, gj) in grad.into_iter().enumerate() {
            jacobian[(q, j)] = gj;
        }
    }
    let remainder = lagrange_remainder(&exprs, x_star, bx).map_err(|e| with_name(pred, e))?;
    Ok(Linearized {
        radii: rows.iter().map(|&i| T::lit(r[i])).collect(),
        rows,
        values,
        jacobian,
        remainder,
    })
}

fn nonlinear_parts(pred: &Predicate) -> Result<(Vec<Expr>, DVector<f64>), ConstrainError> {
    match pred.as_nonlinear()?.kind() {
        PredicateKind::Nonlinear { h, r } => Ok((h.clone(), r.clone())),
        PredicateKind::Linear { .. } => unreachable!("as_nonlinear returns a nonlinear predicate"),
    }
}

/// Zonotope enclosure of `Z̄ ∩ {x : |h(x)| ≤ r}` by linearizing `h` at the
/// center `x*` of `Z̄` with a Lagrange remainder over its interval hull:
/// `c − λ(h(x*) + c_L)`, `[(I − λJ)G, λ diag(r), −λG_L]`.
pub fn intersect_zono_nonlinear<T: Scalar>(
    z: &Zonotope<T>,
    pred: &Predicate,
    gain: &Gain<T>,
) -> Result<Zonotope<T>, ConstrainError> {
    check_dim(pred, z.dim())?;
    let (h, r) = nonlinear_parts(pred)?;
    let n = z.dim();
    let x_star = z.center().clone();
    let hull = z.interval_hull();
    let lin = linearize(pred, &h, &r, &x_star, &hull, matches!(gain, Gain::Auto))?;
    let p = lin.rows.len();
    if p == 0 {
        return Ok(z.clone());
    }
    let g = z.generators();
    let gl = &lin.remainder.generators;
    let lambda = match gain {
        Gain::Fixed(l) => {
            check_gain(l, n, h.len())?;
            l.clone()
        }
        Gain::Auto => optimal_gain(g, &lin.jacobian, &lin.radii, Some(gl)),
    };
    let center = &x_star - &lambda * (&lin.values + &lin.remainder.center);
    let shrunk = (DMatrix::identity(n, n) - &lambda * &lin.jacobian) * g;
    let slack = &lambda * DMatrix::from_diagonal(&DVector::from_vec(lin.radii.clone()));
    let rem = -(&lambda * gl);
    let out = Zonotope::new(center, append_columns(&[shrunk, slack, rem], n))?.pruned();
    Ok(no_larger(z, out, gain))
}

/// `C̄ ∩ {x : |Hx − y| ≤ r}` as a constrained zonotope: the row
/// `[HḠ, −diag(r)] [β; d] = y − Hc̄` joins the constraints, the new factors
/// `d` get zero generators. Rows that cannot cut the set are skipped.
pub fn intersect_cz_linear<T: Scalar>(
    c: &ConstrainedZonotope<T>,
    pred: &Predicate,
) -> Result<ConstrainedZonotope<T>, ConstrainError> {
    check_dim(pred, c.dim())?;
    let Some((h, y, r)) = linear_parts::<T>(pred) else {
        return intersect_cz_nonlinear(c, pred);
    };
    let rows = cutting_rows(&projection_ranges(&c.enclosing_zonotope(), &h), y.as_slice(), &r);
    if rows.is_empty() {
        return Ok(c.clone());
    }
    let h = select_rows(&h, &rows);
    let y = DVector::from_iterator(rows.len(), rows.iter().map(|&i| y[i]));
    let r = DVector::from_iterator(rows.len(), rows.iter().map(|&i| r[i]));
    let p = rows.len();
    let existing = &h * c.generators();
    let new = -DMatrix::from_diagonal(&r);
    let rhs = y - &h * c.center();
    Ok(c.extend(&DMatrix::zeros(c.dim(), p), &existing, &new, &rhs)?)
}

/// `C̄ ∩ {x : |h(x)| ≤ r}` with `h` linearized at the center of the
/// LP-tightened interval hull of `C̄` (the remainder is bounded over that
/// hull): the row `[JḠ, −diag(r), G_L] [β; d; β_L] = −h(x*) − J(c̄ − x*) − c_L`
/// joins the constraints. An empty input is returned unchanged.
pub fn intersect_cz_nonlinear<T: Scalar>(
    c: &ConstrainedZonotope<T>,
    pred: &Predicate,
) -> Result<ConstrainedZonotope<T>, ConstrainError> {
    check_dim(pred, c.dim())?;
    let (h, r) = nonlinear_parts(pred)?;
    let Some(hull) = c.tight_interval_hull()? else {
        return Ok(c.clone());
    };
    let x_star = hull.center();
    let lin = linearize(pred, &h, &r, &x_star, &hull, true)?;
    let p = lin.rows.len();
    if p == 0 {
        return Ok(c.clone());
    }
    let gl = lin.remainder.generators.clone();
    let existing = &lin.jacobian * c.generators();
    let mut new = DMatrix::zeros(p, 2 * p);
    new.columns_mut(0, p)
        .copy_from(&-DMatrix::from_diagonal(&DVector::from_vec(lin.radii.clone())));
    new.columns_mut(p, p).copy_from(&gl);
    let rhs = -(&lin.values + &lin.jacobian * (c.center() - &x_star) + &lin.remainder.center);
    Ok(c.extend(&DMatrix::zeros(c.dim(), 2 * p), &existing, &new, &rhs)?)
}

/// Dispatches on the predicate kind.
pub fn intersect_zono<T: Scalar>(
    z: &Zonotope<T>,
    pred: &Predicate,
    gain: &Gain<T>,
) -> Result<Zonotope<T>, ConstrainError> {
    match pred.kind() {
        PredicateKind::Linear { .. } => intersect_zono_linear(z, pred, gain),
        PredicateKind::Nonlinear { .. } => intersect_zono_nonlinear(z, pred, gain),
    }
}

/// Dispatches on the predicate kind.
pub fn intersect_cz<T: Scalar>(
    c: &ConstrainedZonotope<T>,
    pred: &Predicate,
) -> Result<ConstrainedZonotope<T>, ConstrainError> {
    match pred.kind() {
        PredicateKind::Linear { .. } => intersect_cz_linear(c, pred),
        PredicateKind::Nonlinear { .. } => intersect_cz_nonlinear(c, pred),
    }
}
