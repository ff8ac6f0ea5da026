//! Generators and independent oracles shared by the property suites and the
//! acceptance binary.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use proptest::strategy::ValueTree;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rand::Rng;
use reachstl::expr::{Expr, Node};
use reachstl::reach::{Estimate, Linearization, Reacher, Trajectory, TrajectoryDataset};
use reachstl::setalg::{ConstrainedZonotope, Polygon, Zonotope, DEFAULT_MAX_ORDER};
use reachstl::stl::{
    compile_schedule, monitor_committed, step_window, Formula, Instantiations, Predicate, PredicateTable,
    ScheduleOptions,
};

/// Draws `count` values from `strategy` with a fixed seed, for suites that
/// need exact case counts rather than proptest's runner.
pub fn draw<S: Strategy>(strategy: S, count: usize, seed: u64) -> Vec<S::Value> {
    let mut bytes = [0u8; 32];
    bytes[..8].copy_from_slice(&seed.to_le_bytes());
    let rng = TestRng::from_seed(RngAlgorithm::ChaCha, &bytes);
    let config = Config {
        max_global_rejects: u32::MAX,
        max_local_rejects: u32::MAX,
        ..Config::default()
    };
    let mut runner = TestRunner::new_with_rng(config, rng);
    (0..count)
        .map(|_| strategy.new_tree(&mut runner).expect("strategy draws").current())
        .collect()
}

pub fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------------------
// Expressions

/// Smooth expressions over `x1..x_dim`: polynomials plus divisions and
/// square roots whose arguments are bounded away from zero.
pub fn smooth_node(dim: usize) -> impl Strategy<Value = Node> {
    let leaf = prop_oneof![
        (-2.0..2.0f64).prop_map(Node::Const),
        (0..dim).prop_map(Node::Var),
        (0..dim).prop_map(Node::Var),
    ];
    leaf.prop_recursive(4, 24, 3, |inner| {
        let b = |n: Node| Box::new(n);
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(move |(x, y)| Node::Add(b(x), b(y))),
            (inner.clone(), inner.clone()).prop_map(move |(x, y)| Node::Sub(b(x), b(y))),
            (inner.clone(), inner.clone()).prop_map(move |(x, y)| Node::Mul(b(x), b(y))),
            inner.clone().prop_map(move |x| Node::Neg(b(x))),
            (inner.clone(), 2..=3i32).prop_map(move |(x, k)| Node::Pow(b(x), k)),
            prop::collection::vec(inner.clone(), 1..3).prop_map(Node::SqNorm),
            // x / (1 + y²)
            (inner.clone(), inner.clone()).prop_map(move |(x, y)| {
                Node::Div(b(x), b(Node::Add(b(Node::Const(1.0)), b(Node::SqNorm(vec![y])))))
            }),
            // sqrt(0.5 + x²)
            inner.prop_map(move |x| Node::Sqrt(b(Node::Add(b(Node::Const(0.5)), b(Node::SqNorm(vec![x])))))),
        ]
    })
}

pub fn smooth_expr(dim: usize) -> impl Strategy<Value = Expr> {
    smooth_node(dim).prop_map(move |n| Expr::new(n, dim).expect("indices below dim"))
}

/// Box with corners in `[-2, 2]` and widths in `[0.05, 1.5]`.
pub fn small_box(dim: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    prop::collection::vec((-2.0..2.0f64, 0.05..1.5f64), dim)
        .prop_map(|v| (v.iter().map(|p| p.0).collect(), v.iter().map(|p| p.0 + p.1).collect()))
}

pub fn uniform_in_box<R: Rng>(lo: &[f64], hi: &[f64], rng: &mut R) -> Vec<f64> {
    lo.iter().zip(hi).map(|(l, h)| rng.gen_range(*l..=*h)).collect()
}

// ---------------------------------------------------------------------------
// Sets

fn matrix(rows: usize, values: Vec<f64>) -> DMatrix<f64> {
    DMatrix::from_row_slice(rows, values.len() / rows, &values)
}

/// Planar zonotope with 1 to 6 generators in `[-1, 1]²` and center in
/// `[-2, 2]²`, kept away from near-degenerate shapes.
pub fn zonotope2() -> impl Strategy<Value = Zonotope> {
    (1..=6usize)
        .prop_flat_map(|m| {
            (
                prop::collection::vec(-2.0..2.0f64, 2),
                prop::collection::vec(-1.0..1.0f64, 2 * m),
            )
        })
        .prop_map(|(c, g)| Zonotope::new(DVector::from_vec(c), matrix(2, g)).unwrap())
        .prop_filter("fat enough", |z| {
            let hull = z.interval_hull();
            let area = exact_area_oracle(z);
            area > 0.05 && area > 0.15 * hull.volume()
        })
}

/// Constrained zonotope from a zonotope with 2 to 6 generators and one or two
/// equality constraints satisfied by a factor vector inside `[-0.5, 0.5]^m`,
/// so the set is never empty.
pub fn constrained2() -> impl Strategy<Value = ConstrainedZonotope> {
    (2..=6usize, 1..=2usize)
        .prop_flat_map(|(m, q)| {
            (
                prop::collection::vec(-2.0..2.0f64, 2),
                prop::collection::vec(-1.0..1.0f64, 2 * m),
                prop::collection::vec(-1.0..1.0f64, q * m),
                prop::collection::vec(-0.5..0.5f64, m),
                Just(q),
            )
        })
        .prop_map(|(c, g, a, beta0, q)| {
            let g = matrix(2, g);
            let a = matrix(q, a);
            let b = &a * DVector::from_vec(beta0);
            ConstrainedZonotope::new(DVector::from_vec(c), g, a, b).unwrap()
        })
        .prop_filter("nondegenerate", |c| {
            let area = c.volume(reachstl::setalg::VolumeMethod::Exact2d).unwrap_or(0.0);
            area > 0.02
        })
}

/// Area of a planar zonotope: `Σ_{i<j} 4 |det(g_i, g_j)|`.
pub fn exact_area_oracle(z: &Zonotope) -> f64 {
    let g = z.generators();
    let mut a = 0.0;
    for i in 0..g.ncols() {
        for j in (i + 1)..g.ncols() {
            a += 4.0 * (g[(0, i)] * g[(1, j)] - g[(1, i)] * g[(0, j)]).abs();
        }
    }
    a
}

pub fn sample_zonotope<R: Rng>(z: &Zonotope, rng: &mut R) -> DVector<f64> {
    let beta = DVector::from_fn(z.num_generators(), |_, _| rng.gen_range(-1.0..=1.0));
    z.center() + z.generators() * beta
}

/// Sampler for member points of a constrained zonotope: a uniform factor
/// vector is projected onto `Aβ = b` and kept when it stays in the unit box.
/// Not uniform over the set, but every returned point is a member.
pub struct CzSampler {
    c: DVector<f64>,
    g: DMatrix<f64>,
    a: DMatrix<f64>,
    b: DVector<f64>,
    pinv: DMatrix<f64>,
}

impl CzSampler {
    pub fn new(cz: &ConstrainedZonotope) -> Self {
        let a = cz.constraint_matrix().clone();
        let pinv = if a.nrows() == 0 {
            DMatrix::zeros(a.ncols(), 0)
        } else {
            a.clone().pseudo_inverse(1e-12).expect("pseudo-inverse")
        };
        Self {
            c: cz.center().clone(),
            g: cz.generators().clone(),
            b: cz.constraint_vector().clone(),
            a,
            pinv,
        }
    }

    /// One member point, or `None` if `attempts` draws all left the box.
    pub fn sample<R: Rng>(&self, rng: &mut R, attempts: usize) -> Option<DVector<f64>> {
        let m = self.g.ncols();
        for _ in 0..attempts {
            let beta = DVector::from_fn(m, |_, _| rng.gen_range(-1.0..=1.0));
            let beta = &beta - &self.pinv * (&self.a * &beta - &self.b);
            if beta.iter().all(|v| v.abs() <= 1.0) {
                return Some(&self.c + &self.g * beta);
            }
        }
        None
    }
}

/// Membership in a constrained zonotope with the inner polygon as a fast
/// path and the LP otherwise.
pub struct CzMember<'a> {
    cz: &'a ConstrainedZonotope,
    poly: Polygon,
}

impl<'a> CzMember<'a> {
    pub fn new(cz: &'a ConstrainedZonotope) -> Self {
        Self {
            cz,
            poly: cz.polygon().unwrap_or_default(),
        }
    }

    pub fn contains(&self, x: &DVector<f64>) -> bool {
        if self.poly.len() >= 3 && inside_convex(&self.poly, [x[0], x[1]]) {
            return true;
        }
        self.cz.contains_point(x).expect("membership LP")
    }
}

pub fn inside_convex(poly: &Polygon, p: [f64; 2]) -> bool {
    (0..poly.len()).all(|i| {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]) >= 0.0
    })
}

// ---------------------------------------------------------------------------
// Strips

/// Single-row linear strip that cuts through `z`: random direction, offset
/// inside the projection, width a random fraction of it.
pub fn cutting_strip(z_center: &DVector<f64>, spread: f64, angle: f64, offset: f64, width: f64) -> Predicate {
    let row = [angle.cos(), angle.sin()];
    let proj = row[0] * z_center[0] + row[1] * z_center[1];
    Predicate::linear_row("s", &row, proj + offset * spread, (width * spread).max(1e-3)).unwrap()
}

/// Nonlinear strip `|‖x − m‖² − ρ²| ≤ r`, an annulus, through `z`.
pub fn annulus(mid: [f64; 2], rho: f64, r: f64) -> Predicate {
    let text = format!("sq(x1 - {}, x2 - {}) - {}", mid[0], mid[1], rho * rho);
    let h = reachstl::expr::parse_expr(&text, 2).unwrap();
    Predicate::nonlinear("ring", vec![h], DVector::from_element(1, r)).unwrap()
}

// ---------------------------------------------------------------------------
// STL

/// Atoms over a scalar signal: `p: x ∈ [-1, 1]`, `q: x ∈ [1, 3]`,
/// `s: x ∈ [2, 6]`; the region `{p, q}` (only `x = 1`) adds `pq: x ∈ [0.9, 1.1]`.
pub fn stl_table(with_region: bool) -> PredicateTable {
    let mut t = PredicateTable::new()
        .with(Predicate::linear_row("p", &[1.0], 0.0, 1.0).unwrap())
        .with(Predicate::linear_row("q", &[1.0], 2.0, 1.0).unwrap())
        .with(Predicate::linear_row("s", &[1.0], 4.0, 2.0).unwrap());
    if with_region {
        t.insert(Predicate::linear_row("pq", &[1.0], 1.0, 0.1).unwrap());
        t.define_region(&["p", "q"], &["pq"]).unwrap();
    }
    t
}

/// Signal values covering every valuation of the atoms above.
pub const ALPHABET: [f64; 5] = [0.0, 1.0, 2.0, 5.0, -3.0];

fn window(max: u32, halves: bool) -> impl Strategy<Value = (f64, f64)> {
    (0..=max, 0..=max).prop_map(move |(x, y)| {
        let (a, b) = if x <= y { (x, y) } else { (y, x) };
        if halves {
            (a as f64 / 2.0, b as f64 / 2.0)
        } else {
            (a as f64, b as f64)
        }
    })
}

/// Random formula of the fragment; `halves` draws windows on a half-second
/// grid to exercise rounding against `dt = 1`.
pub fn formula(max_window: u32, depth: u32, halves: bool) -> impl Strategy<Value = Formula> {
    let leaf = prop_oneof![Just("p"), Just("q"), Just("s")].prop_map(Formula::atom);
    leaf.prop_recursive(depth, 16, 2, move |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(l, r)| l.and(r)),
            (window(max_window, halves), inner.clone()).prop_map(|((a, b), f)| Formula::always(a, b, f).unwrap()),
            (window(max_window, halves), inner.clone()).prop_map(|((a, b), f)| Formula::eventually(a, b, f).unwrap()),
            (window(max_window, halves), inner.clone(), inner)
                .prop_map(|((a, b), l, r)| Formula::until(a, b, l, r).unwrap()),
        ]
    })
}

/// Direct recursive evaluation in absolute time, written from the
/// satisfaction relation: `G` over every sample time in `[t + a, t + b]`,
/// `F` over some, `φ U ψ` needs `ψ` at some `t₁` in the window and `φ` on
/// all of `[t, t₁]`. A conjunction whose atoms form a region also asserts the
/// region's predicates. `commit` maps pre-order `F`/`U` ids to a witness
/// window that must hold throughout.
pub struct Naive<'a> {
    pub table: &'a PredicateTable,
    pub signal: &'a [Vec<f64>],
    pub dt: f64,
    pub commit: &'a BTreeMap<usize, (usize, usize)>,
}

impl Naive<'_> {
    fn times(&self, k: usize, a: f64, b: f64) -> Vec<usize> {
        let t = k as f64 * self.dt;
        (0..self.signal.len())
            .filter(|j| {
                let s = *j as f64 * self.dt;
                s >= t + a - 1e-9 && s <= t + b + 1e-9
            })
            .collect()
    }

    fn atoms_of_conjunction(f: &Formula, out: &mut BTreeSet<String>) -> bool {
        match f {
            Formula::Atom(n) => {
                out.insert(n.clone());
                true
            }
            Formula::And(l, r) => Self::atoms_of_conjunction(l, out) && Self::atoms_of_conjunction(r, out),
            _ => false,
        }
    }

    fn atom(&self, name: &str, k: usize) -> bool {
        let x = &self.signal[k];
        match self.table.resolve_atom(name) {
            Ok(preds) => preds.iter().all(|p| self.table.get(p).unwrap().holds(x).unwrap()),
            Err(_) => panic!("unknown atom {name}"),
        }
    }

    pub fn eval(&self, f: &Formula, k: usize) -> bool {
        let mut id = 0;
        self.go(f, k, &mut id)
    }

    // `id` walks F/U nodes in pre-order; every branch consumes the ids of
    // its whole subtree so numbering does not depend on evaluation.
    fn go(&self, f: &Formula, k: usize, id: &mut usize) -> bool {
        match f {
            Formula::Atom(n) => self.atom(n, k),
            Formula::And(l, r) => {
                let v = self.go(l, k, id) & self.go(r, k, id);
                let mut atoms = BTreeSet::new();
                if Self::atoms_of_conjunction(f, &mut atoms) {
                    if let Some(preds) = self.table.region(&atoms) {
                        let x = &self.signal[k];
                        return v && preds.iter().all(|p| self.table.get(p).unwrap().holds(x).unwrap());
                    }
                }
                v
            }
            Formula::Always { a, b, body } => {
                let start = *id;
                let mut ok = true;
                let times = self.times(k, *a, *b);
                for &j in &times {
                    let mut sub = start;
                    ok &= self.go(body, j, &mut sub);
                }
                *id = start + count_eventual(body);
                ok
            }
            Formula::Eventually { a, b, body } => {
                let me = *id;
                let start = me + 1;
                *id = start + count_eventual(body);
                let times: Vec<usize> = match self.commit.get(&me) {
                    Some(&(lo, hi)) => (lo..=hi).map(|j| k + j).collect(),
                    None => self.times(k, *a, *b),
                };
                let results = times.iter().map(|&j| {
                    let mut sub = start;
                    self.go(body, j, &mut sub)
                });
                if self.commit.contains_key(&me) {
                    results.fold(true, |x, y| x & y)
                } else {
                    results.fold(false, |x, y| x | y)
                }
            }
            Formula::Until { a, b, left, right } => {
                let me = *id;
                let lstart = me + 1;
                let rstart = lstart + count_eventual(left);
                *id = rstart + count_eventual(right);
                let left_at = |j: usize| {
                    let mut sub = lstart;
                    self.go(left, j, &mut sub)
                };
                let right_at = |j: usize| {
                    let mut sub = rstart;
                    self.go(right, j, &mut sub)
                };
                match self.commit.get(&me) {
                    Some(&(lo, hi)) => (lo..=hi).all(|j| right_at(k + j)) && (k..=k + lo).all(left_at),
                    None => self
                        .times(k, *a, *b)
                        .into_iter()
                        .any(|t1| right_at(t1) && (k..=t1).all(left_at)),
                }
            }
        }
    }
}

pub fn count_eventual(f: &Formula) -> usize {
    match f {
        Formula::Atom(_) => 0,
        Formula::And(l, r) => count_eventual(l) + count_eventual(r),
        Formula::Always { body, .. } => count_eventual(body),
        Formula::Eventually { body, .. } => 1 + count_eventual(body),
        Formula::Until { left, right, .. } => 1 + count_eventual(left) + count_eventual(right),
    }
}

/// Pre-order `(a, b)` windows of the `F`/`U` nodes.
pub fn eventual_windows(f: &Formula) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    fn walk(f: &Formula, out: &mut Vec<(f64, f64)>) {
        match f {
            Formula::Atom(_) => {}
            Formula::And(l, r) => {
                walk(l, out);
                walk(r, out);
            }
            Formula::Always { body, .. } => walk(body, out),
            Formula::Eventually { a, b, body } => {
                out.push((*a, *b));
                walk(body, out);
            }
            Formula::Until { a, b, left, right } => {
                out.push((*a, *b));
                walk(left, out);
                walk(right, out);
            }
        }
    }
    walk(f, &mut out);
    out
}

/// Every signal of length `len` over `alphabet`, in lexicographic order.
pub fn all_signals(alphabet: &[f64], len: usize) -> impl Iterator<Item = Vec<Vec<f64>>> + '_ {
    let total = alphabet.len().pow(len as u32);
    (0..total).map(move |mut code| {
        (0..len)
            .map(|_| {
                let v = alphabet[code % alphabet.len()];
                code /= alphabet.len();
                vec![v]
            })
            .collect()
    })
}

/// The four intersection operations under test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntersectOp {
    ZonoLinear,
    ZonoNonlinear,
    CzLinear,
    CzNonlinear,
}

impl IntersectOp {
    pub const ALL: [IntersectOp; 4] = [Self::ZonoLinear, Self::ZonoNonlinear, Self::CzLinear, Self::CzNonlinear];

    pub fn name(self) -> &'static str {
        match self {
            Self::ZonoLinear => "zonotope ∩ strip",
            Self::ZonoNonlinear => "zonotope ∩ nonlinear strip",
            Self::CzLinear => "constrained ∩ strip",
            Self::CzNonlinear => "constrained ∩ nonlinear strip",
        }
    }

    fn constrained(self) -> bool {
        matches!(self, Self::CzLinear | Self::CzNonlinear)
    }

    fn nonlinear(self) -> bool {
        matches!(self, Self::ZonoNonlinear | Self::CzNonlinear)
    }
}

/// Input set of an intersection case.
#[derive(Debug, Clone)]
pub enum CaseSet {
    Zono(Zonotope),
    Cz(ConstrainedZonotope),
}

#[derive(Debug, Clone)]
pub struct IntersectCase {
    pub op: IntersectOp,
    pub set: CaseSet,
    pub pred: Predicate,
    /// `None` is the optimal gain; otherwise a random `2 × 1` gain.
    pub gain: Option<[f64; 2]>,
}

/// A set and a strip (or ring) placed so that it cuts through the set.
pub fn intersect_case(op: IntersectOp) -> impl Strategy<Value = IntersectCase> {
    let set = if op.constrained() {
        constrained2().prop_map(CaseSet::Cz).boxed()
    } else {
        zonotope2().prop_map(CaseSet::Zono).boxed()
    };
    let gain = prop_oneof![
        1 => Just(None),
        2 => prop::array::uniform2(-1.5..1.5f64).prop_map(Some),
    ];
    (set, 0.0..std::f64::consts::PI, -0.6..0.6f64, 0.05..0.5f64, gain).prop_map(
        move |(set, angle, offset, width, gain)| {
            let dir = [angle.cos(), angle.sin()];
            let (lo, hi) = extreme_points(&set, dir);
            let half = 0.5 * (dir[0] * (hi[0] - lo[0]) + dir[1] * (hi[1] - lo[1]));
            // A member on the chord between the two extreme points.
            let t = 0.5 * (1.0 + offset);
            let p = [lo[0] + t * (hi[0] - lo[0]), lo[1] + t * (hi[1] - lo[1])];
            let pred = if op.nonlinear() {
                // Ring through `p` whose center lies well outside the set.
                let rho = 2.0 * half;
                let focus = [p[0] - rho * dir[0], p[1] - rho * dir[1]];
                annulus(focus, rho, 2.0 * rho * width * half)
            } else {
                cutting_strip(&DVector::from_vec(p.to_vec()), half, angle, 0.0, width)
            };
            IntersectCase {
                op,
                set,
                pred,
                gain: if op.constrained() { None } else { gain },
            }
        },
    )
}

/// Members of the set minimizing and maximizing `dir · x`.
fn extreme_points(set: &CaseSet, dir: [f64; 2]) -> ([f64; 2], [f64; 2]) {
    match set {
        CaseSet::Zono(z) => {
            let mut lo = [z.center()[0], z.center()[1]];
            let mut hi = lo;
            for g in z.generators().column_iter() {
                let s = (dir[0] * g[0] + dir[1] * g[1]).signum();
                for i in 0..2 {
                    hi[i] += s * g[i];
                    lo[i] -= s * g[i];
                }
            }
            (lo, hi)
        }
        CaseSet::Cz(c) => {
            let hi = c.support_point(&dir).unwrap().unwrap();
            let lo = c.support_point(&[-dir[0], -dir[1]]).unwrap().unwrap();
            ([lo[0], lo[1]], [hi[0], hi[1]])
        }
    }
}

/// Containment check: rejection samples of `set ∩ pred` (drawn from the
/// input set, kept when the predicate holds) must all lie in the computed
/// enclosure. Returns the number of kept samples.
pub fn check_intersection(case: &IntersectCase, samples: usize, seed: u64) -> Result<usize, String> {
    use reachstl::constrain::{intersect_cz, intersect_zono, Gain};
    let mut r = rng(seed);
    let budget = 500 * samples;
    let mut kept = 0;
    match &case.set {
        CaseSet::Zono(z) => {
            let gain = match case.gain {
                None => Gain::Auto,
                Some(g) => Gain::Fixed(DMatrix::from_column_slice(2, 1, &g)),
            };
            let out = intersect_zono(z, &case.pred, &gain).map_err(|e| e.to_string())?;
            for _ in 0..budget {
                let p = sample_zonotope(z, &mut r);
                if !case.pred.holds(p.as_slice()).unwrap() {
                    continue;
                }
                if !out.contains_point(&p).unwrap() {
                    return Err(format!("{} misses {p:?}", case.op.name()));
                }
                kept += 1;
                if kept == samples {
                    break;
                }
            }
        }
        CaseSet::Cz(c) => {
            let out = intersect_cz(c, &case.pred).map_err(|e| e.to_string())?;
            let sampler = CzSampler::new(c);
            let member = CzMember::new(&out);
            for _ in 0..budget {
                let Some(p) = sampler.sample(&mut r, 1000) else {
                    continue;
                };
                if !case.pred.holds(p.as_slice()).unwrap() {
                    continue;
                }
                if !member.contains(&p) {
                    return Err(format!("{} misses {p:?}", case.op.name()));
                }
                kept += 1;
                if kept == samples {
                    break;
                }
            }
        }
    }
    Ok(kept)
}

/// Central differences with one Richardson step, `O(h⁴)`.
pub fn richardson(e: &Expr, x: &[f64], j: usize) -> f64 {
    let d = |h: f64| {
        let mut p = x.to_vec();
        let mut m = x.to_vec();
        p[j] += h;
        m[j] -= h;
        (e.eval(&p).unwrap() - e.eval(&m).unwrap()) / (2.0 * h)
    };
    let h = 1e-3 * (1.0 + x[j].abs());
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

/// Largest gradient error relative to `max(1, |g|, |h|)` at `x`.
pub fn gradient_error(e: &Expr, x: &[f64]) -> f64 {
    let (v, g) = e.value_and_gradient(x).unwrap();
    (0..x.len())
        .map(|j| (g[j] - richardson(e, x, j)).abs() / 1.0f64.max(g[j].abs()).max(v.abs()))
        .fold(0.0, f64::max)
}

/// Samples `h(x) − h(x*) − ∇h(x*)·(x − x*)` over the box and reports the
/// first value outside the computed Lagrange remainder, if any.
pub fn remainder_violation(e: &Expr, lo: &[f64], hi: &[f64], samples: usize, seed: u64) -> Option<String> {
    use reachstl::constrain::lagrange_remainder;
    use reachstl::setalg::IntervalVector;
    let bx = IntervalVector::from_slices(lo, hi).unwrap();
    let x_star = bx.center();
    let rem = lagrange_remainder(std::slice::from_ref(e), &x_star, &bx).unwrap();
    let iv = rem.interval(0);
    let (h0, g0) = e.value_and_gradient(x_star.as_slice()).unwrap();
    let mut r = rng(seed);
    for _ in 0..samples {
        let x = uniform_in_box(lo, hi, &mut r);
        let lin: f64 = g0
            .iter()
            .zip(x.iter().zip(x_star.iter()))
            .map(|(g, (a, b))| g * (a - b))
            .sum();
        let hx = e.eval(&x).unwrap();
        let exact = hx - h0 - lin;
        // The oracle's own subtraction carries rounding of this size.
        let own = 8.0 * f64::EPSILON * (hx.abs() + h0.abs() + lin.abs());
        if !(iv.lower - own <= exact && exact <= iv.upper + own) {
            return Some(format!("{e} at {x:?}: {exact} not in {iv:?}"));
        }
    }
    None
}

pub fn random_signal(len: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng(seed);
    (0..len)
        .map(|_| {
            if r.gen_bool(0.5) {
                vec![ALPHABET[r.gen_range(0..ALPHABET.len())]]
            } else {
                vec![r.gen_range(-2.0..6.0)]
            }
        })
        .collect()
}

/// Random witness windows for some of the `F`/`U` nodes, each inside the
/// node's own step window.
pub fn random_instantiations(f: &Formula, dt: f64, seed: u64) -> Instantiations {
    let mut r = rng(seed);
    let mut out = Instantiations::new();
    for (id, (a, b)) in eventual_windows(f).into_iter().enumerate() {
        if let Some((lo, hi)) = step_window(a, b, dt) {
            if r.gen_bool(0.6) {
                let x = r.gen_range(lo..=hi);
                let y = r.gen_range(x..=hi);
                out.insert(id, (x, y));
            }
        }
    }
    out
}

pub fn steps_needed(f: &Formula, dt: f64) -> usize {
    (f.horizon() / dt + 1e-9).floor() as usize
}

/// Brute-force soundness: every signal that satisfies `f` under the
/// commitments satisfies every scheduled predicate at its step.
pub fn check_schedule(f: &Formula, table: &PredicateTable, opts: &ScheduleOptions) -> Result<usize, String> {
    let horizon = steps_needed(f, 1.0);
    let sched = compile_schedule(f, table, 1.0, horizon, opts).map_err(|e| e.to_string())?;
    let alphabet: &[f64] = if horizon <= 5 { &ALPHABET } else { &ALPHABET[..3] };
    let mut satisfying = 0;
    for sig in all_signals(alphabet, horizon + 1) {
        let naive = Naive {
            table,
            signal: &sig,
            dt: 1.0,
            commit: &opts.instantiations,
        };
        let truth = naive.eval(f, 0);
        let committed = monitor_committed(f, table, &sig, 1.0, 0.0, opts).map_err(|e| e.to_string())?;
        if committed != truth {
            return Err(format!("committed monitor {committed} vs oracle {truth} on {sig:?}"));
        }
        if !truth {
            continue;
        }
        satisfying += 1;
        let plain = Naive {
            commit: &BTreeMap::new(),
            ..naive
        };
        if !plain.eval(f, 0) {
            return Err(format!("commitment does not imply the formula on {sig:?}"));
        }
        for k in 0..=horizon {
            for name in sched.at(k) {
                if !table.get(name).unwrap().holds(&sig[k]).unwrap() {
                    return Err(format!("{name} scheduled at {k} but fails on {sig:?}"));
                }
            }
        }
    }
    Ok(satisfying)
}

/// The `x⁺` columns of clipped trajectories no longer follow the model, so
/// exactness checks use single-transition runs only.
pub fn linear_pairs(a: &DMatrix<f64>, b: &DMatrix<f64>, count: usize, seed: u64) -> TrajectoryDataset {
    let mut r = rng(seed);
    let trajs = (0..count)
        .map(|_| {
            let x = DVector::from_fn(a.nrows(), |_, _| r.gen_range(-2.0..2.0));
            let u = DVector::from_fn(b.ncols(), |_, _| r.gen_range(-1.0..1.0));
            let next = a * &x + b * &u;
            Trajectory {
                states: vec![x, next],
                inputs: vec![u],
            }
        })
        .collect();
    TrajectoryDataset::new(trajs).unwrap()
}

pub fn exact_reacher(data: TrajectoryDataset) -> Reacher {
    let (n, m) = (data.state_dim(), data.input_dim());
    Reacher::new(
        data,
        Zonotope::point(DVector::zeros(n)),
        Estimate::Value(0.0),
        Estimate::Value(0.0),
        DEFAULT_MAX_ORDER,
        Linearization::Fixed {
            x_star: DVector::zeros(n),
            u_star: DVector::zeros(m),
        },
    )
    .unwrap()
}

pub fn linear_system() -> impl Strategy<Value = (DMatrix<f64>, DMatrix<f64>)> {
    (
        prop::collection::vec(-1.2..1.2f64, 4),
        prop::collection::vec(-1.0..1.0f64, 2),
    )
        .prop_map(|(a, b)| (DMatrix::from_row_slice(2, 2, &a), DMatrix::from_column_slice(2, 1, &b)))
}
