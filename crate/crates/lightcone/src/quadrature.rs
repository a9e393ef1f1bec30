//! Adaptive 1-D quadrature for chord-local line integrals, nested ordered
//! integrals, and nonlocal line integrals with sign weights.
//!
//! All integrators run a Gauss-Kronrod 7/15 pair under one shared adaptive
//! subdivision; matrix-valued integrands are integrated entrywise with the
//! error measured in the max-norm, which preserves algebraic identities
//! among entries.

use crate::minkowski::FourVector;
use crate::{BlockMatrix, Error, Result, Scalar, SpinorMatrix, C};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Tolerances and budget for one adaptive integration.
#[derive(Clone, Copy, Debug)]
pub struct QuadratureSpec<T> {
    pub rel_tol: T,
    pub abs_tol: T,
    pub max_subdivisions: usize,
}

impl<T: Scalar> Default for QuadratureSpec<T> {
    fn default() -> Self {
        QuadratureSpec {
            rel_tol: T::lit(1e-10),
            abs_tol: T::lit(1e-12),
            max_subdivisions: 2000,
        }
    }
}

/// Result of one adaptive integration: best estimate plus an error bound.
/// `converged` is false when the tolerance was not reached within the
/// subdivision budget; callers decide whether that is fatal.
#[derive(Clone, Debug)]
pub struct QuadEval<T, V> {
    pub value: V,
    pub error_bound: T,
    pub converged: bool,
}

/// Values an adaptive rule can accumulate: scalars, complex numbers and
/// complex matrices.
pub trait QuadValue<T: Scalar>: Clone {
    fn zero_like(&self) -> Self;
    fn add_assign_value(&mut self, rhs: &Self);
    fn sub_value(&self, rhs: &Self) -> Self;
    fn scale_value(&mut self, c: T);
    fn max_norm(&self) -> T;

    fn scaled(&self, c: T) -> Self {
        let mut v = self.clone();
        v.scale_value(c);
        v
    }
}

impl<T: Scalar> QuadValue<T> for T {
    fn zero_like(&self) -> Self {
        T::zero()
    }
    fn add_assign_value(&mut self, rhs: &Self) {
        *self += *rhs;
    }
    fn sub_value(&self, rhs: &Self) -> Self {
        *self - *rhs
    }
    fn scale_value(&mut self, c: T) {
        *self *= c;
    }
    fn max_norm(&self) -> T {
        self.abs()
    }
}

impl<T: Scalar> QuadValue<T> for C<T> {
    fn zero_like(&self) -> Self {
        C::new(T::zero(), T::zero())
    }
    fn add_assign_value(&mut self, rhs: &Self) {
        *self += *rhs;
    }
    fn sub_value(&self, rhs: &Self) -> Self {
        *self - *rhs
    }
    fn scale_value(&mut self, c: T) {
        *self *= C::new(c, T::zero());
    }
    fn max_norm(&self) -> T {
        crate::cmod(self)
    }
}

impl<T: Scalar> QuadValue<T> for BlockMatrix<T> {
    fn zero_like(&self) -> Self {
        BlockMatrix::zeros(self.nrows(), self.ncols())
    }
    fn add_assign_value(&mut self, rhs: &Self) {
        *self += rhs;
    }
    fn sub_value(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn scale_value(&mut self, c: T) {
        *self *= C::new(c, T::zero());
    }
    fn max_norm(&self) -> T {
        let mut best = T::zero();
        for v in self.iter() {
            let a = crate::cmod(v);
            if a > best {
                best = a;
            }
        }
        best
    }
}

impl<T: Scalar> QuadValue<T> for SpinorMatrix<T> {
    fn zero_like(&self) -> Self {
        SpinorMatrix::zeros()
    }
    fn add_assign_value(&mut self, rhs: &Self) {
        *self += rhs;
    }
    fn sub_value(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn scale_value(&mut self, c: T) {
        *self *= C::new(c, T::zero());
    }
    fn max_norm(&self) -> T {
        let mut best = T::zero();
        for v in self.iter() {
            let a = crate::cmod(v);
            if a > best {
                best = a;
            }
        }
        best
    }
}

/// Polynomial weight in the chord parameter, coefficients in ascending order.
#[derive(Clone, Debug)]
pub struct Poly<T>(pub Vec<T>);

impl<T: Scalar> Poly<T> {
    pub fn eval(&self, x: T) -> T {
        let mut acc = T::zero();
        for c in self.0.iter().rev() {
            acc = acc * x + *c;
        }
        acc
    }

    pub fn one() -> Self {
        Poly(vec![T::one()])
    }

    /// `alpha`
    pub fn alpha() -> Self {
        Poly(vec![T::zero(), T::one()])
    }

    /// `2 alpha - 1`
    pub fn two_alpha_minus_one() -> Self {
        Poly(vec![-T::one(), T::lit(2.0)])
    }

    /// `alpha^2 - alpha`
    pub fn alpha_sq_minus_alpha() -> Self {
        Poly(vec![T::zero(), -T::one(), T::one()])
    }

    /// `1 - alpha`
    pub fn one_minus_alpha() -> Self {
        Poly(vec![T::one(), -T::one()])
    }

    /// `alpha^m`
    pub fn power(m: usize) -> Self {
        let mut v = vec![T::zero(); m + 1];
        v[m] = T::one();
        Poly(v)
    }
}

// 15-point Kronrod nodes on [-1,1] (positive half) with the embedded 7-point
// Gauss weights, QUADPACK values.
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

struct PanelResult<T, V> {
    kronrod: V,
    err: T,
    resabs: T,
}

/// One Gauss-Kronrod 7/15 panel on [a, b].
fn gk15_panel<T: Scalar, V: QuadValue<T>>(
    f: &mut dyn FnMut(T) -> V,
    a: T,
    b: T,
) -> PanelResult<T, V> {
    let half = (b - a) * T::lit(0.5);
    let center = (a + b) * T::lit(0.5);

    let fc = f(center);
    let mut kron = fc.scaled(T::lit(WGK[7]));
    let mut gauss = fc.scaled(T::lit(WG[3]));
    let mut resabs = fc.max_norm() * T::lit(WGK[7]);

    for (i, &x) in XGK.iter().enumerate().take(7) {
        let dx = half * T::lit(x);
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        let wk = T::lit(WGK[i]);
        let mut s = f1.clone();
        s.add_assign_value(&f2);
        kron.add_assign_value(&s.scaled(wk));
        resabs += (f1.max_norm() + f2.max_norm()) * wk;
        if i % 2 == 1 {
            // odd-index Kronrod nodes are the embedded Gauss nodes
            let wg = T::lit(WG[i / 2]);
            gauss.add_assign_value(&s.scaled(wg));
        }
    }

    kron.scale_value(half);
    gauss.scale_value(half);
    resabs *= half.abs();

    let diff = kron.sub_value(&gauss);
    let mut err = diff.max_norm();
    // guard against pure roundoff driving endless refinement
    let floor = T::lit(50.0) * T::default_epsilon() * resabs;
    if err < floor {
        err = floor;
    }
    PanelResult {
        kronrod: kron,
        err,
        resabs,
    }
}

struct HeapItem<T, V> {
    err: T,
    a: T,
    b: T,
    value: V,
}

impl<T: Scalar, V> PartialEq for HeapItem<T, V> {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl<T: Scalar, V> Eq for HeapItem<T, V> {}
impl<T: Scalar, V> PartialOrd for HeapItem<T, V> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Scalar, V> Ord for HeapItem<T, V> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.partial_cmp(&other.err).unwrap_or(Ordering::Equal)
    }
}

/// Adaptive Gauss-Kronrod integration of `f` over `[a, b]`.
pub fn adaptive<T: Scalar, V: QuadValue<T>>(
    mut f: impl FnMut(T) -> V,
    a: T,
    b: T,
    spec: &QuadratureSpec<T>,
) -> QuadEval<T, V> {
    if a == b {
        let proto = f(a).zero_like();
        return QuadEval {
            value: proto,
            error_bound: T::zero(),
            converged: true,
        };
    }

    let first = gk15_panel(&mut f, a, b);
    let mut heap: BinaryHeap<HeapItem<T, V>> = BinaryHeap::new();
    let mut total = first.kronrod.clone();
    let mut total_err = first.err;
    let resabs_scale = first.resabs;
    heap.push(HeapItem {
        err: first.err,
        a,
        b,
        value: first.kronrod,
    });

    let mut subdivisions = 0usize;
    loop {
        let tol = if spec.rel_tol * total.max_norm() > spec.abs_tol {
            spec.rel_tol * total.max_norm()
        } else {
            spec.abs_tol
        };
        if total_err <= tol {
            return QuadEval {
                value: total,
                error_bound: total_err,
                converged: true,
            };
        }
        if subdivisions >= spec.max_subdivisions {
            return QuadEval {
                value: total,
                error_bound: total_err,
                converged: false,
            };
        }
        let worst = match heap.pop() {
            Some(w) => w,
            None => {
                return QuadEval {
                    value: total,
                    error_bound: total_err,
                    converged: true,
                }
            }
        };
        let mid = (worst.a + worst.b) * T::lit(0.5);
        if mid == worst.a || mid == worst.b {
            // interval exhausted at machine precision; accept its estimate
            let floor = T::lit(50.0) * T::default_epsilon() * resabs_scale;
            total_err = total_err - worst.err + floor;
            heap.push(HeapItem {
                err: T::zero(),
                a: worst.a,
                b: worst.b,
                value: worst.value,
            });
            subdivisions += 1;
            continue;
        }
        let left = gk15_panel(&mut f, worst.a, mid);
        let right = gk15_panel(&mut f, mid, worst.b);

        total = total.sub_value(&worst.value);
        total.add_assign_value(&left.kronrod);
        total.add_assign_value(&right.kronrod);
        total_err = total_err - worst.err + left.err + right.err;

        heap.push(HeapItem {
            err: left.err,
            a: worst.a,
            b: mid,
            value: left.kronrod,
        });
        heap.push(HeapItem {
            err: right.err,
            a: mid,
            b: worst.b,
            value: right.kronrod,
        });
        subdivisions += 1;
    }
}

/// Chord-local line integral `int_0^1 w(alpha) f(alpha) d alpha`.
///
/// `f` is the integrand sampled along the chord parameter, `weight` the
/// polynomial weight in `alpha`.
pub fn line_integral<T: Scalar, V: QuadValue<T>>(
    mut f: impl FnMut(T) -> V,
    weight: &Poly<T>,
    spec: &QuadratureSpec<T>,
) -> QuadEval<T, V> {
    adaptive(
        |alpha| f(alpha).scaled(weight.eval(alpha)),
        T::zero(),
        T::one(),
        spec,
    )
}

/// Ordered simplex integral over `1 >= l_1 >= l_2 >= ... >= l_n >= 0`.
///
/// `f` receives the parameter tuple `(l_1, ..., l_n)` and must already apply
/// the required factor ordering (latest parameter rightmost). Depth is capped
/// at 4; this integrator backs the Dyson-series oracle, not production paths.
pub fn nested_ordered_integral<T: Scalar, V: QuadValue<T>>(
    f: &dyn Fn(&[T]) -> V,
    depth: usize,
    spec: &QuadratureSpec<T>,
) -> Result<QuadEval<T, V>> {
    if depth == 0 {
        return Err(Error::HypothesisViolated(
            "ordered integral depth must be at least 1".into(),
        ));
    }
    if depth > 4 {
        return Err(Error::DepthTooLarge(depth));
    }
    // inner levels get a smaller budget; smooth integrands rarely subdivide
    let inner_spec = QuadratureSpec {
        rel_tol: spec.rel_tol,
        abs_tol: spec.abs_tol,
        max_subdivisions: spec.max_subdivisions.min(60),
    };
    let mut converged = true;
    let mut lams = vec![T::zero(); depth];
    let value = nested_rec(f, depth, 0, T::one(), &mut lams, &inner_spec, &mut converged);
    Ok(QuadEval {
        value,
        error_bound: T::zero(),
        converged,
    })
}

fn nested_rec<T: Scalar, V: QuadValue<T>>(
    f: &dyn Fn(&[T]) -> V,
    depth: usize,
    level: usize,
    upper: T,
    lams: &mut Vec<T>,
    spec: &QuadratureSpec<T>,
    converged: &mut bool,
) -> V {
    let eval = adaptive(
        |lam| {
            lams[level] = lam;
            if level + 1 == depth {
                f(lams)
            } else {
                nested_rec(f, depth, level + 1, lam, lams, spec, converged)
            }
        },
        T::zero(),
        upper,
        spec,
    );
    if !eval.converged {
        *converged = false;
    }
    eval.value
}

/// Sign weight of a nonlocal line integral.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NonlocalWeight {
    /// `eps(lambda) = sign(lambda)`
    EpsLambda,
    /// `eps(1 - lambda) = sign(1 - lambda)`
    EpsOneMinusLambda,
    Plain,
}

/// The three unweighted segments of a nonlocal line integral, split at the
/// sign changes `lambda = 0` and `lambda = 1`.
pub struct NonlocalPieces<T, V> {
    /// Integral over `[lambda_min, 0]`.
    pub below: V,
    /// Integral over `[0, 1]`.
    pub unit: V,
    /// Integral over `[1, lambda_max]`.
    pub above: V,
    pub error_bound: T,
    pub converged: bool,
}

impl<T: Scalar, V: QuadValue<T>> NonlocalPieces<T, V> {
    /// Recombine the segments under a sign weight.
    pub fn weighted(&self, weight: NonlocalWeight) -> V {
        let (s1, s3) = match weight {
            NonlocalWeight::EpsLambda => (-T::one(), T::one()),
            NonlocalWeight::EpsOneMinusLambda => (T::one(), -T::one()),
            NonlocalWeight::Plain => (T::one(), T::one()),
        };
        let mut total = self.below.scaled(s1);
        total.add_assign_value(&self.unit);
        total.add_assign_value(&self.above.scaled(s3));
        total
    }
}

/// Integrate `f` over the truncated line through `x`, `y` in three segments
/// (outside, chord, outside), without weights.
///
/// The integrand must vanish once the chord point leaves the Euclidean ball
/// of radius `r_effective` around the origin; this is checked by sampling the
/// window boundary and rejected with [`Error::SupportRadiusViolated`].
pub fn nonlocal_pieces<T: Scalar, V: QuadValue<T>>(
    mut f: impl FnMut(T) -> V,
    x: &FourVector<T>,
    y: &FourVector<T>,
    r_effective: T,
    spec: &QuadratureSpec<T>,
) -> Result<NonlocalPieces<T, V>> {
    let (lo, hi) = truncation_window(x, y, r_effective)?;

    // the integrand must have decayed at the truncation boundary
    let f_lo = f(lo);
    let f_hi = f(hi);
    let interior = f(T::lit(0.5));
    let scale = T::one() + interior.max_norm();
    let btol = T::lit(1e-8) * scale;
    let bnorm = if f_lo.max_norm() > f_hi.max_norm() {
        f_lo.max_norm()
    } else {
        f_hi.max_norm()
    };
    if bnorm > btol {
        return Err(Error::SupportRadiusViolated {
            boundary_norm: bnorm.to_subset().unwrap_or(f64::NAN),
        });
    }

    let zero = interior.zero_like();
    let mut out = NonlocalPieces {
        below: zero.clone(),
        unit: zero.clone(),
        above: zero,
        error_bound: T::zero(),
        converged: true,
    };
    for (i, (a, b)) in [(lo, T::zero()), (T::zero(), T::one()), (T::one(), hi)]
        .into_iter()
        .enumerate()
    {
        if a >= b {
            continue;
        }
        let eval = adaptive(&mut f, a, b, spec);
        match i {
            0 => out.below = eval.value,
            1 => out.unit = eval.value,
            _ => out.above = eval.value,
        }
        out.error_bound += eval.error_bound;
        out.converged &= eval.converged;
    }
    Ok(out)
}

/// Integral over the full line through `x`, `y` (parameter `lambda`), with a
/// sign weight, truncated to the window where the integrand can be nonzero.
pub fn nonlocal_line_integral<T: Scalar, V: QuadValue<T>>(
    f: impl FnMut(T) -> V,
    weight: NonlocalWeight,
    x: &FourVector<T>,
    y: &FourVector<T>,
    r_effective: T,
    spec: &QuadratureSpec<T>,
) -> Result<QuadEval<T, V>> {
    let pieces = nonlocal_pieces(f, x, y, r_effective, spec)?;
    Ok(QuadEval {
        value: pieces.weighted(weight),
        error_bound: pieces.error_bound,
        converged: pieces.converged,
    })
}

/// Lambda window outside which chord points leave the support ball, padded
/// by 5%; always contains `[0, 1]`.
pub fn truncation_window<T: Scalar>(
    x: &FourVector<T>,
    y: &FourVector<T>,
    r_effective: T,
) -> Result<(T, T)> {
    let xi = *y - *x;
    let a = xi.euclid_norm_sq();
    if a == T::zero() {
        return Err(Error::DegenerateChord);
    }
    let r = r_effective * T::lit(1.05) + T::lit(1e-6);
    let b = T::lit(2.0) * (x.0[0] * xi.0[0] + x.0[1] * xi.0[1] + x.0[2] * xi.0[2] + x.0[3] * xi.0[3]);
    let c = x.euclid_norm_sq() - r * r;
    let disc = b * b - T::lit(4.0) * a * c;
    let (mut lo, mut hi) = (T::zero(), T::one());
    if disc > T::zero() {
        let sq = disc.sqrt();
        let l1 = (-b - sq) / (T::lit(2.0) * a);
        let l2 = (-b + sq) / (T::lit(2.0) * a);
        if l1 < lo {
            lo = l1;
        }
        if l2 > hi {
            hi = l2;
        }
    }
    Ok((lo, hi))
}

/// Collapse `int_0^1 da a^m int_0^1 db b^n f(a b)` to a single line
/// integral, valid for `m != n`.
pub fn moment_product_integral<T: Scalar, V: QuadValue<T>>(
    mut f: impl FnMut(T) -> V,
    m: usize,
    n: usize,
    spec: &QuadratureSpec<T>,
) -> QuadEval<T, V> {
    assert_ne!(m, n, "reduction needs distinct exponents");
    let inv = -T::one() / (T::lit(m as f64) - T::lit(n as f64));
    let eval = adaptive(
        |a: T| {
            let w = a.powi(m as i32) - a.powi(n as i32);
            f(a).scaled(w)
        },
        T::zero(),
        T::one(),
        spec,
    );
    QuadEval {
        value: eval.value.scaled(inv),
        error_bound: eval.error_bound,
        converged: eval.converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type Spec = QuadratureSpec<f64>;

    #[test]
    fn polynomial_weights_are_exact() {
        let spec = Spec::default();
        let half = line_integral(|_| 1.0f64, &Poly::alpha(), &spec);
        assert!((half.value - 0.5).abs() < 1e-14);
        let sixth = line_integral(|_| 1.0f64, &Poly::alpha_sq_minus_alpha(), &spec);
        assert!((sixth.value + 1.0 / 6.0).abs() < 1e-14);
        // degree-12 polynomial, still within the K15 degree
        let p = line_integral(|a: f64| a.powi(12), &Poly::one(), &spec);
        assert!((p.value - 1.0 / 13.0).abs() < 1e-14);
    }

    #[test]
    fn exp_integral() {
        let spec = Spec::default();
        let e = line_integral(|a: f64| a.exp(), &Poly::one(), &spec);
        assert!((e.value - (std::f64::consts::E - 1.0)).abs() < 1e-12);
        assert!(e.converged);
    }

    #[test]
    fn nested_simplex_volumes() {
        let spec = Spec::default();
        for depth in 1..=4usize {
            let v = nested_ordered_integral(&|_lams: &[f64]| 1.0f64, depth, &spec).unwrap();
            let fact: f64 = (1..=depth).product::<usize>() as f64;
            assert!(
                (v.value - 1.0 / fact).abs() < 1e-10,
                "depth {depth}: {} vs {}",
                v.value,
                1.0 / fact
            );
        }
        assert!(nested_ordered_integral(&|_: &[f64]| 1.0f64, 5, &spec).is_err());
    }

    #[test]
    fn moment_product_identity() {
        // int a^m int b^n f(ab) = -1/(m-n) int (a^m - a^n) f(a)
        let spec = Spec::default();
        let f = |t: f64| (2.3 * t).sin() + 0.4 * t * t - 1.7 * t + 0.2;
        for (m, n) in [(1usize, 0usize), (2, 0), (3, 1), (4, 2), (4, 3)] {
            let direct = adaptive(
                |a: f64| {
                    let inner = adaptive(|b: f64| b.powi(n as i32) * f(a * b), 0.0, 1.0, &spec);
                    a.powi(m as i32) * inner.value
                },
                0.0,
                1.0,
                &spec,
            );
            let reduced = moment_product_integral(f, m, n, &spec);
            let rel = (direct.value - reduced.value).abs() / reduced.value.abs().max(1e-30);
            assert!(rel < 1e-9, "(m,n)=({m},{n}) rel err {rel}");
        }
    }

    #[test]
    fn nonlocal_examples() {
        let spec = Spec::default();
        let x = FourVector::new(0.0, 0.0, 0.0, 0.0);
        let y = FourVector::new(1.0, 0.0, 0.0, 0.0);

        let zero =
            nonlocal_line_integral(|_| 0.0f64, NonlocalWeight::EpsLambda, &x, &y, 2.0, &spec)
                .unwrap();
        assert_eq!(zero.value, 0.0);

        // [0,1]-supported bump: eps(lambda) weight equals the plain integral
        let bump = |l: f64| {
            if l <= 0.0 || l >= 1.0 {
                0.0
            } else {
                (-1.0 / (l * (1.0 - l))).exp()
            }
        };
        let eps = nonlocal_line_integral(bump, NonlocalWeight::EpsLambda, &x, &y, 2.0, &spec)
            .unwrap();
        let plain =
            nonlocal_line_integral(bump, NonlocalWeight::Plain, &x, &y, 2.0, &spec).unwrap();
        assert!((eps.value - plain.value).abs() < 1e-12);
        let direct = adaptive(bump, 0.0, 1.0, &spec);
        assert!((eps.value - direct.value).abs() < 1e-12);

        // symmetric integrand about 0, eps(lambda) weight cancels
        let sym = |l: f64| {
            let u: f64 = l / 0.8;
            if u.abs() >= 1.0 {
                0.0
            } else {
                (1.0 - u * u).powi(5)
            }
        };
        let odd = nonlocal_line_integral(sym, NonlocalWeight::EpsLambda, &x, &y, 1.2, &spec)
            .unwrap();
        assert!(odd.value.abs() < 1e-12, "odd cancellation: {}", odd.value);

        // a constant integrand violates the support precondition
        let bad = nonlocal_line_integral(|_| 1.0f64, NonlocalWeight::EpsLambda, &x, &y, 2.0, &spec);
        assert!(matches!(bad, Err(Error::SupportRadiusViolated { .. })));
    }

    #[test]
    fn window_contains_unit_interval() {
        let x = FourVector::new(0.0, 3.0, 0.0, 0.0);
        let y = FourVector::new(0.0, 3.5, 0.0, 0.0);
        let (lo, hi) = truncation_window(&x, &y, 1.0).unwrap();
        assert!(lo <= 0.0 && hi >= 1.0);
    }

    #[test]
    fn budget_exhaustion_reports_not_converged() {
        let spec = Spec {
            rel_tol: 1e-14,
            abs_tol: 1e-16,
            max_subdivisions: 3,
        };
        let eval = adaptive(|t: f64| (40.0 * t).sin().abs(), 0.0, 1.0, &spec);
        assert!(!eval.converged);
        assert!(eval.error_bound > 0.0);
    }
}
