//! Minkowski four-vector arithmetic, chord geometry and causal
//! classification.
//!
//! Signature is `(+,-,-,-)` with index 0 the time component. The orientation
//! of the totally antisymmetric symbol defaults to `eps^{0123} = +1`; the
//! opposite choice only flips the sign of the pseudoscalar expansion term and
//! is exposed as [`EpsilonOrientation`].

use crate::Scalar;
use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Neg, Sub};

/// A point or displacement in Minkowski space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourVector<T>(pub [T; 4]);

impl<T: Scalar> FourVector<T> {
    pub fn new(t: T, x: T, y: T, z: T) -> Self {
        FourVector([t, x, y, z])
    }

    pub fn zero() -> Self {
        FourVector([T::zero(); 4])
    }

    /// Coordinate basis vector `e_mu`.
    pub fn basis(mu: usize) -> Self {
        let mut v = Self::zero();
        v.0[mu] = T::one();
        v
    }

    /// Minkowski square `<v,v>`.
    pub fn square(&self) -> T {
        inner(self, self)
    }

    /// Euclidean norm over the raw components (used for support radii and
    /// degeneracy checks, never for causal structure).
    pub fn euclid_norm(&self) -> T {
        self.euclid_norm_sq().sqrt()
    }

    pub fn euclid_norm_sq(&self) -> T {
        self.0.iter().map(|c| *c * *c).fold(T::zero(), |a, b| a + b)
    }

    /// Lower the index: `v_mu = g_{mu nu} v^nu`.
    pub fn lower(&self) -> [T; 4] {
        [self.0[0], -self.0[1], -self.0[2], -self.0[3]]
    }

    pub fn scale(&self, c: T) -> Self {
        FourVector([self.0[0] * c, self.0[1] * c, self.0[2] * c, self.0[3] * c])
    }
}

impl<T: Scalar> Add for FourVector<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        FourVector([
            self.0[0] + rhs.0[0],
            self.0[1] + rhs.0[1],
            self.0[2] + rhs.0[2],
            self.0[3] + rhs.0[3],
        ])
    }
}

impl<T: Scalar> Sub for FourVector<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        FourVector([
            self.0[0] - rhs.0[0],
            self.0[1] - rhs.0[1],
            self.0[2] - rhs.0[2],
            self.0[3] - rhs.0[3],
        ])
    }
}

impl<T: Scalar> Neg for FourVector<T> {
    type Output = Self;
    fn neg(self) -> Self {
        FourVector([-self.0[0], -self.0[1], -self.0[2], -self.0[3]])
    }
}

impl<T: Scalar> Mul<T> for FourVector<T> {
    type Output = Self;
    fn mul(self, rhs: T) -> Self {
        self.scale(rhs)
    }
}

/// Minkowski inner product `u^0 v^0 - u^1 v^1 - u^2 v^2 - u^3 v^3`.
pub fn inner<T: Scalar>(u: &FourVector<T>, v: &FourVector<T>) -> T {
    u.0[0] * v.0[0] - u.0[1] * v.0[1] - u.0[2] * v.0[2] - u.0[3] * v.0[3]
}

/// Metric component `g_{mu mu}` (diagonal).
pub fn metric_sign<T: Scalar>(mu: usize) -> T {
    if mu == 0 {
        T::one()
    } else {
        -T::one()
    }
}

/// Point on the (extended) chord through `x` and `y`: `z = lam*y + (1-lam)*x`.
///
/// `lam` may lie outside `[0,1]`; the nonlocal line integrals run over the
/// whole line.
pub fn chord_point<T: Scalar>(x: &FourVector<T>, y: &FourVector<T>, lam: T) -> FourVector<T> {
    let one_m = T::one() - lam;
    FourVector([
        lam * y.0[0] + one_m * x.0[0],
        lam * y.0[1] + one_m * x.0[1],
        lam * y.0[2] + one_m * x.0[2],
        lam * y.0[3] + one_m * x.0[3],
    ])
}

/// Causal class of a displacement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CausalClass {
    Timelike,
    Spacelike,
    Lightlike,
}

/// A chord between two points, with the displacement and its causal class
/// cached; all line integrals run over (the extension of) such a segment.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Segment<T> {
    pub x: FourVector<T>,
    pub y: FourVector<T>,
    pub xi: FourVector<T>,
    pub causal: CausalClass,
}

impl<T: Scalar> Segment<T> {
    /// Build with the default relative light-cone tolerance.
    pub fn new(x: FourVector<T>, y: FourVector<T>) -> Self {
        let xi = y - x;
        Segment {
            x,
            y,
            xi,
            causal: causal_class(&xi, default_lightcone_tol(&xi)),
        }
    }

    pub fn with_tol(x: FourVector<T>, y: FourVector<T>, tol: T) -> Self {
        let xi = y - x;
        Segment {
            x,
            y,
            xi,
            causal: causal_class(&xi, tol),
        }
    }

    /// Point at chord parameter `lam` (may lie outside `[0, 1]`).
    pub fn point(&self, lam: T) -> FourVector<T> {
        chord_point(&self.x, &self.y, lam)
    }
}

/// Classify `xi` by the sign of `xi^2` against an absolute tolerance band.
///
/// Kernels refuse to evaluate inside the `Lightlike` band.
pub fn causal_class<T: Scalar>(xi: &FourVector<T>, tol: T) -> CausalClass {
    let s = xi.square();
    if s > tol {
        CausalClass::Timelike
    } else if s < -tol {
        CausalClass::Spacelike
    } else {
        CausalClass::Lightlike
    }
}

/// Default light-cone tolerance: `1e-9` relative to the Euclidean size of
/// `xi` squared.
pub fn default_lightcone_tol<T: Scalar>(xi: &FourVector<T>) -> T {
    T::lit(1e-9) * xi.euclid_norm_sq()
}

/// Orientation convention for the antisymmetric symbol.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum EpsilonOrientation {
    /// `eps^{0123} = +1`, hence `eps_{0123} = -1`.
    #[default]
    PlusE0123,
    /// `eps^{0123} = -1`.
    MinusE0123,
}

impl EpsilonOrientation {
    /// Value of the all-lower-index symbol `eps_{ijkl}` as an integer.
    pub fn epsilon_lower(&self, i: usize, j: usize, k: usize, l: usize) -> i32 {
        let sign = permutation_sign([i, j, k, l]);
        match self {
            // eps_{ijkl} = det(g) * eps^{ijkl} = -eps^{ijkl}
            EpsilonOrientation::PlusE0123 => -sign,
            EpsilonOrientation::MinusE0123 => sign,
        }
    }
}

/// Sign of the permutation taking `(0,1,2,3)` to `idx`, 0 on repeats.
fn permutation_sign(idx: [usize; 4]) -> i32 {
    let mut sign = 1i32;
    for a in 0..4 {
        for b in (a + 1)..4 {
            if idx[a] == idx[b] {
                return 0;
            }
            if idx[a] > idx[b] {
                sign = -sign;
            }
        }
    }
    sign
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    type V = FourVector<f64>;

    #[test]
    fn inner_examples() {
        let t = V::new(1.0, 0.0, 0.0, 0.0);
        assert_eq!(inner(&t, &t), 1.0);
        let l = V::new(1.0, 1.0, 0.0, 0.0);
        assert_eq!(inner(&l, &l), 0.0);
        let a = V::new(0.0, 2.0, 0.0, 0.0);
        let b = V::new(0.0, 3.0, 0.0, 0.0);
        assert_eq!(inner(&a, &b), -6.0);
    }

    #[test]
    fn chord_endpoints_and_extrapolation() {
        let x = V::new(0.3, -1.0, 0.5, 2.0);
        let y = V::new(-0.7, 0.2, 0.0, 1.0);
        assert_eq!(chord_point(&x, &y, 0.0), x);
        assert_eq!(chord_point(&x, &y, 1.0), y);
        let o = V::zero();
        let e = V::new(2.0, 0.0, 0.0, 0.0);
        assert_eq!(chord_point(&o, &e, -1.0), V::new(-2.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn causal_class_examples() {
        let tol = 1e-12;
        assert_eq!(causal_class(&V::new(1.0, 0.0, 0.0, 0.0), tol), CausalClass::Timelike);
        assert_eq!(causal_class(&V::new(1.0, 1.0, 0.0, 0.0), tol), CausalClass::Lightlike);
        assert_eq!(causal_class(&V::new(0.0, 1.0, 0.0, 0.0), tol), CausalClass::Spacelike);
    }

    #[test]
    fn segment_invariants() {
        let x = V::new(0.3, -1.0, 0.5, 2.0);
        let y = V::new(-0.7, 0.2, 0.0, 1.0);
        let s = Segment::new(x, y);
        let diff = s.xi - (y - x);
        assert!(diff.0.iter().all(|c| *c == 0.0), "xi = y - x exactly");
        assert_eq!(s.causal, causal_class(&s.xi, default_lightcone_tol(&s.xi)));
        assert_eq!(s.point(0.0), x);
        assert_eq!(s.point(1.0), y);
        let light = Segment::new(V::zero(), V::new(1.0, 1.0, 0.0, 0.0));
        assert_eq!(light.causal, CausalClass::Lightlike);
    }

    #[test]
    fn epsilon_orientation() {
        let e = EpsilonOrientation::PlusE0123;
        assert_eq!(e.epsilon_lower(0, 1, 2, 3), -1);
        assert_eq!(e.epsilon_lower(1, 0, 2, 3), 1);
        assert_eq!(e.epsilon_lower(0, 0, 2, 3), 0);
        assert_eq!(EpsilonOrientation::MinusE0123.epsilon_lower(0, 1, 2, 3), 1);
    }

    fn arb_vec() -> impl Strategy<Value = V> {
        prop::array::uniform4(-10.0f64..10.0).prop_map(FourVector)
    }

    proptest! {
        #[test]
        fn inner_symmetric_bilinear(u in arb_vec(), v in arb_vec(), w in arb_vec(), a in -3.0f64..3.0) {
            prop_assert!((inner(&u, &v) - inner(&v, &u)).abs() < 1e-12);
            let lhs = inner(&(u.scale(a) + w), &v);
            let rhs = a * inner(&u, &v) + inner(&w, &v);
            prop_assert!((lhs - rhs).abs() < 1e-9);
        }

        #[test]
        fn chord_affine_symmetry(x in arb_vec(), y in arb_vec(), lam in -4.0f64..4.0) {
            let s = chord_point(&x, &y, lam) + chord_point(&y, &x, lam);
            let t = x + y;
            for mu in 0..4 {
                prop_assert!((s.0[mu] - t.0[mu]).abs() < 1e-9);
            }
        }

        #[test]
        fn causal_parity(xi in arb_vec()) {
            let tol = default_lightcone_tol(&xi);
            prop_assert_eq!(causal_class(&xi, tol), causal_class(&(-xi), tol));
        }
    }
}
