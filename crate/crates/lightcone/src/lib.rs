//! Numerical light-cone expansion of the Dirac-sea projector under chiral
//! gauge, unitary and scalar/pseudoscalar perturbations.
//!
//! The crate computes the kernel-tagged matrix coefficients of the expansion
//! of the perturbed two-point projector `P(x,y)` around the light cone
//! `xi^2 = 0`, `xi = y - x`, and verifies the algebraic identities the
//! coefficients satisfy (hermiticity under the Dirac adjoint, gauge
//! covariance, reduction to the abelian/unitary special cases).
//!
//! The main entry points are [`expansion::chiral_expansion`] (coefficients of
//! the order `O(ln|xi^2|) + O(m^2)` expansion), [`mass2::mass2_expansion`]
//! (the `m^2` block) and [`expansion::evaluate_numeric`] (pointwise assembly
//! off the cone).
//!
//! Core modules are generic over the real scalar type; the crate root exports
//! `f64` aliases which every test and the CLI use. Conventions fixed here and
//! used throughout:
//!
//! * metric signature `(+,-,-,-)`, index 0 is time;
//! * totally antisymmetric symbol with `eps^{0123} = +1` (so
//!   `eps_{0123} = -1`), configurable through
//!   [`minkowski::EpsilonOrientation`];
//! * Dirac representation with `rho = i g0 g1 g2 g3`, chiral projectors
//!   `chi_L/R = (1 -/+ rho)/2`;
//! * tensor products are spinor-major: a block matrix is `S (x) F` with the
//!   4x4 spinor factor outermost;
//! * ordered exponentials put the latest chord point rightmost, and the
//!   `-i` coupling is never baked in (see [`texp::texp`] vs [`texp::texp_i`]).

pub mod expansion;
pub mod fields;
pub mod kernels;
pub mod mass2;
pub mod minkowski;
pub mod quadrature;
pub mod spin_algebra;
pub mod texp;
pub mod verify;

use nalgebra::RealField;
use num_traits::FromPrimitive;

/// Scalar bound for all numeric code in the crate.
///
/// `RealField` drives the linear algebra, `FromPrimitive` converts the
/// embedded `f64` quadrature tables and physical constants. Implemented by
/// `f32` and `f64`.
pub trait Scalar: RealField + FromPrimitive + Copy {
    /// Lift an `f64` literal into the scalar type.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("finite literal")
    }
}

impl<T: RealField + FromPrimitive + Copy> Scalar for T {}

/// Complex number over the crate scalar.
pub type C<T> = num_complex::Complex<T>;

/// Modulus of a complex number over a generic scalar (the inherent
/// `Complex::norm` needs `num_traits::Float`).
pub fn cmod<T: Scalar>(c: &C<T>) -> T {
    (c.re * c.re + c.im * c.im).sqrt()
}

/// 4x4 complex matrix acting on the spinor factor.
pub type SpinorMatrix<T> = nalgebra::Matrix4<C<T>>;

/// n x n complex matrix acting on the flavor factor.
pub type FlavorMatrix<T> = nalgebra::DMatrix<C<T>>;

/// 4n x 4n complex matrix on the full spinor (x) flavor space.
pub type BlockMatrix<T> = nalgebra::DMatrix<C<T>>;

/// Default concrete scalar.
pub type Real = f64;

/// `f64` four-vector.
pub type FourVector64 = minkowski::FourVector<f64>;
/// `f64` spinor matrix.
pub type SpinorMatrix64 = SpinorMatrix<f64>;
/// `f64` flavor matrix.
pub type FlavorMatrix64 = FlavorMatrix<f64>;
/// `f64` block matrix.
pub type BlockMatrix64 = BlockMatrix<f64>;
/// `f64` perturbation data.
pub type ChiralConfig64 = fields::ChiralConfig<f64>;
/// `f64` expansion result.
pub type ExpansionResult64 = expansion::ExpansionResult<f64>;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("quadrature did not converge: error bound {error_bound} after {subdivisions} subdivisions")]
    QuadratureDidNotConverge { error_bound: f64, subdivisions: usize },
    #[error("ODE step size underflow at s = {at}")]
    OdeStepUnderflow { at: f64 },
    #[error("kernel requested at (near-)lightlike separation, |xi^2| inside tolerance band")]
    LightlikeSeparation,
    #[error("kernel {0} has no pointwise value off the light cone")]
    NonEvaluableKernel(String),
    #[error("degenerate chord: x = y")]
    DegenerateChord,
    #[error("support radius violated: integrand does not vanish at the truncation boundary (norm {boundary_norm})")]
    SupportRadiusViolated { boundary_norm: f64 },
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("nested ordered integral depth {0} exceeds the supported maximum 4")]
    DepthTooLarge(usize),
    #[error("field data failed validation: {0}")]
    InvalidField(String),
}

/// Crate-wide result alias.
pub type Result<V> = std::result::Result<V, Error>;
