//! Dirac matrices, chiral projectors and the 4n x 4n spinor (x) flavor block
//! algebra.
//!
//! Fixed Dirac representation: `g0 = diag(1,1,-1,-1)`, spatial matrices in
//! the standard off-diagonal Pauli form, `rho = i g0 g1 g2 g3`. All
//! assertions downstream are representation covariant; fixing one makes the
//! tests bit-stable. Tensor products are spinor-major: `kron_embed(S, F)`
//! puts the 4x4 spinor factor outermost, so a block matrix is a 4x4 grid of
//! n x n flavor blocks.

use crate::minkowski::{EpsilonOrientation, FourVector};
use crate::{BlockMatrix, FlavorMatrix, Scalar, SpinorMatrix, C};
use serde::{Deserialize, Serialize};

/// Chirality label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    L,
    R,
}

impl Side {
    pub fn other(&self) -> Side {
        match self {
            Side::L => Side::R,
            Side::R => Side::L,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Side::L => "L",
            Side::R => "R",
        }
    }
}

fn c<T: Scalar>(re: f64, im: f64) -> C<T> {
    C::new(T::lit(re), T::lit(im))
}

/// Dirac matrix `gamma^j` (upper index), Dirac representation.
pub fn gamma<T: Scalar>(j: usize) -> SpinorMatrix<T> {
    let o = C::<T>::new(T::zero(), T::zero());
    let one = c::<T>(1.0, 0.0);
    let i = c::<T>(0.0, 1.0);
    match j {
        0 => SpinorMatrix::from_row_slice(&[
            one, o, o, o, //
            o, one, o, o, //
            o, o, -one, o, //
            o, o, o, -one,
        ]),
        1 => SpinorMatrix::from_row_slice(&[
            o, o, o, one, //
            o, o, one, o, //
            o, -one, o, o, //
            -one, o, o, o,
        ]),
        2 => SpinorMatrix::from_row_slice(&[
            o, o, o, -i, //
            o, o, i, o, //
            o, i, o, o, //
            -i, o, o, o,
        ]),
        3 => SpinorMatrix::from_row_slice(&[
            o, o, one, o, //
            o, o, o, -one, //
            -one, o, o, o, //
            o, one, o, o,
        ]),
        _ => panic!("gamma index out of range: {j}"),
    }
}

/// `rho = i g0 g1 g2 g3` (the chirality matrix).
pub fn rho<T: Scalar>() -> SpinorMatrix<T> {
    let i = c::<T>(0.0, 1.0);
    gamma::<T>(0) * gamma::<T>(1) * gamma::<T>(2) * gamma::<T>(3) * i
}

/// Chiral projector `chi_L = (1 - rho)/2`, `chi_R = (1 + rho)/2`.
pub fn chiral_projector<T: Scalar>(side: Side) -> SpinorMatrix<T> {
    let half = c::<T>(0.5, 0.0);
    let id = SpinorMatrix::<T>::identity();
    match side {
        Side::L => (id - rho::<T>()) * half,
        Side::R => (id + rho::<T>()) * half,
    }
}

/// `sigma^{jk} = (i/2) [gamma^j, gamma^k]` (upper indices).
pub fn sigma<T: Scalar>(j: usize, k: usize) -> SpinorMatrix<T> {
    let gj = gamma::<T>(j);
    let gk = gamma::<T>(k);
    (gj * gk - gk * gj) * c::<T>(0.0, 0.5)
}

/// Feynman slash `v_j gamma^j` with the index lowered by the metric.
pub fn slash<T: Scalar>(v: &FourVector<T>) -> SpinorMatrix<T> {
    let vl = v.lower();
    let mut m = SpinorMatrix::<T>::zeros();
    for (mu, comp) in vl.iter().enumerate() {
        m += gamma::<T>(mu) * C::new(*comp, T::zero());
    }
    m
}

/// Flavor identity of dimension `n`.
pub fn id_flavor<T: Scalar>(n: usize) -> FlavorMatrix<T> {
    FlavorMatrix::identity(n, n)
}

/// Spinor-major tensor product `S (x) F` as a 4n x 4n block matrix.
pub fn kron_embed<T: Scalar>(s: &SpinorMatrix<T>, f: &FlavorMatrix<T>) -> BlockMatrix<T> {
    let sd: BlockMatrix<T> = BlockMatrix::from_fn(4, 4, |r, c| s[(r, c)]);
    sd.kronecker(f)
}

/// Embed a spinor matrix with flavor identity.
pub fn spinor_block<T: Scalar>(s: &SpinorMatrix<T>, n: usize) -> BlockMatrix<T> {
    kron_embed(s, &id_flavor(n))
}

/// Embed a flavor matrix with spinor identity.
pub fn flavor_block<T: Scalar>(f: &FlavorMatrix<T>) -> BlockMatrix<T> {
    kron_embed(&SpinorMatrix::identity(), f)
}

/// Dirac adjoint `M* = (g0 (x) 1) M^dagger (g0 (x) 1)`.
///
/// This is the adjoint with respect to the indefinite spin scalar product;
/// hermiticity of the perturbed projector is always meant in this sense.
pub fn dirac_adjoint<T: Scalar>(m: &BlockMatrix<T>) -> BlockMatrix<T> {
    let dim = m.nrows();
    assert_eq!(dim % 4, 0, "block matrix dimension must be 4n");
    let n = dim / 4;
    let g0 = spinor_block(&gamma::<T>(0), n);
    &g0 * m.adjoint() * &g0
}

/// Pseudoscalar contraction `sum eps_{ijkl} F^{ij} xi^k (rho gamma^l (x) .)`.
///
/// `f[i][j]` are the upper-index Lorentz components (flavor matrices) of an
/// antisymmetric tensor field at a point.
pub fn epsilon_pseudo_term<T: Scalar>(
    f: &[[FlavorMatrix<T>; 4]; 4],
    xi: &FourVector<T>,
    orientation: EpsilonOrientation,
) -> BlockMatrix<T> {
    let n = f[0][0].nrows();
    let mut acc = BlockMatrix::<T>::zeros(4 * n, 4 * n);
    let r = rho::<T>();
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                for l in 0..4 {
                    let e = orientation.epsilon_lower(i, j, k, l);
                    if e == 0 {
                        continue;
                    }
                    let w = T::lit(e as f64) * xi.0[k];
                    if w == T::zero() {
                        continue;
                    }
                    let spinor = r * gamma::<T>(l) * C::new(w, T::zero());
                    acc += kron_embed(&spinor, &f[i][j]);
                }
            }
        }
    }
    acc
}

/// Max-norm of a complex matrix (largest entry modulus).
pub fn max_norm<T: Scalar>(m: &BlockMatrix<T>) -> T {
    let mut best = T::zero();
    for v in m.iter() {
        let a = crate::cmod(v);
        if a > best {
            best = a;
        }
    }
    best
}
