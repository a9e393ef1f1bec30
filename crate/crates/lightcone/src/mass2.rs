//! The order-m^2 block of the expansion for unitary plus scalar/pseudoscalar
//! perturbations (no dynamical potentials), with the constant-Y special case
//! as an independent reference.
//!
//! The order-2 kernel receives a generalized phase shift built from the
//! chord average of `U^-1 Y_L Y_R U`; the order-3 kernel collects a wave
//! operator term, a nested double integral of two slashed gradients, and two
//! single-derivative terms. For the step family the truncation is `O(xi^2)`,
//! for the principal-value family `O(xi^0)`.

use crate::expansion::{ExpansionResult, Term, TruncationClass};
use crate::fields::{ChiralConfig, MatrixFn};
use crate::kernels::{Family, KernelTag};
use crate::minkowski::{chord_point, FourVector};
use crate::quadrature::{adaptive, line_integral, Poly, QuadratureSpec};
use crate::spin_algebra::{
    chiral_projector, flavor_block, gamma, kron_embed, slash, spinor_block, Side,
};
use crate::{BlockMatrix, Error, Result, Scalar, C};

/// The `m^2` coefficients for the Dirac operator with unitary and
/// scalar/pseudoscalar perturbations (`A_L = A_R = 0` required).
pub fn mass2_expansion<T: Scalar>(
    cfg: &ChiralConfig<T>,
    x: &FourVector<T>,
    y: &FourVector<T>,
    side: Side,
    family: Family,
    spec: &QuadratureSpec<T>,
) -> Result<ExpansionResult<T>> {
    cfg.validate()?;
    if !(cfg.a_l.is_zero() && cfg.a_r.is_zero()) {
        return Err(Error::HypothesisViolated(
            "the m^2 block is only derived without dynamical potentials".into(),
        ));
    }
    let (u_me, u_other) = match side {
        Side::L => (&cfg.u_l, &cfg.u_r),
        Side::R => (&cfg.u_r, &cfg.u_l),
    };
    let mid = MatrixFn::product(vec![
        MatrixFn::from_unitary_inv(u_me),
        MatrixFn::dynamical_mass(cfg, side),
        MatrixFn::dynamical_mass(cfg, side.other()),
        MatrixFn::from_unitary(u_me),
    ]);
    let f_left = MatrixFn::product(vec![
        MatrixFn::from_unitary_inv(u_me),
        MatrixFn::dynamical_mass(cfg, side),
        MatrixFn::from_unitary(u_other),
    ]);
    let g_right = MatrixFn::product(vec![
        MatrixFn::from_unitary_inv(u_other),
        MatrixFn::dynamical_mass(cfg, side.other()),
        MatrixFn::from_unitary(u_me),
    ]);
    mass2_assemble(cfg, x, y, side, family, spec, &mid, &f_left, &g_right)
}

/// Constant-Y reference: the same expansion written for a pure unitary
/// perturbation, `Y^2` in place of `Y_L Y_R`. Requires vanishing
/// scalar/pseudoscalar shifts.
pub fn constant_y_reference<T: Scalar>(
    cfg: &ChiralConfig<T>,
    x: &FourVector<T>,
    y: &FourVector<T>,
    side: Side,
    family: Family,
    spec: &QuadratureSpec<T>,
) -> Result<ExpansionResult<T>> {
    cfg.validate()?;
    if !(cfg.a_l.is_zero() && cfg.a_r.is_zero()) {
        return Err(Error::HypothesisViolated(
            "the m^2 block is only derived without dynamical potentials".into(),
        ));
    }
    if !(cfg.scalar_shift.is_zero() && cfg.pseudo_shift.is_zero()) {
        return Err(Error::HypothesisViolated(
            "the constant-Y reference needs vanishing scalar/pseudoscalar shifts".into(),
        ));
    }
    let (u_me, u_other) = match side {
        Side::L => (&cfg.u_l, &cfg.u_r),
        Side::R => (&cfg.u_r, &cfg.u_l),
    };
    let y_const = MatrixFn::constant(cfg.y.clone());
    let mid = MatrixFn::product(vec![
        MatrixFn::from_unitary_inv(u_me),
        y_const.clone(),
        y_const.clone(),
        MatrixFn::from_unitary(u_me),
    ]);
    let f_left = MatrixFn::product(vec![
        MatrixFn::from_unitary_inv(u_me),
        y_const.clone(),
        MatrixFn::from_unitary(u_other),
    ]);
    let g_right = MatrixFn::product(vec![
        MatrixFn::from_unitary_inv(u_other),
        y_const,
        MatrixFn::from_unitary(u_me),
    ]);
    mass2_assemble(cfg, x, y, side, family, spec, &mid, &f_left, &g_right)
}

#[allow(clippy::too_many_arguments)]
fn mass2_assemble<T: Scalar>(
    cfg: &ChiralConfig<T>,
    x: &FourVector<T>,
    y: &FourVector<T>,
    side: Side,
    family: Family,
    spec: &QuadratureSpec<T>,
    mid: &MatrixFn<T>,
    f_left: &MatrixFn<T>,
    g_right: &MatrixFn<T>,
) -> Result<ExpansionResult<T>> {
    let xi = *y - *x;
    if xi.euclid_norm() <= T::lit(1e-12) * (T::one() + x.euclid_norm() + y.euclid_norm()) {
        return Err(Error::DegenerateChord);
    }
    let n = cfg.n;
    let dim = 4 * n;
    let (u_me, _u_other) = match side {
        Side::L => (&cfg.u_l, &cfg.u_r),
        Side::R => (&cfg.u_r, &cfg.u_l),
    };
    let chi = chiral_projector::<T>(side);
    let ux = u_me.value(x);
    let uy_inv = u_me.value_inv(y);

    let mut res = ExpansionResult {
        side,
        family,
        x: *x,
        y: *y,
        n,
        terms: Vec::new(),
        truncation: std::collections::BTreeSet::new(),
    };
    res.truncation.insert(match family {
        Family::K => TruncationClass::XiSq,
        _ => TruncationClass::Bounded,
    });

    let push = |order: u8,
                    coeff: BlockMatrix<T>,
                    provenance: &'static str,
                    deriv: u8,
                    xi_pow: u8,
                    terms: &mut Vec<Term<T>>| {
        terms.push(Term {
            tag: KernelTag::symbolic(order).resolve(family),
            coeff,
            provenance,
            mass_order: 2,
            deriv_count: deriv,
            xi_power: xi_pow,
        });
    };

    // chord average of U^-1 Y_L Y_R U: the generalized phase shift
    let avg = line_integral(
        |alpha| {
            let z = chord_point(x, y, alpha);
            mid.value(&z)
        },
        &Poly::one(),
        spec,
    );
    if !avg.converged {
        return Err(Error::QuadratureDidNotConverge {
            error_bound: avg.error_bound.to_subset().unwrap_or(f64::NAN),
            subdivisions: spec.max_subdivisions,
        });
    }
    push(
        2,
        kron_embed(&chi, &(&ux * avg.value * &uy_inv)),
        "mass2-phase",
        0,
        0,
        &mut res.terms,
    );

    // -(i/2) int (a^2 - a) box(U^-1 Y_L Y_R U) xislash
    let boxed = line_integral(
        |alpha| {
            let z = chord_point(x, y, alpha);
            mid.box_operator(&z)
        },
        &Poly::alpha_sq_minus_alpha(),
        spec,
    );
    let half_i = C::new(T::zero(), T::lit(0.5));
    push(
        3,
        kron_embed(&(chi * slash(&xi)), &(&ux * boxed.value * &uy_inv)) * (-half_i),
        "mass2-box",
        2,
        1,
        &mut res.terms,
    );

    // +(i/2) double integral of slash-grad f (z - x)-slash slash-grad g
    let slash_grad = |f: &MatrixFn<T>, z: &FourVector<T>| -> BlockMatrix<T> {
        let mut acc = BlockMatrix::zeros(dim, dim);
        for k in 0..4 {
            acc += kron_embed(&gamma::<T>(k), &f.d1(z, k));
        }
        acc
    };
    let double = adaptive(
        |alpha: T| {
            let z = chord_point(x, y, alpha);
            let outer = slash_grad(g_right, &z);
            let zmx = z - *x;
            let middle = spinor_block(&slash(&zmx), n);
            let inner = adaptive(
                |beta: T| {
                    let u = chord_point(x, &z, beta);
                    slash_grad(f_left, &u)
                },
                T::zero(),
                T::one(),
                spec,
            );
            inner.value * middle * outer
        },
        T::zero(),
        T::one(),
        spec,
    );
    if !double.converged {
        return Err(Error::QuadratureDidNotConverge {
            error_bound: double.error_bound.to_subset().unwrap_or(f64::NAN),
            subdivisions: spec.max_subdivisions,
        });
    }
    let wrap_left = kron_embed(&chi, &ux);
    let wrap_right = flavor_block(&uy_inv);
    push(
        3,
        &wrap_left * double.value * &wrap_right * half_i,
        "mass2-double",
        2,
        1,
        &mut res.terms,
    );

    // +i int (1 - a) (slash-grad f) g
    let left_deriv = line_integral(
        |alpha| {
            let z = chord_point(x, y, alpha);
            slash_grad(f_left, &z) * flavor_block(&g_right.value(&z))
        },
        &Poly::one_minus_alpha(),
        spec,
    );
    let ic = C::new(T::zero(), T::one());
    push(
        3,
        &wrap_left * left_deriv.value * &wrap_right * ic,
        "mass2-left-deriv",
        1,
        0,
        &mut res.terms,
    );

    // -i int a f (slash-grad g)
    let right_deriv = line_integral(
        |alpha| {
            let z = chord_point(x, y, alpha);
            flavor_block(&f_left.value(&z)) * slash_grad(g_right, &z)
        },
        &Poly::alpha(),
        spec,
    );
    push(
        3,
        &wrap_left * right_deriv.value * &wrap_right * (-ic),
        "mass2-right-deriv",
        1,
        0,
        &mut res.terms,
    );

    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{MatrixField, ScalarProfile, UnitaryField};
    use crate::spin_algebra::max_norm;
    use nalgebra::DMatrix;

    type Spec = QuadratureSpec<f64>;

    fn cc(re: f64, im: f64) -> C<f64> {
        C::new(re, im)
    }

    fn bump(center: [f64; 4], width: f64, amp: f64) -> ScalarProfile<f64> {
        ScalarProfile::Gaussian {
            center: FourVector(center),
            width,
            amplitude: amp,
        }
    }

    fn herm2(a: f64, b: f64, c: f64, d: f64) -> DMatrix<C<f64>> {
        DMatrix::from_row_slice(2, 2, &[cc(a, 0.0), cc(b, c), cc(b, -c), cc(d, 0.0)])
    }

    fn chord() -> (FourVector<f64>, FourVector<f64>) {
        (
            FourVector([-0.4, 0.15, 0.1, -0.05]),
            FourVector([0.9, -0.1, 0.3, 0.2]),
        )
    }

    #[test]
    fn constants_leave_only_the_phase() {
        let spec = Spec::default();
        let mut cfg = ChiralConfig::free(2, 0.5);
        cfg.y = herm2(1.3, 0.0, 0.0, 1.3);
        let (x, y) = chord();
        for side in [Side::L, Side::R] {
            let res = mass2_expansion(&cfg, &x, &y, side, Family::P, &spec).unwrap();
            assert!(res.singular_order_consistent());
            let c2 = res.total_coeff(KernelTag::p(2));
            let expect =
                spinor_block(&chiral_projector::<f64>(side), 2) * cc(1.3 * 1.3, 0.0);
            assert!(max_norm(&(c2 - expect)) < 1e-12);
            let c3 = res.total_coeff(KernelTag::p(3));
            assert!(max_norm(&c3) < 1e-12, "derivative terms on constants");
            assert!(res.truncation.contains(&TruncationClass::Bounded));
        }
        // family k carries the O(xi^2) truncation
        let resk = mass2_expansion(&cfg, &x, &y, Side::L, Family::K, &spec).unwrap();
        assert!(resk.truncation.contains(&TruncationClass::XiSq));
        assert_eq!(resk.tags().iter().next().unwrap().family, Family::K);
    }

    #[test]
    fn rejects_potentials() {
        let spec = Spec::default();
        let mut cfg = ChiralConfig::free(1, 0.5);
        let one = DMatrix::from_row_slice(1, 1, &[cc(1.0, 0.0)]);
        let u = UnitaryField::new(1, vec![(bump([0.0; 4], 1.0, 0.4), one)]).unwrap();
        cfg.a_l = crate::fields::pure_gauge_potential(&u);
        let (x, y) = chord();
        assert!(matches!(
            mass2_expansion(&cfg, &x, &y, Side::L, Family::P, &spec),
            Err(Error::HypothesisViolated(_))
        ));
    }

    #[test]
    fn matches_constant_y_reference() {
        let spec = Spec::default();
        let mut cfg = ChiralConfig::free(2, 0.5);
        cfg.y = herm2(1.1, 0.2, -0.1, 0.8);
        cfg.u_l = UnitaryField::new(
            2,
            vec![(bump([0.1, 0.0, -0.1, 0.0], 1.0, 0.7), herm2(0.4, 0.2, -0.3, -0.1))],
        )
        .unwrap();
        cfg.u_r = UnitaryField::new(
            2,
            vec![(bump([-0.1, 0.2, 0.0, 0.1], 1.2, 0.5), herm2(-0.2, 0.5, 0.1, 0.3))],
        )
        .unwrap();
        let (x, y) = chord();
        for side in [Side::L, Side::R] {
            let full = mass2_expansion(&cfg, &x, &y, side, Family::P, &spec).unwrap();
            let reference = constant_y_reference(&cfg, &x, &y, side, Family::P, &spec).unwrap();
            let d = full.max_tag_difference(&reference);
            assert!(d < 1e-9, "mass2 vs constant-Y reference: {d}");
        }
    }

    #[test]
    fn scalar_double_integral_oracle() {
        // U = 1, Y_L = Y_R = f(z): the double term reduces to
        // (i/2) int_0^1 da int_0^a dl (slash-grad f)(u(l)) (z-x)slash (slash-grad f)(z(a))
        // over the simplex; check against a plain 2-D simplex quadrature
        let spec = Spec::default();
        let mut cfg = ChiralConfig::free(1, 0.5);
        cfg.scalar_shift = MatrixField::new(
            1,
            vec![(
                bump([0.05, -0.1, 0.2, 0.0], 1.1, 0.6),
                DMatrix::from_row_slice(1, 1, &[cc(1.0, 0.0)]),
            )],
        )
        .unwrap();
        let (x, y) = chord();
        let res = mass2_expansion(&cfg, &x, &y, Side::L, Family::P, &spec).unwrap();
        let double = res
            .terms
            .iter()
            .find(|t| t.provenance == "mass2-double")
            .unwrap();

        // independent simplex quadrature in the (alpha, lambda) plane
        let profile = bump([0.05, -0.1, 0.2, 0.0], 1.1, 0.6);
        let grad_slash = |z: &FourVector<f64>| {
            let mut acc = crate::SpinorMatrix::<f64>::zeros();
            for k in 0..4 {
                acc += gamma::<f64>(k) * cc(profile.d1(z, k), 0.0);
            }
            acc
        };
        let xi = y - x;
        let oracle_spinor = adaptive(
            |alpha: f64| {
                let z = chord_point(&x, &y, alpha);
                let inner = adaptive(
                    |lam: f64| {
                        let u = chord_point(&x, &y, lam);
                        grad_slash(&u)
                    },
                    0.0,
                    alpha,
                    &spec,
                );
                inner.value * slash(&xi) * grad_slash(&z)
            },
            0.0,
            1.0,
            &spec,
        )
        .value;
        let chi = chiral_projector::<f64>(Side::L);
        let oracle = spinor_block(&(chi * oracle_spinor), 1) * cc(0.0, 0.5);
        let d = max_norm(&(&double.coeff - oracle));
        assert!(d < 1e-8, "double integral vs simplex oracle: {d}");
    }

    #[test]
    fn abelian_phase_weight() {
        // n = 1 phases: the order-2 coefficient is the scalar chord average
        // of Y_L Y_R times the phase e^{i(Lam(x) - Lam(y))}
        let spec = Spec::default();
        let one = DMatrix::from_row_slice(1, 1, &[cc(1.0, 0.0)]);
        let lam = bump([0.0, 0.1, 0.0, -0.1], 1.0, 0.8);
        let mut cfg = ChiralConfig::free(1, 0.5);
        cfg.u_l = UnitaryField::new(1, vec![(lam.clone(), one.clone())]).unwrap();
        cfg.u_r = UnitaryField::identity(1);
        cfg.scalar_shift = MatrixField::new(
            1,
            vec![(bump([0.1, 0.0, 0.0, 0.0], 0.9, 0.3), one.clone())],
        )
        .unwrap();
        cfg.pseudo_shift = MatrixField::new(
            1,
            vec![(bump([0.0, 0.2, 0.0, 0.0], 1.1, 0.25), one)],
        )
        .unwrap();
        let (x, y) = chord();
        let res = mass2_expansion(&cfg, &x, &y, Side::L, Family::P, &spec).unwrap();
        let c2 = res.total_coeff(KernelTag::p(2));

        // independent Simpson integration of the scalar weight
        // (y0 + xi(z))^2 + phi(z)^2
        let steps = 4000;
        let mut acc = 0.0;
        for i in 0..=steps {
            let a = i as f64 / steps as f64;
            let z = chord_point(&x, &y, a);
            let yl = 1.0 + cfg.scalar_shift.value(&z)[(0, 0)].re;
            let phi = cfg.pseudo_shift.value(&z)[(0, 0)].re;
            let v = yl * yl + phi * phi;
            let w = if i == 0 || i == steps {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            acc += w * v;
        }
        acc /= 3.0 * steps as f64;
        let dlam = lam.value(&x) - lam.value(&y);
        let phase = cc(dlam.cos(), dlam.sin());
        let expect = spinor_block(&chiral_projector::<f64>(Side::L), 1) * (phase * cc(acc, 0.0));
        assert!(max_norm(&(c2 - expect)) < 1e-9);
    }
}
