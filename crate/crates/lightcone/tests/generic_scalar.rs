//! The core is generic over the real scalar; exercise the f32 instantiation
//! at correspondingly loose tolerances. Everything else in the suite pins
//! f64, which the stated identity tolerances require.

use lightcone::fields::{ScalarProfile, VectorFlavorField, VectorTerm};
use lightcone::kernels::{kernel_value, KernelTag};
use lightcone::minkowski::{chord_point, default_lightcone_tol, inner, FourVector};
use lightcone::quadrature::{line_integral, Poly, QuadratureSpec};
use lightcone::spin_algebra::{dirac_adjoint, gamma, spinor_block};
use lightcone::texp::texp_i;
use lightcone::{FlavorMatrix, C};
use nalgebra::DMatrix;

fn spec32() -> QuadratureSpec<f32> {
    QuadratureSpec {
        rel_tol: 1e-5,
        abs_tol: 1e-6,
        max_subdivisions: 200,
    }
}

#[test]
fn minkowski_and_gamma_algebra_at_f32() {
    let u = FourVector::<f32>::new(1.0, 0.5, -0.25, 0.0);
    let v = FourVector::<f32>::new(0.5, -1.0, 0.75, 2.0);
    assert!((inner(&u, &v) - (0.5 + 0.5 + 0.1875)).abs() < 1e-6);
    let z = chord_point(&u, &v, 0.25f32);
    assert!((z.0[0] - 0.875).abs() < 1e-6);

    for j in 0..4usize {
        let g = gamma::<f32>(j);
        let anti = g * g;
        let sign: f32 = if j == 0 { 1.0 } else { -1.0 };
        assert!((anti[(0, 0)].re - sign).abs() < 1e-6);
    }
    let m = spinor_block(&gamma::<f32>(1), 2);
    let adj = dirac_adjoint(&m);
    assert!((adj - m).iter().all(|c| c.norm() < 1e-6));
}

#[test]
fn quadrature_and_texp_at_f32() {
    let s = spec32();
    let e = line_integral(|a: f32| a.exp(), &Poly::one(), &s);
    assert!((e.value - (std::f32::consts::E - 1.0)).abs() < 1e-4);

    let a = VectorFlavorField::<f32>::new(
        1,
        vec![VectorTerm {
            lorentz_index: 0,
            profile: ScalarProfile::Gaussian {
                center: FourVector([0.0; 4]),
                width: 1.0,
                amplitude: 0.5,
            },
            matrix: DMatrix::from_row_slice(1, 1, &[C::new(1.0f32, 0.0)]),
        }],
    )
    .unwrap();
    let x = FourVector::<f32>::new(-0.3, 0.1, 0.0, 0.2);
    let y = FourVector::<f32>::new(0.8, -0.2, 0.4, 0.0);
    let w = texp_i(&a, &x, &y, &s).unwrap();
    // abelian: |Texp| = 1
    assert!((w[(0, 0)].norm() - 1.0).abs() < 1e-4);

    let id = FlavorMatrix::<f32>::identity(1, 1);
    let z = chord_point(&x, &y, 0.4f32);
    let comp = texp_i(&a, &x, &z, &s).unwrap() * texp_i(&a, &z, &y, &s).unwrap();
    assert!((comp - w.clone() * id[(0, 0)]).iter().all(|c| c.norm() < 1e-4));

    let xi = y - x;
    let k = kernel_value(KernelTag::p(1), &xi, default_lightcone_tol(&xi)).unwrap();
    assert!(k[(0, 0)].re.is_finite());
}
