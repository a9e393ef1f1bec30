//! Exercise the public surface end to end: build a configuration, expand,
//! assemble numerically, serialize, reload, and re-assemble.

use lightcone::expansion::{
    chiral_expansion, evaluate_numeric, hermiticity_defect, ExpansionResult,
};
use lightcone::fields::{ChiralConfig, MatrixField, ScalarProfile, UnitaryField};
use lightcone::kernels::Family;
use lightcone::mass2::mass2_expansion;
use lightcone::minkowski::default_lightcone_tol;
use lightcone::quadrature::QuadratureSpec;
use lightcone::spin_algebra::{max_norm, Side};
use lightcone::{FlavorMatrix64, FourVector64, C};
use nalgebra::DMatrix;

fn herm2(a: f64, b: f64, c: f64, d: f64) -> FlavorMatrix64 {
    DMatrix::from_row_slice(
        2,
        2,
        &[
            C::new(a, 0.0),
            C::new(b, c),
            C::new(b, -c),
            C::new(d, 0.0),
        ],
    )
}

fn bump(center: [f64; 4], width: f64, amp: f64) -> ScalarProfile<f64> {
    ScalarProfile::Gaussian {
        center: lightcone::minkowski::FourVector(center),
        width,
        amplitude: amp,
    }
}

#[test]
fn expansion_roundtrip_and_reassembly() {
    let spec = QuadratureSpec::default();
    let mut cfg = ChiralConfig::free(2, 0.55);
    cfg.u_l = UnitaryField::new(
        2,
        vec![(bump([0.1, 0.0, -0.1, 0.0], 0.9, 0.6), herm2(0.3, 0.2, -0.1, -0.2))],
    )
    .unwrap();
    cfg.scalar_shift =
        MatrixField::new(2, vec![(bump([0.0; 4], 1.0, 0.4), herm2(0.2, 0.1, 0.0, -0.3))]).unwrap();
    cfg.y = herm2(1.2, 0.0, 0.0, 0.8);

    let x = FourVector64::new(-0.4, 0.15, 0.1, -0.05);
    let y = FourVector64::new(0.9, -0.1, 0.3, 0.2);
    let tol = default_lightcone_tol(&(y - x));

    let mut total_direct = nalgebra::DMatrix::zeros(8, 8);
    let mut total_reloaded = nalgebra::DMatrix::zeros(8, 8);
    for side in [Side::L, Side::R] {
        for res in [
            chiral_expansion(&cfg, &x, &y, side, Family::P, &spec).unwrap(),
            mass2_expansion(&cfg, &x, &y, side, Family::P, &spec).unwrap(),
        ] {
            total_direct += evaluate_numeric(&res, tol).unwrap();
            let json = serde_json::to_string(&res.to_json()).unwrap();
            let parsed = serde_json::from_str(&json).unwrap();
            let back: ExpansionResult<f64> = ExpansionResult::from_json(&parsed).unwrap();
            total_reloaded += evaluate_numeric(&back, tol).unwrap();
        }
    }
    assert!(
        max_norm(&(total_direct - total_reloaded)) < 1e-15,
        "JSON reload reproduces the assembled kernel"
    );

    let d = hermiticity_defect(&cfg, &x, &y, &spec).unwrap();
    assert!(d < 1e-8, "public-surface hermiticity defect {d}");
}
