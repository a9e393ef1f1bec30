//! The central evaluator: assembles the light-cone expansion of the chiral
//! components of the perturbed projector, with straight-line reference
//! implementations of its special cases for cross-validation, the
//! singular-order classifier, numeric assembly off the cone, and
//! hermiticity/linearization checks.
//!
//! Every coefficient is stored as a full 4n x 4n left-multiplier of its
//! kernel (the value off the cone is `coeff * (kernel (x) 1)`): chiral
//! projectors and slash factors are folded into the coefficient, never into
//! the tag, so the ordering `chi_L xislash = xislash chi_R` can never be
//! applied inconsistently.

use crate::fields::{
    commutes_with_x, current, dynamical_mass_side, field_strength, ChiralConfig, MatrixFn,
};
use crate::kernels::{kernel_value, Family, KernelTag};
use crate::minkowski::{chord_point, default_lightcone_tol, metric_sign, FourVector};
use crate::quadrature::{
    line_integral, nonlocal_pieces, truncation_window, NonlocalWeight, Poly, QuadratureSpec,
};
use crate::spin_algebra::{
    chiral_projector, dirac_adjoint, epsilon_pseudo_term, flavor_block, gamma, id_flavor,
    kron_embed, max_norm, slash, spinor_block, Side,
};
use crate::texp::{hat_bracket, ChordTexpCache};
use crate::{BlockMatrix, Error, FlavorMatrix, Result, Scalar, C};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// Behavior class on the light cone from the mass power `p` and derivative
/// count `q` of a perturbation-series contribution.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SingularOrder {
    /// `O(xislash xi^{exponent})`
    SlashPole { exponent: i32 },
    /// `O(xi^{exponent})`
    Pole { exponent: i32 },
    /// `O(ln|xi^2|)`
    Log,
    /// `O(xislash ln|xi^2|)`
    SlashLog,
    /// `O(xi^0)`
    Bounded,
}

/// Classify the contribution with mass order `p_mass` and `q_deriv`
/// derivatives of the potential.
pub fn singular_order(p_mass: u32, q_deriv: u32) -> SingularOrder {
    let s = p_mass + q_deriv;
    match s {
        0 | 2 => SingularOrder::SlashPole {
            exponent: -4 + s as i32,
        },
        1 => SingularOrder::Pole {
            exponent: -3 + s as i32,
        },
        3 => SingularOrder::Log,
        4 => SingularOrder::SlashLog,
        _ => SingularOrder::Bounded,
    }
}

/// Coarse singularity rank of the `(p, q)` class; one unit per kernel order,
/// capped at the bounded class.
pub fn singular_rank(p_mass: u32, q_deriv: u32) -> u32 {
    (p_mass + q_deriv).min(5)
}

/// Error-class labels carried by a truncated result.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TruncationClass {
    /// O(ln|xi^2|)
    Log,
    /// O(m^2)
    MassSq,
    /// O(xi^0)
    Bounded,
    /// O(xi^2)
    XiSq,
}

impl TruncationClass {
    pub fn label(&self) -> &'static str {
        match self {
            TruncationClass::Log => "O(ln|xi^2|)",
            TruncationClass::MassSq => "O(m^2)",
            TruncationClass::Bounded => "O(xi^0)",
            TruncationClass::XiSq => "O(xi^2)",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "O(ln|xi^2|)" => Some(TruncationClass::Log),
            "O(m^2)" => Some(TruncationClass::MassSq),
            "O(xi^0)" => Some(TruncationClass::Bounded),
            "O(xi^2)" => Some(TruncationClass::XiSq),
            _ => None,
        }
    }
}

/// One tagged contribution: `coeff * kernel(xi)`, with enough metadata to
/// audit its singular order.
#[derive(Clone, Debug)]
pub struct Term<T: Scalar> {
    pub tag: KernelTag,
    pub coeff: BlockMatrix<T>,
    /// What produced this term (stable label, e.g. "field-strength").
    pub provenance: &'static str,
    /// Mass power of the contribution.
    pub mass_order: u8,
    /// Number of potential derivatives in the coefficient.
    pub deriv_count: u8,
    /// Explicit chord contractions (xi factors, slashed or plain) folded
    /// into the coefficient.
    pub xi_power: u8,
}

/// The kernel-tagged coefficients of one chiral component at fixed `(x, y)`.
#[derive(Clone, Debug)]
pub struct ExpansionResult<T: Scalar> {
    pub side: Side,
    pub family: Family,
    pub x: FourVector<T>,
    pub y: FourVector<T>,
    pub n: usize,
    pub terms: Vec<Term<T>>,
    pub truncation: BTreeSet<TruncationClass>,
}

impl<T: Scalar> ExpansionResult<T> {
    fn new(side: Side, family: Family, x: FourVector<T>, y: FourVector<T>, n: usize) -> Self {
        ExpansionResult {
            side,
            family,
            x,
            y,
            n,
            terms: Vec::new(),
            truncation: BTreeSet::new(),
        }
    }

    fn push(
        &mut self,
        order: u8,
        coeff: BlockMatrix<T>,
        provenance: &'static str,
        mass_order: u8,
        deriv_count: u8,
        xi_power: u8,
    ) {
        self.terms.push(Term {
            tag: KernelTag::symbolic(order).resolve(self.family),
            coeff,
            provenance,
            mass_order,
            deriv_count,
            xi_power,
        });
    }

    /// Sum of all coefficients attached to `tag`.
    pub fn total_coeff(&self, tag: KernelTag) -> BlockMatrix<T> {
        let mut acc = BlockMatrix::zeros(4 * self.n, 4 * self.n);
        for t in &self.terms {
            if t.tag == tag {
                acc += &t.coeff;
            }
        }
        acc
    }

    pub fn tags(&self) -> BTreeSet<KernelTag> {
        self.terms.iter().map(|t| t.tag).collect()
    }

    /// Largest coefficient difference (max-norm over entries, per tag)
    /// between two results.
    pub fn max_tag_difference(&self, other: &ExpansionResult<T>) -> T {
        let mut tags = self.tags();
        tags.extend(other.tags());
        let mut worst = T::zero();
        for tag in tags {
            let d = max_norm(&(self.total_coeff(tag) - other.total_coeff(tag)));
            if d > worst {
                worst = d;
            }
        }
        worst
    }

    /// Every term's kernel must be no more singular than the classifier
    /// allows for its `(mass order, derivative count)` once the explicit
    /// chord powers of the coefficient are counted.
    pub fn singular_order_consistent(&self) -> bool {
        self.terms.iter().all(|t| {
            let allowed = singular_rank(t.mass_order as u32, t.deriv_count as u32);
            (t.tag.order as u32 + t.xi_power as u32) >= allowed
        })
    }
}

/// Serialized form: complex entries as `[re, im]` pairs, row-major matrices.
#[derive(Serialize, Deserialize)]
pub struct TermJson {
    pub tag: String,
    pub provenance: String,
    pub mass_order: u8,
    pub deriv_count: u8,
    pub xi_power: u8,
    pub coeff: Vec<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
pub struct ExpansionJson {
    pub side: String,
    pub family: String,
    pub n: usize,
    pub x: [f64; 4],
    pub y: [f64; 4],
    pub terms: Vec<TermJson>,
    pub truncation: Vec<String>,
}

impl<T: Scalar> ExpansionResult<T> {
    pub fn to_json(&self) -> ExpansionJson {
        let f = |v: T| v.to_subset().expect("finite");
        ExpansionJson {
            side: self.side.label().to_string(),
            family: match self.family {
                Family::P => "p".into(),
                Family::K => "k".into(),
                Family::SymbolicC => "C".into(),
            },
            n: self.n,
            x: [f(self.x.0[0]), f(self.x.0[1]), f(self.x.0[2]), f(self.x.0[3])],
            y: [f(self.y.0[0]), f(self.y.0[1]), f(self.y.0[2]), f(self.y.0[3])],
            terms: self
                .terms
                .iter()
                .map(|t| TermJson {
                    tag: t.tag.label(),
                    provenance: t.provenance.to_string(),
                    mass_order: t.mass_order,
                    deriv_count: t.deriv_count,
                    xi_power: t.xi_power,
                    coeff: t
                        .coeff
                        .row_iter()
                        .flat_map(|row| {
                            row.iter().map(|c| [f(c.re), f(c.im)]).collect::<Vec<_>>()
                        })
                        .collect(),
                })
                .collect(),
            truncation: self
                .truncation
                .iter()
                .map(|t| t.label().to_string())
                .collect(),
        }
    }

    pub fn from_json(j: &ExpansionJson) -> Result<ExpansionResult<T>> {
        let side = match j.side.as_str() {
            "L" => Side::L,
            "R" => Side::R,
            other => return Err(Error::InvalidField(format!("bad side {other}"))),
        };
        let family = match j.family.as_str() {
            "p" => Family::P,
            "k" => Family::K,
            "C" => Family::SymbolicC,
            other => return Err(Error::InvalidField(format!("bad family {other}"))),
        };
        let lift = |v: f64| T::lit(v);
        let dim = 4 * j.n;
        let mut res = ExpansionResult::new(
            side,
            family,
            FourVector([lift(j.x[0]), lift(j.x[1]), lift(j.x[2]), lift(j.x[3])]),
            FourVector([lift(j.y[0]), lift(j.y[1]), lift(j.y[2]), lift(j.y[3])]),
            j.n,
        );
        for t in &j.terms {
            let tag = KernelTag::parse(&t.tag)
                .ok_or_else(|| Error::InvalidField(format!("bad tag {}", t.tag)))?;
            if t.coeff.len() != dim * dim {
                return Err(Error::DimensionMismatch {
                    expected: dim * dim,
                    got: t.coeff.len(),
                });
            }
            let coeff = BlockMatrix::from_fn(dim, dim, |r, c| {
                let [re, im] = t.coeff[r * dim + c];
                C::new(lift(re), lift(im))
            });
            // provenance labels survive round trips through the known set
            let provenance = KNOWN_PROVENANCE
                .iter()
                .find(|p| **p == t.provenance)
                .copied()
                .unwrap_or("imported");
            res.terms.push(Term {
                tag,
                coeff,
                provenance,
                mass_order: t.mass_order,
                deriv_count: t.deriv_count,
                xi_power: t.xi_power,
            });
        }
        for s in &j.truncation {
            res.truncation.insert(
                TruncationClass::parse(s)
                    .ok_or_else(|| Error::InvalidField(format!("bad truncation {s}")))?,
            );
        }
        Ok(res)
    }
}

const KNOWN_PROVENANCE: &[&str] = &[
    "phase",
    "field-strength",
    "current",
    "pseudoscalar",
    "mass-local",
    "mass-nonlocal",
    "mass-phase",
    "mass-boundary",
    "mass-difference",
    "mass2-phase",
    "mass2-box",
    "mass2-double",
    "mass2-left-deriv",
    "mass2-right-deriv",
    "imported",
];

/// Reference evaluator variants (special cases of the full expansion,
/// implemented straight from their own closed formulas).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReferenceVariant {
    /// Four-component abelian pure-gauge case: `n = 1`, phases only.
    AbelianPhases,
    /// Nonabelian potentials, `X = Y = 1`, `U = 1`.
    PotentialsOnly,
    /// Nonabelian potentials with mass asymmetry `Y`; `X = 1`, `U = 1`.
    PotentialsWithMass,
    /// Unitary perturbation only (`A = 0`), general `X`, `Y`.
    UnitaryOnly,
    /// Full chiral data, no scalar/pseudoscalar shift.
    FullChiral,
}

fn degenerate_check<T: Scalar>(x: &FourVector<T>, y: &FourVector<T>) -> Result<FourVector<T>> {
    let xi = *y - *x;
    if xi.euclid_norm() <= T::lit(1e-12) * (T::one() + x.euclid_norm() + y.euclid_norm()) {
        return Err(Error::DegenerateChord);
    }
    Ok(xi)
}

/// `sum_k gamma^k (x) d_k f(z)` for a matrix function.
fn slash_gradient<T: Scalar>(f: &MatrixFn<T>, z: &FourVector<T>) -> BlockMatrix<T> {
    let n = f.n();
    let mut acc = BlockMatrix::zeros(4 * n, 4 * n);
    for k in 0..4 {
        acc += kron_embed(&gamma::<T>(k), &f.d1(z, k));
    }
    acc
}

/// `xi_j gamma_k F^{kj}(z)` as a block matrix (lower-index contraction).
fn field_strength_contraction<T: Scalar>(
    f: &[[FlavorMatrix<T>; 4]; 4],
    xi: &FourVector<T>,
) -> BlockMatrix<T> {
    let n = f[0][0].nrows();
    let xl = xi.lower();
    let mut acc = BlockMatrix::zeros(4 * n, 4 * n);
    for k in 0..4 {
        let mut mk = FlavorMatrix::zeros(n, n);
        for j in 0..4 {
            mk += &f[k][j] * C::new(xl[j], T::zero());
        }
        let gamma_lower = gamma::<T>(k) * C::new(metric_sign::<T>(k), T::zero());
        acc += kron_embed(&gamma_lower, &mk);
    }
    acc
}

/// Run a quadrature whose integrand may fail (ODE underflow etc.); the first
/// failure aborts the integral, non-convergence is fatal.
fn quad_with_errors<T: Scalar, F>(
    mut integrand: F,
    weight: &Poly<T>,
    spec: &QuadratureSpec<T>,
    dim: usize,
) -> Result<BlockMatrix<T>>
where
    F: FnMut(T) -> Result<BlockMatrix<T>>,
{
    let mut failure: Option<Error> = None;
    let zero = BlockMatrix::zeros(dim, dim);
    let eval = line_integral(
        |alpha| match integrand(alpha) {
            Ok(v) => v,
            Err(e) => {
                if failure.is_none() {
                    failure = Some(e);
                }
                zero.clone()
            }
        },
        weight,
        spec,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    if !eval.converged {
        return Err(Error::QuadratureDidNotConverge {
            error_bound: eval.error_bound.to_subset().unwrap_or(f64::NAN),
            subdivisions: spec.max_subdivisions,
        });
    }
    Ok(eval.value)
}

fn commute_gate<T: Scalar>(
    cfg: &ChiralConfig<T>,
    x: &FourVector<T>,
    y: &FourVector<T>,
) -> Result<()> {
    let r = cfg.support_radius();
    let (lo, hi) = truncation_window(x, y, r)?;
    let samples: Vec<FourVector<T>> = (0..=8)
        .map(|i| {
            let t = lo + (hi - lo) * T::lit(i as f64 / 8.0);
            chord_point(x, y, t)
        })
        .collect();
    let tol = T::lit(1e-8);
    for a in [&cfg.a_l, &cfg.a_r] {
        if !commutes_with_x(a, &cfg.x_l, &cfg.x_r, &samples, tol) {
            return Err(Error::HypothesisViolated(
                "potentials must commute with the free asymmetry X".into(),
            ));
        }
    }
    Ok(())
}

/// The light-cone expansion of one chiral component of the perturbed
/// projector, to the order `O(ln|xi^2|) + O(m^2)`.
///
/// The order-0 coefficient is a generalized phase (ordered exponential
/// dressed by `U` and `X`); the order-1 coefficient collects the local
/// curvature contributions (field strength, current, pseudoscalar), the
/// local mass term with the dynamical mass matrix, and the nonlocal mass
/// term built from hat-derivative sandwiches of `U^-1 Y U` along the whole
/// line.
pub fn chiral_expansion<T: Scalar>(
    cfg: &ChiralConfig<T>,
    x: &FourVector<T>,
    y: &FourVector<T>,
    side: Side,
    family: Family,
    spec: &QuadratureSpec<T>,
) -> Result<ExpansionResult<T>> {
    cfg.validate()?;
    let xi = degenerate_check(x, y)?;
    commute_gate(cfg, x, y)?;

    let n = cfg.n;
    let dim = 4 * n;
    let me = side;
    let other = side.other();
    let a_me = cfg.sided_a(me);
    let a_other = cfg.sided_a(other);
    let u_me = cfg.sided_u(me);
    let u_other = cfg.sided_u(other);
    let x_me = cfg.sided_x(me);
    let x_other = cfg.sided_x(other);
    let chi = chiral_projector::<T>(me);
    let m = cfg.mass;

    let mut res = ExpansionResult::new(side, family, *x, *y, n);
    res.truncation.insert(TruncationClass::Log);
    res.truncation.insert(TruncationClass::MassSq);

    let cache_me = ChordTexpCache::new(a_me, x, y, spec);
    let cache_other = ChordTexpCache::new(a_other, x, y, spec);

    // order 0: generalized phase transformation
    let te_me = cache_me.left(T::one())?;
    let phase_flavor = u_me.value(x) * &te_me * x_me * u_me.value_inv(y);
    res.push(0, kron_embed(&chi, &phase_flavor), "phase", 0, 0, 0);

    // order 1, local curvature terms sandwiched between ordered exponentials
    let left_wrap = kron_embed(&chi, &(u_me.value(x) * x_me));
    let right_wrap = flavor_block(&u_me.value_inv(y));

    let half = C::new(T::lit(0.5), T::zero());
    let sandwich =
        |alpha: T, middle: &dyn Fn(&FourVector<T>) -> BlockMatrix<T>| -> Result<BlockMatrix<T>> {
            let z = chord_point(x, y, alpha);
            let tl = cache_me.left(alpha)?;
            let tr = cache_me.right(alpha)?;
            Ok(flavor_block(&tl) * middle(&z) * flavor_block(&tr))
        };

    let fs_int = quad_with_errors(
        |alpha| {
            sandwich(alpha, &|z| {
                field_strength_contraction(&field_strength(a_me, z), &xi)
            })
        },
        &Poly::two_alpha_minus_one(),
        spec,
        dim,
    )?;
    res.push(
        1,
        &left_wrap * fs_int * &right_wrap * (-half),
        "field-strength",
        0,
        1,
        1,
    );

    let slash_xi = spinor_block(&slash(&xi), n);
    let xl = xi.lower();
    let cur_int = quad_with_errors(
        |alpha| {
            sandwich(alpha, &|z| {
                let j = current(a_me, z);
                let mut contracted = FlavorMatrix::zeros(n, n);
                for k in 0..4 {
                    contracted += &j[k] * C::new(xl[k], T::zero());
                }
                &slash_xi * flavor_block(&contracted)
            })
        },
        &Poly::alpha_sq_minus_alpha(),
        spec,
        dim,
    )?;
    res.push(1, &left_wrap * cur_int * &right_wrap * half, "current", 0, 2, 2);

    let orientation = cfg.epsilon_orientation;
    let pseudo_int = quad_with_errors(
        |alpha| {
            sandwich(alpha, &|z| {
                epsilon_pseudo_term(&field_strength(a_me, z), &xi, orientation)
            })
        },
        &Poly::one(),
        spec,
        dim,
    )?;
    let quarter_i = C::new(T::zero(), T::lit(0.25));
    res.push(
        1,
        &left_wrap * pseudo_int * &right_wrap * (-quarter_i),
        "pseudoscalar",
        0,
        1,
        1,
    );

    // order 1, local mass term with the dynamical mass matrix at y
    let y_me_at_y = dynamical_mass_side(cfg, y, me);
    let mass_local = kron_embed(
        &chi,
        &(u_me.value(x) * &te_me * x_me * u_me.value_inv(y) * y_me_at_y),
    ) * C::new(m, T::zero());
    res.push(1, mass_local, "mass-local", 1, 0, 0);

    // order 1, nonlocal mass term: hat-derivative sandwiches of U^-1 Y U
    // along the whole line, recombined under the sign weights
    let f_mid = MatrixFn::product(vec![
        MatrixFn::from_unitary_inv(u_me),
        MatrixFn::dynamical_mass(cfg, me),
        MatrixFn::from_unitary(u_other),
    ]);
    let r_eff = cfg.support_radius();
    let mut failure: Option<Error> = None;
    let pieces = nonlocal_pieces(
        |lam: T| {
            let z = chord_point(x, y, lam);
            let assemble = || -> Result<BlockMatrix<T>> {
                let tl = cache_me.left(lam)?;
                let tr = cache_other.right(lam)?;
                let mut hat = BlockMatrix::zeros(dim, dim);
                for k in 0..4 {
                    let bracket = hat_bracket(a_me, a_other, &f_mid, &z, k);
                    hat += kron_embed(&gamma::<T>(k), &(&tl * bracket * &tr));
                }
                Ok(hat)
            };
            match assemble() {
                Ok(v) => v,
                Err(e) => {
                    if failure.is_none() {
                        failure = Some(e);
                    }
                    BlockMatrix::zeros(dim, dim)
                }
            }
        },
        x,
        y,
        r_eff,
        spec,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    if !pieces.converged {
        return Err(Error::QuadratureDidNotConverge {
            error_bound: pieces.error_bound.to_subset().unwrap_or(f64::NAN),
            subdivisions: spec.max_subdivisions,
        });
    }
    let hat_eps = pieces.weighted(NonlocalWeight::EpsLambda);
    let hat_eps1 = pieces.weighted(NonlocalWeight::EpsOneMinusLambda);
    let brace = hat_eps * flavor_block(x_other) + flavor_block(x_me) * hat_eps1;
    let mass_nonlocal = kron_embed(&chi, &u_me.value(x))
        * brace
        * &slash_xi
        * flavor_block(&u_other.value_inv(y))
        * C::new(-m / T::lit(4.0), T::zero());
    res.push(1, mass_nonlocal, "mass-nonlocal", 1, 1, 1);

    Ok(res)
}

/// Straight-line implementations of the expansion's special cases, used to
/// cross-validate `chiral_expansion` through the reduction chain.
pub fn reference_expansion<T: Scalar>(
    variant: ReferenceVariant,
    cfg: &ChiralConfig<T>,
    x: &FourVector<T>,
    y: &FourVector<T>,
    side: Side,
    family: Family,
    spec: &QuadratureSpec<T>,
) -> Result<ExpansionResult<T>> {
    cfg.validate()?;
    match variant {
        ReferenceVariant::AbelianPhases => abelian_phases(cfg, x, y, side, family, spec),
        ReferenceVariant::PotentialsOnly => potentials_only(cfg, x, y, side, family, spec),
        ReferenceVariant::PotentialsWithMass => potentials_with_mass(cfg, x, y, side, family, spec),
        ReferenceVariant::UnitaryOnly => unitary_only(cfg, x, y, side, family, spec),
        ReferenceVariant::FullChiral => full_chiral(cfg, x, y, side, family, spec),
    }
}

fn require(cond: bool, what: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::HypothesisViolated(what.into()))
    }
}

fn is_identity<T: Scalar>(m: &FlavorMatrix<T>) -> bool {
    let n = m.nrows();
    max_norm(&(m - FlavorMatrix::<T>::identity(n, n))) < T::lit(1e-12)
}

/// Abelian four-component case: `U_{L/R} = e^{i Lambda_{L/R}}` phases, no
/// explicit potentials, `X = Y = 1`. The mass correction enters through a
/// boundary-phase line integral.
fn abelian_phases<T: Scalar>(
    cfg: &ChiralConfig<T>,
    x: &FourVector<T>,
    y: &FourVector<T>,
    side: Side,
    family: Family,
    spec: &QuadratureSpec<T>,
) -> Result<ExpansionResult<T>> {
    require(cfg.n == 1, "abelian case needs n = 1")?;
    require(
        cfg.a_l.is_zero() && cfg.a_r.is_zero(),
        "abelian case carries no explicit potentials",
    )?;
    require(
        cfg.scalar_shift.is_zero() && cfg.pseudo_shift.is_zero(),
        "no scalar/pseudoscalar shift",
    )?;
    require(
        is_identity(&cfg.y) && is_identity(&cfg.x_l) && is_identity(&cfg.x_r),
        "X = Y = 1",
    )?;
    let xi = degenerate_check(x, y)?;
    let m = cfg.mass;

    let (u_me, u_other) = match side {
        Side::L => (&cfg.u_l, &cfg.u_r),
        Side::R => (&cfg.u_r, &cfg.u_l),
    };
    let lam_me = |z: &FourVector<T>| u_me.abelian_phase(z).expect("n = 1 phase");
    let lam_other = |z: &FourVector<T>| u_other.abelian_phase(z).expect("n = 1 phase");

    let chi = chiral_projector::<T>(side);
    let mut res = ExpansionResult::new(side, family, *x, *y, 1);
    res.truncation.insert(TruncationClass::Log);
    res.truncation.insert(TruncationClass::MassSq);

    let phase = |lam: T| C::new(lam.cos(), lam.sin());
    let one = id_flavor::<T>(1);

    // e^{i Lambda(x) - i Lambda(y)} on this side's projector, for the
    // order-0 and the plain order-1 kernel
    let dphase = phase(lam_me(x) - lam_me(y));
    res.push(0, kron_embed(&chi, &one) * dphase, "phase", 0, 0, 0);
    res.push(
        1,
        kron_embed(&chi, &one) * (dphase * C::new(m, T::zero())),
        "mass-phase",
        1,
        0,
        0,
    );

    // -(m/2) e^{i Lam_me(x) - i Lam_other(y)}
    //   int (slash-grad e^{-i Lam_me + i Lam_other}) xislash
    let grad_phase_slash = |z: &FourVector<T>| -> crate::SpinorMatrix<T> {
        let g = phase(lam_other(z) - lam_me(z));
        let mut acc = crate::SpinorMatrix::<T>::zeros();
        for j in 0..4 {
            let dlam =
                u_other.abelian_phase_d1(z, j).unwrap() - u_me.abelian_phase_d1(z, j).unwrap();
            acc += gamma::<T>(j) * (g * C::new(T::zero(), dlam));
        }
        acc
    };
    let integral = line_integral(
        |alpha| {
            let z = chord_point(x, y, alpha);
            grad_phase_slash(&z)
        },
        &Poly::one(),
        spec,
    );
    let boundary_phase = phase(lam_me(x) - lam_other(y));
    let spinor = chi * integral.value * slash(&xi);
    let coeff = kron_embed(&spinor, &one) * (boundary_phase * C::new(-m / T::lit(2.0), T::zero()));
    res.push(1, coeff, "mass-boundary", 1, 1, 1);
    Ok(res)
}

/// Nonabelian potentials with `X = Y = 1`, `U = 1`.
fn potentials_only<T: Scalar>(
    cfg: &ChiralConfig<T>,
    x: &FourVector<T>,
    y: &FourVector<T>,
    side: Side,
    family: Family,
    spec: &QuadratureSpec<T>,
) -> Result<ExpansionResult<T>> {
    require(cfg.u_l.is_identity() && cfg.u_r.is_identity(), "U = 1")?;
    require(is_identity(&cfg.x_l) && is_identity(&cfg.x_r), "X = 1")?;
    require(is_identity(&cfg.y), "Y = 1")?;
    require(
        cfg.scalar_shift.is_zero() && cfg.pseudo_shift.is_zero(),
        "no scalar/pseudoscalar shift",
    )?;
    potentials_common(cfg, x, y, side, family, spec, false)
}

/// Nonabelian potentials with mass asymmetry `Y`; `X = 1`, `U = 1`.
fn potentials_with_mass<T: Scalar>(
    cfg: &ChiralConfig<T>,
    x: &FourVector<T>,
    y: &FourVector<T>,
    side: Side,
    family: Family,
    spec: &QuadratureSpec<T>,
) -> Result<ExpansionResult<T>> {
    require(cfg.u_l.is_identity() && cfg.u_r.is_identity(), "U = 1")?;
    require(is_identity(&cfg.x_l) && is_identity(&cfg.x_r), "X = 1")?;
    require(
        cfg.scalar_shift.is_zero() && cfg.pseudo_shift.is_zero(),
        "no scalar/pseudoscalar shift",
    )?;
    potentials_common(cfg, x, y, side, family, spec, true)
}

fn potentials_common<T: Scalar>(
    cfg: &ChiralConfig<T>,
    x: &FourVector<T>,
    y: &FourVector<T>,
    side: Side,
    family: Family,
    spec: &QuadratureSpec<T>,
    with_y: bool,
) -> Result<ExpansionResult<T>> {
    let xi = degenerate_check(x, y)?;
    let n = cfg.n;
    let dim = 4 * n;
    let m = cfg.mass;
    let (a_me, a_other) = match side {
        Side::L => (&cfg.a_l, &cfg.a_r),
        Side::R => (&cfg.a_r, &cfg.a_l),
    };
    let chi = chiral_projector::<T>(side);
    let chi_block = spinor_block(&chi, n);
    let slash_xi = spinor_block(&slash(&xi), n);

    let mut res = ExpansionResult::new(side, family, *x, *y, n);
    res.truncation.insert(TruncationClass::Log);
    res.truncation.insert(TruncationClass::MassSq);

    let cache_me = ChordTexpCache::new(a_me, x, y, spec);
    let cache_other = ChordTexpCache::new(a_other, x, y, spec);

    let te = cache_me.left(T::one())?;
    res.push(0, kron_embed(&chi, &te), "phase", 0, 0, 0);
    let mass_flavor = if with_y { &te * &cfg.y } else { te.clone() };
    res.push(
        1,
        kron_embed(&chi, &mass_flavor) * C::new(m, T::zero()),
        "mass-phase",
        1,
        0,
        0,
    );

    let sandwich =
        |alpha: T, middle: &dyn Fn(&FourVector<T>) -> BlockMatrix<T>| -> Result<BlockMatrix<T>> {
            let z = chord_point(x, y, alpha);
            let tl = cache_me.left(alpha)?;
            let tr = cache_me.right(alpha)?;
            Ok(flavor_block(&tl) * middle(&z) * flavor_block(&tr))
        };

    let half = C::new(T::lit(0.5), T::zero());
    let fs_int = quad_with_errors(
        |alpha| {
            sandwich(alpha, &|z| {
                field_strength_contraction(&field_strength(a_me, z), &xi)
            })
        },
        &Poly::two_alpha_minus_one(),
        spec,
        dim,
    )?;
    res.push(1, &chi_block * fs_int * (-half), "field-strength", 0, 1, 1);

    let xl = xi.lower();
    let cur_int = quad_with_errors(
        |alpha| {
            sandwich(alpha, &|z| {
                let j = current(a_me, z);
                let mut contracted = FlavorMatrix::zeros(n, n);
                for k in 0..4 {
                    contracted += &j[k] * C::new(xl[k], T::zero());
                }
                &slash_xi * flavor_block(&contracted)
            })
        },
        &Poly::alpha_sq_minus_alpha(),
        spec,
        dim,
    )?;
    res.push(1, &chi_block * cur_int * half, "current", 0, 2, 2);

    let orientation = cfg.epsilon_orientation;
    let pseudo_int = quad_with_errors(
        |alpha| {
            sandwich(alpha, &|z| {
                epsilon_pseudo_term(&field_strength(a_me, z), &xi, orientation)
            })
        },
        &Poly::one(),
        spec,
        dim,
    )?;
    res.push(
        1,
        &chi_block * pseudo_int * C::new(T::zero(), -T::lit(0.25)),
        "pseudoscalar",
        0,
        1,
        1,
    );

    // -(m/2) int Te_me (-i A_me Y + i Y A_other) slash-contracted, then
    // xislash, then Te_other
    let ic = C::new(T::zero(), T::one());
    let yid = if with_y {
        cfg.y.clone()
    } else {
        id_flavor::<T>(n)
    };
    let diff_int = quad_with_errors(
        |alpha| {
            let z = chord_point(x, y, alpha);
            let tl = cache_me.left(alpha)?;
            let tr = cache_other.right(alpha)?;
            let al = a_me.value_lower(&z);
            let ar = a_other.value_lower(&z);
            let mut mid = BlockMatrix::zeros(dim, dim);
            for k in 0..4 {
                let flavor = (&al[k] * &yid) * (-ic) + (&yid * &ar[k]) * ic;
                mid += kron_embed(&gamma::<T>(k), &flavor);
            }
            Ok(flavor_block(&tl) * mid * &slash_xi * flavor_block(&tr))
        },
        &Poly::one(),
        spec,
        dim,
    )?;
    res.push(
        1,
        &chi_block * diff_int * C::new(-m / T::lit(2.0), T::zero()),
        "mass-difference",
        1,
        1,
        1,
    );
    Ok(res)
}

/// Unitary perturbation only: phases from `U`, nonlocal mass term from the
/// plain gradient of `U_me^-1 Y U_other`.
fn unitary_only<T: Scalar>(
    cfg: &ChiralConfig<T>,
    x: &FourVector<T>,
    y: &FourVector<T>,
    side: Side,
    family: Family,
    spec: &QuadratureSpec<T>,
) -> Result<ExpansionResult<T>> {
    require(cfg.a_l.is_zero() && cfg.a_r.is_zero(), "A = 0")?;
    require(
        cfg.scalar_shift.is_zero() && cfg.pseudo_shift.is_zero(),
        "no scalar/pseudoscalar shift",
    )?;
    let xi = degenerate_check(x, y)?;
    let n = cfg.n;
    let m = cfg.mass;
    let (u_me, u_other, x_me, x_other) = match side {
        Side::L => (&cfg.u_l, &cfg.u_r, &cfg.x_l, &cfg.x_r),
        Side::R => (&cfg.u_r, &cfg.u_l, &cfg.x_r, &cfg.x_l),
    };
    let chi = chiral_projector::<T>(side);
    let slash_xi = spinor_block(&slash(&xi), n);

    let mut res = ExpansionResult::new(side, family, *x, *y, n);
    res.truncation.insert(TruncationClass::Log);
    res.truncation.insert(TruncationClass::MassSq);

    let phase_flavor = u_me.value(x) * x_me * u_me.value_inv(y);
    res.push(0, kron_embed(&chi, &phase_flavor), "phase", 0, 0, 0);
    res.push(
        1,
        kron_embed(&chi, &(&phase_flavor * &cfg.y)) * C::new(m, T::zero()),
        "mass-local",
        1,
        0,
        0,
    );

    // g = U_me^-1 Y U_other
    let g = MatrixFn::product(vec![
        MatrixFn::from_unitary_inv(u_me),
        MatrixFn::constant(cfg.y.clone()),
        MatrixFn::from_unitary(u_other),
    ]);
    let pieces = nonlocal_pieces(
        |lam: T| {
            let z = chord_point(x, y, lam);
            slash_gradient(&g, &z)
        },
        x,
        y,
        cfg.support_radius(),
        spec,
    )?;
    if !pieces.converged {
        return Err(Error::QuadratureDidNotConverge {
            error_bound: pieces.error_bound.to_subset().unwrap_or(f64::NAN),
            subdivisions: spec.max_subdivisions,
        });
    }
    let grad_eps = pieces.weighted(NonlocalWeight::EpsLambda);
    let grad_eps1 = pieces.weighted(NonlocalWeight::EpsOneMinusLambda);
    let brace = grad_eps * flavor_block(x_other) + flavor_block(x_me) * grad_eps1;
    let coeff = kron_embed(&chi, &u_me.value(x))
        * brace
        * &slash_xi
        * flavor_block(&u_other.value_inv(y))
        * C::new(-m / T::lit(4.0), T::zero());
    res.push(1, coeff, "mass-nonlocal", 1, 1, 1);
    Ok(res)
}

/// Full chiral data without scalar/pseudoscalar shifts, transcribed
/// independently of `chiral_expansion` (the nonlocal bracket is written out
/// rather than delegated).
fn full_chiral<T: Scalar>(
    cfg: &ChiralConfig<T>,
    x: &FourVector<T>,
    y: &FourVector<T>,
    side: Side,
    family: Family,
    spec: &QuadratureSpec<T>,
) -> Result<ExpansionResult<T>> {
    require(
        cfg.scalar_shift.is_zero() && cfg.pseudo_shift.is_zero(),
        "no scalar/pseudoscalar shift",
    )?;
    let xi = degenerate_check(x, y)?;
    commute_gate(cfg, x, y)?;
    let n = cfg.n;
    let dim = 4 * n;
    let m = cfg.mass;
    let (a_me, a_other, u_me, u_other, x_me, x_other) = match side {
        Side::L => (&cfg.a_l, &cfg.a_r, &cfg.u_l, &cfg.u_r, &cfg.x_l, &cfg.x_r),
        Side::R => (&cfg.a_r, &cfg.a_l, &cfg.u_r, &cfg.u_l, &cfg.x_r, &cfg.x_l),
    };
    let chi = chiral_projector::<T>(side);
    let slash_xi = spinor_block(&slash(&xi), n);

    let mut res = ExpansionResult::new(side, family, *x, *y, n);
    res.truncation.insert(TruncationClass::Log);
    res.truncation.insert(TruncationClass::MassSq);

    let cache_me = ChordTexpCache::new(a_me, x, y, spec);
    let cache_other = ChordTexpCache::new(a_other, x, y, spec);

    let te = cache_me.left(T::one())?;
    let phase_flavor = u_me.value(x) * &te * x_me * u_me.value_inv(y);
    res.push(0, kron_embed(&chi, &phase_flavor), "phase", 0, 0, 0);
    res.push(
        1,
        kron_embed(&chi, &(&phase_flavor * &cfg.y)) * C::new(m, T::zero()),
        "mass-local",
        1,
        0,
        0,
    );

    let left_wrap = kron_embed(&chi, &(u_me.value(x) * x_me));
    let right_wrap = flavor_block(&u_me.value_inv(y));
    let sandwich =
        |alpha: T, middle: &dyn Fn(&FourVector<T>) -> BlockMatrix<T>| -> Result<BlockMatrix<T>> {
            let z = chord_point(x, y, alpha);
            let tl = cache_me.left(alpha)?;
            let tr = cache_me.right(alpha)?;
            Ok(flavor_block(&tl) * middle(&z) * flavor_block(&tr))
        };

    let half = C::new(T::lit(0.5), T::zero());
    let fs_int = quad_with_errors(
        |alpha| {
            sandwich(alpha, &|z| {
                field_strength_contraction(&field_strength(a_me, z), &xi)
            })
        },
        &Poly::two_alpha_minus_one(),
        spec,
        dim,
    )?;
    res.push(
        1,
        &left_wrap * fs_int * &right_wrap * (-half),
        "field-strength",
        0,
        1,
        1,
    );

    let xl = xi.lower();
    let cur_int = quad_with_errors(
        |alpha| {
            sandwich(alpha, &|z| {
                let j = current(a_me, z);
                let mut contracted = FlavorMatrix::zeros(n, n);
                for k in 0..4 {
                    contracted += &j[k] * C::new(xl[k], T::zero());
                }
                &slash_xi * flavor_block(&contracted)
            })
        },
        &Poly::alpha_sq_minus_alpha(),
        spec,
        dim,
    )?;
    res.push(1, &left_wrap * cur_int * &right_wrap * half, "current", 0, 2, 2);

    let orientation = cfg.epsilon_orientation;
    let pseudo_int = quad_with_errors(
        |alpha| {
            sandwich(alpha, &|z| {
                epsilon_pseudo_term(&field_strength(a_me, z), &xi, orientation)
            })
        },
        &Poly::one(),
        spec,
        dim,
    )?;
    res.push(
        1,
        &left_wrap * pseudo_int * &right_wrap * C::new(T::zero(), -T::lit(0.25)),
        "pseudoscalar",
        0,
        1,
        1,
    );

    // nonlocal mass term with constant Y, the hat bracket written out
    let ic = C::new(T::zero(), T::one());
    let g = MatrixFn::product(vec![
        MatrixFn::from_unitary_inv(u_me),
        MatrixFn::constant(cfg.y.clone()),
        MatrixFn::from_unitary(u_other),
    ]);
    let mut failure: Option<Error> = None;
    let pieces = nonlocal_pieces(
        |lam: T| {
            let z = chord_point(x, y, lam);
            let assemble = || -> Result<BlockMatrix<T>> {
                let tl = cache_me.left(lam)?;
                let tr = cache_other.right(lam)?;
                let gv = g.value(&z);
                let al = a_me.value_lower(&z);
                let ar = a_other.value_lower(&z);
                let mut hat = BlockMatrix::zeros(dim, dim);
                for k in 0..4 {
                    let bracket = g.d1(&z, k) - &al[k] * &gv * ic + &gv * &ar[k] * ic;
                    hat += kron_embed(&gamma::<T>(k), &(&tl * bracket * &tr));
                }
                Ok(hat)
            };
            match assemble() {
                Ok(v) => v,
                Err(e) => {
                    if failure.is_none() {
                        failure = Some(e);
                    }
                    BlockMatrix::zeros(dim, dim)
                }
            }
        },
        x,
        y,
        cfg.support_radius(),
        spec,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    let hat_eps = pieces.weighted(NonlocalWeight::EpsLambda);
    let hat_eps1 = pieces.weighted(NonlocalWeight::EpsOneMinusLambda);
    let brace = hat_eps * flavor_block(x_other) + flavor_block(x_me) * hat_eps1;
    let coeff = kron_embed(&chi, &u_me.value(x))
        * brace
        * &slash_xi
        * flavor_block(&u_other.value_inv(y))
        * C::new(-m / T::lit(4.0), T::zero());
    res.push(1, coeff, "mass-nonlocal", 1, 1, 1);
    Ok(res)
}

/// Assemble the pointwise value `sum coeff * (kernel(xi) (x) 1)` over all
/// tags with nonzero coefficients.
pub fn evaluate_numeric<T: Scalar>(res: &ExpansionResult<T>, tol: T) -> Result<BlockMatrix<T>> {
    let xi = res.y - res.x;
    let dim = 4 * res.n;
    let mut acc = BlockMatrix::zeros(dim, dim);
    for term in &res.terms {
        if max_norm(&term.coeff) == T::zero() {
            continue;
        }
        let k = kernel_value(term.tag, &xi, tol)?;
        acc += &term.coeff * spinor_block(&k, res.n);
    }
    Ok(acc)
}

/// Relative hermiticity defect of the assembled two-point kernel under the
/// Dirac adjoint and `(x, y)` swap, for the pointwise-evaluable family.
pub fn hermiticity_defect<T: Scalar>(
    cfg: &ChiralConfig<T>,
    x: &FourVector<T>,
    y: &FourVector<T>,
    spec: &QuadratureSpec<T>,
) -> Result<T> {
    let xi = *y - *x;
    let tol = default_lightcone_tol(&xi);
    let both = |a: &FourVector<T>, b: &FourVector<T>| -> Result<BlockMatrix<T>> {
        let l = chiral_expansion(cfg, a, b, Side::L, Family::P, spec)?;
        let r = chiral_expansion(cfg, a, b, Side::R, Family::P, spec)?;
        Ok(evaluate_numeric(&l, tol)? + evaluate_numeric(&r, tol)?)
    };
    let fwd = both(x, y)?;
    let bwd = both(y, x)?;
    let defect = max_norm(&(dirac_adjoint(&bwd) - &fwd));
    let scale = max_norm(&fwd);
    Ok(defect / (scale + T::lit(1e-300)))
}

/// First-order response of the expansion to scaling the potentials:
/// `(chiral_expansion(eps A) - chiral_expansion(0)) / eps`.
pub fn linearize_in_potential<T: Scalar>(
    cfg: &ChiralConfig<T>,
    x: &FourVector<T>,
    y: &FourVector<T>,
    side: Side,
    eps: T,
    spec: &QuadratureSpec<T>,
) -> Result<ExpansionResult<T>> {
    let scaled = scale_potentials(cfg, eps)?;
    let zeroed = scale_potentials(cfg, T::zero())?;
    let with = chiral_expansion(&scaled, x, y, side, Family::P, spec)?;
    let without = chiral_expansion(&zeroed, x, y, side, Family::P, spec)?;
    let mut res = ExpansionResult::new(side, Family::P, *x, *y, cfg.n);
    res.truncation = with.truncation.clone();
    let inv = C::new(eps.recip(), T::zero());
    for t in &with.terms {
        let base = without
            .terms
            .iter()
            .find(|u| u.tag == t.tag && u.provenance == t.provenance)
            .map(|u| u.coeff.clone())
            .unwrap_or_else(|| BlockMatrix::zeros(4 * cfg.n, 4 * cfg.n));
        res.terms.push(Term {
            tag: t.tag,
            coeff: (&t.coeff - base) * inv,
            provenance: t.provenance,
            mass_order: t.mass_order,
            deriv_count: t.deriv_count,
            xi_power: t.xi_power,
        });
    }
    Ok(res)
}

/// Scale both chiral potentials; only explicit component fields scale
/// structurally.
pub fn scale_potentials<T: Scalar>(cfg: &ChiralConfig<T>, factor: T) -> Result<ChiralConfig<T>> {
    let mut out = cfg.clone();
    out.a_l = cfg.a_l.scaled(factor)?;
    out.a_r = cfg.a_r.scaled(factor)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{MatrixField, ScalarProfile, UnitaryField, VectorFlavorField, VectorTerm};
    use crate::kernels::KernelTag;
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

    fn herm2(a: f64, b: f64, c: f64, d: f64) -> FlavorMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[cc(a, 0.0), cc(b, c), cc(b, -c), cc(d, 0.0)])
    }

    fn chord() -> (FourVector<f64>, FourVector<f64>) {
        (
            FourVector([-0.4, 0.15, 0.1, -0.05]),
            FourVector([0.9, -0.1, 0.3, 0.2]),
        )
    }

    #[test]
    fn classifier_table() {
        assert_eq!(singular_order(0, 0), SingularOrder::SlashPole { exponent: -4 });
        assert_eq!(singular_order(1, 0), SingularOrder::Pole { exponent: -2 });
        assert_eq!(singular_order(0, 1), SingularOrder::Pole { exponent: -2 });
        assert_eq!(singular_order(1, 1), SingularOrder::SlashPole { exponent: -2 });
        assert_eq!(singular_order(1, 2), SingularOrder::Log);
        assert_eq!(singular_order(0, 4), SingularOrder::SlashLog);
        assert_eq!(singular_order(3, 2), SingularOrder::Bounded);
        assert_eq!(singular_order(5, 4), SingularOrder::Bounded);
    }

    #[test]
    fn free_projector_terms() {
        let spec = Spec::default();
        let cfg = ChiralConfig::free(1, 0.6);
        let (x, y) = chord();
        for side in [Side::L, Side::R] {
            let res = chiral_expansion(&cfg, &x, &y, side, Family::P, &spec).unwrap();
            let chi = spinor_block(&chiral_projector::<f64>(side), 1);
            let c0 = res.total_coeff(KernelTag::p(0));
            assert!(max_norm(&(&c0 - &chi)) < 1e-12);
            let c1 = res.total_coeff(KernelTag::p(1));
            assert!(max_norm(&(c1 - &chi * cc(0.6, 0.0))) < 1e-12);
            assert!(res.singular_order_consistent());

            // numeric value: chi (x) (p0 + m p1)
            let xi = y - x;
            let tol = default_lightcone_tol(&xi);
            let v = evaluate_numeric(&res, tol).unwrap();
            let k0 = kernel_value(KernelTag::p(0), &xi, tol).unwrap();
            let k1 = kernel_value(KernelTag::p(1), &xi, tol).unwrap();
            let expect =
                spinor_block(&(chiral_projector::<f64>(side) * (k0 + k1 * cc(0.6, 0.0))), 1);
            assert!(max_norm(&(v - expect)) < 1e-14);
        }
    }

    #[test]
    fn degenerate_chord_rejected() {
        let spec = Spec::default();
        let cfg = ChiralConfig::free(1, 0.5);
        let x = FourVector([0.3, 0.0, 0.0, 0.0]);
        assert!(matches!(
            chiral_expansion(&cfg, &x, &x, Side::L, Family::P, &spec),
            Err(Error::DegenerateChord)
        ));
    }

    #[test]
    fn commute_gate_rejects() {
        let spec = Spec::default();
        let mut cfg = ChiralConfig::free(2, 0.5);
        cfg.a_l = VectorFlavorField::new(
            2,
            vec![VectorTerm {
                lorentz_index: 1,
                profile: bump([0.0; 4], 1.0, 0.5),
                matrix: herm2(0.0, 1.0, 0.0, 0.0),
            }],
        )
        .unwrap();
        cfg.x_l = DMatrix::from_row_slice(
            2,
            2,
            &[cc(1.0, 0.0), cc(0.0, 0.0), cc(0.0, 0.0), cc(0.0, 0.0)],
        );
        cfg.x_r = cfg.x_l.clone();
        let (x, y) = chord();
        assert!(matches!(
            chiral_expansion(&cfg, &x, &y, Side::L, Family::P, &spec),
            Err(Error::HypothesisViolated(_))
        ));
    }

    #[test]
    fn abelian_phase_case() {
        // A_L = A_R = grad Lambda with equal phases: pure U(1) transformation,
        // curvature and nonlocal terms vanish
        let spec = Spec::default();
        let lam = bump([0.1, 0.0, -0.1, 0.0], 1.0, 0.6);
        let one = DMatrix::from_row_slice(1, 1, &[cc(1.0, 0.0)]);
        let u = UnitaryField::new(1, vec![(lam.clone(), one.clone())]).unwrap();
        let a = VectorFlavorField::pure_gauge(&u);
        let mut cfg = ChiralConfig::free(1, 0.7);
        cfg.a_l = a.clone();
        cfg.a_r = a;
        let (x, y) = chord();
        let res = chiral_expansion(&cfg, &x, &y, Side::L, Family::P, &spec).unwrap();

        let dlam = lam.value(&x) - lam.value(&y);
        let phase = cc(dlam.cos(), dlam.sin());
        let chi = spinor_block(&chiral_projector::<f64>(Side::L), 1);
        let c0 = res.total_coeff(KernelTag::p(0));
        assert!(max_norm(&(c0 - &chi * phase)) < 1e-8, "abelian phase on C0");

        // the curvature pieces vanish for pure gauge
        for t in &res.terms {
            if t.provenance == "field-strength"
                || t.provenance == "current"
                || t.provenance == "pseudoscalar"
            {
                assert!(max_norm(&t.coeff) < 1e-5, "{} nonzero", t.provenance);
            }
            if t.provenance == "mass-nonlocal" {
                // Lambda_L = Lambda_R: the bracket collapses to
                // -i(A_L - A_R) = 0
                assert!(max_norm(&t.coeff) < 1e-8, "nonlocal should vanish");
            }
        }
        // C1 total = m * phase * chi
        let c1 = res.total_coeff(KernelTag::p(1));
        assert!(max_norm(&(c1 - &chi * (phase * cc(0.7, 0.0)))) < 1e-7);
    }

    #[test]
    fn trivial_reference_reductions() {
        // the unitary-only reference on the free configuration reduces to
        // the free projector, and coincides with the full evaluator
        let spec = Spec::default();
        let cfg = ChiralConfig::free(2, 0.45);
        let (x, y) = chord();
        for side in [Side::L, Side::R] {
            let full = chiral_expansion(&cfg, &x, &y, side, Family::P, &spec).unwrap();
            let reference = reference_expansion(
                ReferenceVariant::UnitaryOnly,
                &cfg,
                &x,
                &y,
                side,
                Family::P,
                &spec,
            )
            .unwrap();
            assert!(full.max_tag_difference(&reference) < 1e-12);
            let chi = spinor_block(&chiral_projector::<f64>(side), 2);
            assert!(max_norm(&(reference.total_coeff(KernelTag::p(0)) - &chi)) < 1e-14);
            assert!(
                max_norm(&(reference.total_coeff(KernelTag::p(1)) - &chi * cc(0.45, 0.0)))
                    < 1e-14
            );
        }
        // hypothesis gates reject out-of-class configurations
        let mut with_a = cfg.clone();
        with_a.a_l = VectorFlavorField::new(
            2,
            vec![VectorTerm {
                lorentz_index: 0,
                profile: bump([0.0; 4], 1.0, 0.4),
                matrix: herm2(0.2, 0.0, 0.1, -0.1),
            }],
        )
        .unwrap();
        assert!(matches!(
            reference_expansion(ReferenceVariant::UnitaryOnly, &with_a, &x, &y, Side::L, Family::P, &spec),
            Err(Error::HypothesisViolated(_))
        ));
        assert!(matches!(
            reference_expansion(ReferenceVariant::AbelianPhases, &cfg, &x, &y, Side::L, Family::P, &spec),
            Err(Error::HypothesisViolated(_))
        ));
    }

    #[test]
    fn evaluate_numeric_is_linear_and_rejects_symbolic() {
        let spec = Spec::default();
        let cfg = ChiralConfig::free(1, 0.5);
        let (x, y) = chord();
        let res = chiral_expansion(&cfg, &x, &y, Side::L, Family::P, &spec).unwrap();
        let xi = y - x;
        let tol = default_lightcone_tol(&xi);
        let v = evaluate_numeric(&res, tol).unwrap();
        let mut doubled = res.clone();
        for t in &mut doubled.terms {
            t.coeff *= cc(2.0, 0.0);
        }
        let v2 = evaluate_numeric(&doubled, tol).unwrap();
        assert!(max_norm(&(v2 - &v * cc(2.0, 0.0))) < 1e-14);

        // family k with nonzero non-evaluable terms errors
        let resk = chiral_expansion(&cfg, &x, &y, Side::L, Family::K, &spec).unwrap();
        assert!(matches!(
            evaluate_numeric(&resk, tol),
            Err(Error::NonEvaluableKernel(_))
        ));
    }

    #[test]
    fn free_hermiticity() {
        let spec = Spec::default();
        let cfg = ChiralConfig::free(2, 0.8);
        let (x, y) = chord();
        let d = hermiticity_defect(&cfg, &x, &y, &spec).unwrap();
        assert!(d < 1e-12, "free-case hermiticity defect {d}");
    }

    #[test]
    fn json_round_trip() {
        let spec = Spec::default();
        let mut cfg = ChiralConfig::free(2, 0.5);
        cfg.scalar_shift = MatrixField::new(
            2,
            vec![(bump([0.0; 4], 1.0, 0.4), herm2(0.2, 0.1, -0.1, -0.3))],
        )
        .unwrap();
        let (x, y) = chord();
        let res = chiral_expansion(&cfg, &x, &y, Side::L, Family::P, &spec).unwrap();
        let json = serde_json::to_string(&res.to_json()).unwrap();
        let parsed: ExpansionJson = serde_json::from_str(&json).unwrap();
        let back: ExpansionResult<f64> = ExpansionResult::from_json(&parsed).unwrap();
        assert_eq!(back.terms.len(), res.terms.len());
        for (a, b) in res.terms.iter().zip(back.terms.iter()) {
            assert_eq!(a.tag, b.tag);
            assert!(max_norm(&(&a.coeff - &b.coeff)) < 1e-15);
        }
        assert_eq!(back.truncation, res.truncation);
    }
}
