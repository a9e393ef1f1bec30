//! Declarative run configuration: a single TOML document describing the
//! perturbation data, the chords to evaluate, tolerances and output options.
//!
//! Complex matrix entries are written either as plain numbers (real) or as
//! `[re, im]` pairs; matrices are row-major lists of rows.

use anyhow::{anyhow, bail, Context};
use lightcone::fields::{
    ChiralConfig, MatrixField, ScalarProfile, UnitaryField, VectorFlavorField, VectorTerm,
};
use lightcone::minkowski::{EpsilonOrientation, Segment};
use lightcone::quadrature::QuadratureSpec;
use lightcone::spin_algebra::Side;
use lightcone::kernels::Family;
use lightcone::verify::VerifyOptions;
use lightcone::{FlavorMatrix, FourVector64, C};
use serde::Deserialize;

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub quadrature: QuadratureSection,
    pub model: ModelSection,
    #[serde(default)]
    pub chords: Vec<ChordSection>,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub verify: VerifySection,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default = "default_sides")]
    pub sides: Vec<String>,
    #[serde(default = "default_families")]
    pub families: Vec<String>,
    /// Evaluate the first-order expansion block.
    #[serde(default = "default_true")]
    pub first_order: bool,
    /// Evaluate the m^2 block (requires vanishing potentials).
    #[serde(default)]
    pub mass2: bool,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            sides: default_sides(),
            families: default_families(),
            first_order: true,
            mass2: false,
        }
    }
}

fn default_sides() -> Vec<String> {
    vec!["L".into(), "R".into()]
}

fn default_families() -> Vec<String> {
    vec!["p".into()]
}

fn default_true() -> bool {
    true
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSection {
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_abs_tol")]
    pub abs_tol: f64,
    #[serde(default = "default_max_subdivisions")]
    pub max_subdivisions: usize,
}

impl Default for QuadratureSection {
    fn default() -> Self {
        QuadratureSection {
            rel_tol: default_rel_tol(),
            abs_tol: default_abs_tol(),
            max_subdivisions: default_max_subdivisions(),
        }
    }
}

fn default_rel_tol() -> f64 {
    1e-10
}
fn default_abs_tol() -> f64 {
    1e-12
}
fn default_max_subdivisions() -> usize {
    2000
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub n: usize,
    pub mass: f64,
    /// "plus" (default) or "minus": orientation of the antisymmetric symbol.
    #[serde(default)]
    pub epsilon_orientation: Option<String>,
    pub y: Option<MatrixIn>,
    pub x_l: Option<MatrixIn>,
    pub x_r: Option<MatrixIn>,
    pub potential_l: Option<PotentialIn>,
    pub potential_r: Option<PotentialIn>,
    pub unitary_l: Option<UnitaryIn>,
    pub unitary_r: Option<UnitaryIn>,
    pub scalar_shift: Option<MatrixFieldIn>,
    pub pseudo_shift: Option<MatrixFieldIn>,
}

#[derive(Deserialize, Debug)]
#[serde(untagged)]
pub enum EntryIn {
    Re(f64),
    Complex([f64; 2]),
}

impl EntryIn {
    fn value(&self) -> C<f64> {
        match self {
            EntryIn::Re(re) => C::new(*re, 0.0),
            EntryIn::Complex([re, im]) => C::new(*re, *im),
        }
    }
}

pub type MatrixIn = Vec<Vec<EntryIn>>;

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
pub struct PotentialIn {
    #[serde(default)]
    pub terms: Vec<PotentialTermIn>,
    /// Use the pure-gauge potential of the named unitary field
    /// ("unitary_l" or "unitary_r") instead of explicit terms. The unitary
    /// still dresses the operator; for a potential-only pure gauge use
    /// `pure_gauge` with inline factors.
    pub pure_gauge_of: Option<String>,
    /// Inline pure-gauge potential from the given factors; the factors do
    /// not enter the operator as a unitary dressing.
    pub pure_gauge: Option<UnitaryIn>,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
pub struct PotentialTermIn {
    pub lorentz_index: usize,
    pub profile: ScalarProfile<f64>,
    pub matrix: MatrixIn,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
pub struct UnitaryIn {
    pub factors: Vec<UnitaryFactorIn>,
}

impl UnitaryIn {
    fn factors_clone(&self) -> Vec<UnitaryFactorIn> {
        self.factors
            .iter()
            .map(|f| UnitaryFactorIn {
                profile: f.profile.clone(),
                generator: f.generator.iter().map(|row| row.iter().map(|e| match e {
                    EntryIn::Re(v) => EntryIn::Re(*v),
                    EntryIn::Complex(c) => EntryIn::Complex(*c),
                }).collect()).collect(),
            })
            .collect()
    }
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
pub struct UnitaryFactorIn {
    pub profile: ScalarProfile<f64>,
    pub generator: MatrixIn,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
pub struct MatrixFieldIn {
    pub terms: Vec<MatrixFieldTermIn>,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
pub struct MatrixFieldTermIn {
    pub profile: ScalarProfile<f64>,
    pub matrix: MatrixIn,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
pub struct ChordSection {
    pub x: [f64; 4],
    pub y: [f64; 4],
}

#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<String>,
    /// Number of numeric sample points along the chord parameter for the
    /// CSV table (0 disables it).
    #[serde(default)]
    pub numeric_samples: usize,
    /// Sample window in the chord parameter (defaults to [0.1, 0.9]).
    pub sample_window: Option<[f64; 2]>,
}

#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    pub seed: Option<u64>,
    pub texp_chords_per_n: Option<usize>,
    pub reduction_configs: Option<usize>,
    pub hermiticity_configs: Option<usize>,
    pub dyson_instances: Option<usize>,
    pub umf_functions: Option<usize>,
    pub kernel_samples: Option<usize>,
}

/// Everything resolved and validated, ready to evaluate.
pub struct ResolvedConfig {
    pub cfg: ChiralConfig<f64>,
    pub spec: QuadratureSpec<f64>,
    pub sides: Vec<Side>,
    pub families: Vec<Family>,
    pub first_order: bool,
    pub mass2: bool,
    pub chords: Vec<Segment<f64>>,
    pub out_dir: Option<String>,
    pub numeric_samples: usize,
    pub sample_window: [f64; 2],
    pub verify: VerifyOptions,
}

fn to_matrix(m: &MatrixIn, n: usize, what: &str) -> anyhow::Result<FlavorMatrix<f64>> {
    if m.len() != n || m.iter().any(|row| row.len() != n) {
        bail!("{what}: expected an {n}x{n} matrix");
    }
    Ok(FlavorMatrix::from_fn(n, n, |r, c| m[r][c].value()))
}

fn to_potential(
    p: &PotentialIn,
    n: usize,
    unitaries: (&UnitaryField<f64>, &UnitaryField<f64>),
    what: &str,
) -> anyhow::Result<VectorFlavorField<f64>> {
    if p.pure_gauge_of.is_some() as usize
        + p.pure_gauge.is_some() as usize
        + (!p.terms.is_empty()) as usize
        > 1
    {
        bail!("{what}: terms, pure_gauge_of and pure_gauge are mutually exclusive");
    }
    if let Some(name) = &p.pure_gauge_of {
        let u = match name.as_str() {
            "unitary_l" => unitaries.0,
            "unitary_r" => unitaries.1,
            other => bail!("{what}: unknown unitary reference '{other}'"),
        };
        return Ok(VectorFlavorField::pure_gauge(u));
    }
    if let Some(inline) = &p.pure_gauge {
        let u = to_unitary(&Some(UnitaryIn { factors: inline.factors_clone() }), n, what)?;
        return Ok(VectorFlavorField::pure_gauge(&u));
    }
    let terms = p
        .terms
        .iter()
        .map(|t| {
            Ok(VectorTerm {
                lorentz_index: t.lorentz_index,
                profile: t.profile.clone(),
                matrix: to_matrix(&t.matrix, n, what)?,
            })
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    VectorFlavorField::new(n, terms).map_err(|e| anyhow!("{what}: {e}"))
}

fn to_unitary(u: &Option<UnitaryIn>, n: usize, what: &str) -> anyhow::Result<UnitaryField<f64>> {
    match u {
        None => Ok(UnitaryField::identity(n)),
        Some(u) => {
            let factors = u
                .factors
                .iter()
                .map(|f| Ok((f.profile.clone(), to_matrix(&f.generator, n, what)?)))
                .collect::<anyhow::Result<Vec<_>>>()?;
            UnitaryField::new(n, factors).map_err(|e| anyhow!("{what}: {e}"))
        }
    }
}

fn to_matrix_field(
    m: &Option<MatrixFieldIn>,
    n: usize,
    what: &str,
) -> anyhow::Result<MatrixField<f64>> {
    match m {
        None => Ok(MatrixField::zero(n)),
        Some(m) => {
            let terms = m
                .terms
                .iter()
                .map(|t| Ok((t.profile.clone(), to_matrix(&t.matrix, n, what)?)))
                .collect::<anyhow::Result<Vec<_>>>()?;
            MatrixField::new(n, terms).map_err(|e| anyhow!("{what}: {e}"))
        }
    }
}

pub fn parse(text: &str) -> anyhow::Result<ResolvedConfig> {
    let file: RunConfigFile = toml::from_str(text).context("config does not match the schema")?;
    let n = file.model.n;
    if n == 0 || n > 8 {
        bail!("model.n must be between 1 and 8");
    }

    let u_l = to_unitary(&file.model.unitary_l, n, "unitary_l")?;
    let u_r = to_unitary(&file.model.unitary_r, n, "unitary_r")?;
    let a_l = match &file.model.potential_l {
        None => VectorFlavorField::zero(n),
        Some(p) => to_potential(p, n, (&u_l, &u_r), "potential_l")?,
    };
    let a_r = match &file.model.potential_r {
        None => VectorFlavorField::zero(n),
        Some(p) => to_potential(p, n, (&u_l, &u_r), "potential_r")?,
    };

    let id = FlavorMatrix::identity(n, n);
    let y = match &file.model.y {
        None => id.clone(),
        Some(m) => to_matrix(m, n, "y")?,
    };
    let x_l = match &file.model.x_l {
        None => id.clone(),
        Some(m) => to_matrix(m, n, "x_l")?,
    };
    let x_r = match &file.model.x_r {
        None => id,
        Some(m) => to_matrix(m, n, "x_r")?,
    };
    let epsilon_orientation = match file.model.epsilon_orientation.as_deref() {
        None | Some("plus") => EpsilonOrientation::PlusE0123,
        Some("minus") => EpsilonOrientation::MinusE0123,
        Some(other) => bail!("epsilon_orientation must be 'plus' or 'minus', got '{other}'"),
    };

    let cfg = ChiralConfig {
        a_l,
        a_r,
        u_l,
        u_r,
        scalar_shift: to_matrix_field(&file.model.scalar_shift, n, "scalar_shift")?,
        pseudo_shift: to_matrix_field(&file.model.pseudo_shift, n, "pseudo_shift")?,
        y,
        x_l,
        x_r,
        mass: file.model.mass,
        n,
        epsilon_orientation,
    };
    cfg.validate().map_err(|e| anyhow!("model: {e}"))?;

    let sides = file
        .run
        .sides
        .iter()
        .map(|s| match s.as_str() {
            "L" => Ok(Side::L),
            "R" => Ok(Side::R),
            other => bail!("run.sides entries must be 'L' or 'R', got '{other}'"),
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let families = file
        .run
        .families
        .iter()
        .map(|s| match s.as_str() {
            "p" => Ok(Family::P),
            "k" => Ok(Family::K),
            other => bail!("run.families entries must be 'p' or 'k', got '{other}'"),
        })
        .collect::<anyhow::Result<Vec<_>>>()?;

    if file.quadrature.rel_tol <= 0.0 || file.quadrature.abs_tol <= 0.0 {
        bail!("quadrature tolerances must be positive");
    }
    let spec = QuadratureSpec {
        rel_tol: file.quadrature.rel_tol,
        abs_tol: file.quadrature.abs_tol,
        max_subdivisions: file.quadrature.max_subdivisions,
    };

    let chords = file
        .chords
        .iter()
        .map(|c| {
            Segment::new(
                FourVector64::new(c.x[0], c.x[1], c.x[2], c.x[3]),
                FourVector64::new(c.y[0], c.y[1], c.y[2], c.y[3]),
            )
        })
        .collect();

    let sample_window = file.output.sample_window.unwrap_or([0.1, 0.9]);
    if sample_window[0] >= sample_window[1] {
        bail!("output.sample_window must be increasing");
    }

    let defaults = VerifyOptions::default();
    let verify = VerifyOptions {
        seed: file.verify.seed.unwrap_or(defaults.seed),
        spec,
        texp_chords_per_n: file
            .verify
            .texp_chords_per_n
            .unwrap_or(defaults.texp_chords_per_n),
        reduction_configs: file
            .verify
            .reduction_configs
            .unwrap_or(defaults.reduction_configs),
        hermiticity_configs: file
            .verify
            .hermiticity_configs
            .unwrap_or(defaults.hermiticity_configs),
        dyson_instances: file.verify.dyson_instances.unwrap_or(defaults.dyson_instances),
        umf_functions: file.verify.umf_functions.unwrap_or(defaults.umf_functions),
        kernel_samples: file.verify.kernel_samples.unwrap_or(defaults.kernel_samples),
    };

    Ok(ResolvedConfig {
        cfg,
        spec,
        sides,
        families,
        first_order: file.run.first_order,
        mass2: file.run.mass2,
        chords,
        out_dir: file.output.dir.clone(),
        numeric_samples: file.output.numeric_samples,
        sample_window,
        verify,
    })
}
