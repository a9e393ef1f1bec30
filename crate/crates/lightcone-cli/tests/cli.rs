//! End-to-end checks of the command-line interface: exit codes, output
//! schema, determinism, and the documented JSON round trip.

use lightcone::expansion::{ExpansionJson, ExpansionResult};
use lightcone::kernels::KernelTag;
use lightcone::spin_algebra::max_norm;
use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lightcone"))
}

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

#[test]
fn missing_config_exits_2() {
    let out = bin().args(["run", "/nonexistent/nope.toml"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn schema_violation_exits_2_with_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[model]\nn = 2\nmass = 0.5\nunknown_knob = 3\n").unwrap();
    let out = bin().args(["run"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("config error"), "stderr: {stderr}");
    assert!(stderr.contains("unknown_knob"), "diagnostics name the field: {stderr}");

    // non-hermitian matrix data is a validation error
    let bad2 = dir.path().join("bad2.toml");
    std::fs::write(
        &bad2,
        "[model]\nn = 2\nmass = 0.5\ny = [[1.0, 3.0], [0.0, 1.0]]\n\n[[chords]]\nx = [0,0,0,0]\ny = [1,0,0,0]\n",
    )
    .unwrap();
    let out2 = bin().args(["run"]).arg(&bad2).output().unwrap();
    assert_eq!(out2.status.code(), Some(2));
}

#[test]
fn free_run_writes_projector_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["run"])
        .arg(config_path("free.toml"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let text = std::fs::read_to_string(dir.path().join("chord000_L_p_first.json")).unwrap();
    let parsed: ExpansionJson = serde_json::from_str(&text).unwrap();
    let res: ExpansionResult<f64> = ExpansionResult::from_json(&parsed).unwrap();

    // C0 = chi_L, C1 = m chi_L for the free configuration
    let chi_l = lightcone::spin_algebra::spinor_block(
        &lightcone::spin_algebra::chiral_projector::<f64>(lightcone::spin_algebra::Side::L),
        1,
    );
    assert!(max_norm(&(res.total_coeff(KernelTag::p(0)) - &chi_l)) < 1e-12);
    assert!(
        max_norm(&(res.total_coeff(KernelTag::p(1)) - &chi_l * num_complex::Complex::new(0.6, 0.0)))
            < 1e-12
    );

    // numeric CSV exists with the documented header
    let csv = std::fs::read_to_string(dir.path().join("numeric_samples.csv")).unwrap();
    assert!(csv.starts_with("chord,side,lambda,xi_sq,frobenius_norm,entry00_re,entry00_im"));
    assert!(csv.lines().count() > 4);
}

#[test]
fn abelian_phase_appears_in_emitted_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["run"])
        .arg(config_path("abelian_phase.toml"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("chord000_L_p_first.json")).unwrap();
    let parsed: ExpansionJson = serde_json::from_str(&text).unwrap();
    let res: ExpansionResult<f64> = ExpansionResult::from_json(&parsed).unwrap();

    // expected phase difference of the bundled profile between the endpoints
    let profile = lightcone::fields::ScalarProfile::Gaussian {
        center: lightcone::FourVector64::new(0.1, 0.0, -0.1, 0.0),
        width: 1.0,
        amplitude: 0.6,
    };
    let x = lightcone::FourVector64::new(-0.4, 0.15, 0.1, -0.05);
    let y = lightcone::FourVector64::new(0.9, -0.1, 0.3, 0.2);
    let dlam = profile.value(&x) - profile.value(&y);
    let phase = num_complex::Complex::new(dlam.cos(), dlam.sin());

    let chi_l = lightcone::spin_algebra::spinor_block(
        &lightcone::spin_algebra::chiral_projector::<f64>(lightcone::spin_algebra::Side::L),
        1,
    );
    let c0 = res.total_coeff(KernelTag::p(0));
    assert!(
        max_norm(&(c0 - chi_l * phase)) < 1e-8,
        "emitted order-0 coefficient carries the phase"
    );
}

#[test]
fn output_is_deterministic() {
    let dir1 = tempfile::tempdir().unwrap();
    let dir2 = tempfile::tempdir().unwrap();
    for dir in [&dir1, &dir2] {
        let out = bin()
            .args(["run"])
            .arg(config_path("nonabelian.toml"))
            .arg("--out")
            .arg(dir.path())
            .arg("--jobs")
            .arg("2")
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for entry in std::fs::read_dir(dir1.path()).unwrap() {
        let name = entry.unwrap().file_name();
        let a = std::fs::read(dir1.path().join(&name)).unwrap();
        let b = std::fs::read(dir2.path().join(&name)).unwrap();
        assert_eq!(a, b, "{name:?} differs between identical runs");
    }
}

#[test]
fn mass2_run_requires_vanishing_potentials() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("m2bad.toml");
    std::fs::write(
        &cfg,
        r#"
[run]
mass2 = true
first_order = false

[model]
n = 1
mass = 0.5

[model.potential_l]
terms = [ { lorentz_index = 0, profile = { kind = "gaussian", center = [0,0,0,0], width = 1.0, amplitude = 0.4 }, matrix = [[1.0]] } ]

[[chords]]
x = [-0.4, 0.15, 0.1, -0.05]
y = [0.9, -0.1, 0.3, 0.2]
"#,
    )
    .unwrap();
    let out = bin().args(["run"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(3), "numerical failure exit code");
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("numerical failure"), "stderr: {stderr}");
}

#[test]
fn verify_smoke_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("verify_small.toml");
    std::fs::write(
        &cfg,
        "[model]\nn = 1\nmass = 0.5\n[verify]\nseed = 3\ntexp_chords_per_n = 1\nreduction_configs = 1\nhermiticity_configs = 1\ndyson_instances = 1\numf_functions = 2\nkernel_samples = 5\n",
    )
    .unwrap();
    let out = bin()
        .args(["verify"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = std::fs::read_to_string(dir.path().join("verify_report.json")).unwrap();
    assert!(report.contains("\"seed\": 3"));
}
