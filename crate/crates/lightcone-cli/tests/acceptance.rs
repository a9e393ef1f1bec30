//! Acceptance suite: every verification criterion at its stated tolerance,
//! one pass/fail line per criterion (run with `--nocapture` to see them all).

use lightcone::verify::{
    classifier_suite, double_integral_suite, dyson_suite, hermiticity_suite, kernel_suite,
    linearization_suite, moment_reduction_suite, reduction_suite, texp_identity_suite,
    VerifyOptions,
};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

fn opts() -> VerifyOptions {
    VerifyOptions::default()
}

fn report(criterion: &str, checks: &[lightcone::verify::CheckResult]) {
    let mut all = true;
    for c in checks {
        println!(
            "ACCEPTANCE {criterion} [{}]: {} (value {:.3e}, threshold {:.3e}, {:.2}s)",
            c.name,
            if c.passed { "PASS" } else { "FAIL" },
            c.value,
            c.threshold,
            c.seconds
        );
        all &= c.passed;
    }
    assert!(all, "criterion {criterion} failed");
}

#[test]
fn criterion_01_texp_identities() {
    // composition / adjoint / unitarity at 1e-10, chord ODE residuals at
    // 1e-6 with observed convergence order, pure gauge / conjugation /
    // difference identities at 1e-8, within the runtime budget
    let checks = texp_identity_suite(&opts());
    report("1-texp-identities", &checks);
}

#[test]
fn criterion_02_dyson_oracle() {
    let checks = dyson_suite(&opts());
    report("2-dyson-oracle", &checks);
}

#[test]
fn criterion_03_nested_moment_reduction() {
    let check = moment_reduction_suite(&opts());
    report("3-nested-moment-reduction", &[check]);
}

#[test]
fn criterion_04_singular_order_classifier() {
    let check = classifier_suite();
    report("4-singular-order-classifier", &[check]);
}

#[test]
fn criterion_05_reduction_chain() {
    let checks = reduction_suite(&opts());
    report("5-reduction-chain", &checks);
}

#[test]
fn criterion_06_hermiticity() {
    let checks = hermiticity_suite(&opts());
    report("6-hermiticity", &checks);
}

#[test]
fn criterion_07_linearization() {
    let check = linearization_suite(&opts());
    report("7-linearization", &[check]);
}

#[test]
fn criterion_08_double_integral_oracle() {
    let check = double_integral_suite(&opts());
    report("8-double-integral-oracle", &[check]);
}

#[test]
fn criterion_09_kernel_closed_forms() {
    let checks = kernel_suite(&opts());
    report("9-kernel-closed-forms", &checks);
}

#[test]
fn criterion_10_full_verify_runtime() {
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/verify.toml");
    let t0 = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_lightcone"))
        .arg("verify")
        .arg(&config)
        .output()
        .expect("binary runs");
    let elapsed = t0.elapsed().as_secs_f64();
    let passed = out.status.success() && elapsed <= 300.0;
    println!(
        "ACCEPTANCE 10-full-verify-runtime [verify-cli]: {} (value {:.1}s, threshold 300s)",
        if passed { "PASS" } else { "FAIL" },
        elapsed
    );
    if !out.status.success() {
        println!("{}", String::from_utf8_lossy(&out.stdout));
        eprintln!("{}", String::from_utf8_lossy(&out.stderr));
    }
    assert!(passed, "full verification run failed or exceeded the budget");
}
