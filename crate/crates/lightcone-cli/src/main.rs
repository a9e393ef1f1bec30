//! Config-driven runner: evaluate light-cone expansion coefficients along
//! chords and emit JSON coefficient tables, numeric CSV samples, and
//! verification reports.
//!
//! Exit codes: 0 success, 2 config error, 3 numerical failure.

mod config;

use clap::{Parser, Subcommand};
use lightcone::expansion::{chiral_expansion, evaluate_numeric, ExpansionResult};
use lightcone::kernels::Family;
use lightcone::mass2::mass2_expansion;
use lightcone::minkowski::{chord_point, default_lightcone_tol, CausalClass};
use lightcone::spin_algebra::Side;
use lightcone::verify;
use rayon::prelude::*;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "lightcone", about = "Light-cone expansion coefficient tables and verification")]
struct Cli {
    /// Override both quadrature tolerances (rel = tol, abs = tol / 100).
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for the randomized verification fields.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for independent chords.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate the expansions declared in a config file.
    Run { config: PathBuf },
    /// Run the randomized verification suites and write a report.
    Verify { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }

    let (path, is_verify) = match &cli.cmd {
        Cmd::Run { config } => (config.clone(), false),
        Cmd::Verify { config } => (config.clone(), true),
    };

    let text = match std::fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return ExitCode::from(2);
        }
    };
    let mut resolved = match config::parse(&text) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("config error: {e:#}");
            return ExitCode::from(2);
        }
    };
    if let Some(tol) = cli.tol {
        if tol <= 0.0 {
            eprintln!("config error: --tol must be positive");
            return ExitCode::from(2);
        }
        resolved.spec.rel_tol = tol;
        resolved.spec.abs_tol = tol * 1e-2;
        resolved.verify.spec = resolved.spec;
    }
    if let Some(seed) = cli.seed {
        resolved.verify.seed = seed;
    }
    let out_dir = cli
        .out
        .or_else(|| resolved.out_dir.clone().map(PathBuf::from));

    if is_verify {
        run_verify(&resolved, out_dir.as_deref())
    } else {
        run_tables(&resolved, out_dir.as_deref())
    }
}

fn run_verify(resolved: &config::ResolvedConfig, out_dir: Option<&Path>) -> ExitCode {
    let report = verify::run_all(&resolved.verify);
    println!(
        "{:<34} {:>12} {:>12} {:>9} {:>8}",
        "check", "value", "threshold", "time[s]", "status"
    );
    for c in &report.checks {
        println!(
            "{:<34} {:>12.3e} {:>12.3e} {:>9.2} {:>8}",
            c.name,
            c.value,
            c.threshold,
            c.seconds,
            if c.passed { "pass" } else { "FAIL" }
        );
    }
    println!(
        "{} checks in {:.1} s, seed {}",
        report.checks.len(),
        report.seconds,
        report.seed
    );
    if let Some(dir) = out_dir {
        if let Err(e) = std::fs::create_dir_all(dir) {
            eprintln!("error: cannot create {}: {e}", dir.display());
            return ExitCode::from(2);
        }
        let path = dir.join("verify_report.json");
        match serde_json::to_string_pretty(&report) {
            Ok(json) => {
                if let Err(e) = std::fs::write(&path, json) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    return ExitCode::from(2);
                }
                println!("report written to {}", path.display());
            }
            Err(e) => {
                eprintln!("error: cannot serialize report: {e}");
                return ExitCode::from(3);
            }
        }
    }
    if report.all_passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(3)
    }
}

struct Task {
    chord_index: usize,
    side: Side,
    family: Family,
    mass2: bool,
}

fn run_tables(resolved: &config::ResolvedConfig, out_dir: Option<&Path>) -> ExitCode {
    if resolved.chords.is_empty() {
        eprintln!("config error: no chords to evaluate");
        return ExitCode::from(2);
    }
    let mut tasks = Vec::new();
    for (i, _) in resolved.chords.iter().enumerate() {
        for &side in &resolved.sides {
            for &family in &resolved.families {
                if resolved.first_order {
                    tasks.push(Task {
                        chord_index: i,
                        side,
                        family,
                        mass2: false,
                    });
                }
                if resolved.mass2 {
                    tasks.push(Task {
                        chord_index: i,
                        side,
                        family,
                        mass2: true,
                    });
                }
            }
        }
    }

    let results: Vec<Result<(String, ExpansionResult<f64>), String>> = tasks
        .par_iter()
        .map(|t| {
            let seg = resolved.chords[t.chord_index];
            let (x, y) = (seg.x, seg.y);
            let res = if t.mass2 {
                mass2_expansion(&resolved.cfg, &x, &y, t.side, t.family, &resolved.spec)
            } else {
                chiral_expansion(&resolved.cfg, &x, &y, t.side, t.family, &resolved.spec)
            };
            let block = if t.mass2 { "mass2" } else { "first" };
            let name = format!(
                "chord{:03}_{}_{}_{}.json",
                t.chord_index,
                t.side.label(),
                match t.family {
                    Family::P => "p",
                    Family::K => "k",
                    Family::SymbolicC => "C",
                },
                block
            );
            res.map(|r| (name, r)).map_err(|e| {
                format!(
                    "chord {} side {} family {:?} ({}): {e}",
                    t.chord_index, t.side.label(), t.family, block
                )
            })
        })
        .collect();

    let mut failures = Vec::new();
    let mut outputs = Vec::new();
    for r in results {
        match r {
            Ok(v) => outputs.push(v),
            Err(e) => failures.push(e),
        }
    }
    if !failures.is_empty() {
        for f in &failures {
            eprintln!("numerical failure: {f}");
        }
        return ExitCode::from(3);
    }

    if let Some(dir) = out_dir {
        if let Err(e) = std::fs::create_dir_all(dir) {
            eprintln!("error: cannot create {}: {e}", dir.display());
            return ExitCode::from(2);
        }
        for (name, res) in &outputs {
            let path = dir.join(name);
            let json = serde_json::to_string_pretty(&res.to_json()).expect("serializable");
            if let Err(e) = std::fs::write(&path, json) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(2);
            }
        }
        println!("{} coefficient tables written to {}", outputs.len(), dir.display());

        if resolved.numeric_samples > 0 {
            match numeric_csv(resolved) {
                Ok(csv) => {
                    let path = dir.join("numeric_samples.csv");
                    if let Err(e) = std::fs::write(&path, csv) {
                        eprintln!("error: cannot write {}: {e}", path.display());
                        return ExitCode::from(2);
                    }
                    println!("numeric samples written to {}", path.display());
                }
                Err(e) => {
                    eprintln!("numerical failure: {e}");
                    return ExitCode::from(3);
                }
            }
        }
    } else {
        for (name, res) in &outputs {
            let mut tags: Vec<String> = res.tags().iter().map(|t| t.label()).collect();
            tags.sort();
            println!(
                "{name}: {} terms, tags [{}], truncation {:?}",
                res.terms.len(),
                tags.join(", "),
                res.truncation.iter().map(|t| t.label()).collect::<Vec<_>>()
            );
        }
    }
    ExitCode::SUCCESS
}

/// Assemble the numeric kernel along a grid of endpoints on each chord
/// extension and tabulate norms for plotting.
fn numeric_csv(resolved: &config::ResolvedConfig) -> Result<String, String> {
    let mut csv = String::from("chord,side,lambda,xi_sq,frobenius_norm,entry00_re,entry00_im\n");
    let [w0, w1] = resolved.sample_window;
    for (ci, seg) in resolved.chords.iter().enumerate() {
        let (x, y) = (&seg.x, &seg.y);
        for &side in &resolved.sides {
            for k in 0..resolved.numeric_samples {
                let lam =
                    w0 + (w1 - w0) * (k as f64) / ((resolved.numeric_samples - 1).max(1) as f64);
                let z = chord_point(x, y, lam);
                let xi = z - *x;
                let tol = default_lightcone_tol(&xi);
                if lightcone::minkowski::causal_class(&xi, tol) == CausalClass::Lightlike {
                    continue;
                }
                let res = chiral_expansion(&resolved.cfg, x, &z, side, Family::P, &resolved.spec)
                    .map_err(|e| e.to_string())?;
                let v = evaluate_numeric(&res, tol).map_err(|e| e.to_string())?;
                let fro: f64 = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
                let e00 = v[(0, 0)];
                csv.push_str(&format!(
                    "{},{},{:.6},{:.6e},{:.12e},{:.12e},{:.12e}\n",
                    ci,
                    side.label(),
                    lam,
                    xi.square(),
                    fro,
                    e00.re,
                    e00.im
                ));
            }
        }
    }
    Ok(csv)
}
