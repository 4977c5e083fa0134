//! Command-line driver: train shell benchmarks, run thickness optimization,
//! compare exported field tables, and run the verification suites.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use shellfield::config::{load_config, ResolvedRun};
use shellfield::fieldio::{export, ingest, COLUMNS};
use shellfield::runner::{compare_tables, run_selftest, run_solve, run_topopt, RunOutput};
use shellfield::Error;

#[derive(Parser)]
#[command(name = "shellfield", version, about = "Mesh-free Naghdi shell solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a benchmark from a config file; export fields and a report.
    Solve { config: PathBuf },
    /// Compliance-minimizing thickness optimization from a config file.
    Topopt { config: PathBuf },
    /// Relative L2 error of an exported field table against a reference.
    Compare { fields: PathBuf, reference: PathBuf },
    /// Run the verification suites twice and check bitwise agreement.
    Selftest,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", error_json(&e));
            ExitCode::FAILURE
        }
    }
}

/// One-line JSON payload for scripted consumers of failures.
fn error_json(e: &Error) -> String {
    let kind = match e {
        Error::DomainViolation { .. } => "domain_violation",
        Error::DegenerateBasis { .. } => "degenerate_basis",
        Error::NonFinite { .. } => "non_finite",
        Error::JetNonFinite { .. } => "jet_non_finite",
        Error::ParamLength { .. } => "param_length",
        Error::Diverged { .. } => "diverged",
        Error::InfeasibleVolume { .. } => "infeasible_volume",
        Error::ZeroNormReference { .. } => "zero_norm_reference",
        Error::SchemaMismatch { .. } => "schema_mismatch",
        Error::Unsupported { .. } => "unsupported",
        Error::Config { .. } => "config",
        Error::BadBoundary { .. } => "bad_boundary",
        Error::Io(_) => "io",
        Error::Msg(_) => "other",
    };
    serde_json::json!({ "kind": kind, "message": e.to_string() }).to_string()
}

fn dispatch(cmd: Command) -> Result<(), Error> {
    match cmd {
        Command::Solve { config } => {
            let run = load_config(&config)?;
            let out = run_solve(&run)?;
            write_outputs(&run, &out)?;
            print_summary(&out);
            Ok(())
        }
        Command::Topopt { config } => {
            let run = load_config(&config)?;
            let out = run_topopt(&run)?;
            write_outputs(&run, &out)?;
            print_summary(&out);
            Ok(())
        }
        Command::Compare { fields, reference } => {
            let f = ingest(&fields)?;
            let r = ingest(&reference)?;
            let err = compare_tables(&f, &r)?;
            for (i, name) in COLUMNS[5..].iter().enumerate() {
                println!("relative L2 {name}: {:.6e}", err.per_field[i]);
            }
            println!("average relative L2: {:.6e}", err.average);
            Ok(())
        }
        Command::Selftest => {
            let r = run_selftest();
            for s in &r.first {
                let verdict = if s.pass { "PASS" } else { "FAIL" };
                println!("suite {}: {} digest={} ({})", s.name, verdict, s.digest, s.detail);
            }
            println!(
                "second pass: {}",
                if r.deterministic { "identical digests" } else { "MISMATCH" }
            );
            if r.pass {
                Ok(())
            } else {
                Err(Error::Msg("selftest failed".into()))
            }
        }
    }
}

/// Output paths default next to the working directory, named after the
/// preset, unless the config overrides them.
fn output_paths(run: &ResolvedRun) -> (PathBuf, PathBuf) {
    let fields = run
        .fields_out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}_fields.csv", run.spec.id)));
    let report = run
        .report_out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}_report.json", run.spec.id)));
    (fields, report)
}

fn write_outputs(run: &ResolvedRun, out: &RunOutput) -> Result<(), Error> {
    let (fields_path, report_path) = output_paths(run);
    export(&fields_path, &out.table)?;
    out.report.save(&report_path)?;
    println!("wrote {} and {}", display(&fields_path), display(&report_path));
    Ok(())
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

fn print_summary(out: &RunOutput) {
    let r = &out.report;
    println!(
        "{}: {} epochs in {:.1}s on {} thread(s)",
        r.config.id, r.epochs_completed, r.wall_seconds, r.threads
    );
    if let Some(l) = &r.last_loss {
        println!("final loss: {:.6e}", l.total());
    }
    if let Some(e) = &r.errors {
        println!("average relative L2 vs reference: {:.6e}", e.average);
    }
    if let Some(p) = &r.probe {
        println!(
            "probe {} at ({}, {}): rescaled {:.6} vs reference {:.6} (gap {:.2}%)",
            COLUMNS[5 + p.field],
            p.xi[0],
            p.xi[1],
            p.rescaled,
            p.reference,
            100.0 * p.relative_gap
        );
    }
    if let Some(t) = &r.topopt {
        println!(
            "compliance: {:.6e}, volume {:.6e} / target {:.6e} (residual {:.2e}), {}",
            t.compliance.last().copied().unwrap_or(f64::NAN),
            t.final_volume,
            t.volume_target,
            t.final_volume_residual,
            if t.feasible { "feasible" } else { "NOT feasible" }
        );
    }
    if let Some(p) = &r.patch {
        println!(
            "patch: max residual {:.3e}, max resultant deviation {:.3e}",
            p.max_residual, p.max_resultant_dev
        );
    }
}
