//! End-to-end checks of the binary: exit codes, output files, the
//! machine-readable error line, and the compare/selftest subcommands.

use std::path::Path;
use std::process::{Command, Output};

use shellfield::report::Report;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_shellfield"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const TINY: &str = "preset = \"hyperb_parab_clamped\"\n\
                    epochs = 2\n\
                    n_collocation = 48\n\
                    hidden_layers = 1\n\
                    width = 6\n\
                    eval_grid = 7\n";

#[test]
fn solve_writes_fields_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        format!("{TINY}fields_out = \"out.csv\"\nreport_out = \"out.json\"\n"),
    )
    .unwrap();

    let out = run_in(dir.path(), &["solve", "run.toml"]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("final loss"));

    let report = Report::load(&dir.path().join("out.json")).unwrap();
    assert_eq!(report.epochs_completed, 2);
    assert_eq!(report.loss_history.len(), 2);

    let table = shellfield::fieldio::ingest(&dir.path().join("out.csv")).unwrap();
    assert_eq!(table.len(), 49);
}

#[test]
fn default_output_names_follow_the_preset() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.toml"), TINY).unwrap();
    let out = run_in(dir.path(), &["solve", "run.toml"]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    assert!(dir.path().join("hyperb_parab_clamped_fields.csv").exists());
    assert!(dir.path().join("hyperb_parab_clamped_report.json").exists());
}

#[test]
fn bad_config_fails_with_machine_readable_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.toml"), "preset = \"no_such_benchmark\"\n").unwrap();
    let out = run_in(dir.path(), &["solve", "bad.toml"]);
    assert!(!out.status.success());
    let err = stderr(&out);
    let line = err.lines().find(|l| l.starts_with("error: ")).expect("error line");
    let payload: serde_json::Value =
        serde_json::from_str(line.trim_start_matches("error: ")).expect("JSON payload");
    assert_eq!(payload["kind"], "config");
    assert!(payload["message"].as_str().unwrap().contains("preset"));
}

#[test]
fn missing_config_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["solve", "nowhere.toml"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("\"kind\":\"io\""));
}

#[test]
fn compare_of_a_table_with_itself_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("run.toml"),
        format!("{TINY}fields_out = \"a.csv\"\nreport_out = \"a.json\"\n"),
    )
    .unwrap();
    let solve = run_in(dir.path(), &["solve", "run.toml"]);
    assert!(solve.status.success(), "stderr: {}", stderr(&solve));

    let out = run_in(dir.path(), &["compare", "a.csv", "a.csv"]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    let avg = text
        .lines()
        .find(|l| l.starts_with("average relative L2:"))
        .and_then(|l| l.rsplit(' ').next())
        .and_then(|v| v.parse::<f64>().ok())
        .expect("parsable average");
    assert!(avg < 1e-12, "self comparison gave {avg}");
}

#[test]
fn topopt_volume_only_reaches_the_target() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("topo.toml"),
        "preset = \"topopt_plate\"\n\
         volume_only = true\n\
         n_collocation = 64\n\
         outer_iters = 6\n\
         inner_epochs = 20\n\
         warm_start_epochs = 0\n\
         psi_hidden_layers = 1\n\
         psi_width = 8\n\
         eval_grid = 9\n\
         fields_out = \"t.csv\"\n\
         report_out = \"t.json\"\n",
    )
    .unwrap();
    let out = run_in(dir.path(), &["topopt", "topo.toml"]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let report = Report::load(&dir.path().join("t.json")).unwrap();
    let topo = report.topopt.expect("topopt section");
    assert!(
        topo.final_volume_residual.abs() <= 1e-3 * topo.volume_target,
        "volume residual {} vs target {}",
        topo.final_volume_residual,
        topo.volume_target
    );
    assert!(!topo.thickness.is_empty());
}

#[test]
fn selftest_prints_suites_and_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["selftest"]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    for name in ["geometry", "gradients", "nullity", "patch"] {
        assert!(text.contains(&format!("suite {name}: PASS")), "missing {name}: {text}");
    }
    assert!(text.contains("identical digests"));
}
