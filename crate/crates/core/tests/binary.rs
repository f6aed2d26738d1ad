//! The `testblocks` executable end to end.

use std::path::Path;
use std::process::Command;

fn testblocks(args: &[&str], cwd: &Path) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_testblocks"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn check_shipped_pacemaker_bundle() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("bundles/pacemaker");
    let (code, out, err) = testblocks(
        &["check", "--model", "pacemaker", "default.tseq", "param.tseq", "assess.tassess", "spec.stl"],
        &dir,
    );
    assert_eq!(code, 0, "{err}");
    assert_eq!(out.lines().count(), 4);
}

#[test]
fn falsify_pacemaker_twenty_repetitions() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(
        tmp.path().join("run.toml"),
        "model = \"pacemaker\"\nrepetitions = 20\noutput_dir = \"out\"\n[search]\nmax_iterations = 300\nseed = 3\n",
    )
    .unwrap();
    let (code, out, err) = testblocks(&["falsify", "--config", "run.toml"], tmp.path());
    assert_eq!(code, 0, "{err}");
    let summary = tmp.path().join("out/pacemaker_simulated_annealing/summary.csv");
    let text = std::fs::read_to_string(summary).unwrap();
    assert_eq!(text.lines().count(), 21);
    assert!(out.contains("Hecate_HEARTFAIL = "));
}

#[test]
fn compare_and_report_from_summaries() {
    let tmp = tempfile::tempdir().unwrap();
    for alg in ["simulated_annealing", "uniform_random"] {
        let (code, _, err) = testblocks(
            &["falsify", "--model", "at_lite", "--reps", "4", "--iters", "60", "--algorithm", alg, "--out", alg],
            tmp.path(),
        );
        assert_eq!(code, 0, "{err}");
    }
    let (code, out, err) = testblocks(
        &["compare", "simulated_annealing/summary.csv", "uniform_random/summary.csv"],
        tmp.path(),
    );
    assert_eq!(code, 0, "{err}");
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(
        lines[0],
        "model,method,runs,failures,failure_rate,mean_iterations_to_failure,mean_elapsed_ms"
    );
    assert_eq!(lines.len(), 3);
    let (code, _, err) = testblocks(&["compare", "uniform_random/summary.csv"], tmp.path());
    assert_eq!(code, 1);
    assert!(err.contains("need two methods"));
    let (code, out, _) = testblocks(&["report", "simulated_annealing/summary.csv"], tmp.path());
    assert_eq!(code, 0);
    assert!(out.contains("at_lite"));
}

#[test]
fn syntax_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("bad.stl"), "G[0, 5] (x < ").unwrap();
    let (code, _, err) = testblocks(&["check", "bad.stl"], tmp.path());
    assert_eq!(code, 1);
    assert!(err.starts_with("bad.stl:1:"), "{err}");
}
