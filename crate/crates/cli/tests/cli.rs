//! Smoke tests for the `mixtopo` binary: generate a corpus, drive the
//! pipeline through its subcommands, and check the artifacts, exit codes,
//! and error messages a user actually depends on.

use std::path::Path;
use std::process::{Command, Output};

fn mixtopo(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mixtopo"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary launches")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn read_manifest(dir: &Path) -> serde_json::Value {
    let text = std::fs::read_to_string(dir.join("run_manifest.json")).expect("manifest readable");
    serde_json::from_str(&text).expect("manifest is JSON")
}

#[test]
fn synth_then_full_run_produces_the_artifact_tree() {
    let dir = tempfile::tempdir().expect("tempdir");
    let synth = mixtopo(
        &[
            "synth", "--out", "corpus", "--units", "8", "--chains", "2", "--noise", "10",
        ],
        dir.path(),
    );
    assert!(synth.status.success(), "synth failed: {}", stderr(&synth));
    for file in [
        "transactions.jsonl",
        "labels.csv",
        "seeds.txt",
        "ground_truth.json",
    ] {
        assert!(
            dir.path().join("corpus").join(file).is_file(),
            "missing corpus file {file}"
        );
    }

    let run = mixtopo(
        &[
            "run",
            "--transactions",
            "corpus/transactions.jsonl",
            "--labels",
            "corpus/labels.csv",
            "--seeds",
            "corpus/seeds.txt",
            "--out",
            "out",
            "--threads",
            "2",
        ],
        dir.path(),
    );
    assert!(run.status.success(), "run failed: {}", stderr(&run));
    let text = stdout(&run);
    assert!(text.contains("graphs:"), "summary names the graphs: {text}");
    assert!(
        text.contains("adjusted rand index:"),
        "summary names the agreement: {text}"
    );
    for artifact in [
        "run_manifest.json",
        "merge_report.json",
        "communities/index.csv",
        "features.csv",
        "optics_sweep.csv",
        "reachability.csv",
        "assignments.csv",
        "agreement.json",
        "motif_report.json",
    ] {
        assert!(
            dir.path().join("out").join(artifact).is_file(),
            "missing artifact {artifact}"
        );
    }
    let manifest = read_manifest(&dir.path().join("out"));
    assert_eq!(manifest["stage"], "full");
    assert_eq!(manifest["format_version"], 1);
    assert!(
        manifest["summary"]["n_graphs"].as_u64().unwrap() > 0,
        "manifest records the graph count"
    );
}

#[test]
fn stage_subcommands_stop_early() {
    let dir = tempfile::tempdir().expect("tempdir");
    let synth = mixtopo(
        &[
            "synth", "--out", "corpus", "--units", "4", "--chains", "1", "--noise", "5",
        ],
        dir.path(),
    );
    assert!(synth.status.success(), "synth failed: {}", stderr(&synth));
    let build = mixtopo(
        &[
            "build",
            "--transactions",
            "corpus/transactions.jsonl",
            "--seeds",
            "corpus/seeds.txt",
            "--out",
            "out",
        ],
        dir.path(),
    );
    assert!(build.status.success(), "build failed: {}", stderr(&build));
    let manifest = read_manifest(&dir.path().join("out"));
    assert_eq!(manifest["stage"], "build");
    assert!(
        dir.path().join("out/graphs").is_dir(),
        "graphs directory exists"
    );
    assert!(
        !dir.path().join("out/features.csv").exists(),
        "the build stage must not write later-stage artifacts"
    );
}

#[test]
fn config_file_applies_and_flags_override_it() {
    let dir = tempfile::tempdir().expect("tempdir");
    let synth = mixtopo(
        &[
            "synth", "--out", "corpus", "--units", "4", "--chains", "1", "--noise", "5",
        ],
        dir.path(),
    );
    assert!(synth.status.success(), "synth failed: {}", stderr(&synth));
    std::fs::write(
        dir.path().join("run.conf"),
        "# pipeline settings\n\
         transactions = corpus/transactions.jsonl\n\
         labels = corpus/labels.csv\n\
         seeds = corpus/seeds.txt\n\
         out_dir = from-config\n\
         min_pts = 4\n",
    )
    .expect("config written");
    let run = mixtopo(
        &["run", "--config", "run.conf", "--out", "from-flag"],
        dir.path(),
    );
    assert!(run.status.success(), "run failed: {}", stderr(&run));
    assert!(
        dir.path().join("from-flag/run_manifest.json").is_file(),
        "the --out flag overrides the config file"
    );
    assert!(
        !dir.path().join("from-config").exists(),
        "the overridden out_dir must stay unused"
    );
    let manifest = read_manifest(&dir.path().join("from-flag"));
    assert_eq!(
        manifest["config"]["min_pts"], 4,
        "config file settings apply"
    );
}

#[test]
fn missing_inputs_fail_with_a_pointer_to_the_flag() {
    let dir = tempfile::tempdir().expect("tempdir");
    let run = mixtopo(
        &[
            "run",
            "--transactions",
            "nope.jsonl",
            "--seeds",
            "nope.txt",
            "--out",
            "out",
        ],
        dir.path(),
    );
    assert!(!run.status.success(), "a missing corpus must fail the run");
    let text = stderr(&run);
    assert!(
        text.contains("error:"),
        "stderr carries the failure: {text}"
    );
    assert!(
        text.contains("--transactions"),
        "the message points at the flag to fix: {text}"
    );
}

#[test]
fn degenerate_synth_ranges_are_rejected() {
    let dir = tempfile::tempdir().expect("tempdir");
    let synth = mixtopo(
        &["synth", "--out", "corpus", "--amount-min", "0"],
        dir.path(),
    );
    assert!(
        !synth.status.success(),
        "a zero base amount must be rejected"
    );
    assert!(
        stderr(&synth).contains("amount range"),
        "the message names the bad range"
    );
    assert!(
        !dir.path().join("corpus").exists(),
        "nothing written on failure"
    );
}
