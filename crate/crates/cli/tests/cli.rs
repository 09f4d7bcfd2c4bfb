use std::path::PathBuf;
use std::process::{Command, Output};

fn model_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../models").join(name)
}

fn pbnctl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pbnctl")).args(args).output().expect("spawn pbnctl")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn attractors_listing() {
    let model = model_path("example1.pbn");
    let out = pbnctl(&["attractors", "--model", model.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "A0: fixed: 0000\nA1: fixed: 0101\nA2: cyclic: 1000 1010\n");
}

#[test]
fn basins_and_oracle() {
    let model = model_path("example1.pbn");
    let out = pbnctl(&["basins", "--model", model.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("A0,"));
    let out = pbnctl(&["oracle", "--model", model.to_str().unwrap()]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("source_id,target_id,min_length,strategy\n"));
    assert_eq!(text.lines().count(), 7);
    assert!(text.contains("2,0,1,0\n"));
}

#[test]
fn pasip_reports_precision() {
    let model = model_path("example1.pbn");
    let out = pbnctl(&["pasip", "--model", model.to_str().unwrap(), "--seed", "3"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("precision 1.0000"));
    for line in stdout(&out).lines() {
        assert!(["0000", "0101", "1000", "1010"].contains(&line.split(' ').next().unwrap()), "{line}");
    }
}

#[test]
fn invalid_model_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.pbn");
    std::fs::write(&bad, "genes: a\na: 0.5 :: a\na: 0.4 :: !a\n").unwrap();
    let out = pbnctl(&["attractors", "--model", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sum"));
    let out = pbnctl(&["attractors"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_file_exits_with_3() {
    let out = pbnctl(&["attractors", "--model", "/nonexistent/model.pbn"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn train_eval_compare_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let model = model_path("example1.pbn");
    let m = model.to_str().unwrap();
    let ckpt = dir.path().join("agent.ckpt");
    let outdir = dir.path().join("run");
    let o = outdir.to_str().unwrap();

    let out = pbnctl(&["train", "--model", m, "--seed", "1", "--steps", "300", "--checkpoint", ckpt.to_str().unwrap(), "--out", o]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let log = std::fs::read_to_string(outdir.join("training_log.csv")).unwrap();
    assert!(log.starts_with("step,episode,epsilon,reward,episode_len,n_pa_states\n"));

    let out = pbnctl(&["eval", "--model", m, "--checkpoint", ckpt.to_str().unwrap(), "--repeats", "2", "--out", o]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let eval = std::fs::read_to_string(outdir.join("eval.csv")).unwrap();
    assert_eq!(eval.lines().count(), 1 + 6 * 2);
    assert!(outdir.join("length_histogram.csv").exists());

    let out = pbnctl(&["oracle", "--model", m, "--out", o]);
    assert!(out.status.success());
    let out = pbnctl(&[
        "compare",
        "--eval",
        outdir.join("eval.csv").to_str().unwrap(),
        "--oracle",
        outdir.join("oracle.csv").to_str().unwrap(),
        "--out",
        o,
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = std::fs::read_to_string(outdir.join("overhead.csv")).unwrap();
    assert!(table.starts_with("source_id,target_id,agent_mean_length,oracle_length,ratio\n"));

    // A checkpoint for a different gene count is rejected as bad input.
    let other = dir.path().join("three.pbn");
    std::fs::write(&other, "genes: a,b,c\na: b\nb: c\nc: a\n").unwrap();
    let out = pbnctl(&["eval", "--model", other.to_str().unwrap(), "--checkpoint", ckpt.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}
