use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tgt_core::{BitMatrix, MatrixFile, MatrixKind};

fn tgt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tgt"))
        .args(args)
        .env_remove("TGT_BUDGET")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn gen(dir: &Path, seed: &str) -> Output {
    tgt(&[
        "gen",
        "--n",
        "32",
        "--d",
        "4",
        "--u",
        "2",
        "--e",
        "1",
        "--p",
        "0.3",
        "--seed",
        seed,
        "--out",
        dir.to_str().unwrap(),
    ])
}

#[test]
fn gen_writes_consistent_bundle() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("b");
    let out = gen(&dir, "7");
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("scheme.json")).unwrap()).unwrap();
    let (k, h, t) = (
        manifest["k"].as_u64().unwrap(),
        manifest["h"].as_u64().unwrap(),
        manifest["t"].as_u64().unwrap(),
    );
    assert_eq!(t, (2 * k + 1) * h);
    let tmat = MatrixFile::from_text(&fs::read_to_string(dir.join("T.mat")).unwrap()).unwrap();
    assert_eq!(tmat.matrix.rows() as u64, t);
    assert_eq!(tmat.kind, MatrixKind::Final);
    assert_eq!(tmat.params["seed"], 7);
    assert_eq!(tmat.params["c_g"], 8.0);
}

#[test]
fn gen_is_byte_identical_under_a_fixed_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(code(&gen(&a, "3")), 0);
    assert_eq!(code(&gen(&b, "3")), 0);
    for name in ["G.mat", "M.mat", "T.mat", "scheme.json"] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn usage_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("x");
    let out = out.to_str().unwrap();
    assert_eq!(
        code(&tgt(&[
            "gen", "--n", "32", "--d", "2", "--u", "3", "--out", out
        ])),
        2
    );
    assert_eq!(code(&tgt(&["simulate", "--trials", "0"])), 2);
    assert_eq!(code(&tgt(&["frobnicate"])), 2);
    assert_eq!(
        code(&tgt(&[
            "bench", "--grid-n", "16", "--grid-d", "20", "--trials", "1"
        ])),
        2
    );
}

#[test]
fn verify_identity_and_corrupt_files() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("id.mat");
    let file = MatrixFile::new(
        BitMatrix::identity(8),
        MatrixKind::Disjunct,
        serde_json::json!({}),
    );
    fs::write(&path, file.to_text()).unwrap();
    let out = tgt(&["verify", path.to_str().unwrap(), "--d", "7"]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["verified"], true);

    // The middle column is covered by its two neighbours.
    let cover = BitMatrix::parse_rows(&["110", "011"]).unwrap();
    let file = MatrixFile::new(cover, MatrixKind::Disjunct, serde_json::json!({}));
    fs::write(&path, file.to_text()).unwrap();
    let out = tgt(&["verify", path.to_str().unwrap(), "--d", "2"]);
    assert_eq!(code(&out), 4);
    assert!(json(&out)["witness"]["column"].is_u64());

    fs::write(
        &path,
        "TGTMAT v1 rows=2 cols=3 kind=disjunct params={}\n!!!\n",
    )
    .unwrap();
    let out = tgt(&["verify", path.to_str().unwrap(), "--d", "1"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("parse error"));
}

#[test]
fn verify_bundle_and_budget() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("b");
    assert_eq!(code(&gen(&dir, "1")), 0);
    let out = tgt(&["verify", dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&out)["d"], 5);

    let out = Command::new(env!("CARGO_BIN_EXE_tgt"))
        .args(["verify", dir.to_str().unwrap(), "--mode", "exhaustive"])
        .env("TGT_BUDGET", "10")
        .output()
        .unwrap();
    assert_eq!(code(&out), 5);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--mode search"));

    let out = tgt(&["verify", dir.to_str().unwrap(), "--mode", "search"]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["method"], "search");
}

#[test]
fn encode_then_decode() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("b");
    assert_eq!(code(&gen(&dir, "2")), 0);
    let y = tmp.path().join("y.vec");
    let trace = tmp.path().join("trace.jsonl");
    let b = dir.to_str().unwrap();

    let out = tgt(&[
        "encode",
        "--bundle",
        b,
        "--defectives",
        "3,9,27",
        "--e",
        "1",
        "--seed",
        "5",
        "--out",
        y.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&out)["flips"].as_array().unwrap().len(), 1);

    let out = tgt(&[
        "decode",
        "--bundle",
        b,
        "--outcome",
        y.to_str().unwrap(),
        "--out",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["decoded"], serde_json::json!([3, 9, 27]));
    assert_eq!(v["vote_threshold"], 2);

    let lines = fs::read_to_string(&trace).unwrap();
    let first: serde_json::Value = serde_json::from_str(lines.lines().next().unwrap()).unwrap();
    assert_eq!(first["block"], 1);
    assert!(first["verdict"].is_string());
}

#[test]
fn simulate_writes_reproducible_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out_dir = tmp.path().join(name);
        let out = tgt(&[
            "simulate",
            "--n",
            "16",
            "--d",
            "3",
            "--u",
            "2",
            "--seed",
            "4",
            "--trials",
            "30",
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        assert_eq!(json(&out)["recovery_rate"], 1.0);
        out_dir
    };
    let (a, b) = (run("a"), run("b"));
    for name in ["trials.csv", "trials.jsonl", "bundle/T.mat"] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
    let timings = fs::read_to_string(a.join("timings.csv")).unwrap();
    assert_eq!(timings.lines().count(), 31);
}

#[test]
fn simulate_flags_uncertified_error_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("b");
    assert_eq!(code(&gen(&dir, "6")), 0);
    let out = tgt(&[
        "simulate",
        "--bundle",
        dir.to_str().unwrap(),
        "--flips",
        "3",
        "--trials",
        "5",
    ]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["certified"], false);
    assert!(String::from_utf8_lossy(&out.stderr).contains("uncertified"));
}

#[test]
fn simulate_with_oracle_and_small_sets() {
    let out = tgt(&[
        "simulate",
        "--n",
        "12",
        "--d",
        "3",
        "--u",
        "2",
        "--trials",
        "12",
        "--oracle",
        "--allow-small",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["oracle_trials"], 12);
    assert_eq!(v["oracle_contains_truth"], 12);
    assert_eq!(v["recovery_rate"], 1.0);
}

#[test]
fn bench_single_point() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tgt(&[
        "bench",
        "--grid-n",
        "16",
        "--grid-d",
        "3",
        "--trials",
        "2",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(tmp.path().join("bench.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("bench.json")).unwrap()).unwrap();
    assert!(report["note"].as_str().unwrap().contains("not reproduced"));
}
