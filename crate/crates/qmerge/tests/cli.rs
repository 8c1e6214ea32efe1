use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qmerge::experiment::{SWEEP_COLUMNS, VERIFY_COLUMNS};
use qmerge::oracle_file::OracleSpec;
use qmerge_core::verify::{preparation_unitary, random_orthogonal_pair};
use qmerge_core::{c64, CMatrix};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

fn qmerge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qmerge")).args(args).output().expect("binary runs")
}

fn write_oracle(dir: &Path, name: &str, m: &CMatrix) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string(&OracleSpec::from_matrix(m, None)).unwrap()).unwrap();
    path
}

fn real(rows: &[f64]) -> CMatrix {
    let dim = (rows.len() as f64).sqrt() as usize;
    CMatrix::from_row_slice(dim, dim, &rows.iter().map(|&x| c64(x, 0.0)).collect::<Vec<_>>())
}

fn random_pair(dir: &Path, n: usize, real: bool, seed: u64) -> (PathBuf, PathBuf) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (psi, phi) = random_orthogonal_pair(n, real, &mut rng).unwrap();
    let mu = preparation_unitary(&psi, real, &mut rng).unwrap();
    let mv = preparation_unitary(&phi, real, &mut rng).unwrap();
    (write_oracle(dir, "u.json", &mu), write_oracle(dir, "v.json", &mv))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr_line(out: &Output) -> String {
    let text = String::from_utf8_lossy(&out.stderr).into_owned();
    assert_eq!(text.trim_end().lines().count(), 1, "diagnostic is one line: {text:?}");
    text
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn merge_of_identity_and_x_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let u = write_oracle(dir.path(), "i.json", &real(&[1.0, 0.0, 0.0, 1.0]));
    let v = write_oracle(dir.path(), "x.json", &real(&[0.0, 1.0, 1.0, 0.0]));
    let out_dir = dir.path().join("out");
    let out = qmerge(&["merge", "--oracle-u", s(&u), "--oracle-v", s(&v), "--epsilon", "0.5", "--out", s(&out_dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&out_dir.join("report.json"));
    assert_eq!(report["version"], 1);
    assert_eq!(report["path"]["kind"], "exact");
    assert!(report["distance_psi"].as_f64().unwrap() <= 1e-9);
    assert!(report["distance_phi"].as_f64().unwrap() <= 1e-9);
    assert!(report["max_leakage"].as_f64().unwrap() <= 1e-9);
    let circuit = read_json(&out_dir.join("circuit.json"));
    assert_eq!(circuit["version"], 1);
    assert!(!circuit["ops"].as_array().unwrap().is_empty());
}

#[test]
fn sweep_on_one_qubit_pair_has_non_increasing_distances() {
    let dir = tempfile::tempdir().unwrap();
    let (u, v) = random_pair(dir.path(), 1, false, 3);
    let out_dir = dir.path().join("out");
    let out = qmerge(&["sweep", "--oracle-u", s(&u), "--oracle-v", s(&v), "--epsilon", "0.3,0.2,0.1", "--out", s(&out_dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut reader = csv::Reader::from_path(out_dir.join("sweep.csv")).unwrap();
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header.join(","), SWEEP_COLUMNS);
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    let eps: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert_eq!(eps, [0.3, 0.2, 0.1]);
    for col in [4, 5] {
        let d: Vec<f64> = rows.iter().map(|r| r[col].parse().unwrap()).collect();
        assert!(d.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{d:?}");
        assert!(d.iter().all(|&x| x <= 1e-9));
    }
}

#[test]
fn sweep_csv_is_identical_across_reruns_and_job_counts() {
    let dir = tempfile::tempdir().unwrap();
    let (u, v) = random_pair(dir.path(), 2, true, 11);
    let mut outputs = Vec::new();
    for (i, jobs) in ["1", "3", "1"].iter().enumerate() {
        let out_dir = dir.path().join(format!("run{i}"));
        let out = qmerge(&[
            "sweep", "--oracle-u", s(&u), "--oracle-v", s(&v), "--epsilon", "0.3,0.2", "--mode", "injected", "--force-general", "--seed", "5",
            "--trials", "8", "--jobs", jobs, "--out", s(&out_dir),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        outputs.push(std::fs::read(out_dir.join("sweep.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
    let text = String::from_utf8(outputs.remove(0)).unwrap();
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let eps: f64 = f[2].parse().unwrap();
        assert_eq!(f[3], "general");
        for col in [4, 5, 6] {
            assert!(f[col].parse::<f64>().unwrap() <= 10.0 * eps, "{line}");
        }
    }
}

#[test]
fn scaling_sweep_runs_from_the_command_line() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = qmerge(&["sweep", "--random-n", "2", "--instances", "2", "--epsilon", "0.3", "--mode", "injected", "--trials", "4", "--out", s(&out_dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("C = "));
    let text = std::fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn verify_writes_trial_rows_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let (u, v) = random_pair(dir.path(), 2, true, 4);
    let out_dir = dir.path().join("out");
    let out = qmerge(&["verify", "--oracle-u", s(&u), "--oracle-v", s(&v), "--epsilon", "0.2", "--trials", "12", "--seed", "9", "--out", s(&out_dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(out_dir.join("verify.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), VERIFY_COLUMNS);
    assert_eq!(lines.clone().count(), 12);
    assert!(lines.all(|l| l.starts_with("9,")));
    let summary = read_json(&out_dir.join("verify.json"));
    assert_eq!(summary["version"], 1);
    assert_eq!(summary["path"]["kind"], "general");
    assert!(summary["max_distance"].as_f64().unwrap() <= 10.0 * 0.2);
    assert!(summary["max_leakage"].as_f64().unwrap() <= 10.0 * 0.2);
    // Small enough to expand: the pinned columns agree with the distances.
    assert!(summary["matrix"]["pinned_column_error"].as_f64().unwrap() <= 2.0 * 10.0 * 0.2);
}

#[test]
fn verify_of_exact_case_is_clean() {
    let dir = tempfile::tempdir().unwrap();
    let (u, v) = random_pair(dir.path(), 1, false, 8);
    let out = qmerge(&["verify", "--oracle-u", s(&u), "--oracle-v", s(&v), "--epsilon", "0.2", "--trials", "20"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(summary["max_distance"].as_f64().unwrap() < 1e-9, "{summary}");
    assert!(summary["max_leakage"].as_f64().unwrap() < 1e-9);
    assert!(summary["matrix"]["pinned_column_error"].as_f64().unwrap() < 1e-9);
}

#[test]
fn exit_codes_follow_the_error_kind() {
    let dir = tempfile::tempdir().unwrap();
    let i = write_oracle(dir.path(), "i.json", &real(&[1.0, 0.0, 0.0, 1.0]));
    let x = write_oracle(dir.path(), "x.json", &real(&[0.0, 1.0, 1.0, 0.0]));
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let hadamard = write_oracle(dir.path(), "h.json", &real(&[h, h, h, -h]));
    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, "{\"n\": 1, \"matrix\": [[1, 0]").unwrap();
    let missing = dir.path().join("missing.json");

    let merge = |u: &Path, v: &Path, eps: &str, extra: &[&str]| {
        let mut args = vec!["merge", "--oracle-u", s(u), "--oracle-v", s(v), "--epsilon", eps];
        args.extend_from_slice(extra);
        qmerge(&args)
    };
    for (out, code) in [
        (merge(&i, &x, "1.5", &[]), 2),
        (merge(&missing, &x, "0.2", &[]), 2),
        (merge(&broken, &x, "0.2", &[]), 2),
        (merge(&i, &hadamard, "0.2", &[]), 3),
        (merge(&i, &x, "0.1", &["--mode", "sampled", "--force-general"]), 4),
    ] {
        assert_eq!(out.status.code(), Some(code), "{}", String::from_utf8_lossy(&out.stderr));
        stderr_line(&out);
    }
    let out = qmerge(&["sweep", "--epsilon", "0.2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_line(&out).contains("--random-n"));
    assert_eq!(qmerge(&["merge"]).status.code(), Some(2));
}

#[test]
fn help_documents_columns_and_exit_codes() {
    let out = qmerge(&["sweep", "--help"]);
    let text = String::from_utf8_lossy(&out.stdout).split_whitespace().collect::<Vec<_>>().join("");
    assert!(text.contains(SWEEP_COLUMNS), "{text}");
    let out = qmerge(&["verify", "--help"]);
    assert!(String::from_utf8_lossy(&out.stdout).contains(VERIFY_COLUMNS));
    let out = qmerge(&["--help"]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("3 contract violation"));
}

#[test]
fn demo_prints_both_examples() {
    let out = qmerge(&["demo"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    let finals: Vec<&str> = text.lines().filter(|l| l.starts_with("final = ")).collect();
    assert_eq!(finals.len(), 3);
    assert!(finals[0].starts_with("final = (alpha|phi> + beta|psi> + gamma|y>)|0>"));
    for line in finals {
        let dev: f64 = line.rsplit(' ').next().unwrap().parse().unwrap();
        assert!(dev < 1e-12, "{line}");
    }
}
