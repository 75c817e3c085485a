//! Golden-file regression for every command, thread-count determinism, and
//! the binary's exit codes. Set QCRIT_BLESS=1 to regenerate the golden CSVs.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command as Proc;

use qcrit::config::RunConfig;
use qcrit::golden::{compare_golden_bytes, Tolerances};
use qcrit::output::{render, sha256_hex};
use qcrit::run::execute;

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn configs() -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(golden_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    v.sort();
    v
}

fn load(path: &Path) -> RunConfig {
    RunConfig::from_json_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_of(files: &[(String, Vec<u8>)]) -> &[u8] {
    &files.iter().find(|(n, _)| n.ends_with(".csv")).unwrap().1
}

#[test]
fn every_config_matches_its_golden_csv() {
    let bless = std::env::var("QCRIT_BLESS").is_ok_and(|v| v == "1");
    let mut failures = Vec::new();
    for path in configs() {
        let files = render(&execute(&load(&path).command, 1).unwrap());
        let golden = path.with_extension("csv");
        if bless {
            fs::write(&golden, csv_of(&files)).unwrap();
            continue;
        }
        let want = fs::read(&golden).unwrap_or_else(|_| panic!("{} has no golden CSV", path.display()));
        let rep = compare_golden_bytes(csv_of(&files), &want, &Tolerances::default()).unwrap();
        if !rep.passed() {
            failures.push(format!("{}: {rep}", path.display()));
        }
    }
    assert!(failures.is_empty(), "{}", failures.join("\n"));
}

#[test]
fn golden_suite_covers_every_command() {
    let names: std::collections::BTreeSet<&str> = configs().iter().map(|p| load(p).command.name()).collect();
    for c in qcrit::config::Command::NAMES {
        assert!(names.contains(c), "no golden config for {c}");
    }
}

#[test]
fn output_bytes_do_not_depend_on_thread_count() {
    for stem in ["phase_diagram", "sw_verify", "gaussian_advantage", "spectrum_rabi"] {
        let cfg = load(&golden_dir().join(format!("{stem}.json")));
        let one = render(&execute(&cfg.command, 1).unwrap());
        let three = render(&execute(&cfg.command, 3).unwrap());
        assert!(one == three, "{stem} differs between 1 and 3 threads");
    }
}

fn qcrit(args: &[&str]) -> (i32, String) {
    let out = Proc::new(env!("CARGO_BIN_EXE_qcrit")).args(args).env("QCRIT_THREADS", "2").output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

#[test]
fn run_writes_files_listed_in_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let cfg = golden_dir().join("steady_rabi.json");
    let (code, err) = qcrit(&["dissipative-steady", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["threads"], 2);
    let outputs = manifest["outputs"].as_array().unwrap();
    assert_eq!(outputs.len(), 2);
    for o in outputs {
        let bytes = fs::read(out.join(o["path"].as_str().unwrap())).unwrap();
        assert_eq!(o["sha256"].as_str().unwrap(), sha256_hex(&bytes));
    }
    // the CSV written by the binary is the golden one
    let (code, err) = qcrit(&[
        "compare",
        out.join("dissipative_steady.csv").to_str().unwrap(),
        golden_dir().join("steady_rabi.csv").to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
}

#[test]
fn flags_override_config_file_values() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let cfg = golden_dir().join("spectrum_rabi.json");
    let (code, err) = qcrit(&[
        "spectrum",
        "--config",
        cfg.to_str().unwrap(),
        "--levels",
        "1",
        "--set",
        "g_grid=0.5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let csv = fs::read_to_string(out.join("spectrum.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2, "{csv}");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    let o = out.to_str().unwrap();

    let (code, err) =
        qcrit(&["spectrum", "--model", "rabi", "--Omega", "4", "--g-grid", "1:0:0.1", "--cutoff", "20", "--out", o]);
    assert_eq!(code, 1);
    assert!(err.contains("g_grid"), "{err}");
    assert!(!out.exists(), "a rejected run must not write output");

    let (code, err) = qcrit(&[
        "spectrum", "--model", "rabi", "--g-grid", "0:1:0.5", "--cutoff", "20", "--set", "bogus=1", "--out", o,
    ]);
    assert_eq!(code, 1);
    assert!(err.contains("`bogus`"), "{err}");

    // the config file names another command
    let cfg = golden_dir().join("adiabatic.json");
    let (code, err) = qcrit(&["spectrum", "--config", cfg.to_str().unwrap(), "--out", o]);
    assert_eq!(code, 1);
    assert!(err.contains("command"), "{err}");

    let (code, err) = qcrit(&["adiabatic", "--v0", "0.5", "--eta", "100", "--lambda-end", "0.9", "--out", o]);
    assert_eq!(code, 2, "{err}");
    assert!(!out.exists());

    let golden = golden_dir().join("steady_rabi.csv");
    let text = fs::read_to_string(&golden).unwrap();
    let (head, rest) = text.split_once('\n').unwrap();
    let (first, tail) = rest.split_once(',').unwrap();
    let bumped: f64 = first.parse::<f64>().unwrap() * (1.0 + 1e-6);
    let perturbed = dir.path().join("p.csv");
    fs::write(&perturbed, format!("{head}\n{bumped:e},{tail}")).unwrap();
    let (code, _) = qcrit(&["compare", perturbed.to_str().unwrap(), golden.to_str().unwrap()]);
    assert_eq!(code, 4);
    let (code, _) = qcrit(&["compare", perturbed.to_str().unwrap(), golden.to_str().unwrap(), "--rel-tol", "1e-5"]);
    assert_eq!(code, 0);
    let (code, _) = qcrit(&["compare", dir.path().join("missing.csv").to_str().unwrap(), golden.to_str().unwrap()]);
    assert_eq!(code, 1);
}
