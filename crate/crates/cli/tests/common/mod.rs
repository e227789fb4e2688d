#![allow(dead_code)]

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

pub fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_phaseseg"));
    c.env_remove("PHASESEG_SEED");
    c
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

pub fn run_stdin(args: &[&str], input: &[u8]) -> Output {
    let mut child = bin()
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary runs");
    child.stdin.take().unwrap().write_all(input).unwrap();
    child.wait_with_output().unwrap()
}

pub fn ok(out: Output) -> Output {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Every regular file under `dir`, relative and sorted, with contents.
pub fn tree(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<(PathBuf, Vec<u8>)>) {
        for e in fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                out.push((p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out);
    out.sort();
    out
}

/// Three 200-frame videos of the five-class sequential preset plus one
/// validation video, with weak noise.
pub fn gen_tiny(out: &Path, seed: u64, dim: usize, num_train: usize, num_val: usize) -> PathBuf {
    ok(run(&[
        "gen",
        "--preset",
        "tiny",
        "--seed",
        &seed.to_string(),
        "--out",
        s(out),
        "--set",
        &format!("num_train={num_train}"),
        "--set",
        &format!("num_val={num_val}"),
        "--set",
        "num_test=0",
        "--set",
        "min_length=200",
        "--set",
        "max_length=200",
        "--set",
        &format!("feature_dim={dim}"),
        "--set",
        "noise.scale=0.3",
    ]));
    out.join("manifest.json")
}

pub const SMALL_MODEL: [&str; 6] = [
    "--set",
    "model.num_layers=3",
    "--set",
    "model.internal_dim=8",
    "--set",
    "model.num_decoders=1",
];
