#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ppm_core::eventlog::write_csv;
use ppm_core::synthetic::generate_log;
use ppm_core::ColumnMap;

pub fn ppm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ppm")).args(args).output().expect("spawn ppm")
}

/// Runs `ppm` and panics with its diagnostics unless it succeeds.
pub fn ppm_ok(args: &[&str]) -> String {
    let out = ppm(args);
    assert!(
        out.status.success(),
        "ppm {args:?} exited {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("utf-8 stdout")
}

pub fn synthetic_csv(dir: &Path, traces: usize, seed: u64) -> PathBuf {
    let path = dir.join(format!("synthetic_{traces}.csv"));
    let file = std::fs::File::create(&path).unwrap();
    write_csv(&generate_log(traces, seed), &ColumnMap::default(), file).unwrap();
    path
}

pub fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}
