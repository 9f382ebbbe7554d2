mod common;

use std::fs;
use std::path::{Path, PathBuf};

use common::{ppm, ppm_ok, s};
use tempfile::tempdir;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/report").join(name)
}

fn read(p: &Path) -> String {
    fs::read_to_string(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

// Expected files were computed by hand from the fixture metrics, e.g.
// 1 − 19823/136412 = 0.854683 → 85.47 and (0.82941 − 0.84123)/0.84123 = −1.405% → −1.41.
#[test]
fn report_matches_golden_files() {
    let out = tempdir().unwrap();
    // Deliberately unsorted input order.
    let inputs = ["p2p_lstm_light", "p2p_mtl", "helpdesk_mtl", "p2p_lstm", "p2p_mtl_light"].map(fixture);
    let mut args = vec!["report", "--out", s(out.path()), "--inputs"];
    args.extend(inputs.iter().map(|p| s(p)));
    let stdout = ppm_ok(&args);
    let golden = fixture("golden");
    assert_eq!(read(&out.path().join("results.csv")), read(&golden.join("results.csv")));
    assert_eq!(read(&out.path().join("reduction.csv")), read(&golden.join("reduction.csv")));
    assert_eq!(
        read(&out.path().join("curves/p2p_mtlformer.csv")),
        read(&golden.join("curves/p2p_mtlformer.csv"))
    );
    // Only runs with a history get a curve.
    assert_eq!(fs::read_dir(out.path().join("curves")).unwrap().count(), 1);
    assert!(stdout.contains("mtlformer_light reduces the parameters of mtlformer by 85.47%"), "{stdout}");
}

#[test]
fn duplicate_runs_are_rejected() {
    let out = tempdir().unwrap();
    let mtl = fixture("p2p_mtl");
    let result = ppm(&["report", "--out", s(out.path()), "--inputs", s(&mtl), s(&mtl)]);
    assert_eq!(result.status.code(), Some(3));
}

#[test]
fn missing_metrics_is_a_data_error() {
    let out = tempdir().unwrap();
    let result = ppm(&["report", "--out", s(out.path()), "--inputs", s(&fixture("golden"))]);
    assert_eq!(result.status.code(), Some(3));
}
