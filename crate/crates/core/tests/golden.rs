//! Regression against the self-generated CSVs in `scenarios/golden`.

use std::path::{Path, PathBuf};
use std::process::Command;

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn run(args: &[&str]) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_lidar-range"))
        .current_dir(repo_root())
        .args(args)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn cells_match(a: &str, b: &str) -> bool {
    match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) => x == y || (x - y).abs() <= 1e-9 * x.abs().max(y.abs()),
        _ => a == b,
    }
}

fn assert_golden(file: &str, args: &[&str]) {
    let expected = std::fs::read_to_string(repo_root().join("scenarios/golden").join(file)).unwrap();
    let actual = run(args);
    let (exp, act): (Vec<_>, Vec<_>) = (expected.lines().collect(), actual.lines().collect());
    assert_eq!(exp.len(), act.len(), "{file}: row count");
    for (i, (e, a)) in exp.iter().zip(&act).enumerate() {
        let (ec, ac): (Vec<_>, Vec<_>) = (e.split(',').collect(), a.split(',').collect());
        assert_eq!(ec.len(), ac.len(), "{file}:{}: column count", i + 1);
        for (x, y) in ec.iter().zip(&ac) {
            assert!(cells_match(x, y), "{file}:{}: expected {e}\n  got {a}", i + 1);
        }
    }
}

const DET: [&str; 4] = ["--detector", "apd", "--detector", "sipm"];

fn with_det(rest: &[&'static str]) -> Vec<&'static str> {
    DET.iter().copied().chain(rest.iter().copied()).collect()
}

#[test]
fn range_table() {
    assert_golden("range_table1.csv", &with_det(&["--detector", "sipm-approx", "range"]));
}

#[test]
fn snr_vs_distance() {
    assert_golden("snr_vs_distance.csv", &with_det(&["snr-curve"]));
}

#[test]
fn rmax_vs_elevation() {
    assert_golden("rmax_vs_elevation.csv", &with_det(&["sweep", "elevation"]));
}

#[test]
fn rmax_vs_illuminance() {
    assert_golden("rmax_vs_illuminance.csv", &with_det(&["sweep", "illuminance"]));
}

#[test]
fn sipm_photon_response() {
    assert_golden("sipm_photon_response.csv", &["sipm-response"]);
}

#[test]
fn hazy_filtered_sipm() {
    assert_golden(
        "hazy_filtered_sipm_range.csv",
        &["--config", "scenarios/hazy_filtered_sipm.toml", "range"],
    );
}
