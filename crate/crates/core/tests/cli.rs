use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sampling_lab::io::decode_field;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sampling-lab"))
}

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str], out: &Path) -> Output {
    let mut cmd = bin();
    cmd.args(args).arg("--out").arg(out);
    cmd.output().unwrap()
}

fn config_arg(name: &str) -> String {
    configs().join(name).to_string_lossy().into_owned()
}

fn without_wall_time(path: &Path) -> String {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.contains("\"wall_time_s\""))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn unknown_verb_exits_2() {
    let out = bin().arg("prove-everything").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn info_exits_0() {
    let out = bin().arg("info").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("illustrative"));
}

#[test]
fn stock_thm1_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_arg("thm1_box1d.toml");
    let out = run(&["verify-thm1", "--config", &cfg, "--plot"], dir.path());
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for f in ["report.json", "report.csv", "plot.svg"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.starts_with("experiment   verify-thm1"));
    assert!(out.stderr.is_empty());
    let csv = fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 15);
}

#[test]
fn projector_rejects_half_cell_radius() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_arg("thm2_projector.toml");
    let out = run(
        &[
            "verify-projector",
            "--config",
            &cfg,
            "--set",
            "sampling.deltas=[0.5]",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert_eq!(err.lines().count(), 1);
    assert!(
        err.starts_with("error[config]:") && err.contains("open range"),
        "{err}"
    );
    assert!(out.stdout.is_empty());
}

#[test]
fn unknown_override_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_arg("thm1_box1d.toml");
    let out = run(
        &[
            "verify-thm1",
            "--config",
            &cfg,
            "--set",
            "sampling.radius=0.1",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown config key"));
}

#[test]
fn hard_failure_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_arg("thm1_box1d.toml");
    // a vanishing exponent pushes the bound to 1, above every ratio
    let out = run(
        &[
            "verify-thm1",
            "--config",
            &cfg,
            "--set",
            "k=1e-6",
            "--format",
            "csv",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(dir.path().join("report.csv").exists());
    assert!(!dir.path().join("report.json").exists());
}

#[test]
fn same_seed_same_report() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = config_arg("fit_exponent.toml");
    for d in [&a, &b] {
        let out = run(
            &[
                "fit-exponent",
                "--config",
                &cfg,
                "--seed",
                "77",
                "--set",
                "sampling.sequence={\"kind\":\"perturbed\"}",
                "--jobs",
                "2",
            ],
            d.path(),
        );
        assert_eq!(
            out.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    assert_eq!(
        without_wall_time(&a.path().join("report.json")),
        without_wall_time(&b.path().join("report.json"))
    );
}

#[test]
fn eigen_exports_modes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_arg("eigen_box1d.toml");
    let out = run(&["eigen", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap())
            .unwrap();
    let energies = manifest["energies"].as_array().unwrap();
    assert_eq!(energies.len(), 4);
    let e0 = energies[0].as_f64().unwrap();
    assert!((e0 / std::f64::consts::PI.powi(2) - 1.0).abs() < 1e-3);
    let (field, imag) = decode_field(&fs::read(dir.path().join("mode_000.bin")).unwrap()).unwrap();
    assert!(imag.is_none());
    assert_eq!(field.values().len(), 511);
    assert!((field.norm_sq() - 1.0).abs() < 1e-9);
}

#[test]
fn geometry_exports_masks() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_arg("geometry.toml");
    let out = run(
        &[
            "validate-geometry",
            "--config",
            &cfg,
            "--set",
            "geometry.trials=50",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let pgm = fs::read(dir.path().join("mask_00.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n127 127\n255\n"));
    assert!(dir.path().join("mask_00.json").exists());
    let seq: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("sequence_00.json")).unwrap())
            .unwrap();
    assert_eq!(seq["M"].as_f64(), Some(1.0));
}

#[test]
fn unreachable_weyl_residual_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_arg("thm4_weyl.toml");
    let out = run(
        &[
            "verify-weyl",
            "--config",
            &cfg,
            "--set",
            "grid.length=20.0",
            "--set",
            "grid.points=199",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.starts_with("error[solver]:") && err.contains("unreachable-residual"),
        "{err}"
    );
    let report = fs::read_to_string(dir.path().join("report.json")).unwrap();
    assert!(report.contains("\"error\""));
}
