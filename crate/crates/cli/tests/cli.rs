use std::path::Path;
use std::process::{Command, Output};

fn closedrange(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_closedrange"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn scenarios() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn analyze_identity_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let mut bytes = Vec::new();
    for sub in ["a", "b"] {
        let o = closedrange(&["analyze", "identity", "--angular-order", "128", "--out-dir", sub], dir.path());
        assert_eq!(o.status.code(), Some(0), "{o:?}");
        assert!(stdout(&o).contains("identity: closed_range_evidence"), "{}", stdout(&o));
        bytes.push(std::fs::read(dir.path().join(sub).join("identity.json")).unwrap());
    }
    assert_eq!(bytes[0], bytes[1]);
    let report: serde_json::Value = serde_json::from_slice(&bytes[0]).unwrap();
    assert_eq!(report["verdict"]["label"], "closed_range_evidence");
    assert_eq!(report["scenario"]["quadrature"]["angular_order"], 128);
    assert_eq!(report["delta_estimates"]["coverage"]["delta"], 1.0);
    assert!(report["timings"].is_null());
    let keys: Vec<&String> = report["verdict"]["criteria"].as_object().unwrap().keys().collect();
    assert_eq!(
        keys,
        ["cor26_bounded_n", "main_thm_b", "main_thm_c", "prop21_boxes", "tail_hypothesis", "thmZ_gc"]
    );
}

#[test]
fn analyze_crescent_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = scenarios().join("crescent.toml");
    let o = closedrange(&["analyze", file.to_str().unwrap(), "--seed", "7"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    assert!(stdout(&o).contains("crescent: not_closed_evidence"), "{}", stdout(&o));
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("out/crescent.json")).unwrap()).unwrap();
    assert_eq!(report["seed"], 7);
}

#[test]
fn config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "schema_version = 1\nname = \"bad\"\nbogus = 3\n[symbol]\nkind = \"identity\"\n").unwrap();
    let o = closedrange(&["analyze", bad.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bogus"));

    let o = closedrange(&["analyze", "identity", "--alpha", "3"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("query.alpha"));

    assert_eq!(closedrange(&["analyze", "no_such_scenario"], dir.path()).status.code(), Some(1));
    assert_eq!(closedrange(&["analyze", "identity", "--frobnicate"], dir.path()).status.code(), Some(1));
    assert_eq!(closedrange(&["verify", "nope"], dir.path()).status.code(), Some(1));
    assert_eq!(closedrange(&["--help"], dir.path()).status.code(), Some(0));
}

#[test]
fn heatmap_writes_pgm_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let o = closedrange(
        &["heatmap", "power2", "--field", "n_phi", "--resolution", "24", "--out-dir", "img"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    let pgm = std::fs::read(dir.path().join("img/power2_n_phi.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n24 24\n65535\n"));
    assert_eq!(pgm.len(), b"P5\n24 24\n65535\n".len() + 2 * 24 * 24);
    let meta = std::fs::read_to_string(dir.path().join("img/power2_n_phi.txt")).unwrap();
    assert!(meta.contains("min = 2") && meta.contains("max = 2"), "{meta}");
    let o = closedrange(&["heatmap", "power2", "--field", "nope"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn verify_reports_json() {
    let dir = tempfile::tempdir().unwrap();
    let o = closedrange(&["verify", "geometry", "dirichlet", "--out-dir", "v"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    let summary: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(summary["pass"], true);
    assert_eq!(summary["tags"], serde_json::json!(["geometry", "dirichlet"]));
    assert!(dir.path().join("v/verify.json").exists());
}

#[test]
fn rings_prints_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = closedrange(&["rings", "scaled", "--r", "0.5"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    let out = stdout(&o);
    assert!(out.contains("r = 0.5"), "{out}");
    assert_eq!(out.lines().filter(|l| l.trim_start().starts_with("0.99")).count(), 2, "{out}");
    assert!(out.contains("max sampled n = 1"));
}
