use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn qnlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qnlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

const SMALL_1D: &str = r#"
[potential]
class = "convex1d"
mass = 2.0
coefficients = [0.0, 0.0, 0.5]

[simulation]
eps = 1e-2
particles = 2000
cfl = 0
final_time = 0.2
grid_nodes = 512
seed = 4

[diagnostics]
cadence = 5
"#;

fn summary(out: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap()
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().to_string()).collect()
}

#[test]
fn isotropic_disk_has_unit_radius() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.toml",
        "[potential]\nclass = \"isotropic\"\nmass = 3.141592653589793\ndim = 2\n",
    );
    let out = tmp.path().join("eq");
    let o = qnlab(&["equilibrium", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(&out);
    assert_eq!(s["class"], "isotropic");
    assert!((s["domain_params"]["radius"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    let profiles = fs::read_to_string(out.join("profiles.csv")).unwrap();
    assert!(profiles.starts_with("coord,n_e,phi_e,grad_phi_e_norm\n"));
}

#[test]
fn quadratic_cloud_aspect_ratio() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.toml",
        "[potential]\nclass = \"quadratic\"\nmass = 3.0\nlambda = [2.0, 1.0]\n",
    );
    let out = tmp.path().join("eq");
    let o = qnlab(&["equilibrium", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let ratio = summary(&out)["domain_params"]["aspect_ratio"].as_f64().unwrap();
    assert!((ratio - 4.0).abs() < 1e-10);
}

#[test]
fn missing_mass_is_usage_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", "[potential]\nclass = \"isotropic\"\ndim = 2\n");
    let o = qnlab(&["equilibrium", "--config", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("mass"));
}

#[test]
fn unknown_key_is_usage_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", &SMALL_1D.replace("seed = 4", "sed = 4"));
    let o = qnlab(&["simulate", "--config", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_config_file_is_usage_error() {
    let o = qnlab(&["simulate", "--config", "/nonexistent/run.toml"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulate_is_deterministic_and_conserves_charge() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", SMALL_1D);
    let run = |name: &str| {
        let out = tmp.path().join(name);
        let o = qnlab(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        out
    };
    let (a, b) = (run("a"), run("b"));
    let csv_a = fs::read(a.join("diagnostics.csv")).unwrap();
    assert_eq!(csv_a, fs::read(b.join("diagnostics.csv")).unwrap());
    let text = String::from_utf8(csv_a).unwrap();
    let charge = column(&text, "charge");
    assert!(charge.len() > 2);
    assert!(charge.iter().all(|c| *c == charge[0]));
    assert!(!text.lines().next().unwrap().contains("H_fp"));

    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["status"], "complete");
    assert_eq!(m["seed"], 4);
    assert!(m["timings"]["wall_seconds"].as_f64().unwrap() >= 0.0);
    assert!(m["outputs"].as_array().unwrap().iter().any(|p| p == "diagnostics.csv"));
}

#[test]
fn manifest_echo_reproduces_the_run() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", SMALL_1D);
    let a = tmp.path().join("a");
    assert!(qnlab(&["simulate", "--config", cfg.to_str().unwrap(), "--out", a.to_str().unwrap(), "--seed", "9"])
        .status
        .success());
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    let echo = write_config(tmp.path(), "echo.toml", m["config"].as_str().unwrap());
    let b = tmp.path().join("b");
    assert!(qnlab(&["simulate", "--config", echo.to_str().unwrap(), "--out", b.to_str().unwrap()])
        .status
        .success());
    assert_eq!(
        fs::read(a.join("diagnostics.csv")).unwrap(),
        fs::read(b.join("diagnostics.csv")).unwrap()
    );
}

#[test]
fn seed_flag_and_environment_override_agree() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", SMALL_1D);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert!(qnlab(&["simulate", "--config", cfg.to_str().unwrap(), "--out", a.to_str().unwrap(), "--seed", "77"])
        .status
        .success());
    let o = Command::new(env!("CARGO_BIN_EXE_qnlab"))
        .args(["simulate", "--config", cfg.to_str().unwrap(), "--out", b.to_str().unwrap()])
        .env("QNLAB_SIMULATION__SEED", "77")
        .output()
        .unwrap();
    assert!(o.status.success());
    let da = fs::read(a.join("diagnostics.csv")).unwrap();
    assert_eq!(da, fs::read(b.join("diagnostics.csv")).unwrap());
    let c = tmp.path().join("c");
    assert!(qnlab(&["simulate", "--config", cfg.to_str().unwrap(), "--out", c.to_str().unwrap()])
        .status
        .success());
    assert_ne!(da, fs::read(c.join("diagnostics.csv")).unwrap());
}

#[test]
fn fokker_planck_run_emits_entropy_columns() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.toml",
        &SMALL_1D.replace("eps = 1e-2", "eps = 1e-2\ntheta = 0.1"),
    );
    let out = tmp.path().join("fp");
    let o = qnlab(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    let header = text.lines().next().unwrap();
    for col in ["H_fp", "entropy_estimate", "free_energy"] {
        assert!(header.split(',').any(|h| h == col), "{header}");
    }
}

#[test]
fn snapshots_are_written_on_request() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.toml",
        &SMALL_1D.replace("seed = 4", "seed = 4\nsnapshot_cadence = 10"),
    );
    let out = tmp.path().join("s");
    assert!(qnlab(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .status
        .success());
    let names: Vec<String> = fs::read_dir(out.join("snapshots"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert!(names.iter().any(|n| n.starts_with("particles_")));
    assert!(names.iter().any(|n| n.starts_with("grid_")));
    let particles = fs::read_to_string(out.join("snapshots").join("particles_000000.csv")).unwrap();
    assert!(particles.starts_with("x,v_x,w\n"));
    assert_eq!(particles.lines().count(), 2001);
}

#[test]
fn sweep_rejects_a_single_eps() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", SMALL_1D);
    let o = qnlab(&["sweep", "--config", cfg.to_str().unwrap(), "--eps", "1e-2", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_manifest_lists_children_and_plots() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", SMALL_1D);
    let out = tmp.path().join("sw");
    let o = qnlab(&[
        "sweep", "--config", cfg.to_str().unwrap(), "--eps", "1e-2,1e-1", "--out", out.to_str().unwrap(), "--jobs", "2",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let children = m["children"].as_array().unwrap();
    assert_eq!(children.len(), 2);
    for c in children {
        let child: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out.join(c.as_str().unwrap())).unwrap()).unwrap();
        assert_eq!(child["status"], "complete");
    }
    let sweep = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert!(sweep.starts_with("eps,H_T,dist_Hminus1_T,pairing_T,pairing_sup\n"));
    let eps = column(&sweep, "eps");
    assert_eq!(eps, ["1e-1", "1e-2"]);

    let plots = tmp.path().join("plots");
    let o = qnlab(&["plot", "--csv", out.join("sweep.csv").to_str().unwrap(), "--out", plots.to_str().unwrap()]);
    assert!(o.status.success());
    let svg = fs::read_to_string(plots.join("sweep_H.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("<polyline"));
}

#[test]
fn energy_plot_has_one_file_per_component() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", SMALL_1D);
    let out = tmp.path().join("run");
    assert!(qnlab(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .status
        .success());
    let plots = tmp.path().join("plots");
    let o = qnlab(&["plot", "--csv", out.join("diagnostics.csv").to_str().unwrap(), "--out", plots.to_str().unwrap()]);
    assert!(o.status.success());
    for c in ["E_kin", "E_phi_e", "E_fluct", "H_mod", "energy_total"] {
        assert!(plots.join(format!("{c}.svg")).is_file(), "{c}");
    }
}

#[test]
fn plot_rejects_empty_and_foreign_csv() {
    let tmp = TempDir::new().unwrap();
    let empty = write_config(tmp.path(), "empty.csv", "");
    let header_only = write_config(tmp.path(), "h.csv", "eps,H_T,dist_Hminus1_T,pairing_T,pairing_sup\n");
    let foreign = write_config(tmp.path(), "f.csv", "a,b\n1,2\n");
    for f in [empty, header_only, foreign] {
        let o = qnlab(&["plot", "--csv", f.to_str().unwrap(), "--out", tmp.path().join("p").to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{}", f.display());
    }
}

#[test]
fn verify_emits_json_report() {
    let tmp = TempDir::new().unwrap();
    let o = qnlab(&[
        "verify", "--checks", "z-roundtrip,convex1d-harmonic", "--out", tmp.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("verify.json")).unwrap()).unwrap();
    let items = report.as_array().unwrap();
    assert_eq!(items.len(), 2);
    for r in items {
        assert_eq!(r["status"], "pass");
        assert!(r["margin"].as_f64().unwrap() >= 0.0);
        assert!(r["test"].is_string());
    }
}

#[test]
fn verify_unknown_check_is_usage_error() {
    let o = qnlab(&["verify", "--checks", "no-such-check"]);
    assert_eq!(o.status.code(), Some(2));
}
