use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn ghft(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ghft"))
        .args(args)
        .env("GHFT_OUT_DIR", dir)
        .env("GHFT_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const FREE: &str = "[model]\nt = 1\nu = 0\nmu = 0.4\nlx = 5\nly = 5\nmu_convention = subtract\n[output]\nprefix = free\n";

#[test]
fn free_ground_state_fills_the_fermi_sea() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "free.conf", FREE);
    let out = ghft(tmp.path(), &["ground", "-c", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let s = json(&tmp.path().join("free.ground.json"));
    for key in ["u", "mu", "t", "Lx", "Ly", "n", "p", "energy", "residual", "iterations"] {
        assert!(s.get(key).is_some(), "missing {key}");
    }
    let mut below = 0;
    for x in 0..5 {
        for y in 0..5 {
            let (kx, ky) = (2.0 * std::f64::consts::PI * x as f64 / 5.0, 2.0 * std::f64::consts::PI * y as f64 / 5.0);
            if -2.0 * (kx.cos() + ky.cos()) < 0.4 {
                below += 1;
            }
        }
    }
    assert!((s["n"].as_f64().unwrap() - below as f64 / 25.0).abs() < 1e-10);
    assert!(s["p"].as_f64().unwrap() < 1e-20);
}

#[test]
fn free_dispersion_csv_matches_quasiparticle_combinations() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "free.conf", &format!("{FREE}[spectrum]\nkset = grid\nzero_tol = 1e-9\n"));
    assert!(ghft(tmp.path(), &["ground", "-c", &cfg]).status.success());
    let out = ghft(tmp.path(), &["dispersion", "-c", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(tmp.path().join("free.dispersion.grid.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# param_hash="));
    assert_eq!(
        lines.next().unwrap(),
        "kx_index,ky_index,kx,ky,branch,omega,real_residual,Delta_k0,Delta_k,Delta_S,S_T,S_z,C"
    );
    let xi = |i: usize, j: usize| {
        let (kx, ky) = (2.0 * std::f64::consts::PI * i as f64 / 5.0, 2.0 * std::f64::consts::PI * j as f64 / 5.0);
        -2.0 * (kx.cos() + ky.cos()) - 0.4
    };
    let mut rows = 0;
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f.len(), 13);
        let (i, j): (usize, usize) = (f[0].parse().unwrap(), f[1].parse().unwrap());
        let omega: f64 = f[5].parse().unwrap();
        // all block modes (±k, either spin) sit at |ξ(k)|: sums give |ξ|/2, differences vanish
        let want = xi(i, j).abs() / 2.0;
        assert!((omega - want).abs() < 1e-10 * want.max(1.0), "k = ({i},{j}): {omega} vs {want}");
        rows += 1;
    }
    assert!(rows > 0);
    let c = json(&tmp.path().join("free.classification.json"));
    assert_eq!(c["kset"], "grid");
}

#[test]
fn outputs_are_deterministic() {
    let mut runs = Vec::new();
    for _ in 0..2 {
        let tmp = TempDir::new().unwrap();
        let cfg = write_config(tmp.path(), "a.conf", "[model]\nu = -4\nmu = 3\nlx = 5\nly = 5\n[output]\nprefix = a\n");
        assert!(ghft(tmp.path(), &["ground", "-c", &cfg]).status.success());
        assert!(ghft(tmp.path(), &["dispersion", "-c", &cfg]).status.success());
        let files: Vec<Vec<u8>> = ["a.ground.json", "a.cm", "a.dispersion.grid.csv", "a.dispersion.path.csv", "a.classification.json"]
            .iter()
            .map(|f| fs::read(tmp.path().join(f)).unwrap())
            .collect();
        runs.push(files);
    }
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn mismatched_covariance_is_refused() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "free.conf", FREE);
    assert!(ghft(tmp.path(), &["ground", "-c", &cfg]).status.success());
    let out = ghft(tmp.path(), &["dispersion", "-c", &cfg, "--set", "model.mu=0.5"]);
    assert_eq!(out.status.code(), Some(5));
    assert!(String::from_utf8_lossy(&out.stderr).contains("parameter hash"));
}

#[test]
fn config_errors_report_lines() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "bad.conf", "[model]\nu = -4\nmu = two\n");
    let out = ghft(tmp.path(), &["ground", "-c", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
    let out = ghft(tmp.path(), &["ground", "--set", "solver.tol=0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn json_and_text_configs_agree() {
    let tmp = TempDir::new().unwrap();
    let text = write_config(tmp.path(), "free.conf", FREE);
    let printed = ghft(tmp.path(), &["config", "-c", &text]);
    assert!(printed.status.success());
    let json_cfg = serde_json::json!({
        "model": {"t": 1.0, "u": 0.0, "mu": 0.4, "lx": 5, "ly": 5, "mu_convention": "subtract"},
        "output": {"prefix": "free"}
    });
    let jp = tmp.path().join("free.json");
    fs::write(&jp, json_cfg.to_string()).unwrap();
    let from_json = ghft(tmp.path(), &["config", "-c", jp.to_str().unwrap()]);
    assert!(from_json.status.success());
    assert_eq!(printed.stdout, from_json.stdout);
}

#[test]
fn nonconvergence_has_its_own_exit_code() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "a.conf", "[model]\nu = -4\nmu = 1\nlx = 5\nly = 5\n[solver]\nmax_iter = 2\n");
    let out = ghft(tmp.path(), &["ground", "-c", &cfg]);
    assert_eq!(out.status.code(), Some(4));
    let s = json(&tmp.path().join("run.ground.json"));
    assert_eq!(s["converged"], false);
}

#[test]
fn verify_passes_and_negative_control_fails_by_name() {
    let tmp = TempDir::new().unwrap();
    let ok = ghft(tmp.path(), &["verify"]);
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stdout));
    assert_eq!(json(&tmp.path().join("run.verify.json"))["passed"], true);

    let bad = ghft(tmp.path(), &["verify", "--set", "verify.tolerances.gradient=0"]);
    assert_eq!(bad.status.code(), Some(6));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("gradient_identity"));

    let free = ghft(tmp.path(), &["verify", "--set", "model.u=0"]);
    assert!(free.status.success());
    let big = ghft(tmp.path(), &["verify", "--set", "model.lx=9"]);
    assert_eq!(big.status.code(), Some(2));
}

#[test]
fn sweep_covers_the_product() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "s.conf", "[model]\nlx = 3\nly = 3\n[output]\nprefix = s\n");
    let out = ghft(tmp.path(), &["sweep", "-c", &cfg, "--u", "-4,4", "--mu", "1,-3", "--dispersion"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(tmp.path().join("s.sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(tmp.path().join("s_u-4_mu1.ground.json").exists());
    assert!(tmp.path().join("s_u4_mu-3.classification.json").exists());
}
