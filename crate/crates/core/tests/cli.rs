mod common;

use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn chainglue(dir: &Path, config: &str, sub: &str, extra: &[&str]) -> Output {
    let cfg = dir.join("config.toml");
    std::fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_chainglue"))
        .arg(sub)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .args(extra)
        .env_remove("CHAINGLUE_SITE_CAP")
        .output()
        .unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let headers = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (headers, rows)
}

fn column(headers: &[String], rows: &[Vec<String>], name: &str) -> Vec<String> {
    let i = headers.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows.iter().map(|r| r[i].clone()).collect()
}

fn floats(v: Vec<String>) -> Vec<f64> {
    v.iter().map(|s| s.parse().unwrap()).collect()
}

const CERTIFY_CONSTANT: &str = r#"
m = 2
n = 4
gamma_grid = [1.0]

[model]
kind = "tfim"
coupling = 1.0
field = 1.5

[steps]
policy = "fixed"
steps = 8

[certify]
n = 3
field_start = 2.0
field_end = 2.0
grid_points = 9
reference_steps = 16
"#;

const LR_CONFIG: &str = r#"
m = 2
n = 4
gamma_grid = [1.0]

[model]
kind = "tfim"
coupling = 1.0
field = 1.5

[lr]
n = 6
a_site = 0
t_grid = [0.0, 0.05, 0.1, 0.15, 0.2, 0.3]
d_grid = [1, 2, 3, 4]
"#;

#[test]
fn minimal_glue_writes_one_row() {
    let dir = TempDir::new().unwrap();
    let out = chainglue(dir.path(), common::MINIMAL_GLUE, "glue", &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (h, rows) = read_csv(&dir.path().join("out/glue.csv"));
    assert_eq!(rows.len(), 1);
    let fid = floats(column(&h, &rows, "fidelity"))[0];
    assert!(fid > 0.999, "fidelity {fid}");
    assert_eq!(column(&h, &rows, "status")[0], "ok");
    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/meta.json")).unwrap()).unwrap();
    assert_eq!(meta["csv_schema_version"], 1);
    assert_eq!(meta["config_hash"].as_str().unwrap(), column(&h, &rows, "config_hash")[0]);
}

#[test]
fn invalid_configs_exit_two() {
    let dir = TempDir::new().unwrap();
    let bad_n = common::MINIMAL_GLUE.replace("n = 4", "n = 5");
    assert_eq!(chainglue(dir.path(), &bad_n, "glue", &[]).status.code(), Some(2));
    let unknown = format!("{}\nbogus = 1\n", common::MINIMAL_GLUE.replace("[model]", "color = 3\n[model]"));
    assert_eq!(chainglue(dir.path(), &unknown, "glue", &[]).status.code(), Some(2));
    let missing = Command::new(env!("CARGO_BIN_EXE_chainglue")).arg("glue").output().unwrap();
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn critical_model_exits_three() {
    let dir = TempDir::new().unwrap();
    let critical = common::MINIMAL_GLUE.replace("field = 1.5", "field = 0.0");
    let out = chainglue(dir.path(), &critical, "glue", &[]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn constant_path_certifies_with_zero_bound() {
    let dir = TempDir::new().unwrap();
    let out = chainglue(dir.path(), CERTIFY_CONSTANT, "certify", &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (h, rows) = read_csv(&dir.path().join("out/certify.csv"));
    assert_eq!(floats(column(&h, &rows, "bound")), vec![0.0]);
    assert!(floats(column(&h, &rows, "measured_error"))[0] < 1e-10);
    assert_eq!(column(&h, &rows, "certified")[0], "true");
}

#[test]
fn truncation_over_cap_exits_two() {
    let dir = TempDir::new().unwrap();
    let cfg = common::MINIMAL_GLUE.replace("n = 4", "n = 8") + "\n[truncation]\ns_grid = [0.5]\n";
    let out = chainglue(dir.path(), &cfg, "truncation", &["--cap", "6"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn site_cap_comes_from_the_environment() {
    let dir = TempDir::new().unwrap();
    let cfg_path = dir.path().join("config.toml");
    std::fs::write(&cfg_path, common::MINIMAL_GLUE).unwrap();
    let run = |cap: &str| {
        Command::new(env!("CARGO_BIN_EXE_chainglue"))
            .args(["glue", "--config"])
            .arg(&cfg_path)
            .arg("--out")
            .arg(dir.path().join("out"))
            .env("CHAINGLUE_SITE_CAP", cap)
            .output()
            .unwrap()
    };
    assert_eq!(run("3").status.code(), Some(2));
    assert!(run("8").status.success());
}

#[test]
fn lr_scan_and_fit() {
    let dir = TempDir::new().unwrap();
    let out = chainglue(dir.path(), LR_CONFIG, "lr", &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (h, rows) = read_csv(&dir.path().join("out/lr.csv"));
    assert_eq!(rows.len(), 24);
    let t = floats(column(&h, &rows, "t"));
    let norm = floats(column(&h, &rows, "commutator_norm"));
    for (t, c) in t.iter().zip(&norm) {
        if *t == 0.0 {
            assert!(*c < 1e-12);
        }
    }
    assert!(dir.path().join("out/lr_constants.json").exists());
}

#[test]
fn lr_single_distance_fit_fails() {
    let dir = TempDir::new().unwrap();
    let cfg = LR_CONFIG.replace("d_grid = [1, 2, 3, 4]", "d_grid = [2]");
    let out = chainglue(dir.path(), &cfg, "lr", &[]);
    assert_eq!(out.status.code(), Some(3));
    let (h, rows) = read_csv(&dir.path().join("out/lr.csv"));
    assert_eq!(rows.len(), 6);
    assert!(column(&h, &rows, "bound_value").iter().all(|b| b.is_empty()));
}

#[test]
fn gamma_sweep_is_deterministic_and_improves() {
    let cfg = common::MINIMAL_GLUE.replace("gamma_grid = [16.0]", "gamma_grid = [6.0, 12.0, 24.0]");
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    assert!(chainglue(a.path(), &cfg, "glue", &["--jobs", "2"]).status.success());
    assert!(chainglue(b.path(), &cfg, "glue", &[]).status.success());
    let body_a = std::fs::read(a.path().join("out/glue.csv")).unwrap();
    let body_b = std::fs::read(b.path().join("out/glue.csv")).unwrap();
    assert_eq!(body_a, body_b);
    let (h, rows) = read_csv(&a.path().join("out/glue.csv"));
    let inf = floats(column(&h, &rows, "sweep_infidelity"));
    assert!(inf.windows(2).all(|w| w[1] <= w[0]), "{inf:?}");
    let hashes = column(&h, &rows, "config_hash");
    assert!(hashes.iter().all(|x| x.len() == 64 && *x == hashes[0]));
}
