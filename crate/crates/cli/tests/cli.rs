use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn mcmullen(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mcmullen"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr_json(o: &Output) -> Value {
    serde_json::from_slice(o.stderr.trim_ascii()).expect("stderr is one JSON object")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn build_writes_level_one_pair() {
    let dir = TempDir::new().unwrap();
    let o = mcmullen(&["build", "--delta", "1/3", "--gamma", "1/100", "--depth", "1"], dir.path());
    assert!(o.status.success(), "{o:?}");
    let table = fs::read_to_string(dir.path().join("level_values.csv")).unwrap();
    let rows: Vec<&str> = table.lines().collect();
    assert_eq!(rows[0], "level,n,s,t,s_decimal,t_decimal");
    assert!(rows[1].starts_with("1,,9/800,891/100,"));
    assert_eq!(read_json(&dir.path().join("validation.json"))["passed"], true);
}

#[test]
fn build_lists_refined_levels() {
    let dir = TempDir::new().unwrap();
    let o = mcmullen(&["build", "--delta", "1/3", "--gamma", "1/100", "--branching", "406,812", "--depth", "3"], dir.path());
    assert!(o.status.success());
    let table = fs::read_to_string(dir.path().join("level_values.csv")).unwrap();
    let ns: Vec<&str> = table.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(ns, ["", "406", "812"]);
}

#[test]
fn verify_default_branching_has_no_violations() {
    let dir = TempDir::new().unwrap();
    let o = mcmullen(&["verify", "--delta", "1/3", "--gamma", "1/100", "--depth", "2"], dir.path());
    assert!(o.status.success());
    assert!(stdout(&o).contains(" 0 violations"));
    assert_eq!(read_json(&dir.path().join("verify.json"))["violation_count"], 0);
}

#[test]
fn bounds_reports_contradiction_witness() {
    let dir = TempDir::new().unwrap();
    let o = mcmullen(&["bounds", "--delta", "1/28", "--gamma", "1/200", "--K", "2", "--N-grid", "700,7000"], dir.path());
    assert!(o.status.success());
    let w = read_json(&dir.path().join("witness.json"));
    assert_eq!(w["contradiction"], true);
    assert_eq!(w["witness"]["contradiction"], true);
    let table = fs::read_to_string(dir.path().join("kstar.csv")).unwrap();
    let k: Vec<f64> = table.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(k.len(), 2);
    assert!(k[0] <= k[1]);
}

#[test]
fn integrate_prints_fraction_and_decimal() {
    let dir = TempDir::new().unwrap();
    let o = mcmullen(&["integrate", "--delta", "1/3", "--gamma", "1/100", "--rect", "0,0,1,1"], dir.path());
    assert!(o.status.success());
    assert!(stdout(&o).contains("integral = 1 = 1.00000000000000"));
    let v = read_json(&dir.path().join("integrate.json"));
    assert_eq!(v["integral"]["fraction"], "1");
}

#[test]
fn eval_reports_core_value() {
    let dir = TempDir::new().unwrap();
    let o = mcmullen(&["eval", "--delta", "1/3", "--gamma", "1/100", "--point", "1/2,1/2"], dir.path());
    assert!(o.status.success());
    let v = read_json(&dir.path().join("eval.json"));
    assert_eq!(v["value"]["fraction"], "891/100");
    assert_eq!(v["in_core"], true);
}

#[test]
fn raster_csv_sums_to_unit_mass() {
    let dir = TempDir::new().unwrap();
    let m = 48;
    let o = mcmullen(
        &["raster", "--delta", "1/3", "--gamma", "1/100", "--depth", "2", "--resolution", &m.to_string()],
        dir.path(),
    );
    assert!(o.status.success(), "{o:?}");
    let csv = fs::read_to_string(dir.path().join("density.csv")).unwrap();
    let values: Vec<f64> = csv.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(values.len(), m * m);
    let total: f64 = values.iter().sum::<f64>() / (m * m) as f64;
    assert!((total - 1.0).abs() < 1e-12, "{total}");

    let pgm = fs::read_to_string(dir.path().join("density.pgm")).unwrap();
    let mut tokens = pgm.lines().filter(|l| !l.starts_with('#')).flat_map(str::split_whitespace);
    assert_eq!(tokens.next(), Some("P2"));
    assert_eq!(tokens.next(), Some("48"));
    assert_eq!(tokens.next(), Some("48"));
    assert_eq!(tokens.next(), Some("65535"));
    let grays: Vec<u32> = tokens.map(|t| t.parse().unwrap()).collect();
    assert_eq!(grays.len(), m * m);
    assert!(grays.iter().all(|&g| g <= 65535));

    let sidecar = read_json(&dir.path().join("density.json"));
    assert_eq!(sidecar["maxval"], 65535);
    assert_eq!(sidecar["total"]["fraction"], "1");
}

#[test]
fn outputs_are_reproducible() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let args = ["probe", "--delta", "1/15", "--gamma", "1/20", "--branching", "84", "--depth", "2", "--resolution", "64", "--seed", "7"];
    assert!(mcmullen(&args, a.path()).status.success());
    assert!(mcmullen(&args, b.path()).status.success());
    for name in ["distortion.csv", "replay.csv", "replay.json", "map_depth2.csv"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
    let replay = fs::read_to_string(a.path().join("replay.csv")).unwrap();
    assert!(replay.starts_with("quantity,value\n"));

    let args = ["net", "--delta", "1/3", "--gamma", "1/100", "--scale", "16"];
    assert!(mcmullen(&args, a.path()).status.success());
    assert!(mcmullen(&args, b.path()).status.success());
    for name in ["net.csv", "net.json", "stats.json"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
    assert_eq!(read_json(&a.path().join("stats.json"))["count"], 256);
}

#[test]
fn config_file_supplies_exact_parameters() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "delta = \"1/3\"\ngamma = 0.01\ndepth = 1\n").unwrap();
    let o = mcmullen(&["build", "--config", cfg.to_str().unwrap()], dir.path());
    assert!(o.status.success());
    assert!(stdout(&o).contains("s = 9/800, t = 891/100"));
}

#[test]
fn flags_override_config_file() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "delta = \"1/5\"\ngamma = \"1/100\"\n").unwrap();
    let o = mcmullen(&["build", "--config", cfg.to_str().unwrap(), "--delta", "1/3"], dir.path());
    assert!(stdout(&o).contains("t = 891/100"));
}

#[test]
fn unknown_config_key_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "delta = \"1/3\"\ngamma = \"1/100\"\nbranchng = [14]\n").unwrap();
    let o = mcmullen(&["build", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = stderr_json(&o);
    assert_eq!(err["error"], "config");
    assert!(err["message"].as_str().unwrap().contains("branchng"));
}

#[test]
fn invalid_parameters_exit_with_report() {
    let dir = TempDir::new().unwrap();
    let o = mcmullen(&["build", "--delta", "1/3", "--gamma", "3/2"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = stderr_json(&o);
    assert_eq!(err["error"], "invalid_params");
    assert!(err["details"]["checks"].is_array());
}

#[test]
fn malformed_input_is_machine_readable() {
    let dir = TempDir::new().unwrap();
    for args in [
        vec!["eval", "--delta", "1/3", "--gamma", "1/100", "--point", "a,b"],
        vec!["eval", "--delta", "1/3", "--gamma", "1/100"],
        vec!["raster", "--delta", "1/3", "--gamma", "1/100", "--mode", "blur"],
        vec!["bounds", "--delta", "1/3", "--gamma", "1/100"],
        vec!["frobnicate"],
    ] {
        let o = mcmullen(&args, dir.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(stderr_json(&o)["error"].is_string());
    }
}
