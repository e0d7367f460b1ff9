use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ucplab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ucplab"))
        .current_dir(dir)
        .env_remove("UCPLAB_OUT")
        .args(args)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const MINIMAL: &str = "d = 1\ntheta_e = 1\ntheta_l = 0\n";

#[test]
fn constants_minimal_config() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), MINIMAL).unwrap();
    let o = ucplab(dir.path(), &["constants", "--config", "c.toml", "--out", "out"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("out/constants.json")).unwrap()).unwrap();
    let d0 = v["outputs"]["delta0"]["value"].as_f64().unwrap();
    assert!((d0 - 7.24973458412204e-5).abs() < 1e-15);
    assert!(dir.path().join("out/manifest.json").exists());
}

#[test]
fn constants_json_config_matches_toml() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), format!("schema = 1\n{MINIMAL}")).unwrap();
    fs::write(dir.path().join("c.json"), r#"{"d": 1, "theta_e": 1.0, "theta_l": 0.0}"#).unwrap();
    assert_eq!(code(&ucplab(dir.path(), &["constants", "--config", "c.toml", "--out", "a"])), 0);
    assert_eq!(code(&ucplab(dir.path(), &["constants", "--config", "c.json", "--out", "b"])), 0);
    let a = fs::read(dir.path().join("a/constants.json")).unwrap();
    let b = fs::read(dir.path().join("b/constants.json")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn constants_missing_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), "d = 1\ntheta_e = 1\n").unwrap();
    let o = ucplab(dir.path(), &["constants", "--config", "c.toml"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("theta_l"), "{}", stderr(&o));
}

#[test]
fn wrong_schema_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), format!("schema = 9\n{MINIMAL}")).unwrap();
    assert_eq!(code(&ucplab(dir.path(), &["constants", "--config", "c.toml"])), 2);
}

#[test]
fn reruns_are_bitwise_identical() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        let o = ucplab(dir.path(), &["run", "lemmas", "--trials", "500", "--seed", "3", "--out", out]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    for f in ["report.json", "cases.csv", "lemmas.dat", "config.json"] {
        assert_eq!(fs::read(dir.path().join("a").join(f)).unwrap(), fs::read(dir.path().join("b").join(f)).unwrap(), "{f}");
    }
    let hash = |p: &str| {
        let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join(p)).unwrap()).unwrap();
        v["config_hash"].as_str().unwrap().to_string()
    };
    assert_eq!(hash("a/manifest.json"), hash("b/manifest.json"));
}

#[test]
fn unknown_experiment_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&ucplab(dir.path(), &["run", "nope"])), 2);
}

#[test]
fn observe_beyond_delta0_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("o.toml"), "deltas = [0.1]\n[[fields]]\nd = 1\nl = 4.0\ngenerator = \"identity\"\n").unwrap();
    let o = ucplab(dir.path(), &["run", "observe", "--config", "o.toml"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("precondition"), "{}", stderr(&o));
}

#[test]
fn lemmas_full_run_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = ucplab(dir.path(), &["run", "lemmas", "--trials", "10000", "--seed", "7", "--out", "out"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in ["report.json", "cases.csv", "lemmas.dat", "manifest.json"] {
        assert!(dir.path().join("out").join(f).exists(), "{f}");
    }
}

#[test]
fn chain_demo_writes_path() {
    let dir = tempfile::tempdir().unwrap();
    let o = ucplab(dir.path(), &["run", "chain-demo", "--d", "1", "--a", "0.25", "--b", "0.75", "--out", "out"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("out/path.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("step,x1"));
    let xs: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(xs.len(), 7);
    for w in xs.windows(2) {
        let s = (w[1] - w[0]).abs();
        assert!((0.25 - 1e-12..=0.75 + 1e-12).contains(&s), "{s}");
    }
}

#[test]
fn env_overrides_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_ucplab"))
        .current_dir(dir.path())
        .env("UCPLAB_OUT", "from-env")
        .args(["run", "chain-demo", "--trials", "50", "--out", "from-flag"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(dir.path().join("from-env/report.json").exists());
    assert!(!dir.path().join("from-flag").exists());
}

#[test]
fn numerical_failure_exits_1_with_case_id() {
    let dir = tempfile::tempdir().unwrap();
    // a slope threshold no model can reach
    fs::write(dir.path().join("w.toml"), "models = [\"alloy\"]\nlengths = [8.0]\nsamples = 20\nbootstrap = 50\nmin_slope = 50.0\n").unwrap();
    let o = ucplab(dir.path(), &["run", "wegner", "--config", "w.toml"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("alloy/L8/slope"), "{}", stderr(&o));
}

#[test]
fn inapplicable_flag_and_bad_calibration_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&ucplab(dir.path(), &["run", "annuli", "--trials", "3"])), 2);
    assert_eq!(code(&ucplab(dir.path(), &["run", "annuli", "--calibration", "theta=2"])), 2);
}
