use std::path::Path;
use std::process::Command;

fn beamctl(command: &str, config: &str, dir: &Path) -> (i32, String) {
    let cfg = dir.join("run.conf");
    std::fs::write(&cfg, config).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_beamctl"))
        .arg(command)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap();
    let text = String::from_utf8_lossy(&out.stdout).into_owned() + &String::from_utf8_lossy(&out.stderr);
    (out.status.code().unwrap(), text)
}

fn json(dir: &Path, name: &str) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("out").join(name)).unwrap()).unwrap()
}

#[test]
fn headline_control_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = beamctl("control", "modes = 16\nhorizon = 2\nxi = 1/3\nregion = internal\nn = 8\n", dir.path());
    assert_eq!(code, 0);
    let report = json(dir.path(), "report.json");
    assert_eq!(report["schema"], "beamctl/1");
    assert_eq!(report["pass"], true);
    assert!(report["final_residual"].as_f64().unwrap() < 1e-6);
    let gramian = json(dir.path(), "gramian.json");
    assert_eq!(gramian["dim"], 32);
    assert!(dir.path().join("out/control.csv").exists());
}

#[test]
fn strategic_check_rejects_two_thirds() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = beamctl("strategic-check", "xi = 2/3\n", dir.path());
    assert_eq!(code, 0);
    let v = json(dir.path(), "strategic.json");
    assert_eq!(v["strategic"], false);
    assert_eq!(v["witness_m"], 1);
}

#[test]
fn empty_sweep_list_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let (code, text) = beamctl("sweep", "xi = 1/3\nn_list =\n", dir.path());
    assert_eq!(code, 2, "{text}");
}

#[test]
fn malformed_configs_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    for bad in ["xi = 2/4\n", "xi = 1/3\nbogus = 1\n", "xi = 1/3\nxi = 1/5\n", "modes = many\nxi = 1/3\n"] {
        let (code, text) = beamctl("strategic-check", bad, dir.path());
        assert_eq!(code, 2, "{bad:?}: {text}");
    }
    let (code, _) = beamctl("control", "xi = 1/3\nregion = internal\n", dir.path());
    assert_eq!(code, 2);
}

#[test]
fn missing_config_file_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_beamctl"))
        .args(["simulate", "--config"])
        .arg(dir.path().join("absent.conf"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
