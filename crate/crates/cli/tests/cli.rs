use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fracperim"))
}

fn workdir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("fracperim-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().unwrap()
}

fn json(bytes: &[u8]) -> Value {
    serde_json::from_slice(bytes).unwrap()
}

fn write_set(dir: &Path, name: &str, bits: &[u8]) {
    std::fs::write(dir.join(name), serde_json::to_vec(bits).unwrap()).unwrap();
}

#[test]
fn gen_then_energy() {
    let dir = workdir("energy");
    let out = run(&dir, &["gen", "cantor", "--a", "1/4", "--depth", "2", "--raster", "64"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let set: Vec<u8> = serde_json::from_slice(&std::fs::read(dir.join("set.json")).unwrap()).unwrap();
    assert_eq!(set.len(), 64);
    let ones = set.iter().filter(|&&v| v == 1).count();

    let out = run(&dir, &["energy", "--space", "space.json", "--set", "set.json", "--s", "0.5", "--mode", "interval1d"]);
    assert!(out.status.success());
    let v = json(&out.stdout);
    assert!(v["result"]["perimeter"].as_f64().unwrap() > 0.0);
    assert_eq!(v["result"]["pair_count"].as_u64().unwrap() as usize, ones * (64 - ones));
    assert_eq!(v["config"]["command"]["Energy"]["s"], 0.5);
}

#[test]
fn codim_chain_on_a_small_cantor_raster() {
    let dir = workdir("chain");
    assert!(run(&dir, &["gen", "cantor", "--a", "1/4", "--depth", "6", "--raster", "4096"]).status.success());
    let out = run(&dir, &["codim", "--space", "space.json", "--set", "set.json", "--what", "chain", "--csv", "chain.csv"]);
    assert!(matches!(out.status.code(), Some(0) | Some(2)), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out.stdout);
    for key in ["minkowski", "fractional", "hausdorff"] {
        let b = &v["result"][key]["bracket"];
        assert!(b[0].as_f64().unwrap() <= b[1].as_f64().unwrap());
    }
    let csv = std::fs::read_to_string(dir.join("chain.csv")).unwrap();
    assert!(csv.lines().count() > 1);
}

#[test]
fn minimize_with_oracle() {
    let dir = workdir("minimize");
    assert!(run(&dir, &["gen", "grid", "--dim", "1", "--n", "16"]).status.success());
    let omega: Vec<u8> = (0..16).map(|i| (5..11).contains(&i) as u8).collect();
    let exterior: Vec<u8> = (0..16).map(|i| (i < 5) as u8).collect();
    write_set(&dir, "omega.json", &omega);
    write_set(&dir, "exterior.json", &exterior);
    let out = run(&dir, &["minimize", "--space", "space.json", "--omega", "omega.json", "--exterior", "exterior.json", "--s", "0.5", "--oracle"]);
    assert!(matches!(out.status.code(), Some(0) | Some(2)), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out.stdout);
    assert!(v["result"].to_string().contains("energy"));
}

#[test]
fn hypfill_verify_table() {
    let dir = workdir("hypfill");
    assert!(run(&dir, &["gen", "grid", "--dim", "1", "--n", "256"]).status.success());
    let out = run(&dir, &["hypfill", "--space", "space.json", "--levels", "6", "--verify", "--samples", "4"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(json(&out.stdout)["result"].to_string().contains("ratio"));
}

#[test]
fn outputs_are_deterministic() {
    let dir = workdir("determinism");
    let steps: [&[&str]; 3] = [
        &["gen", "koch", "--depth", "3", "--n", "128", "--space", "k.json", "--set", "ks.json"],
        &["codim", "--space", "k.json", "--set", "ks.json", "--what", "mink", "--scales", "0.04:0.32", "--out", "c.json"],
        &["hypfill", "--space", "k.json", "--levels", "3", "--out", "h.json"],
    ];
    let mut first = Vec::new();
    for round in 0..2 {
        for step in steps {
            let out = run(&dir, step);
            assert!(matches!(out.status.code(), Some(0) | Some(2)), "{step:?}: {}", String::from_utf8_lossy(&out.stderr));
        }
        let files: Vec<Vec<u8>> = ["k.json", "ks.json", "c.json", "h.json"].iter().map(|f| std::fs::read(dir.join(f)).unwrap()).collect();
        if round == 0 {
            first = files;
        } else {
            assert!(first == files, "outputs differ between runs");
        }
    }
}

#[test]
fn bad_input_exits_with_one() {
    let dir = workdir("errors");
    assert_eq!(run(&dir, &["energy", "--bogus"]).status.code(), Some(1));
    assert_eq!(run(&dir, &["energy", "--space", "missing.json", "--set", "x.json", "--s", "0.5"]).status.code(), Some(1));
    std::fs::write(dir.join("broken.json"), "{ not json").unwrap();
    let out = run(&dir, &["energy", "--space", "broken.json", "--set", "broken.json", "--s", "0.5"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("broken.json"));
    assert!(run(&dir, &["gen", "grid", "--dim", "1", "--n", "8"]).status.success());
    write_set(&dir, "e.json", &[1, 0, 1]);
    assert_eq!(run(&dir, &["energy", "--space", "space.json", "--set", "e.json", "--s", "0.5"]).status.code(), Some(1));
    write_set(&dir, "e.json", &[1, 0, 1, 0, 1, 0, 1, 0]);
    assert_eq!(run(&dir, &["energy", "--space", "space.json", "--set", "e.json", "--s", "1.5"]).status.code(), Some(1));
    assert_eq!(run(&dir, &["reproduce", "nothing"]).status.code(), Some(1));
}

#[test]
fn reproduce_fast_recipes() {
    let dir = workdir("reproduce");
    for name in ["minimize-1d", "hypfill-verify"] {
        let out = run(&dir, &["reproduce", name, "--out", "report.json"]);
        assert_eq!(out.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&out.stderr));
        let stderr = String::from_utf8_lossy(&out.stderr);
        assert!(stderr.lines().any(|l| l.starts_with("PASS")));
        assert!(!stderr.contains("FAIL"));
        assert!(dir.join("report.json").exists());
    }
}
