use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hybridbeam")).args(args).output().expect("binary runs")
}

#[test]
fn power_table_includes_full_digital_reference() {
    let out = cli(&["power", "--nr", "16", "--lr", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("arch,n_r,l_r,power_mw,eta"));
    assert!(text.lines().any(|l| l.starts_with("FD,16,16,4360,1,")), "{text}");
    assert!(text.lines().any(|l| l.starts_with("A5,16,4,1260,")));
}

#[test]
fn missing_config_exits_2() {
    let out = cli(&["sweep", "--config", "definitely-missing.toml"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cannot read"));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(cli(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(cli(&["power", "--bogus"]).status.code(), Some(2));
    assert_eq!(cli(&["sweep"]).status.code(), Some(2));
    assert_eq!(cli(&["combine", "--lr", "20"]).status.code(), Some(2));
}

#[test]
fn sweep_from_toml_writes_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "[system]\nn_t = 16\nn_r = 8\nl_r = 2\nn_s = 2\ng_t = 16\ng_r = 8\ntrials = 2\n\n\
         [experiment]\nkind = \"SeVsRfChains\"\nsweep = [1, 2]\narchitectures = [\"A5\", \"A6\"]\n",
    )
    .unwrap();
    let out_path = dir.path().join("out.json");
    let out = cli(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--format",
        "json",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out_path).unwrap()).unwrap();
    assert_eq!(v["config"]["system"]["n_r"], 8);
    // Two architectures plus the unconstrained bound at each L_r.
    assert_eq!(v["rows"].as_array().unwrap().len(), 6);
}

#[test]
fn identical_seeds_give_identical_bytes() {
    let args = ["estimate", "--snr", "0,10", "--trials", "3", "--seed", "42"];
    let a = cli(&args);
    let b = cli(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let c = cli(&["estimate", "--snr", "0,10", "--trials", "3", "--seed", "43"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn coherence_range_doubles() {
    let out = cli(&["coherence", "--m", "64..1024", "--trials", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let ms: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(ms, ["64", "128", "256", "512", "1024"]);
}
