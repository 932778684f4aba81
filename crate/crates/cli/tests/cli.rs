use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn exo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_exo-flr")).args(args).output().expect("binary runs")
}

fn fields(out: &Output) -> Vec<(String, String)> {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

fn field<'a>(kv: &'a [(String, String)], key: &str) -> &'a str {
    &kv.iter().find(|(k, _)| k == key).unwrap_or_else(|| panic!("missing {key}")).1
}

fn simulate(dir: &Path, name: &str, rho: &str, n: &str, seed: &str) -> PathBuf {
    let path = dir.join(name);
    let out = exo(&[
        "simulate", "--n", n, "--p", "50", "--rho", rho, "--nu-instr", "0.6", "--beta", "1", "--sigma", "1.4",
        "--seed", seed, "--out", path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    path
}

#[test]
fn simulate_then_bootstrap_test_rejects_strong_endogeneity() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), "d.csv", "0.6", "300", "4");
    let result = dir.path().join("r.txt");
    let out = exo(&[
        "test", "--data", data.to_str().unwrap(), "--alpha", "0.0001", "--nu", "3", "--gamma", "0.05",
        "--bootstrap", "rademacher", "--B", "199", "--seed", "9", "--out", result.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let kv = fields(&out);
    assert_eq!(field(&kv, "test"), "bootstrap");
    assert_eq!(field(&kv, "scheme"), "rademacher");
    assert_eq!(field(&kv, "B"), "199");
    assert_eq!(field(&kv, "reject"), "true");
    let stat: f64 = field(&kv, "statistic").parse().unwrap();
    let q: f64 = field(&kv, "q_star").parse().unwrap();
    assert!(stat > q);
    assert_eq!(std::fs::read_to_string(result).unwrap(), String::from_utf8_lossy(&out.stdout));
}

#[test]
fn asymptotic_test_under_exogeneity() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), "d.csv", "0", "200", "1");
    let out = exo(&["test", "--data", data.to_str().unwrap(), "--alpha", "0.053", "--gamma", "0.05", "--asymptotic"]);
    let code = out.status.code().unwrap();
    assert!(code == 0 || code == 3, "{}", String::from_utf8_lossy(&out.stderr));
    let kv = fields(&out);
    assert_eq!(field(&kv, "test"), "asymptotic");
    let z: f64 = field(&kv, "z").parse().unwrap();
    assert_eq!(code == 3, z > 1.6448536269514722);
}

#[test]
fn simulation_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let a = simulate(dir.path(), "a.csv", "0.3", "20", "5");
    let b = simulate(dir.path(), "b.csv", "0.3", "20", "5");
    let c = simulate(dir.path(), "c.csv", "0.3", "20", "6");
    let read = |p: &Path| std::fs::read_to_string(p).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
    assert!(read(&a).starts_with("p,n\n50,20\n"));
}

#[test]
fn errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.csv");
    let out = exo(&["test", "--data", missing.to_str().unwrap(), "--alpha", "0.01", "--gamma", "0.05", "--asymptotic"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));

    // bad row length
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "p,n\n3,2\n1,2,3,4\n1,2,3\n0,0,0,0\n0,0,0,0\n1,2\n").unwrap();
    let out = exo(&["test", "--data", bad.to_str().unwrap(), "--alpha", "0.01", "--gamma", "0.05", "--asymptotic"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 4"));

    // neither test selected, both selected, too few replicates
    let data = simulate(dir.path(), "d.csv", "0", "20", "1");
    let d = data.to_str().unwrap();
    for args in [
        vec!["test", "--data", d, "--alpha", "0.01", "--gamma", "0.05"],
        vec!["test", "--data", d, "--alpha", "0.01", "--gamma", "0.05", "--asymptotic", "--bootstrap", "efron", "--B", "50"],
        vec!["test", "--data", d, "--alpha", "0.01", "--gamma", "0.05", "--bootstrap", "efron", "--B", "5"],
        vec!["test", "--data", d, "--alpha", "0.01", "--gamma", "0.05", "--bootstrap", "jackknife", "--B", "50"],
        vec!["simulate", "--n", "10", "--rho", "0.8", "--nu-instr", "0.7", "--beta", "1", "--out", d],
    ] {
        assert_eq!(exo(&args).status.code(), Some(1), "{args:?}");
    }
}

#[test]
fn sweep_writes_a_csv_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("s.cfg");
    std::fs::write(
        &config,
        "reps = 20\nB = 40\nseed = 3\nrho = 0.4\nnu_sobolev = 3\np = 30\n\n[cell]\nn = 40\n\n[cell]\nn = 60\ntest = asymptotic\nalpha = 0.053\nnu_sobolev = 0\n",
    )
    .unwrap();
    let out_path = dir.path().join("out.csv");
    let run = |threads: &str| {
        let out = exo(&[
            "sweep", "--config", config.to_str().unwrap(), "--out", out_path.to_str().unwrap(), "--threads", threads,
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::read_to_string(&out_path).unwrap()
    };
    let strip = |text: &str| -> Vec<String> {
        text.lines().map(|l| l.rsplit_once(',').unwrap().0.to_string()).collect()
    };
    let one = run("1");
    let lines: Vec<&str> = one.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("beta_id,n,p,alpha,nu_sobolev,rho,nu_instr,gamma,test,scheme,B,reps,"));
    assert!(lines[1].starts_with("1,40,30,0.0001,3,0.4,0.6,0.05,bootstrap,rademacher,40,20,"));
    assert!(lines[2].contains(",asymptotic,,,20,"));
    assert_eq!(strip(&one), strip(&run("3")));
}

#[test]
fn help_succeeds() {
    let out = exo(&["--help"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("simulate"));
}
