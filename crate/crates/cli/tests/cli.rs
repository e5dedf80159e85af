use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn wfsep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wfsep"))
        .args(args)
        .env_remove("WFSEP_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn assert_error(o: &Output, code: i32, tag: &str) {
    assert_eq!(o.status.code(), Some(code), "stderr: {}", stderr(o));
    let err = stderr(o);
    assert_eq!(err.lines().count(), 1, "expected a single line, got {err:?}");
    assert!(err.starts_with(&format!("error code={tag} exit={code} ")), "{err}");
}

#[test]
fn classify_prints_one_line() {
    let o = wfsep(&["classify", "--p0", "0.2,0.5,0", "--p1", "0.7,0.5,0"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "separating_points=0 verdict=HitZero bar=false\n");
}

#[test]
fn classify_identical_laws() {
    let o = wfsep(&["classify", "--p0", "0.3,0.4,2", "--p1", "0.3,0.4,2"]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("separating_points=none verdict=Delta"), "{}", stdout(&o));
}

fn dir_contents(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn same_seed_gives_identical_files() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for (dir, threads) in [(&a, "1"), (&b, "3")] {
        let o = wfsep(&[
            "simulate", "--p", "0.5,1,0.7", "--t-end", "2", "--paths", "3", "--seed", "42", "--threads", threads,
            "--out", dir.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let (ca, cb) = (dir_contents(&a), dir_contents(&b));
    assert_eq!(ca.len(), 7);
    assert_eq!(ca, cb);

    let c = tmp.path().join("c");
    let o = wfsep(&["simulate", "--p", "0.5,1,0.7", "--t-end", "2", "--paths", "3", "--seed", "43", "--out", c.to_str().unwrap()]);
    assert!(o.status.success());
    assert_ne!(fs::read(a.join("path_0000.csv")).unwrap(), fs::read(c.join("path_0000.csv")).unwrap());
}

#[test]
fn simulated_path_feeds_estimate() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = tmp.path().join("sim");
    let o = wfsep(&["simulate", "--p", "2,2,0", "--t-end", "200", "--grid-dt", "0.01", "--seed", "5", "--out", sim.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let est = tmp.path().join("est");
    let o = wfsep(&[
        "estimate", "--path", sim.join("path_0000.csv").to_str().unwrap(), "--estimator", "joint", "--out",
        est.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = fs::read_to_string(est.join("estimate.csv")).unwrap();
    assert!(table.starts_with("coordinate,estimate,crystallized,used_horizon,clamped\n"), "{table}");
    let alpha: f64 = table.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((alpha - 2.0).abs() < 1.0, "alpha estimate {alpha}");
}

#[test]
fn constant_path_is_singular() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().join("flat.csv");
    fs::write(&p, "t,x\n0,0.3\n0.5,0.3\n1,0.3\n").unwrap();
    let o = wfsep(&["estimate", "--path", p.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_error(&o, 8, "singular_information");
}

#[test]
fn malformed_path_is_a_parse_error() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().join("bad.csv");
    fs::write(&p, "t,x\n0,0.3\n0.5,abc\n").unwrap();
    let o = wfsep(&["estimate", "--path", p.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_error(&o, 5, "parse");
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let o = wfsep(&["classify", "--bogus"]);
    assert_error(&o, 2, "usage");
}

#[test]
fn invalid_inputs() {
    let o = wfsep(&["classify", "--p0", "-1,0.5,0", "--p1", "0.7,0.5,0"]);
    assert_error(&o, 4, "out_of_domain");
    let o = wfsep(&["simulate", "--p", "0.5,1,0", "--x0", "1.5", "--out", "unused"]);
    assert_error(&o, 4, "out_of_domain");
    let o = wfsep(&["simulate", "--p", "0.5,1,0", "--eta", "poly:0,0", "--out", "unused"]);
    assert_error(&o, 3, "invalid_parameter");
    let o = wfsep(&["classify", "--p0", "0.5,1", "--p1", "0.7,0.5,0"]);
    assert_eq!(o.status.code(), Some(5));
}

#[test]
fn config_file_with_flag_override() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.cfg");
    fs::write(&cfg, "# zero-one run\np = 0.5,1,0\nkappas = 0.25\nseeds = 4\nt_end = 0.5\nseed = 9\n").unwrap();
    let out = tmp.path().join("z");
    let o = wfsep(&[
        "verify-zero-one", "--config", cfg.to_str().unwrap(), "--seeds", "3", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["subcommand"], "verify-zero-one");
    assert_eq!(manifest["master_seed"], 9);
    assert_eq!(manifest["settings"]["seeds"], 3);
    assert_eq!(manifest["settings"]["kappas"], "0.25");
    let per_seed = fs::read_to_string(out.join("zero_one_per_seed.csv")).unwrap();
    assert_eq!(per_seed.lines().count(), 1 + 3);
}

#[test]
fn out_dir_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("env-out");
    let o = Command::new(env!("CARGO_BIN_EXE_wfsep"))
        .args(["simulate", "--p", "1,1,0", "--t-end", "0.1"])
        .env("WFSEP_OUT_DIR", &out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(out.join("path_0000.csv").exists());
}
