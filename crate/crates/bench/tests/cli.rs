use std::fs;
use std::process::{Command, Output};

fn bench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lkqn-bench")).args(args).output().expect("binary runs")
}

#[test]
fn run_quadratic_exact_line_search() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("trace.csv");
    let o = bench(&[
        "run",
        "--solver",
        "lkqn-qt",
        "--problem",
        "quad",
        "--dim",
        "50",
        "--seed",
        "1",
        "--exact-ls",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("iter,f,gnorm,step,ys,trace_B"));
    assert!(lines.len() - 1 <= 51, "{} rows", lines.len() - 1);
    let last_gnorm: f64 = lines.last().unwrap().split(',').nth(2).unwrap().parse().unwrap();
    assert!(last_gnorm / 50.0 <= 1e-6);
}

#[test]
fn trace_is_deterministic() {
    let args = ["run", "--solver", "lkqn", "--problem", "GENROSE", "--dim", "20"];
    let (a, b) = (bench(&args), bench(&args));
    assert_eq!(a.status.code(), Some(0));
    assert!(!a.stdout.is_empty());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn run_that_stops_early_exits_one() {
    let o = bench(&["run", "--problem", "GENROSE", "--dim", "20", "--max-iters", "2"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(bench(&["run", "--problem", "GENROSE", "--bogus"]).status.code(), Some(2));
    assert_eq!(bench(&["run", "--problem", "NOSUCH", "--dim", "10"]).status.code(), Some(2));
    assert_eq!(bench(&["run", "--problem", "TRIDIA", "--dim", "10", "--solver", "newton"]).status.code(), Some(2));
    assert_eq!(bench(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn profile_of_hand_example() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("bench.csv");
    fs::write(
        &input,
        "problem,solver,status,iters,fevals,time_s,f_final,gnorm_final\n\
         p1,s1,converged,1,2,0.1,0,0\n\
         p1,s2,converged,2,3,0.1,0,0\n\
         p2,s1,max-iters,9,9,0.1,1,1\n\
         p2,s2,converged,1,2,0.1,0,0\n",
    )
    .unwrap();
    let out = dir.path().join("profile.csv");
    let o = bench(&["profile", input.to_str().unwrap(), "--metric", "iters", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_to_string(&out).unwrap(), "solver,tau,rho\ns1,1,0.5\ns2,1,0.5\ns2,2,1\n");
}

#[test]
fn sweep_then_profile() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.cfg");
    fs::write(
        &cfg,
        "[defaults]\nmax_iters = 500\n\n[run]\nproblem = TRIDIA, GENROSE\ndim = 20\nsolver = lkqn, lkqn-qt, lbfgs\n",
    )
    .unwrap();
    let records = dir.path().join("bench.csv");
    let o = bench(&["sweep", cfg.to_str().unwrap(), "--out", records.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_to_string(&records).unwrap().lines().count(), 7);
    let o = bench(&["profile", records.to_str().unwrap(), "--metric", "fevals"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("solver,tau,rho\n"));
    for line in text.lines().skip(1) {
        let rho: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!((0.0..=1.0).contains(&rho));
    }
}

#[test]
fn bad_sweep_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "[run]\nproblem = TRIDIA\nwhat = 1\n").unwrap();
    let o = bench(&["sweep", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}

#[test]
fn verify_passes() {
    let o = bench(&["verify"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).lines().all(|l| l.starts_with("PASS")));
}
