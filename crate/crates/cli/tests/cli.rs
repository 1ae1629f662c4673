use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_breakeven"))
        .args(args)
        .env("RUST_LOG", "off")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn single_value(o: &Output) -> f64 {
    let text = stdout(o);
    let line = text.lines().nth(1).expect("value row");
    line.split(',').next().unwrap().parse().unwrap()
}

#[test]
fn two_name_breakeven_is_the_spread_correlation() {
    let o = run(&["breakeven", "--names", "2", "--beta", "1,1", "--spread-corr", "0.3"]);
    assert_eq!(o.status.code(), Some(0));
    assert!((single_value(&o) - 0.3).abs() < 1e-8, "{}", stdout(&o));
}

#[test]
fn independent_ftd_price() {
    let o = run(&["price", "--fptd", "1", "--n", "4", "--rho", "0", "--q", "0.95", "--recovery", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let expected = 1.0 - 0.95f64.powi(4);
    assert!((single_value(&o) - expected).abs() < 1e-12);
}

#[test]
fn exit_codes() {
    let none = run(&["breakeven", "--names", "2", "--beta", "1,1", "--spread-corr", "0"]);
    assert_eq!(none.status.code(), Some(3));
    let bad = run(&["price", "--fptd", "1", "--n", "2", "--rho", "0", "--q", "1.5"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("outside (0, 1)"));
}

#[test]
fn malformed_config_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    fs::write(&path, "[market]\nsurvival = [0.9, 0.9]\nrecovry = 0.4\n").unwrap();
    let o = run(&["price", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("recovry"));
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    fs::write(
        &path,
        "[market]\nn = 4\nq = 0.95\nrecovery = 0.0\n\n[copula]\nkind = \"flat\"\nrho = 0.0\n\n[payoff]\nkind = \"fptd\"\norder = 1\n",
    )
    .unwrap();
    let p = path.to_str().unwrap();
    let base = single_value(&run(&["price", "--config", p]));
    assert!((base - (1.0 - 0.95f64.powi(4))).abs() < 1e-12);
    let over = single_value(&run(&["price", "--config", p, "--q", "0.9"]));
    assert!((over - (1.0 - 0.9f64.powi(4))).abs() < 1e-12);
}

fn simulate_to(path: &Path, seed: &str) {
    let o = run(&[
        "simulate", "--n", "3", "--q", "0.9", "--sigma-bar", "0.5", "--spread-corr", "0.4", "--xi",
        "constant", "--steps", "20", "--paths", "5", "--seed", seed, "--out", path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn fixed_seed_gives_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (dir.path().join("a.csv"), dir.path().join("b.csv"), dir.path().join("c.csv"));
    simulate_to(&a, "9");
    simulate_to(&b, "9");
    simulate_to(&c, "10");
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());

    let hedge = |out: &Path| {
        let o = run(&[
            "hedge", "--paths-file", a.to_str().unwrap(), "--fptd", "1", "--rho", "0.5", "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    };
    let (h1, h2) = (dir.path().join("h1.csv"), dir.path().join("h2.csv"));
    hedge(&h1);
    hedge(&h2);
    let text = fs::read_to_string(&h1).unwrap();
    assert_eq!(text, fs::read_to_string(&h2).unwrap());
    assert!(text.starts_with("path,step,time,value,cash,increment,cumulative,h_N1"));
    assert_eq!(text.lines().count(), 1 + 5 * 21);
}

#[test]
fn hedge_window_breakeven_series() {
    let dir = tempfile::tempdir().unwrap();
    let paths = dir.path().join("p.csv");
    simulate_to(&paths, "4");
    let o = run(&["hedge", "--paths-file", paths.to_str().unwrap(), "--fptd", "1", "--window", "10"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.starts_with("time,rho_sq\n"));
    assert_eq!(text.lines().count(), 1 + 11);
}

#[test]
fn scenario_grid_layout() {
    let o = run(&["scenario", "--table1", "--paths", "2", "--stride", "60"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "# order=1");
    assert_eq!(lines[1], "lambda_34,0.001,0.01,0.05,0.3");
    assert_eq!(lines.len(), 6);
    // diagonal cells of the first-to-default grid sit near the flat break-even
    for (k, line) in lines[2..].iter().enumerate() {
        let v: f64 = line.split(',').nth(k + 1).unwrap().parse().unwrap();
        assert!((0.1..0.25).contains(&v), "{line}");
    }

    let skew = run(&["scenario", "--skew", "core", "--steps", "10"]);
    let text = stdout(&skew);
    assert!(text.starts_with("order,rho_sq,beta\n"));
    assert_eq!(text.lines().count(), 1 + 9);
}

#[test]
fn check_pde_reports_consistent_dynamics() {
    let o = run(&["check-pde", "--loadings", "0.3,0.6,0.8", "--beta", "0.7"]);
    let text = stdout(&o);
    let r: f64 = text.lines().nth(1).unwrap().split(',').next().unwrap().parse().unwrap();
    assert!(r < 1e-10);
    let o = run(&["check-pde", "--theta", "0.8", "--spread-corr", "0.4"]);
    let text = stdout(&o);
    let r: f64 = text.lines().nth(1).unwrap().split(',').next().unwrap().parse().unwrap();
    assert!(r > 1e-4);
}
