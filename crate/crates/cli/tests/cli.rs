use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn nsbf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nsbf"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn column(csv: &str, k: usize) -> Vec<f64> {
    csv.lines().skip(1).map(|l| l.split(',').nth(k).unwrap().parse().unwrap()).collect()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("problem.toml");
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn degenerate_dirichlet_eigenvalues() {
    let o = nsbf(&["--builtin", "degenerate", "eigs", "--count", "5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.starts_with("k,omega,lambda,residual\n"));
    let lambdas = column(&out, 2);
    assert_eq!(lambdas.len(), 5);
    for (k, l) in lambdas.iter().enumerate() {
        let expected = ((k + 1) * (k + 1)) as f64;
        assert!((l - expected).abs() < 1e-10, "{l} vs {expected}");
    }
}

#[test]
fn empty_range_is_not_an_error() {
    let o = nsbf(&["--builtin", "kamke", "eigs", "--omega-max", "0"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "k,omega,lambda,residual\n");
}

#[test]
fn input_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[problem]\np = \"exp(-2*y\"\nq = \"0\"\nr = \"1\"\na = 0\nb = 1\n",
    );
    let o = nsbf(&["--config", &cfg, "coeffs", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("column"), "{}", stderr(&o));

    let cfg = write_config(
        dir.path(),
        "[problem]\np = { table = \"missing.csv\" }\nq = \"0\"\nr = \"1\"\na = 0\nb = 1\n",
    );
    assert_eq!(nsbf(&["--config", &cfg, "eigs", "--count", "1"]).status.code(), Some(2));
    assert_eq!(nsbf(&["--builtin", "kamke", "--grid", "400", "eigs", "--count", "1"]).status.code(), Some(2));
    assert_eq!(nsbf(&["--builtin", "kamke", "eigs"]).status.code(), Some(2));
    assert_eq!(nsbf(&["--builtin", "kamke", "--N", "many", "eigs", "--count", "1"]).status.code(), Some(2));
    assert_eq!(nsbf(&["eigs", "--count", "1"]).status.code(), Some(2));
    let cfg = write_config(dir.path(), "[problem]\np = \"1\"\nq = \"0\"\nr = \"-1\"\na = 0\nb = 1\n");
    assert_eq!(nsbf(&["--config", &cfg, "eigs", "--count", "1"]).status.code(), Some(2));
}

#[test]
fn degenerate_report_has_zero_residuals() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = nsbf(&["--builtin", "degenerate", "--grid", "201", "coeffs", "--out", out]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = stdout(&o);
    assert!(report.contains("optimal N: 0"));
    assert!(dir.path().join("coefficients.bin").is_file());
    assert!(dir.path().join("report.csv").is_file());
}

#[test]
fn tabulated_and_expression_coefficients() {
    let dir = tempfile::tempdir().unwrap();
    let table: String = (0..=100)
        .map(|i| {
            let y = i as f64 / 100.0;
            format!("{y}, {}\n", 1.0 + y * y)
        })
        .collect();
    fs::write(dir.path().join("r.csv"), format!("# y, r\n{table}")).unwrap();
    let cfg = write_config(
        dir.path(),
        "[problem]\np = \"1\"\nq = \"0\"\nr = { table = \"r.csv\" }\na = 0\nb = 1\n[numerics]\ngrid = 401\n",
    );
    let tab = nsbf(&["--config", &cfg, "eigs", "--count", "3"]);
    assert_eq!(tab.status.code(), Some(0), "{}", stderr(&tab));
    let cfg = write_config(
        dir.path(),
        "[problem]\np = \"1\"\nq = \"0\"\nr = \"1 + y^2\"\na = 0\nb = 1\n[numerics]\ngrid = 401\n",
    );
    let expr = nsbf(&["--config", &cfg, "eigs", "--count", "3"]);
    let (a, b) = (column(&stdout(&tab), 2), column(&stdout(&expr), 2));
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-4 * y, "{x} vs {y}");
    }
}

#[test]
fn output_is_byte_identical_and_cache_transparent() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("c.bin");
    let cache = cache.to_str().unwrap();
    let cold = nsbf(&["--builtin", "kamke", "eigs", "--count", "30"]);
    let again = nsbf(&["--builtin", "kamke", "eigs", "--count", "30"]);
    assert_eq!(cold.stdout, again.stdout);
    let first = nsbf(&["--builtin", "kamke", "--cache", cache, "eigs", "--count", "30"]);
    let hit = nsbf(&["--builtin", "kamke", "--cache", cache, "eigs", "--count", "30"]);
    assert_eq!(cold.stdout, first.stdout);
    assert_eq!(cold.stdout, hit.stdout);
    assert!(!stdout(&cold).contains('\r'));
}

#[test]
fn selftest_survives_a_corrupted_cache() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("c.bin");
    fs::write(&cache, b"NSBFCOEF this is not a cache").unwrap();
    let o = nsbf(&["--cache", cache.to_str().unwrap(), "selftest", "--quick"]);
    let out = stdout(&o);
    assert_eq!(o.status.code(), Some(0), "{out}");
    assert!(out.contains("cache ignored"));
    assert_eq!(out.lines().filter(|l| l.starts_with("[PASS]")).count(), 10);
}

#[test]
fn solve_degenerate_cosine() {
    let o = nsbf(&["--builtin", "degenerate", "--grid", "401", "solve", "--omega", "3", "--u-a", "1", "--up-a", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let (ys, us) = (column(&out, 0), column(&out, 1));
    for (y, u) in ys.iter().zip(&us) {
        assert!((u - (3.0 * y).cos()).abs() < 1e-12);
    }
    let o = nsbf(&["--builtin", "degenerate", "--grid", "401", "solve", "--omega", "0", "--u-a", "2", "--up-a", "-1"]);
    let out = stdout(&o);
    for (y, u) in column(&out, 0).iter().zip(column(&out, 1)) {
        assert!((u - (2.0 - y)).abs() < 1e-12);
    }
}

#[test]
fn solve_with_check_and_complex_omega() {
    let o = nsbf(&["--builtin", "kamke", "solve", "--omega", "105", "--u-a", "1", "--up-a", "1", "--check"]);
    assert_eq!(o.status.code(), Some(0));
    let err: f64 = stderr(&o)
        .lines()
        .find_map(|l| l.strip_prefix("max |u - oracle| = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(err <= 1e-5, "{err}");

    let o = nsbf(&["--builtin", "kamke", "solve", "--omega", "5+0.5i", "--u-a", "1", "--up-a", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 2002);
    assert!(column(&out, 2).iter().all(|v| v.is_finite()));
}
