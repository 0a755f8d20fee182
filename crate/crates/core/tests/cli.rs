//! End-to-end checks of the `rgflow` binary: exit codes, file schemas,
//! determinism and the plotting step.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn rgflow(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rgflow"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("spawn rgflow")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn read(p: impl AsRef<Path>) -> String {
    fs::read_to_string(p.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", p.as_ref().display()))
}

fn header(p: impl AsRef<Path>) -> String {
    read(p).lines().next().unwrap_or_default().to_string()
}

#[test]
fn harmonic_mean_values() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("g1", "0.8", 0.6),
        ("g1", "0", 1.0),
        ("g3", "0.5", 0.910239),
    ];
    for (g, mu, want) in cases {
        let o = rgflow(&["harmonic-mean", "--g", g, "--mu", mu], dir.path());
        assert!(o.status.success());
        let h: f64 = stdout(&o).trim().parse().unwrap();
        assert!((h - want).abs() < 1e-6, "{g} {mu}: {h}");
    }
    let o = rgflow(&["harmonic-mean", "--g", "g1", "--mu", "-1.5"], dir.path());
    assert!(!o.status.success());
}

#[test]
fn run_writes_schemas_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("row6.cfg"),
        "# nonlinear row\nmu = 0.1\ng = g1\nterm = 0.1 2 1 0\nmax_iter = 25\nreldiff_tol = 0\n",
    )
    .unwrap();
    for out in ["a", "b"] {
        let o = rgflow(&["run", "--config", "row6.cfg", "--out", out], dir.path());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(
        header(a.join("trace.csv")),
        "n,alpha_n,beta_n,A_n,B_n,reldiff_L1,reldiff_Linf,lambda_1,grid_count,substeps"
    );
    assert_eq!(header(a.join("profile.csv")), "x,value");
    assert_eq!(
        header(a.join("summary.csv")),
        "status,iterations,alpha_star,A_star,sigma_fit,sigma_theory,fit_residual"
    );
    assert_eq!(read(a.join("trace.csv")).lines().count(), 26);
    assert!(read(a.join("summary.csv"))
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("ok,25,"));
    for f in ["trace.csv", "profile.csv", "summary.csv"] {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn solver_failure_has_its_own_exit_code_and_flushes_trace() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("blow.cfg"),
        "term = 50 3 0 0\namplitude = 3\n",
    )
    .unwrap();
    let o = rgflow(
        &["run", "--config", "blow.cfg", "--out", "blow"],
        dir.path(),
    );
    let code = o.status.code().unwrap();
    assert!(code != 0 && code != 1 && code != 10, "exit {code}");
    let summary = read(dir.path().join("blow/summary.csv"));
    let row = summary.lines().nth(1).unwrap();
    let iterations: usize = row.split(',').nth(1).unwrap().parse().unwrap();
    assert!(!row.starts_with("ok"));
    assert_eq!(
        read(dir.path().join("blow/trace.csv")).lines().count(),
        iterations + 1
    );
    assert!(!dir.path().join("blow/profile.csv").exists());
}

#[test]
fn bad_config_is_rejected_with_line_and_key() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.cfg"), "mu = 0.1\nrg.L = 0.9\n").unwrap();
    let o = rgflow(&["run", "--config", "bad.cfg"], dir.path());
    assert_eq!(o.status.code(), Some(10));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 2") && err.contains("rg.L"), "{err}");
}

#[test]
fn plots_are_emitted_idempotently() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.cfg"), "max_iter = 5\n").unwrap();
    assert!(
        rgflow(&["run", "--config", "c.cfg", "--out", "r"], dir.path())
            .status
            .success()
    );
    let o = rgflow(&["plots", "--out", "r"], dir.path());
    assert!(o.status.success());
    let scripts: Vec<_> = ["alpha.gp", "prefactor.gp", "reldiff.gp", "profile_log.gp"]
        .iter()
        .map(|s| dir.path().join("r").join(s))
        .collect();
    let first: Vec<String> = scripts.iter().map(read).collect();
    assert!(rgflow(&["plots", "--out", "r"], dir.path())
        .status
        .success());
    let second: Vec<String> = scripts.iter().map(read).collect();
    assert_eq!(first, second);
    assert!(first[0].contains("trace.csv"));

    fs::create_dir(dir.path().join("empty")).unwrap();
    assert!(!rgflow(&["plots", "--out", "empty"], dir.path())
        .status
        .success());
}

#[test]
fn table_and_sweeps_write_one_row_per_member() {
    let dir = tempfile::tempdir().unwrap();
    let small = ["--max-iter", "4", "--count", "21"];

    let mut args = vec!["table", "--rows", "11-13,14", "--out", "t"];
    args.extend(small);
    assert!(rgflow(&args, dir.path()).status.success());
    let table = read(dir.path().join("t/table.csv"));
    assert_eq!(table.lines().count(), 5);
    assert!(table
        .lines()
        .nth(4)
        .unwrap()
        .starts_with("14,0.1,g1,0.1,1,1,1,f1,"));
    for row in ["row_11", "row_12", "row_13", "row_14"] {
        assert!(dir.path().join("t").join(row).join("summary.csv").exists());
    }

    let mut args = vec!["sweep-barenblatt", "--eps", "0,0.1,0.2", "--out", "b"];
    args.extend(small);
    assert!(rgflow(&args, dir.path()).status.success());
    let b = read(dir.path().join("b/barenblatt.csv"));
    assert_eq!(
        b.lines().next().unwrap(),
        "epsilon,status,alpha_star,first_order"
    );
    assert_eq!(b.lines().count(), 4);
    let prediction: f64 = b
        .lines()
        .nth(2)
        .unwrap()
        .split(',')
        .nth(3)
        .unwrap()
        .parse()
        .unwrap();
    assert!((prediction - 0.524197).abs() < 1e-6);
    assert!(rgflow(&["plots", "--out", "b"], dir.path())
        .status
        .success());
    assert!(read(dir.path().join("b/alpha_vs_eps.gp")).contains("first order"));

    let mut args = vec![
        "sweep-relevant",
        "--a",
        "1.5,2",
        "--mu",
        "0.6",
        "--g",
        "g3",
        "--out",
        "r",
    ];
    args.extend(small);
    assert!(rgflow(&args, dir.path()).status.success());
    let r = read(dir.path().join("r/relevant.csv"));
    assert_eq!(
        r.lines().next().unwrap(),
        "a,status,alpha_star,theory,sigma_fit,sigma_fit_mu0,sigma_eff,harmonic_mean"
    );
    assert!(r.lines().nth(1).unwrap().starts_with("1.5,ok,"));
    assert!(r.lines().nth(1).unwrap().split(',').nth(3) == Some("2"));
    assert!(dir.path().join("r/a_2/profile_scaled.csv").exists());
    assert!(dir.path().join("r/a_2/mu0/profile.csv").exists());

    let o = rgflow(&["sweep-relevant", "--a", "3"], dir.path());
    assert!(!o.status.success());
    let o = rgflow(&["table", "--rows", "16"], dir.path());
    assert!(!o.status.success());
}
