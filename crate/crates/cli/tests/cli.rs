use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn vwlb(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vwlb")).current_dir(dir).args(args).output().unwrap()
}

fn ok(out: Output) -> String {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn mixture_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(vwlb(d, &["--seed", "4", "--out", "x.txt", "simulate", "--model", "gmm", "--n", "200", "--delta", "5"]));
    let x = fs::read_to_string(d.join("x.txt")).unwrap();
    assert_eq!(x.lines().count(), 200);

    let fit = ok(vwlb(d, &["--seed", "1", "fit", "--model", "gmm", "--data", "x.txt"]));
    assert!(fit.contains("converged = true"));
    assert!(fit.contains("m.3 = ") && fit.contains("phi.200 = "));

    let draws = ok(vwlb(d, &["--seed", "1", "vwlb", "--model", "gmm", "--data", "x.txt", "-B", "20"]));
    let mut lines = draws.lines();
    assert_eq!(lines.next().unwrap(), "b,converged,elbo,theta_1,theta_2,theta_3");
    assert_eq!(lines.count(), 20);
    // reruns are byte identical and thread count does not matter
    let again =
        ok(vwlb(d, &["--seed", "1", "--parallelism", "3", "vwlb", "--model", "gmm", "--data", "x.txt", "-B", "20"]));
    assert_eq!(draws, again);

    let gibbs = ok(vwlb(d, &["gibbs", "--model", "gmm", "--data", "x.txt", "--samples", "5", "--burnin", "50"]));
    assert_eq!(gibbs.lines().count(), 6);
}

#[test]
fn regression_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(vwlb(d, &["--seed", "2", "--out", "data", "simulate", "--model", "blr", "--n", "150", "--rho", "0.5"]));
    let design = fs::read_to_string(d.join("data/X.csv")).unwrap();
    assert!(design.lines().all(|l| l.split(',').count() == 10));
    let args = ["--model", "blr", "--x", "data/X.csv", "--y", "data/y.txt"];

    ok(vwlb(d, &[&["--out", "fit.txt", "fit"][..], &args].concat()));
    let fit = fs::read_to_string(d.join("fit.txt")).unwrap();
    assert!(fit.contains("sigma2 = ") && fit.contains("phi.10 = "));

    let plain = ok(vwlb(d, &[&["vwlb"][..], &args, &["-B", "5"]].concat()));
    let reverted = ok(vwlb(d, &[&["vwlb"][..], &args, &["-B", "5", "--reverted"]].concat()));
    assert_eq!(plain.lines().count(), 6);
    assert_ne!(plain, reverted);

    let gibbs = ok(vwlb(d, &[&["gibbs"][..], &args, &["--samples", "10", "--burnin", "10", "--thin", "1"]].concat()));
    assert!(gibbs.lines().nth(1).unwrap().split(',').nth(2) == Some("NaN"));
}

#[test]
fn failures_exit_nonzero_with_a_message() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let out = vwlb(d, &["report", "--dir", "."]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("coverage_"));

    fs::write(d.join("bad.cfg"), "model = gmm\nseed = 1\nout = r\ngrid.delta = 1\ngrid.n = 10\nbootstrap.B = x\n")
        .unwrap();
    let out = vwlb(d, &["coverage", "--config", "bad.cfg"]);
    assert!(!out.status.success());
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("bootstrap.B") && msg.matches("bootstrap.B").count() == 1, "{msg}");
    assert!(!d.join("r").exists());

    let out = vwlb(d, &["simulate", "--model", "blr", "--n", "10"]);
    assert!(!out.status.success());
}

#[test]
fn coverage_then_report() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/gmm_small.cfg");
    let stdout = ok(vwlb(
        d,
        &[
            "--out",
            "res",
            "coverage",
            "--config",
            cfg.to_str().unwrap(),
            "--set",
            "grid.delta=2,4",
            "--set",
            "coverage.R=2",
            "--set",
            "bootstrap.B=10",
        ],
    ));
    assert!(stdout.contains("coverage_delta2_n500.csv"));
    let listed = ok(vwlb(d, &["report", "--dir", "res", "--format", "svg"]));
    assert_eq!(listed.lines().count(), 4);
    ok(vwlb(d, &["report", "--dir", "res"]));
    let summary = fs::read_to_string(d.join("res/summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 2 * 4 * 3);
}
