use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use robust_spca::textio::{read_sample_matrix, read_truth};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_robust-spca")).args(args).output().expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn gen_then_solve_ppm_and_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let (x, v) = (dir.path().join("x.txt"), dir.path().join("v.txt"));
    let out = bin(&[
        "gen",
        "--d",
        "6",
        "--n",
        "40",
        "--k",
        "2",
        "--lambda",
        "3",
        "--seed",
        "5",
        "--out",
        p(&x),
        "--truth-out",
        p(&v),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = read_sample_matrix(&x).unwrap();
    assert_eq!((m.n(), m.d()), (40, 6));
    assert_eq!(read_truth(&v).unwrap().nnz(), 2);

    let report = dir.path().join("r.json");
    let args = [
        "solve",
        "--input",
        p(&x),
        "--perturb",
        "featurewise",
        "--rho",
        "0.5",
        "--k",
        "2",
        "--N",
        "3",
        "--deterministic",
        "--report",
        p(&report),
    ];
    assert_eq!(bin(&args).status.code(), Some(0));
    let first = fs::read(&report).unwrap();
    assert_eq!(bin(&args).status.code(), Some(0));
    assert_eq!(first, fs::read(&report).unwrap());
    let j: serde_json::Value = serde_json::from_slice(&first).unwrap();
    let (lb, ub) = (j["lb"].as_f64().unwrap(), j["ub"].as_f64().unwrap());
    assert!(lb <= ub && j["N"] == 3 && j["kind"] == "featurewise");

    let out = bin(&[
        "oracle",
        "--input",
        p(&x),
        "--perturb",
        "featurewise",
        "--rho",
        "0.5",
        "--k",
        "2",
        "--resolution",
        "1e-3",
    ]);
    assert!(out.status.success());
    let o: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let val = o["value"].as_f64().unwrap();
    assert!(lb <= val + 1e-6 && val <= ub + 1e-6);

    let out = bin(&["ppm", "--input", p(&x), "--rho", "0.5", "--k", "2", "--init", "random", "--seed", "3"]);
    assert!(out.status.success());
    let r: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(r["objective"].as_f64().unwrap() <= val + 1e-6);
}

#[test]
fn node_limit_exit_code_still_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let (x, v) = (dir.path().join("x.txt"), dir.path().join("v.txt"));
    bin(&[
        "gen",
        "--d",
        "8",
        "--n",
        "40",
        "--truth",
        "strongweak",
        "--c",
        "0.8",
        "--k1",
        "1",
        "--k2",
        "2",
        "--lambda",
        "2",
        "--out",
        p(&x),
        "--truth-out",
        p(&v),
    ]);
    let report = dir.path().join("r.json");
    let out = bin(&[
        "solve",
        "--input",
        p(&x),
        "--perturb",
        "samplewise",
        "--rho",
        "0.5",
        "--k",
        "3",
        "--node-limit",
        "2",
        "--report",
        p(&report),
        "--center",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(fs::read_to_string(&report).unwrap().contains("\"NodeLimit\""));
}

#[test]
fn invalid_inputs_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let x = dir.path().join("x.txt");
    fs::write(&x, "2 2\n1 0\n").unwrap();
    let out = bin(&["ppm", "--input", p(&x), "--rho", "0.1", "--k", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
    fs::write(&x, "2 1\n1 0\n").unwrap();
    assert_eq!(bin(&["ppm", "--input", p(&x), "--rho", "-1", "--k", "1"]).status.code(), Some(2));
    assert_eq!(bin(&["solve", "--input", p(&x)]).status.code(), Some(2));
}

#[test]
fn thresholds_both_forms() {
    let out = bin(&["thresholds", "--lambda", "3", "--n", "500", "--k", "5", "--delta", "0.1"]);
    let j: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((j["recovery_threshold"].as_f64().unwrap() - 1.16350762782201).abs() < 1e-10);
    let out = bin(&["thresholds", "--lambda", "3", "--n", "500", "--c", "0.8", "--k1", "1", "--k2", "4"]);
    let j: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(j["robust_lower"].as_f64().unwrap() < j["robust_upper"].as_f64().unwrap());
    assert_eq!(j["window_nonempty"], true);
}

#[test]
fn experiment_csv_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    fs::write(
        &cfg,
        "# small sweep\nd = 12\nn = 60\nk = 2\nd_bar = 6\nN = 2\nr = 2\ntrials = 2\nrho_bar = 0, 1\n\
         methods = MIP, MIP-r, spca, PPM\nnode_limit = 2000\ndeterministic = true\n",
    )
    .unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for out in [&a, &b] {
        let o = bin(&["experiment", "--config", p(&cfg), "--out", p(out)]);
        assert!(matches!(o.status.code(), Some(0 | 3)), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let text = fs::read(&a).unwrap();
    assert_eq!(text, fs::read(&b).unwrap());
    assert_eq!(String::from_utf8(text).unwrap().lines().count(), 1 + 2 * 2 * 5);

    fs::write(&cfg, "d = 12\nwidth = 3\n").unwrap();
    let o = bin(&["experiment", "--config", p(&cfg), "--out", p(&a)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown key"));
}
