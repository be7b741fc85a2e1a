use std::process::{Command, Output};

use rba_core::equilibrium::{c1, solve_branch, Branch};

fn rba(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rba")).args(args).output().expect("binary runs")
}

fn rba_threads(threads: &str, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rba")).env("RBA_THREADS", threads).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn column(csv: &str, name: &str) -> Vec<Option<f64>> {
    let mut lines = csv.lines();
    let idx = lines.next().unwrap().split(',').position(|h| h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().parse().ok()).collect()
}

#[test]
fn simulate_reproduces_low_and_high_density_runs() {
    let out = stdout(&rba(&["simulate", "--rho", "1", "--init", "aligned"]));
    assert!(out.starts_with("t,c,flux_norm\n"));
    let c = column(&out, "c");
    assert_eq!(c.len(), 101);
    assert!(c.last().unwrap().unwrap() < 0.25);

    let target = c1(solve_branch(Branch::AxialUp, 10.0).unwrap()).unwrap();
    let c = column(&stdout(&rba(&["simulate", "--rho", "10", "--init", "uniform"])), "c");
    assert!((c.last().unwrap().unwrap() - target).abs() < 0.1);
}

#[test]
fn simulate_is_deterministic_and_thread_independent() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let args = |p: &std::path::Path| {
        vec!["simulate", "--rho", "6", "--init", "vmc:0.4", "--seed", "7", "--n", "200", "--steps", "30", "--out"]
            .into_iter()
            .map(String::from)
            .chain([p.to_str().unwrap().to_string()])
            .collect::<Vec<_>>()
    };
    let a_args = args(&a);
    let b_args = args(&b);
    stdout(&rba_threads("1", &a_args.iter().map(String::as_str).collect::<Vec<_>>()));
    stdout(&rba_threads("3", &b_args.iter().map(String::as_str).collect::<Vec<_>>()));
    let (x, y) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert!(!x.is_empty());
    assert_eq!(x, y);
    assert!(!x.contains(&b'\r'));
}

#[test]
fn simulate_json_has_series() {
    let out = stdout(&rba(&["simulate", "--rho", "2", "--steps", "5", "--n", "10", "--format", "json"]));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["c"].as_array().unwrap().len(), 6);
    assert_eq!(v["times"][5].as_f64().unwrap(), 0.2);
}

#[test]
fn thresholds_report() {
    let v: serde_json::Value = serde_json::from_str(&stdout(&rba(&["thresholds"]))).unwrap();
    assert_eq!(v["rho_c"].as_f64().unwrap(), 6.0);
    assert!((v["rho_star"].as_f64().unwrap() - 4.5832).abs() < 1e-3);
    assert!((v["c_star"].as_f64().unwrap() - 0.4232).abs() < 1e-3);
    assert!((v["alpha_star"].as_f64().unwrap() - 1.9395).abs() < 1e-3);
    assert!(v["root_tol"].as_f64().unwrap() > 0.0);
}

#[test]
fn branches_curves() {
    let v: serde_json::Value = serde_json::from_str(&stdout(&rba(&["thresholds"]))).unwrap();
    let (rho_star, c_star) = (v["rho_star"].as_f64().unwrap(), v["c_star"].as_f64().unwrap());
    let grid = format!("{rho_star},6,6.5,8,40");
    let out = stdout(&rba(&["branches", "--rho", &grid]));
    assert!(out.starts_with("rho,c1_up,c1_down,c2,uniform_stable_flag\n"));
    let up = column(&out, "c1_up");
    let c2 = column(&out, "c2");
    assert!((up[0].unwrap() - c_star).abs() < 1e-10);
    assert!(c2[0].is_none());
    assert_eq!(c2[1], Some(0.0));
    assert!(c2[2].unwrap() > 0.0 && c2[3].unwrap() > c2[2].unwrap());
    assert!(up[4].unwrap() > 0.9 && up[4].unwrap() < 1.0);

    let default = stdout(&rba(&["branches"]));
    let rho = column(&default, "rho");
    assert_eq!(rho.len(), 100);
    assert_eq!(rho[0], Some(2.0));
}

#[test]
fn bgk_uniform_and_axial_limits() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.json");
    let out = stdout(&rba(&["bgk", "--rho", "2", "--init", "random", "--report", report.to_str().unwrap()]));
    assert!(out.starts_with("t,d1,d2,d3,V\n"));
    let v = column(&out, "V");
    assert!(v.windows(2).all(|w| w[1].unwrap() <= w[0].unwrap() + 1e-10));
    let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["class"], "Uniform");
    assert_eq!(r["status"], "converged");

    let out = stdout(&rba(&["bgk", "--rho", "8", "--init", "rotation", "--seed", "5", "--format", "json"]));
    let r: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(r["report"]["class"], "AxialUp");
    let j0: Vec<f64> = serde_json::from_value(r["report"]["j0"].clone()).unwrap();
    let a0: Vec<f64> = serde_json::from_value(r["report"]["frame"]["a0"].clone()).unwrap();
    assert!(j0.iter().zip(&a0).all(|(x, y)| (x - y).abs() < 1e-9));
    assert!(r["report"]["decay_rate"].as_f64().unwrap() > 0.0);
}

#[test]
fn bgk_accepts_explicit_matrices() {
    let out = stdout(&rba(&["bgk", "--rho", "3", "--init", "0.5,0,0,0,0.2,0,0,0,0.1", "--format", "json"]));
    let r: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(r["report"]["class"], "Uniform");
    assert_eq!(rba(&["bgk", "--rho", "3", "--init", "1,2,3"]).status.code(), Some(2));
}

#[test]
fn classify_lists_states() {
    let out = stdout(&rba(&["classify", "--rho", "5"]));
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("Uniform,") && lines[1].contains(",+++,"));
    assert!(lines[2].starts_with("AxialUp,") && lines[2].contains(",+++,"));
    assert!(lines[3].starts_with("AxialDown,") && lines[3].contains(",-++,"));
}

#[test]
fn sweep_is_byte_identical_across_workers() {
    let args = ["sweep", "--rho", "3,8", "--c-init", "0,1", "--replicates", "2", "--n", "50", "--steps", "20", "--seed", "9"];
    let one = stdout(&rba_threads("1", &args));
    let four = stdout(&rba_threads("4", &args));
    assert_eq!(one, four);
    assert!(one.starts_with("index,rho,c_target,c_initial,c_final,seed,status\n"));
    assert_eq!(one.lines().count(), 9);
    assert!(!one.contains("wall"));
}

#[test]
fn sweep_low_density_runs_disorder() {
    let out = stdout(&rba(&["sweep", "--rho", "3", "--c-init", "0,0.5,1", "--replicates", "2", "--seed", "1"]));
    assert!(column(&out, "c_final").iter().all(|c| c.unwrap() < 0.2));
}

#[test]
fn exit_codes() {
    assert_eq!(rba(&["simulate"]).status.code(), Some(2));
    assert_eq!(rba(&["simulate", "--rho", "3", "--init", "sideways"]).status.code(), Some(2));
    assert_eq!(rba(&["simulate", "--rho", "3", "--n", "0"]).status.code(), Some(2));
    assert_eq!(rba(&["simulate", "--rho", "30"]).status.code(), Some(3));
    assert_eq!(rba(&["simulate", "--rho", "3", "--init", "vmc:1.2"]).status.code(), Some(3));
    assert_eq!(rba(&["classify", "--rho=-1"]).status.code(), Some(3));
    assert_eq!(rba(&["bgk", "--rho", "8", "--t-max", "0.1"]).status.code(), Some(4));
    assert_eq!(rba_threads("zero", &["thresholds"]).status.code(), Some(0));
    assert_eq!(rba_threads("zero", &["sweep", "--rho", "3", "--c-init", "0", "--replicates", "1", "--steps", "1"]).status.code(), Some(1));
}
