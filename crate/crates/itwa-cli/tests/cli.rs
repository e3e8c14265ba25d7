use std::path::Path;
use std::process::{Command, Output};

use itwa::estimators::{window_average, ObservableSeries, SeriesRow};
use tempfile::TempDir;

fn itwa(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_itwa")).args(args).current_dir(dir).env_remove("ITWA_THREADS").output().unwrap()
}

fn ok(args: &[&str], dir: &Path) -> String {
    let out = itwa(args, dir);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn write_k4(dir: &Path) {
    ok(&["graph", "--n", "4", "--seed", "1", "--out", "k4.txt"], dir);
}

fn prism(dir: &Path) {
    std::fs::write(dir.join("prism.txt"), "# triangular prism\n6 9\n0 1\n0 2\n0 3\n1 2\n1 4\n2 5\n3 4\n3 5\n4 5\n").unwrap();
}

struct Row {
    tau: f64,
    observable: String,
    value: f64,
    stderr: f64,
    ess: f64,
    n_traj: usize,
}

fn rows(csv: &str) -> Vec<Row> {
    csv.lines()
        .skip(1)
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            assert_eq!(f.len(), 6, "{line}");
            Row {
                tau: f[0].parse().unwrap(),
                observable: f[1].to_string(),
                value: f[2].parse().unwrap(),
                stderr: f[3].parse().unwrap(),
                ess: f[4].parse().unwrap(),
                n_traj: f[5].parse().unwrap(),
            }
        })
        .collect()
}

#[test]
fn graph_command() {
    let dir = TempDir::new().unwrap();
    write_k4(dir.path());
    let text = std::fs::read_to_string(dir.path().join("k4.txt")).unwrap();
    assert_eq!(text, "4 6\n0 1\n0 2\n0 3\n1 2\n1 3\n2 3\n");

    let odd = itwa(&["graph", "--n", "5"], dir.path());
    assert_eq!(odd.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&odd.stderr).contains("odd"));

    let a = ok(&["graph", "--n", "100", "--seed", "7"], dir.path());
    let b = ok(&["graph", "--n", "100", "--seed", "7"], dir.path());
    assert_eq!(a, b);
    assert!(a.starts_with("100 150\n"));
}

#[test]
fn run_csv_schema() {
    let dir = TempDir::new().unwrap();
    write_k4(dir.path());
    let csv = ok(
        &["run", "--model", "ising", "--graph", "k4.txt", "--taus", "0,0.5", "--n-traj", "300", "--observables", "energy,m2"],
        dir.path(),
    );
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("tau,observable,value,stderr,ess,n_traj"));
    let first = lines.next().unwrap();
    assert!(first.starts_with("0.00000000000e0,energy,"), "{first}");
    let mantissa = first.split(',').nth(2).unwrap().trim_start_matches('-').split('e').next().unwrap();
    assert_eq!(mantissa.len(), 13, "12 significant digits expected in {first}");
    let r = rows(&csv);
    assert_eq!(r.len(), 4);
    assert_eq!(r.iter().map(|r| r.observable.as_str()).collect::<Vec<_>>(), ["energy", "m2", "energy", "m2"]);
    assert!(r.iter().all(|r| r.n_traj == 300 && r.ess > 0.0));
    assert_eq!(r[2].tau, 0.5);
}

#[test]
fn energy_vanishes_at_infinite_temperature() {
    let dir = TempDir::new().unwrap();
    write_k4(dir.path());
    let csv = ok(&["run", "--model", "ising", "--graph", "k4.txt", "--taus", "0", "--n-traj", "20000"], dir.path());
    let r = &rows(&csv)[0];
    assert!(r.value.abs() < 4.0 * r.stderr, "{} ± {}", r.value, r.stderr);
}

#[test]
fn manifest_rerun_is_byte_identical() {
    let dir = TempDir::new().unwrap();
    write_k4(dir.path());
    let args = [
        "run", "--model", "ising", "--graph", "k4.txt", "--tau-max", "1", "--every", "0.5", "--n-traj", "400", "--seed", "3",
        "--observables", "energy,m2", "--e0", "-2", "--out", "a.csv", "--manifest", "run.toml",
    ];
    ok(&args, dir.path());
    let manifest = std::fs::read_to_string(dir.path().join("run.toml")).unwrap();
    for key in ["version", "wall_time_seconds", "invalid_trajectories", "seed = 3", "d_tau", "kind = \"ising\""] {
        assert!(manifest.contains(key), "{key} missing from manifest:\n{manifest}");
    }
    ok(&["run", "--from-manifest", "run.toml", "--out", "b.csv", "--threads", "3"], dir.path());
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("b.csv")).unwrap());
    assert!(String::from_utf8(a).unwrap().contains(",rel_error,"));
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = TempDir::new().unwrap();
    let base = ["run", "--model", "tfim", "--dims", "3x2", "--h", "1.5", "--taus", "0.5,1", "--n-traj", "300", "--observables", "m2,sx"];
    let one = ok(&[&base[..], &["--threads", "1"]].concat(), dir.path());
    let three = ok(&[&base[..], &["--threads", "3"]].concat(), dir.path());
    assert_eq!(one, three);
}

#[test]
fn oracle_values() {
    let dir = TempDir::new().unwrap();
    write_k4(dir.path());
    let csv = ok(&["oracle", "--model", "ising", "--graph", "k4.txt", "--taus", "0,1"], dir.path());
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "tau,observable,value,stderr,ess,n_traj,method");
    let value = |line: &str| line.split(',').nth(2).unwrap().parse::<f64>().unwrap();
    assert!(value(lines[1]).abs() < 1e-12);
    assert!((value(lines[2]) + 1.6936).abs() < 1e-4);
    assert!(lines[2].ends_with(",0.00000000000e0,n/a,n/a,enumeration"));
    assert_eq!(value(lines[3]), -2.0);
    assert_eq!(value(lines[4]), 6.0);

    prism(dir.path());
    let csv = ok(&["oracle", "--model", "ising", "--graph", "prism.txt", "--taus", "1"], dir.path());
    assert!(csv.contains("inf,ground_energy,-5.00000000000e0,"));
    let sa = ok(&["oracle", "--model", "ising", "--graph", "prism.txt", "--taus", "1", "--method", "annealing"], dir.path());
    assert!(sa.contains("inf,ground_energy,-5.00000000000e0,0.00000000000e0,n/a,n/a,annealing"));
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let missing = itwa(&["run", "--model", "ising", "--taus", "0"], dir.path());
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("--graph"));

    let ed = itwa(&["oracle", "--model", "tfim", "--dims", "13", "--h", "1", "--taus", "1"], dir.path());
    assert_eq!(ed.status.code(), Some(3));

    ok(&["graph", "--n", "28", "--out", "big.txt"], dir.path());
    let enumeration = itwa(&["oracle", "--model", "ising", "--graph", "big.txt", "--taus", "1"], dir.path());
    assert_eq!(enumeration.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&enumeration.stderr).contains("annealing"));

    let off_grid = itwa(&["run", "--model", "tfim", "--dims", "4", "--h", "1", "--taus", "0.0005"], dir.path());
    assert_eq!(off_grid.status.code(), Some(2));

    std::fs::write(dir.path().join("bad.txt"), "4 6\n0 1\n0 2\n0 3\n1 2\n1 3\n2 2\n").unwrap();
    let bad = itwa(&["run", "--model", "ising", "--graph", "bad.txt", "--taus", "0"], dir.path());
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("line 7"));
}

#[test]
fn single_point_sweep_matches_run() {
    let dir = TempDir::new().unwrap();
    let model = ["--model", "tfim", "--dims", "4", "--h", "0.7", "--n-traj", "400", "--seed", "9"];
    let run = ok(&[&["run"][..], &model, &["--taus", "0,0.5,1,1.5", "--observables", "m2"]].concat(), dir.path());
    let mut series = ObservableSeries::new();
    for r in rows(&run) {
        series
            .push(SeriesRow { tau: r.tau, value: r.value, stderr: r.stderr, ess: r.ess, n_traj: r.n_traj })
            .unwrap();
    }
    let (value, stderr) = window_average(&series, 0.5, 1.5).unwrap();
    let sweep = ok(
        &[&["sweep"][..], &model, &["--axis", "h", "--values", "0.7", "--window", "0.5,1.5", "--taus", "0,0.5,1,1.5"]].concat(),
        dir.path(),
    );
    let line = sweep.lines().nth(1).unwrap();
    let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(f[0], 0.7);
    // the CSV carries 12 significant digits
    assert!((f[1] - value).abs() <= 1e-10 * value.abs());
    assert!((f[2] - stderr).abs() <= 1e-9 * stderr.abs().max(1e-12));
}

#[test]
fn tau_end_sweep() {
    let dir = TempDir::new().unwrap();
    let out = ok(
        &[
            "sweep", "--model", "tfim", "--dims", "4", "--h", "1", "--n-traj", "300", "--axis", "tau-end", "--values", "1,2",
            "--window", "0.5,2", "--every", "0.5",
        ],
        dir.path(),
    );
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "param,value,stderr");
    assert_eq!(lines.len(), 3);
}
