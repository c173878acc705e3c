use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

use sandpile_core::distributions::{pmf_table, CorankPmf, PmfKind, DEFAULT_TOLERANCE};
use sandpile_core::montecarlo::tv_distance;
use sandpile_core::{textfmt, GfMatrix, IntMatrix};
use serde_json::Value;

fn sandpile(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sandpile")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_str(&stdout(o)).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

const SIM: &[&str] = &[
    "simulate", "--model", "bipartite", "--p", "2", "--q", "0.5", "--alpha", "1.0", "--n", "64", "--trials", "1000",
    "--seed", "7",
];

#[test]
fn simulate_is_deterministic_across_runs_and_threads() {
    let first = stdout(&sandpile(SIM));
    assert_eq!(first, stdout(&sandpile(SIM)));
    let mut threaded = SIM.to_vec();
    threaded.extend(["--threads", "3"]);
    assert_eq!(first, stdout(&sandpile(&threaded)));
    assert!(!first.contains("wall_time_ms"));
    let mut timed = SIM.to_vec();
    timed.push("--timing");
    assert!(stdout(&sandpile(&timed)).contains("wall_time_ms"));
}

#[test]
fn simulate_rejects_zero_alpha() {
    let o = sandpile(&["simulate", "--alpha", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("0 < alpha <= 1"));
}

#[test]
fn reported_tv_matches_recomputation_from_counts() {
    let report = json(&sandpile(&[
        "simulate", "--p", "2", "--n", "64", "--trials", "20000", "--seed", "3",
    ]));
    let counts: BTreeMap<usize, u64> = report["counts"]
        .as_object()
        .unwrap()
        .iter()
        .map(|(k, v)| (k.parse().unwrap(), v.as_u64().unwrap()))
        .collect();
    let empirical = CorankPmf::from_counts(2, &counts);
    let theory = pmf_table(2, PmfKind::Theorem, 40, DEFAULT_TOLERANCE).unwrap();
    let tv = tv_distance(&empirical, &theory);
    assert!((report["tv_distance"].as_f64().unwrap() - tv).abs() < 1e-12);
    assert_eq!(counts.values().sum::<u64>(), 20000);
    assert_eq!(report["config"]["m"], 64);
}

#[test]
fn config_file_supplies_flags_and_command_line_wins() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.json", r#"{"n": 12, "trials": 40, "seed": 5, "p": 3}"#);
    let from_file = json(&sandpile(&["simulate", "--config", &cfg]));
    assert_eq!(from_file["config"]["n"], 12);
    assert_eq!(from_file["config"]["p"], 3);
    let overridden = json(&sandpile(&["simulate", "--config", &cfg, "--n", "10"]));
    assert_eq!(overridden["config"]["n"], 10);
    assert_eq!(overridden["config"]["trials"], 40);

    let bad = write(dir.path(), "bad.json", r#"{"nn": 12}"#);
    assert_eq!(sandpile(&["simulate", "--config", &bad]).status.code(), Some(2));
}

#[test]
fn simulate_other_models_and_statistics() {
    let iid = json(&sandpile(&["simulate", "--model", "iid", "--u", "0", "--n", "20", "--trials", "30"]));
    assert_eq!(iid["config"]["model"]["type"], "iid_rect");
    let full = json(&sandpile(&[
        "simulate", "--statistic", "full_rank_at", "--row-count", "1", "--n", "20", "--trials", "30",
    ]));
    assert_eq!(full["outcome"], "rank_deficiency");
    assert_eq!(full["counts"]["0"], 30);
    let snf = json(&sandpile(&["simulate", "--statistic", "snf_sample", "--n", "5", "--trials", "20", "--p", "3"]));
    assert_eq!(snf["counts"].as_object().unwrap().values().map(|v| v.as_u64().unwrap()).sum::<u64>(), 20);
}

#[test]
fn pmf_tables() {
    let theorem = stdout(&sandpile(&["pmf", "--p", "2", "--kind", "theorem", "--kmax", "5"]));
    let mut lines = theorem.lines();
    assert_eq!(lines.next(), Some("corank,probability"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[0], "1");
    assert!((first[1].parse::<f64>().unwrap() - 0.577576).abs() < 5e-7);
    assert!(theorem.lines().last().unwrap().starts_with("# truncation_error,"));

    let iid = stdout(&sandpile(&["pmf", "--p", "2", "--kind", "iid", "--u", "1", "--kmax", "5"]));
    let values = |s: &str| -> Vec<(String, f64)> {
        s.lines()
            .skip(1)
            .filter(|l| !l.starts_with('#'))
            .map(|l| {
                let (k, v) = l.split_once(',').unwrap();
                (k.to_string(), v.parse().unwrap())
            })
            .collect()
    };
    let (a, b) = (values(&theorem), values(&iid));
    assert_eq!(a.len(), b.len());
    for ((ka, va), (kb, vb)) in a.iter().zip(&b) {
        assert_eq!(ka, kb);
        assert!((va - vb).abs() < 1e-12);
    }
    assert_eq!(sandpile(&["pmf", "--kmax", "-1"]).status.code(), Some(2));
    assert_eq!(sandpile(&["pmf", "--p", "4"]).status.code(), Some(2));
}

#[test]
fn snf_of_graphs_and_matrices() {
    let dir = tempfile::tempdir().unwrap();
    let k3 = write(dir.path(), "k3.json", r#"{"n": 3, "adj": [[0,1,1],[1,0,1],[1,1,0]]}"#);
    let out = json(&sandpile(&["snf", &k3]));
    assert_eq!(out["torsion"], serde_json::json!([3]));
    assert_eq!(out["p_rank"]["3"], 1);
    assert_eq!(out["flagged"], false);

    let bip = write(
        dir.path(),
        "bip.json",
        r#"{"n": 2, "m": 1, "edges_12": [[1],[1]], "edges_21": [[1,1]]}"#,
    );
    let out = json(&sandpile(&["snf", &bip, "--primes", "2"]));
    assert_eq!(out["group"], "sandpile");
    // symmetric path 0 - 2 - 1: a tree, so the group is trivial
    assert_eq!(out["torsion"], serde_json::json!([]));
    assert_eq!(out["order"], 1);

    let zero = write(dir.path(), "zero.txt", "0 3 3\n0 0 0\n0 0 0\n0 0 0\n");
    let out = json(&sandpile(&["snf", &zero]));
    assert_eq!(out["free_rank"], 3);
    assert_eq!(out["flagged"], true);
    assert_eq!(out["sandpile"]["free_rank"], 2);

    let malformed = write(dir.path(), "bad.txt", "0 2 2\n1 2\n3\n");
    let o = sandpile(&["snf", &malformed]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line"));
    let bad_graph = write(dir.path(), "bad.json", r#"{"n": 2, "adj": [[1,0],[0,0]]}"#);
    assert_eq!(sandpile(&["snf", &bad_graph]).status.code(), Some(2));
    assert_eq!(sandpile(&["snf", "/nonexistent/file"]).status.code(), Some(2));
}

#[test]
fn rank_evolution_and_phase_sweep_shapes() {
    let evo = json(&sandpile(&["rank-evolution", "--n", "16", "--trials", "50", "--delta", "0.5"]));
    for b in evo["buckets"].as_array().unwrap() {
        let l = b["codim"].as_u64().unwrap() as i32;
        assert_eq!(b["expected"].as_f64().unwrap(), if l <= 1 { 1.0 } else { 2f64.powi(1 - l) });
        assert!(b["hits_in_span"].as_u64() <= b["exposures"].as_u64());
    }
    let csv = stdout(&sandpile(&["rank-evolution", "--n", "16", "--trials", "20", "--format", "csv"]));
    assert!(csv.starts_with("codim,exposures,hits_in_span,frequency,expected"));

    let sweep = json(&sandpile(&[
        "phase-sweep", "--alphas", "0.25,0.5,1.0", "--ns", "40,80", "--trials", "10",
    ]));
    assert_eq!(sweep["cells"].as_array().unwrap().len(), 6);
}

#[test]
fn structure_quantities() {
    let dir = tempfile::tempdir().unwrap();
    for p in [2u32, 3, 5] {
        let ones = write(dir.path(), &format!("ones{p}.txt"), &format!("{p} 1 6\n1 1 1 1 1 1\n"));
        let out = json(&sandpile(&["structure", "--rho-l", &ones]));
        let expected = 1.0 - 1.0 / p as f64;
        assert!((out["rho_l"]["value"].as_f64().unwrap() - expected).abs() < 1e-12);
    }
    let w = write(dir.path(), "w.txt", "3 1 5\n1 1 2 0 1\n");
    let out = json(&sandpile(&["structure", "--support", &w, "--n", "4"]));
    assert_eq!(out["min_nonconstant_support"]["value"], 2);
    let out = json(&sandpile(&["structure", "--zero-sum", "--n", "2", "--q", "0.5", "--p", "3"]));
    assert!((out["zero_sum"]["value"].as_f64().unwrap() - 0.25).abs() < 1e-15);
    assert_eq!(sandpile(&["structure"]).status.code(), Some(2));
    assert_eq!(sandpile(&["structure", "--zero-sum", "--n", "4", "--p", "6"]).status.code(), Some(2));
}

#[test]
fn matrix_text_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let m = GfMatrix::from_i64(5, 2, 3, &[1, -1, 7, 0, 4, 12]).unwrap();
    let path = write(dir.path(), "m.txt", &textfmt::write_gf(&m));
    let back = textfmt::parse_gf(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(back, m);
    let im = IntMatrix::from_i64(2, 2, &[-3, 10, 0, 7]).unwrap();
    assert_eq!(textfmt::parse_int(&textfmt::write_int(&im)).unwrap().1, im);
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("pmf.csv");
    let o = sandpile(&["pmf", "--kmax", "2", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    assert!(std::fs::read_to_string(out).unwrap().starts_with("corank,probability"));
}
