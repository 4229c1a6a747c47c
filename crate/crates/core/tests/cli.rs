use std::path::Path;
use std::process::{Command, Output};

use fedcmc::harness::{parse_rounds_csv, ExperimentConfig};

fn fedcmc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fedcmc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn small_config(dir: &Path) -> String {
    let path = dir.join("small.cfg");
    std::fs::write(
        &path,
        "classes=4\nper_class_counts=120,90,60,40\nclients=4\nalpha=0.5\nrounds=3\nhidden=16\nrepr=6\n",
    )
    .unwrap();
    path.to_str().unwrap().to_string()
}

fn data_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn run_writes_all_three_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("out");
    let o = fedcmc(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("major seed 42:"));

    let rounds = std::fs::read_to_string(out.join("rounds.csv")).unwrap();
    assert!(rounds.starts_with("# seed=42\n"));
    let rows = parse_rounds_csv(&rounds).unwrap();
    assert_eq!(rows.iter().map(|r| r.round).collect::<Vec<_>>(), vec![1, 2, 3]);
    assert_eq!(rows[1].similarities.len(), 4 * 4);

    let echoed: String = rounds
        .lines()
        .filter_map(|l| l.strip_prefix("# "))
        .map(|l| format!("{l}\n"))
        .collect();
    let parsed = ExperimentConfig::parse(&echoed).unwrap();
    assert_eq!(parsed, ExperimentConfig::load(&cfg).unwrap());

    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    let lines = data_lines(&summary);
    assert_eq!(lines[0], "method,seed,mu,accuracy,micro_f1,macro_f1");
    assert!(lines[1].starts_with("major,42,"));

    let provenance = std::fs::read_to_string(out.join("provenance.csv")).unwrap();
    let lines = data_lines(&provenance);
    assert_eq!(lines[0], "round,mode,seed,class,source_client");
    // round 0 rows plus one row per class for each of the 3 rounds
    assert_eq!(lines.len() - 1, 4 * 4);
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("s7");
    let o = fedcmc(&["--seed", "7", "--out", out.to_str().unwrap(), "run", "--config", &cfg]);
    assert!(o.status.success());
    let rounds = std::fs::read_to_string(out.join("rounds.csv")).unwrap();
    assert!(rounds.starts_with("# seed=7\n"));
    assert!(parse_rounds_csv(&rounds).unwrap().iter().all(|r| r.seed == 7));
}

#[test]
fn compare_lists_every_mode_and_centralized() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("cmp");
    let o = fedcmc(&[
        "compare", "--config", &cfg, "--seeds", "1,2", "--modes", "major,none", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    let methods: Vec<(&str, &str)> = data_lines(&summary)[1..]
        .iter()
        .map(|l| {
            let mut f = l.split(',');
            (f.next().unwrap(), f.next().unwrap())
        })
        .collect();
    assert_eq!(
        methods,
        vec![
            ("major", "1"),
            ("none", "1"),
            ("major", "2"),
            ("none", "2"),
            ("centralized", "1"),
            ("centralized", "2"),
        ]
    );
}

#[test]
fn mu_sweep_writes_one_directory_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("sweep");
    let o = fedcmc(&[
        "compare", "--config", &cfg, "--modes", "major", "--mu-sweep", "--no-centralized",
        "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for mu in ["0.1", "0.5", "1"] {
        let summary = std::fs::read_to_string(out.join(format!("mu_{mu}")).join("summary.csv")).unwrap();
        let row: Vec<&str> = data_lines(&summary)[1].split(',').collect();
        assert_eq!(&row[..2], &["major", "42"]);
        assert_eq!(row[2].parse::<f64>().unwrap(), mu.parse::<f64>().unwrap());
    }
}

#[test]
fn partition_stats_rows_sum_to_training_set() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let o = fedcmc(&["partition-stats", "--config", &cfg]);
    assert!(o.status.success());
    let stdout = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines[0], "client,c0,c1,c2,c3,total");
    assert_eq!(lines.len(), 1 + 4);
    let total: usize = lines[1..]
        .iter()
        .map(|l| l.rsplit(',').next().unwrap().parse::<usize>().unwrap())
        .sum();
    // 20% of each class is held out for evaluation
    assert_eq!(total, 96 + 72 + 48 + 32);
}

#[test]
fn bad_inputs_fail_with_a_message() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cfg");
    std::fs::write(&bad, "learning_rte=0.1\n").unwrap();
    let o = fedcmc(&["run", "--config", bad.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1"));

    let cfg = small_config(dir.path());
    let o = fedcmc(&["compare", "--config", &cfg, "--modes", "best"]);
    assert!(!o.status.success());

    let missing = dir.path().join("nope.cfg");
    let o = fedcmc(&["partition-stats", "--config", missing.to_str().unwrap()]);
    assert!(!o.status.success());
}
