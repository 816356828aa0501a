use std::path::Path;
use std::process::{Command, Output};

fn epiclust(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_epiclust"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Report CSV with the timing column dropped.
fn without_time(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| {
            let cells: Vec<&str> = l.split(',').collect();
            [&cells[..5], &cells[6..]].concat().join(",")
        })
        .collect()
}

#[test]
fn combos_lists_eighteen() {
    let o = epiclust(&["combos"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let lines: Vec<String> = stdout(&o).lines().map(str::to_string).collect();
    assert_eq!(lines.len(), 18);
    assert!(lines.iter().any(|l| l.starts_with("_dd2.MEI")));
}

#[test]
fn combos_reports_admissibility_on_data() {
    let o = epiclust(&["combos", "--scenario", "S 1-4", "--combos", "_.EIHI,d2.EIHI"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 2);
    assert!(text.contains("admissible"), "{text}");
}

#[test]
fn simulate_then_cluster_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim");
    let o = epiclust(&["simulate", "--scenario", "S 1-4", "--seed", "3", "--out", sim.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let data = sim.join("data.csv");
    let text = std::fs::read_to_string(&data).unwrap();
    assert_eq!(text.lines().count(), 101);
    assert!(text.lines().next().unwrap().ends_with(",label"));
    assert!(sim.join("curves.svg").exists());

    let out = dir.path().join("clu");
    let o = epiclust(&[
        "cluster",
        "--input",
        data.to_str().unwrap(),
        "--combos",
        "_.EIHI",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = stdout(&o);
    assert!(report.contains("configuration kmeans._.EIHI"), "{report}");
    assert!(report.contains("RI"), "{report}");
    let assignments = std::fs::read_to_string(out.join("assignments.csv")).unwrap();
    assert_eq!(assignments.lines().next().unwrap(), "curve,cluster,label,EI,HI");
    assert_eq!(assignments.lines().count(), 101);
    assert!(out.join("features.svg").exists());
}

#[test]
fn simulate_without_out_writes_csv_to_stdout() {
    let o = epiclust(&["simulate", "--scenario", "S 10-11"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 101);
    assert_eq!(text.lines().next().unwrap().split(',').count(), 151);
}

#[test]
fn run_is_deterministic_and_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &str| {
        vec![
            "run".to_string(),
            "--scenario".into(),
            "S 1-2".into(),
            "--reps".into(),
            "3".into(),
            "--methods".into(),
            "kmeans,ward.D2".into(),
            "--combos".into(),
            "_d.MEI,d2.EIHI".into(),
            "--out".into(),
            out.into(),
        ]
    };
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for d in [&a, &b] {
        let argv = args(d.to_str().unwrap());
        let argv: Vec<&str> = argv.iter().map(String::as_str).collect();
        let o = epiclust(&argv);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let ra = without_time(&a.join("report.csv"));
    assert_eq!(ra, without_time(&b.join("report.csv")));
    assert_eq!(ra[0], "config,purity,fmeasure,pairwise_f,rand,runs,reps,note");
    assert_eq!(ra.len(), 5);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "scenario = S 1-4\nreps = 50\nmethods = kmeans\ncombos = _.EIHI\n").unwrap();
    let o = epiclust(&["run", "--config", cfg.to_str().unwrap(), "--reps", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("S 1-4 (2 reps, k = 2)"), "{text}");
    assert!(text.contains("2/2"), "{text}");
}

#[test]
fn select_k_histogram_counts_every_replication() {
    let dir = tempfile::tempdir().unwrap();
    let o = epiclust(&["select-k", "--scenario", "S 1-4", "--reps", "5", "--candidates", "2-4", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("k_histogram.csv")).unwrap();
    let total: usize = csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse::<usize>().unwrap()).sum();
    assert_eq!(total, 5);
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn bench_runs_the_baselines() {
    let o = epiclust(&["bench", "--scenario", "S 1-4", "--reps", "2", "--methods", "fkm-L2,tbkm-random", "--gamma", "0.05"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("fkm-L2") && text.contains("tbkm-random"), "{text}");
}

#[test]
fn bad_input_is_reported_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "0,1,2,3,4\n1,2,3,4,5\n1,2,oops,4,5\n").unwrap();
    let o = epiclust(&["cluster", "--input", path.to_str().unwrap(), "--k", "2"]);
    assert!(!o.status.success());
    let err = stderr(&o);
    assert!(err.contains("row 3, column 3"), "{err}");
}

#[test]
fn bad_config_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.conf");
    std::fs::write(&cfg, "scenario = S 1-4\nrepz = 3\n").unwrap();
    let o = epiclust(&["run", "--config", cfg.to_str().unwrap()]);
    assert!(!o.status.success());
    let err = stderr(&o);
    assert!(err.contains("line 2") && err.contains("repz"), "{err}");
}

#[test]
fn unknown_scenario_and_missing_data_fail_cleanly() {
    let o = epiclust(&["run", "--scenario", "S 99", "--reps", "1"]);
    assert!(!o.status.success());
    assert!(stderr(&o).starts_with("error:"), "{}", stderr(&o));
    let o = epiclust(&["run", "--reps", "1"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("--scenario"), "{}", stderr(&o));
}

#[test]
fn unlabelled_input_needs_k() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("plain.csv");
    let rows: Vec<String> = (0..12)
        .map(|i| {
            let off = if i < 6 { 0.0 } else { 5.0 };
            (0..8).map(|t| format!("{}", off + (t as f64 * 0.3 + i as f64).sin())).collect::<Vec<_>>().join(",")
        })
        .collect();
    std::fs::write(&path, rows.join("\n")).unwrap();
    let o = epiclust(&["cluster", "--input", path.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("--k"), "{}", stderr(&o));
    let o = epiclust(&["cluster", "--input", path.to_str().unwrap(), "--k", "2", "--basis-size", "5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("cluster sizes"));
}

/// Two groups ten units apart with opposite slopes: `MEI(_)` follows the
/// level and `MEI(d)` the slope, so the `_d.MEI` features form one blob per
/// quadrant.
fn two_blob_csv(path: &Path) {
    let mut text = String::from("0,1,2,3,4,5,6,7,8,9,label\n");
    for i in 0..30 {
        let (level, sign, name) = if i % 2 == 0 { (0.0, 1.0, "low") } else { (10.0, -1.0, "high") };
        let offset = 0.5 * (i as f64 * 12.9898).sin();
        let slope = sign * (1.5 + 0.5 * (i as f64 * 78.233).sin());
        let row: Vec<String> = (0..10)
            .map(|t| format!("{:.4}", level + offset + slope * (t as f64 / 9.0 - 0.5)))
            .collect();
        text.push_str(&format!("{},{name}\n", row.join(",")));
    }
    std::fs::write(path, text).unwrap();
}

#[test]
fn two_blob_fixture_always_selects_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("blobs.csv");
    two_blob_csv(&path);
    let o = epiclust(&["select-k", "--input", path.to_str().unwrap(), "--reps", "10", "--combos", "_d.MEI"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let line = text.lines().find(|l| l.starts_with("k = 2")).unwrap();
    assert_eq!(line.split_whitespace().nth(3), Some("10"), "{text}");
}

#[test]
fn growth_shaped_file_reads_grid_from_header() {
    use epiclust_cli::ingest::{read_csv, HeaderMode};
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("growth.csv");
    let ages: Vec<f64> = (0..31).map(|j| 1.0 + 17.0 * j as f64 / 30.0).collect();
    let mut text = ages.iter().map(|a| format!("{a:.3}")).collect::<Vec<_>>().join(",");
    text.push_str(",label\n");
    for i in 0..93 {
        let row: Vec<String> = ages.iter().map(|a| format!("{:.2}", 75.0 + 6.0 * a + (i % 7) as f64)).collect();
        text.push_str(&format!("{},{}\n", row.join(","), if i < 39 { "boy" } else { "girl" }));
    }
    std::fs::write(&path, text).unwrap();
    let d = read_csv(&path, HeaderMode::Auto).unwrap();
    assert_eq!(d.sample.n_curves(), 93);
    assert_eq!(d.sample.n_points(), 31);
    assert_eq!(d.sample.grid().start(), 1.0);
    assert_eq!(d.sample.grid().end(), 18.0);
    assert_eq!(d.label_names, vec!["boy", "girl"]);
}
