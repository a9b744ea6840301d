use std::process::{Command, Output};

use metasymnet_cli::{
    parse_table, split_tables, AggregateRow, RunRow, SweepAggregateRow, AGGREGATE_HEADER,
    RUN_HEADER, SWEEP_AGGREGATE_HEADER,
};
use serde_json::Value;

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_metasymnet"))
        .args(args)
        .env_remove("METASYMNET_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const QUICK: [&str; 4] = ["--set", "max_outer_iters=3", "--set", "n_wb=2"];

fn strip_wall_time(v: &mut Value) {
    match v {
        Value::Object(m) => {
            m.retain(|k, _| !k.contains("wall_time"));
            m.values_mut().for_each(strip_wall_time);
        }
        Value::Array(a) => a.iter_mut().for_each(strip_wall_time),
        _ => {}
    }
}

#[test]
fn list_is_sorted_and_complete() {
    let o = cli(&["list"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let names: Vec<&str> = text.lines().collect();
    let mut sorted = names.clone();
    sorted.sort();
    assert_eq!(names, sorted);
    for want in ["Nguyen-5", "Keijzer-11", "Livermore-22", "Korns-15", "R3"] {
        assert!(names.contains(&want), "{want} missing");
    }
}

#[test]
fn help_exits_zero() {
    assert_eq!(cli(&["--help"]).status.code(), Some(0));
}

#[test]
fn bad_inputs_exit_one() {
    let o = cli(&["fit", "--data", "/nonexistent/data.csv"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));

    let o = cli(&["fit", "--benchmark", "Bogus-1"]);
    assert_eq!(o.status.code(), Some(1));

    let o = cli(&["benchmark", "--names", "Nguyen-*,Nothing-*"]);
    assert_eq!(o.status.code(), Some(1));

    let o = cli(&["fit", "--benchmark", "Nguyen-1", "--set", "alpha=fast"]);
    assert_eq!(o.status.code(), Some(1));

    assert_eq!(cli(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn fit_json_is_reproducible() {
    let mut args = vec!["fit", "--benchmark", "Nguyen-1", "--seeds", "3,4"];
    args.extend(QUICK);
    let runs: Vec<Value> = (0..2)
        .map(|_| {
            let o = cli(&args);
            assert!(matches!(o.status.code(), Some(0 | 2)));
            let mut v: Value = serde_json::from_str(&stdout(&o)).unwrap();
            strip_wall_time(&mut v);
            v
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
    assert_eq!(runs[0]["reports"].as_array().unwrap().len(), 2);
    assert!(runs[0]["reports"][0].get("extraction_trace").is_none());
}

#[test]
fn fit_reads_csv_data_and_writes_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    let rows: String = (0..20)
        .map(|i| {
            let x = i as f64 / 10.0;
            format!("{x},{}\n", 2.0 * x + 1.0)
        })
        .collect();
    std::fs::write(&data, format!("x1,y\n{rows}")).unwrap();
    let out = dir.path().join("fit.csv");
    let mut args = vec![
        "fit",
        "--data",
        data.to_str().unwrap(),
        "--format",
        "csv",
        "--output",
        out.to_str().unwrap(),
        "--trace",
    ];
    args.extend(QUICK);
    let o = cli(&args);
    assert!(
        matches!(o.status.code(), Some(0 | 2)),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("seed,converged,r2,"));
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn benchmark_csv_parses_back() {
    let mut args = vec![
        "benchmark",
        "--names",
        "Nguyen-1,Nguyen-8",
        "--repeats",
        "2",
        "--seed",
        "5",
        "--format",
        "csv",
    ];
    args.extend(QUICK);
    let o = cli(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let tables = split_tables(&stdout(&o));
    assert_eq!(tables.len(), 2);
    let runs: Vec<RunRow> = parse_table(&tables[0], &RUN_HEADER).unwrap();
    assert_eq!(runs.len(), 4);
    assert!(runs.iter().all(|r| r.status == "ok" && r.r2.is_some()));
    let agg: Vec<AggregateRow> = parse_table(&tables[1], &AGGREGATE_HEADER).unwrap();
    let names: Vec<&str> = agg.iter().map(|a| a.name.as_str()).collect();
    assert!(names.contains(&"Nguyen-1") && names.contains(&"Nguyen"));
}

#[test]
fn noise_sweep_honours_level_override() {
    let mut args = vec![
        "noise-sweep",
        "--names",
        "Nguyen-1",
        "--repeats",
        "2",
        "--levels",
        "0,0.05",
        "--format",
        "csv",
    ];
    args.extend(QUICK);
    let o = cli(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let tables = split_tables(&stdout(&o));
    let agg: Vec<SweepAggregateRow> = parse_table(&tables[1], &SWEEP_AGGREGATE_HEADER).unwrap();
    let levels: Vec<f64> = agg.iter().map(|a| a.level).collect();
    assert_eq!(levels, vec![0.0, 0.05]);
    assert!(agg.iter().all(|a| a.runs == 2));
}

#[test]
fn config_file_is_read_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "# quick\nmax_outer_iters = 2\nrepeats = 3\nformat = csv\n",
    )
    .unwrap();
    let o = cli(&[
        "benchmark",
        "--names",
        "Nguyen-8",
        "--config",
        cfg.to_str().unwrap(),
        "--repeats",
        "1",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let tables = split_tables(&stdout(&o));
    let runs: Vec<RunRow> = parse_table(&tables[0], &RUN_HEADER).unwrap();
    assert_eq!(runs.len(), 1);
}
