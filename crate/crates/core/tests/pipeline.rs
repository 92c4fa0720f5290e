use std::fs;
use std::path::Path;

use labelboot::pipeline::{aggregate, run_repetitions, run_scenario, Method, RunConfig, Table};
use labelboot::report::{emit_report, read_report, SUMMARY_HEADER};
use labelboot::Error;

fn small(methods: Vec<Method>) -> RunConfig {
    RunConfig {
        n: 600,
        n_reps: 3,
        n_boot: 20,
        methods,
        seed: 5,
        ..RunConfig::default()
    }
}

#[test]
fn same_seed_gives_identical_reports() {
    let cfg = small(Method::ALL.to_vec());
    let a = serde_json::to_string(&run_repetitions(&cfg).unwrap()).unwrap();
    let b = serde_json::to_string(&run_repetitions(&cfg).unwrap()).unwrap();
    assert_eq!(a, b);
    let other = RunConfig { seed: 6, ..cfg };
    assert_ne!(a, serde_json::to_string(&run_repetitions(&other).unwrap()).unwrap());
}

#[test]
fn aggregates_recompute_from_records() {
    let report = run_repetitions(&small(Method::ALL.to_vec())).unwrap();
    assert_eq!(aggregate(&report.records, report.config.n_reps), report.aggregates);
}

#[test]
fn report_json_round_trips() {
    let report = run_repetitions(&small(Method::ALL.to_vec())).unwrap();
    let dir = tempfile::tempdir().unwrap();
    emit_report(dir.path(), &report).unwrap();
    assert_eq!(read_report(&dir.path().join("report.json")).unwrap(), report);
}

#[test]
fn empty_method_set_writes_only_config() {
    let report = run_repetitions(&small(Vec::new())).unwrap();
    assert!(report.records.is_empty());
    let dir = tempfile::tempdir().unwrap();
    emit_report(dir.path(), &report).unwrap();
    let names: Vec<String> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert_eq!(names, vec!["config.json".to_string()]);
}

/// Header plus the key columns of every row; values are left out so the
/// comparison does not depend on floating point details.
fn row_keys(path: &Path) -> String {
    let mut r = csv::Reader::from_path(path).unwrap();
    let mut out = r.headers().unwrap().iter().collect::<Vec<_>>().join(",");
    out.push('\n');
    for rec in r.records() {
        let rec = rec.unwrap();
        let key: Vec<&str> = [0, 1, 2, 3, 8].iter().map(|&j| &rec[j]).collect();
        out.push_str(&key.join(","));
        out.push('\n');
    }
    out
}

#[test]
fn summary_tables_match_golden_layout() {
    let report = run_repetitions(&small(Method::ALL.to_vec())).unwrap();
    let dir = tempfile::tempdir().unwrap();
    emit_report(dir.path(), &report).unwrap();
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    for table in Table::ALL {
        let file = format!("{}.csv", table.name());
        let got = row_keys(&dir.path().join(&file));
        assert!(got.starts_with(&SUMMARY_HEADER.join(",")));
        let expected_path = golden.join(format!("{}.keys", table.name()));
        if std::env::var_os("LABELBOOT_BLESS").is_some() {
            fs::write(&expected_path, &got).unwrap();
        }
        let expected = fs::read_to_string(&expected_path).unwrap();
        assert_eq!(got, expected, "{file}");
    }
}

#[test]
fn naive_coverage_is_sensitivity() {
    let recs = run_scenario(&small(vec![Method::Naive, Method::NaiveBoot]), 0).unwrap();
    for method in [Method::Naive, Method::NaiveBoot] {
        for y in 1..=3 {
            let find = |table, stat: &str| {
                recs.iter()
                    .find(|r| r.method == method && r.table == table && r.class == Some(y) && r.statistic == stat)
                    .unwrap()
                    .estimate
            };
            assert_eq!(find(Table::Coverage, "coverage"), find(Table::Metrics, "sensitivity"));
        }
    }
}

#[test]
fn ambiguity_shares_sum_to_one() {
    let recs = run_scenario(&small(vec![Method::WeightedBoot]), 1).unwrap();
    let shares: f64 = recs
        .iter()
        .filter(|r| r.table == Table::Ambiguity && r.class.is_none())
        .map(|r| r.estimate.unwrap())
        .sum();
    assert!((shares - 1.0).abs() < 1e-12);
    assert!(recs.iter().all(|r| r.method == Method::WeightedBoot));
}

#[test]
fn failing_repetition_reports_stage_and_seed() {
    // too few observations for the development split to hold every class twice
    let cfg = RunConfig {
        n: 12,
        n_reps: 4,
        ..small(vec![Method::WeightedBoot])
    };
    let err = run_repetitions(&cfg).unwrap_err();
    let msg = err.to_string();
    assert!(matches!(err, Error::Stage { .. }));
    assert!(msg.contains("seed 5"), "{msg}");
}
