use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use aps_iv::{Dataset, TreatmentKind};
use aps_iv_cli::ingest::{emit_csv, ingest_reader};
use aps_iv_cli::{CliError, Schema};
use proptest::prelude::*;
use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn aps_iv(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_aps-iv"));
    cmd.args(args);
    match threads {
        Some(t) => cmd.env("APS_IV_THREADS", t),
        None => cmd.env_remove("APS_IV_THREADS"),
    };
    cmd.output().expect("binary runs")
}

fn rdd_run(out: &Path, deltas: &str) -> Output {
    aps_iv(
        &[
            "--input",
            fixture("rdd.csv").to_str().unwrap(),
            "--rule",
            fixture("rdd_rule.toml").to_str().unwrap(),
            "--deltas",
            deltas,
            "--draws",
            "1000",
            "--seed",
            "7",
            "--out",
            out.to_str().unwrap(),
        ],
        None,
    )
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn floats(v: &Value) -> Vec<f64> {
    match v {
        Value::Array(a) => a.iter().flat_map(floats).collect(),
        Value::Number(n) => vec![n.as_f64().unwrap()],
        _ => panic!("not numeric: {v}"),
    }
}

fn assert_rel(actual: &[f64], expected: &[f64], what: &str) {
    assert_eq!(actual.len(), expected.len(), "{what}");
    let scale = expected.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for (a, e) in actual.iter().zip(expected) {
        assert!((a - e).abs() <= 1e-10 * scale, "{what}: {a} vs {e}");
    }
}

fn check_report(report: &Value, golden: &Value, what: &str) {
    let coef: Vec<f64> = report["coefficients"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["estimate"].as_f64().unwrap())
        .collect();
    assert_rel(&coef, &floats(&golden["coef"]), what);
    assert_rel(&floats(&report["covariance"]), &floats(&golden["cov"]), what);
    assert_eq!(report["n_used"], golden["n_used"], "{what}");
}

fn entry<'a>(list: &'a Value, label: &str) -> &'a Value {
    list.as_array()
        .unwrap()
        .iter()
        .find(|e| e["label"] == label)
        .map(|e| &e["report"])
        .unwrap_or_else(|| panic!("no {label}"))
}

#[test]
fn rdd_fixture_matches_golden_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = rdd_run(dir.path(), "0.1,0.25,0.5");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let got = read_json(&dir.path().join("estimates.json"));
    let golden = read_json(&fixture("rdd_expected.json"));

    let sweep = got["sweep"].as_array().unwrap();
    let gsweep = golden["sweep"].as_array().unwrap();
    assert_eq!(sweep.len(), gsweep.len());
    for (b, g) in sweep.iter().zip(gsweep) {
        assert_eq!(b["delta"].as_f64(), g["delta"].as_f64());
        let tsls = entry(&b["estimates"], "tsls_aps");
        check_report(tsls, &g["tsls_aps"], "tsls_aps");
        check_report(entry(&b["estimates"], "ols_recommendation"), &g["ols_recommendation"], "ols_z");
        let fs = floats(&g["first_stage"]["coef"])[1];
        assert_rel(&[tsls["first_stage"]["gamma1"].as_f64().unwrap()], &[fs], "first stage");
    }
    for label in ["naive_ols", "naive_tsls"] {
        check_report(entry(&got["unadjusted"], label), &golden["unadjusted"][label], label);
    }
}

#[test]
fn two_bandwidths_give_two_sweep_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = rdd_run(dir.path(), "0.01,0.05");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let sweep = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let rows: Vec<&str> = sweep.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("0.01,"));
    assert!(rows[1].starts_with("0.05,"));
    let aps = std::fs::read_to_string(dir.path().join("aps.csv")).unwrap();
    assert_eq!(aps.lines().count(), 1 + 2 * 400);
}

#[test]
fn rerun_with_same_seed_is_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(rdd_run(a.path(), "0.05,0.1").status.success());
    assert!(rdd_run(b.path(), "0.05,0.1").status.success());
    for name in ["estimates.json", "aps.csv", "sweep.csv", "table.txt"] {
        assert_eq!(
            std::fs::read(a.path().join(name)).unwrap(),
            std::fs::read(b.path().join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn format_flag_limits_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = aps_iv(
        &[
            "--input",
            fixture("rdd.csv").to_str().unwrap(),
            "--rule",
            fixture("rdd_rule.toml").to_str().unwrap(),
            "--draws",
            "200",
            "--format",
            "json",
            "--out",
            dir.path().to_str().unwrap(),
        ],
        None,
    );
    assert!(out.status.success());
    assert!(dir.path().join("estimates.json").exists());
    assert!(!dir.path().join("aps.csv").exists());
}

fn error_json(out: &Output) -> Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let line = stderr.lines().last().expect("stderr has an error line");
    serde_json::from_str(line).expect("error is JSON")
}

#[test]
fn data_errors_exit_with_code_3_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "y,d,z,x1,x2\n1.0,0,2,0.5,0.5\n").unwrap();
    let out = aps_iv(
        &[
            "--input",
            bad.to_str().unwrap(),
            "--rule",
            fixture("rdd_rule.toml").to_str().unwrap(),
            "--out",
            dir.path().join("o").to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(out.status.code(), Some(3));
    let e = error_json(&out);
    assert_eq!(e["error"], "non_binary");
    assert_eq!(e["column"], "z");
    assert_eq!(e["row"], 1);
}

#[test]
fn config_errors_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = aps_iv(
        &[
            "--input",
            fixture("rdd.csv").to_str().unwrap(),
            "--rule",
            fixture("rdd_rule.toml").to_str().unwrap(),
            "--deltas",
            "0.1,-1",
            "--out",
            dir.path().to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["error"], "config");

    let missing_rule = aps_iv(
        &["--input", fixture("rdd.csv").to_str().unwrap(), "--out", dir.path().to_str().unwrap()],
        None,
    );
    assert_eq!(missing_rule.status.code(), Some(2));

    let bad_threads = aps_iv(
        &[
            "--input",
            fixture("rdd.csv").to_str().unwrap(),
            "--rule",
            fixture("rdd_rule.toml").to_str().unwrap(),
            "--out",
            dir.path().to_str().unwrap(),
        ],
        Some("many"),
    );
    assert_eq!(bad_threads.status.code(), Some(2));
}

#[test]
fn estimation_errors_exit_with_code_4() {
    // All recommendations are 1, so the naive design is singular and no
    // observation has a nondegenerate score far from the cutoff.
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("flat.csv");
    std::fs::write(&csv, "y,d,z,x1\n1.0,1,1,5.0\n2.0,1,1,6.0\n3.0,1,1,7.0\n").unwrap();
    let rule = dir.path().join("rule.toml");
    std::fs::write(&rule, "kind = \"threshold\"\ndim = 1\ncoord = 0\ncutoff = 0.0\n").unwrap();
    let out = aps_iv(
        &[
            "--input",
            csv.to_str().unwrap(),
            "--rule",
            rule.to_str().unwrap(),
            "--draws",
            "100",
            "--out",
            dir.path().join("o").to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(error_json(&out)["error"], "estimation");
}

#[test]
fn dgp_mode_runs_monte_carlo() {
    let dir = tempfile::tempdir().unwrap();
    let dgp = dir.path().join("dgp.toml");
    std::fs::write(
        &dgp,
        "n = 300\np = 4\nband = [0.3, 0.7]\nsurrogate_n = 200\n\n[monte_carlo]\nreplications = 4\noracle_n = 20000\nestimators = [\"aps_tsls\", \"naive_ols\"]\n",
    )
    .unwrap();
    let out = aps_iv(
        &[
            "--dgp",
            dgp.to_str().unwrap(),
            "--deltas",
            "0.5",
            "--draws",
            "100",
            "--out",
            dir.path().join("o").to_str().unwrap(),
        ],
        None,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["mc_summary.csv", "mc_summary.json", "mc_table.txt"] {
        assert!(dir.path().join("o").join(name).exists(), "{name}");
    }
}

#[test]
fn dgp_mode_without_monte_carlo_estimates_one_sample() {
    let dir = tempfile::tempdir().unwrap();
    let dgp = dir.path().join("dgp.toml");
    std::fs::write(&dgp, "n = 400\np = 4\nband = [0.2, 0.8]\nsurrogate_n = 200\n").unwrap();
    let out = aps_iv(
        &[
            "--dgp",
            dgp.to_str().unwrap(),
            "--deltas",
            "0.5",
            "--draws",
            "100",
            "--out",
            dir.path().to_str().unwrap(),
        ],
        None,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let est = read_json(&dir.path().join("estimates.json"));
    assert_eq!(est["n"], 400);
}

const SMALL: &str = "y,d,z,x1,x2\n1.5,1,1,0.25,-3\n-0.5,0,0,1e-3,2.\n2,1,0,.5,7E2\n";

#[test]
fn three_row_file_ingests() {
    let ds = ingest_reader(SMALL.as_bytes(), &Schema::default()).unwrap();
    assert_eq!(ds.n(), 3);
    assert_eq!(ds.p_cont(), 2);
    assert_eq!(ds.x_cont_row(2), &[0.5, 700.0]);
    assert_eq!(ds.continuous_names(), &["x1".to_string(), "x2".to_string()]);
}

#[test]
fn instrument_outside_zero_one_is_rejected() {
    let csv = SMALL.replace("2,1,0,.5", "2,1,2,.5");
    match ingest_reader(csv.as_bytes(), &Schema::default()) {
        Err(CliError::NonBinary { column, row }) => assert_eq!((column.as_str(), row), ("z", 3)),
        other => panic!("{other:?}"),
    }
}

#[test]
fn decimal_comma_is_a_parse_error() {
    let csv = "y,d,z,x1\n\"1,5\",1,1,0.5\n";
    match ingest_reader(csv.as_bytes(), &Schema::default()) {
        Err(CliError::ParseError { row, column, .. }) => assert_eq!((row, column.as_str()), (1, "y")),
        other => panic!("{other:?}"),
    }
    let csv = "y,d,z,x1\n1.0,1,1,NaN\n";
    assert!(matches!(
        ingest_reader(csv.as_bytes(), &Schema::default()),
        Err(CliError::ParseError { row: 1, .. })
    ));
}

#[test]
fn missing_column_is_named() {
    let csv = "y,d,x1\n1,1,0\n";
    match ingest_reader(csv.as_bytes(), &Schema::default()) {
        Err(CliError::MissingColumn(c)) => assert_eq!(c, "z"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn schema_assigns_discrete_and_balance_roles() {
    let csv = "outcome,treat,rec,age,region,income\n1.0,1,1,30,2,5.5\n2.0,0,0,40,1,6.5\n";
    let schema = Schema {
        outcome: "outcome".into(),
        treatment: "treat".into(),
        instrument: "rec".into(),
        continuous: vec![],
        discrete: vec!["region".into()],
        balance: vec!["income".into()],
        treatment_kind: TreatmentKind::Binary,
    };
    let ds = ingest_reader(csv.as_bytes(), &schema).unwrap();
    assert_eq!(ds.continuous_names(), &["age".to_string()]);
    assert_eq!(ds.x_disc_row(1), &[1]);
    assert_eq!(ds.aux("income").unwrap(), &[5.5, 6.5]);
}

#[test]
fn continuous_treatment_accepts_amounts() {
    let csv = "y,d,z,x1\n1.0,12.5,1,0.1\n2.0,0,0,0.2\n";
    let schema = Schema {
        treatment_kind: TreatmentKind::Continuous,
        ..Schema::default()
    };
    assert_eq!(ingest_reader(csv.as_bytes(), &schema).unwrap().d(), &[12.5, 0.0]);
    assert!(matches!(
        ingest_reader(csv.as_bytes(), &Schema::default()),
        Err(CliError::NonBinary { .. })
    ));
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        any::<f64>().prop_filter("finite", |v| v.is_finite()),
        -1e3..1e3f64,
        Just(0.0),
        Just(-0.0),
        Just(5e-324),
    ]
}

prop_compose! {
    fn dataset()(n in 1usize..12, p in 0usize..3, q in 0usize..2, kind in any::<bool>())
        (y in prop::collection::vec(finite(), n),
         d in prop::collection::vec(if kind { finite().boxed() } else { (0u8..2).prop_map(f64::from).boxed() }, n),
         z in prop::collection::vec((0u8..2).prop_map(f64::from), n),
         x in prop::collection::vec(finite(), n * p),
         g in prop::collection::vec(any::<i64>(), n * q),
         w in prop::collection::vec(finite(), n),
         p in Just(p), q in Just(q), kind in Just(kind)) -> Dataset
    {
        Dataset::builder(y, d, z)
            .continuous(x, p)
            .discrete(g, q)
            .aux("w", w)
            .treatment_kind(if kind { TreatmentKind::Continuous } else { TreatmentKind::Binary })
            .build()
            .unwrap()
    }
}

proptest! {
    #[test]
    fn csv_round_trip_is_exact(ds in dataset()) {
        let schema = Schema::of(&ds);
        let mut buf = Vec::new();
        emit_csv(&ds, &schema, &mut buf).unwrap();
        let back = ingest_reader(buf.as_slice(), &schema).unwrap();
        // Bitwise comparison, so that -0.0 and 0.0 are told apart.
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(back.y()), bits(ds.y()));
        prop_assert_eq!(bits(back.d()), bits(ds.d()));
        prop_assert_eq!(bits(back.x_cont_flat()), bits(ds.x_cont_flat()));
        prop_assert_eq!(back, ds);
    }
}
