use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn wwr() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wwr"))
}

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn price(out: &Path, extra: &[&str]) -> Output {
    wwr()
        .arg("price")
        .arg("--config")
        .arg(configs().join("paper_irs_10y.cfg"))
        .args(["--paths", "2000", "--out"])
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn price_writes_report_profiles_and_meta() {
    let dir = tempfile::tempdir().unwrap();
    let out = price(dir.path(), &[]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let report = json(&dir.path().join("report.json"));
    let base = report["cva_running_bps"].as_f64().unwrap();
    let wwr = report["cva_wwr_running_bps"].as_f64().unwrap();
    assert!(wwr > base && base > 0.0);
    for key in ["cva_upfront", "fva_bps", "fva_wwr_bps", "hedge_total"] {
        assert!(report[key].is_number(), "missing {key}");
    }

    let csv = fs::read_to_string(dir.path().join("epe_profiles.csv")).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "t,ee,epe,ene,epe_stderr,epe_abs_stress_sovereign_default,epe_rel_stress_sovereign_default,epe_wwr"
    );
    assert_eq!(csv.lines().count(), 41);

    let meta = json(&dir.path().join("run_meta.json"));
    assert_eq!(meta["seed"], 42);
    assert_eq!(meta["n_paths"], 2000);
    assert_eq!(meta["config_hash"].as_str().unwrap().len(), 64);
    let fields: Vec<&str> = meta["defaults"]
        .as_array()
        .unwrap()
        .iter()
        .map(|d| d["field"].as_str().unwrap())
        .collect();
    for f in [
        "credit_curves.CPTY.recovery",
        "simulation.normal_vol",
        "simulation.fx_vol",
        "trades[0].fixed_rate",
    ] {
        assert!(
            fields.contains(&f),
            "run_meta.json does not name default {f}"
        );
    }
}

#[test]
fn same_seed_gives_identical_profiles_across_thread_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    let run = |dir: &Path, threads: &str, extra: &[&str]| {
        let out = wwr()
            .env("RAYON_NUM_THREADS", threads)
            .arg("price")
            .arg("--config")
            .arg(configs().join("paper_ccs_5y.cfg"))
            .args([
                "--paths", "3000", "--seed", "42", "--format", "csv", "--out",
            ])
            .arg(dir)
            .args(extra)
            .output()
            .unwrap();
        assert!(out.status.success());
        fs::read(dir.join("epe_profiles.csv")).unwrap()
    };
    let first = run(a.path(), "1", &[]);
    assert_eq!(first, run(b.path(), "4", &[]));
    assert_eq!(first, run(c.path(), "2", &["--sequential"]));
    assert!(!a.path().join("report.json").exists());
}

#[test]
fn hard_bound_breach_exits_with_validation_status_and_no_report() {
    let dir = tempfile::tempdir().unwrap();
    let scenarios = dir.path().join("scenarios.json");
    fs::write(
        &scenarios,
        r#"[{"id": "extreme", "shock": {"parallel_rate_shift": {"USD": 0.05}},
             "probability_source": {"kind": "cds_implied", "entity": "SOV"},
             "rating": "high", "p_threshold_bps": 1000}]"#,
    )
    .unwrap();
    let portfolio = dir.path().join("portfolio.json");
    fs::write(
        &portfolio,
        r#"{"counterparty": "CPTY", "base_currency": "USD",
            "trades": [{"type": "irs", "notional": 1, "direction": "payer", "maturity": 10, "currency": "USD"}]}"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = wwr()
        .arg("price")
        .arg("--market")
        .arg(configs().join("irs_market.json"))
        .arg("--portfolio")
        .arg(&portfolio)
        .arg("--scenarios")
        .arg(&scenarios)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(out.stderr.trim_ascii()).unwrap();
    assert_eq!(err["status"], "validation_failed");
    assert!(!out_dir.join("report.json").exists());
    assert!(!out_dir.join("epe_profiles.csv").exists());
}

#[test]
fn few_paths_are_flagged() {
    let dir = tempfile::tempdir().unwrap();
    let out = wwr()
        .arg("price")
        .arg("--config")
        .arg(configs().join("paper_irs_10y_receiver.cfg"))
        .args(["--paths", "300", "--format", "json", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let meta = json(&dir.path().join("run_meta.json"));
    let warnings = meta["warnings"].as_array().unwrap();
    assert!(warnings
        .iter()
        .any(|w| w.as_str().unwrap().contains("n_paths = 300")));
    assert!(!dir.path().join("epe_profiles.csv").exists());
}

#[test]
fn validate_lints_without_simulating() {
    let out = wwr()
        .arg("validate")
        .arg("--config")
        .arg(configs().join("paper_ccs_5y.cfg"))
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["status"], "ok");
    assert_eq!(v["scenarios"][0], "sovereign_default");

    let bad = wwr()
        .arg("validate")
        .arg("--config")
        .arg("/nonexistent/run.cfg")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn calibrate_lambda_reports_both_ratios() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, hit: &dyn Fn(usize) -> bool, hi: f64| {
        let mut text = String::from("date,spread_bps\n");
        for i in 0..100u64 {
            let d = chrono_like(i);
            text.push_str(&format!(
                "{d},{}\n",
                if hit(i as usize) { hi } else { 100.0 }
            ));
        }
        let p = dir.path().join(name);
        fs::write(&p, text).unwrap();
        p
    };
    let sov = write("sov.csv", &|i| i < 10, 1200.0);
    let cpty = write("cpty.csv", &|i| i < 8 || (50..52).contains(&i), 900.0);
    let out = wwr()
        .arg("calibrate-lambda")
        .arg("--cpty")
        .arg(&cpty)
        .arg("--sov")
        .arg(&sov)
        .args(["--cpty-threshold-bps", "600", "--sov-threshold-bps", "1000"])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["lambda"], 8.0);
    assert!((v["dual_lambda"].as_f64().unwrap() - 8.0).abs() < 1e-12);
    assert_eq!(v["rating"], "medium");
    assert_eq!(v["counts"]["joint"], 8);

    let never = write("quiet.csv", &|_| false, 0.0);
    let out = wwr()
        .arg("calibrate-lambda")
        .arg("--cpty")
        .arg(&never)
        .arg("--sov")
        .arg(&sov)
        .args(["--cpty-threshold-bps", "600", "--sov-threshold-bps", "1000"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let err: Value = serde_json::from_slice(out.stderr.trim_ascii()).unwrap();
    assert_eq!(err["status"], "numerical_failure");
}

/// ISO date `i` days after 2011-01-01, without pulling in a date crate.
fn chrono_like(i: u64) -> String {
    const DAYS: [u64; 12] = [31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31];
    let (mut month, mut day) = (0usize, i);
    while day >= DAYS[month] {
        day -= DAYS[month];
        month += 1;
    }
    format!("2011-{:02}-{:02}", month + 1, day + 1)
}

#[test]
fn hedge_sums_prior_reports() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(price(a.path(), &["--format", "json"]).status.success());
    let out = wwr()
        .arg("price")
        .arg("--config")
        .arg(configs().join("paper_irs_10y_receiver.cfg"))
        .args(["--paths", "2000", "--format", "json", "--out"])
        .arg(b.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let total = |p: &Path| {
        json(&p.join("report.json"))["hedge_total"]
            .as_f64()
            .unwrap()
    };
    let expected = total(a.path()) + total(b.path());
    let agg_path = a.path().join("hedge.json");
    let out = wwr()
        .arg("hedge")
        .arg(a.path().join("report.json"))
        .arg(b.path().join("report.json"))
        .arg("--out")
        .arg(&agg_path)
        .output()
        .unwrap();
    assert!(out.status.success());
    let agg = json(&agg_path);
    assert!((agg["total"].as_f64().unwrap() - expected).abs() < 1e-15);
    assert_eq!(agg["lines"].as_array().unwrap().len(), 2);
}
