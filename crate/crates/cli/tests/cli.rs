use std::path::PathBuf;
use std::process::{Command, Output};

fn suq2(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_suq2"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn scratch_file(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    dir.join(name)
}

#[test]
fn index_suite_reports_index_one() {
    let out = suq2(&["--q", "0.5", "--max-two-j", "20", "--suite", "index"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let checks = report["checks"].as_array().unwrap();
    let fin = checks.iter().find(|c| c["name"] == "index.final_index").unwrap();
    assert_eq!(fin["computed"], 1.0);
    assert_eq!(fin["pass"], true);
    for c in checks {
        for key in ["name", "anchor", "expected", "computed", "provenance", "pass"] {
            assert!(c.get(key).is_some(), "missing {key}");
        }
    }
    assert_eq!(report["summary"]["all_passed"], true);
    assert_eq!(report["config"]["max_two_j"], 20);
}

#[test]
fn invalid_q_is_a_usage_error() {
    let out = suq2(&["--q", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("0 < q < 1"));
}

#[test]
fn malformed_arguments_are_usage_errors() {
    assert_eq!(suq2(&["--suite", "bogus"]).status.code(), Some(2));
    assert_eq!(suq2(&["--format", "xml"]).status.code(), Some(2));
    assert_eq!(suq2(&["--max-two-j", "8", "--guard", "8"]).status.code(), Some(2));
    assert_eq!(suq2(&["--tol-residue", "0"]).status.code(), Some(2));
}

#[test]
fn residues_csv_has_the_table_columns() {
    let out = suq2(&["--q", "0.5", "--suite", "residues", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("T,k,analytic,numeric,discrepancy"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert!(rows.len() > 100);
    assert!(rows.iter().all(|r| r.len() == 5));
    let unit_k3 = rows.iter().find(|r| r[0] == "1" && r[1] == "3").unwrap();
    assert_eq!(unit_k3[2], "2");
    assert!((unit_k3[3].parse::<f64>().unwrap() - 2.0).abs() < 1e-6);
}

#[test]
fn failing_suite_still_writes_the_report() {
    let path = scratch_file("analytic.json");
    let _ = std::fs::remove_file(&path);
    let out = suq2(&["--suite", "analytic", "--output", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(report["summary"]["all_passed"], false);
    let failed: Vec<&str> = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["pass"] == false)
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert!(failed.iter().all(|n| n.starts_with("analytic.summability")), "{failed:?}");
}

#[test]
fn reports_are_byte_identical() {
    let args = ["--q", "0.3", "--max-two-j", "12", "--suite", "relations", "--suite", "index", "--suite", "symbol"];
    let a = suq2(&args);
    let b = suq2(&args);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let csv = suq2(&[&args[..], &["--format", "csv"]].concat());
    let text = String::from_utf8(csv.stdout).unwrap();
    assert!(text.starts_with("name,anchor,expected,computed,provenance,pass\n"));
}
