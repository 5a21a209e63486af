use std::process::Command;

use staggered_njl::scan::{emit, read_jsonl, run_scan, Format, ScanConfig};

fn njl_lab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_njl-lab"))
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = njl_lab().args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

const NEAR_CLASSICAL: [&str; 14] =
    ["--nu", "2", "--L", "1", "--g", "1", "--kappa", "0.01", "--beta", "20", "--mass", "0", "--seed", "5"];

#[test]
fn near_classical_point_orders() {
    let mut args = NEAR_CLASSICAL.to_vec();
    args.extend(["--suite", "bounds", "--format", "jsonl"]);
    let (code, out, err) = run(&args);
    assert_eq!(code, 0, "{err}");
    let recs = read_jsonl(&out).unwrap();
    assert_eq!(recs.len(), 1);
    let r = &recs[0];
    assert!(r.passed && r.errors.is_empty());
    let m = r.observables.as_ref().unwrap().m_lro;
    assert!((m - 0.5).abs() < 1e-3, "m_LRO = {m}");
}

#[test]
fn jsonl_is_byte_identical_across_runs() {
    let mut args = NEAR_CLASSICAL.to_vec();
    args.extend(["--suite", "all", "--format", "jsonl"]);
    let (c1, a, _) = run(&args);
    let (c2, b, _) = run(&args);
    assert_eq!((c1, c2), (0, 0));
    assert_eq!(a, b);
}

#[test]
fn csv_has_one_row_per_record_and_stable_columns() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    let mut args = NEAR_CLASSICAL.to_vec();
    let p = path.to_str().unwrap();
    args.extend(["--suite", "bounds", "--format", "csv", "--out", p]);
    assert_eq!(run(&args).0, 0);
    let first = std::fs::read_to_string(&path).unwrap();
    assert_eq!(run(&args).0, 0);
    let second = std::fs::read_to_string(&path).unwrap();
    let mut rdr = csv::Reader::from_reader(first.as_bytes());
    let header = rdr.headers().unwrap().clone();
    assert_eq!(&header[0], "nu");
    assert!(header.iter().any(|h| h.starts_with("bounds: sum rule")));
    assert_eq!(rdr.records().count(), 1);
    let header2 = csv::Reader::from_reader(second.as_bytes()).headers().unwrap().clone();
    assert_eq!(header, header2);
    let m_col = header.iter().position(|h| h == "m_lro").unwrap();
    let row = csv::Reader::from_reader(first.as_bytes()).records().next().unwrap().unwrap();
    let digits = row[m_col].split('e').next().unwrap().replace(['.', '-'], "");
    assert_eq!(digits.len(), 17);
}

#[test]
fn over_cap_lattice_reports_error_and_continues() {
    let (code, out, err) =
        run(&["--nu", "3", "--L", "2", "--suite", "bounds", "--kappa", "0.1,0.2", "--format", "jsonl"]);
    assert_eq!(code, 0, "{err}");
    let recs = read_jsonl(&out).unwrap();
    assert_eq!(recs.len(), 2);
    assert!(recs.iter().all(|r| !r.errors.is_empty() && r.observables.is_none()));
}

#[test]
fn empty_grid_from_config_is_empty_success() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scan.toml");
    std::fs::write(&cfg, "seed = 1\n[grid]\ng = []\n").unwrap();
    let (code, out, _) = run(&["--config", cfg.to_str().unwrap(), "--format", "jsonl"]);
    assert_eq!(code, 0);
    assert!(out.is_empty());
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scan.toml");
    std::fs::write(
        &cfg,
        "suite = \"bounds\"\n[[lattice]]\nnu = 2\nL = 1\n[grid]\nkappa = [0.1, 0.2, 0.3]\nbeta = [2.0]\n[output]\nformat = \"csv\"\n",
    )
    .unwrap();
    let (code, out, _) = run(&["--config", cfg.to_str().unwrap(), "--kappa", "0.4", "--format", "jsonl"]);
    assert_eq!(code, 0);
    let recs = read_jsonl(&out).unwrap();
    assert_eq!(recs.len(), 1);
    assert_eq!(recs[0].params.kappa, 0.4);
    assert_eq!(recs[0].params.beta, 2.0);
}

#[test]
fn bad_input_exits_with_usage_error() {
    assert_eq!(run(&["--suite", "everything"]).0, 2);
    assert_eq!(run(&["--tolerance", "-1"]).0, 2);
    assert_eq!(run(&["--nu", "1"]).0, 2);
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "unknown_key = 3\n").unwrap();
    assert_eq!(run(&["--config", cfg.to_str().unwrap()]).0, 2);
}

#[test]
fn jsonl_round_trip_in_process() {
    let mut config = ScanConfig::default();
    config.grid.kappa = vec![0.0, 0.6];
    config.grid.mass = vec![0.0, 0.2];
    let outcome = run_scan(&config).unwrap();
    assert!(outcome.passed);
    let mut buf = Vec::new();
    emit(&outcome.records, Format::Jsonl, &mut buf).unwrap();
    let back = read_jsonl(std::str::from_utf8(&buf).unwrap()).unwrap();
    assert_eq!(back.len(), outcome.records.len());
    for (a, b) in back.iter().zip(&outcome.records) {
        let mut b = b.clone();
        b.wall_time_s = 0.0;
        assert_eq!(a, &b);
    }
}
