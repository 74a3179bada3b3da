use std::path::Path;
use std::process::Command;

use lfpp_cli::fixture::{Case, Fixture};
use lfpp_cli::{main_with, parse, QueryReport, Verb, EXIT_FAIL, EXIT_PASS, EXIT_USAGE};
use lfpp_core::store::read_report;
use lfpp_core::GridSpec;
use lfpp_oracle::Lattice;

fn args(dir: &Path, rest: &[&str]) -> Vec<String> {
    let mut v: Vec<String> = rest.iter().map(|s| s.to_string()).collect();
    v.push("--out".into());
    v.push(dir.display().to_string());
    v
}

fn csv_column(path: &Path, header: &str) -> Vec<f64> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let idx = r
        .headers()
        .unwrap()
        .iter()
        .position(|h| h == header)
        .unwrap_or_else(|| panic!("no column {header}"));
    r.records().map(|row| row.unwrap()[idx].parse().unwrap()).collect()
}

#[test]
fn parses_the_documented_examples() {
    let cli = parse(["estimate", "--xi", "0.4", "--eps", "0.03125", "--replicas", "64"]).unwrap();
    match cli.verb {
        Verb::Estimate { run, .. } => {
            assert_eq!(run.xi, Some(0.4));
            assert_eq!(run.eps, Some(0.03125));
            assert_eq!(run.replicas, Some(64));
        }
        other => panic!("parsed as {other:?}"),
    }
    let err = parse(["distance", "--gamma", "1.0", "--xi", "0.4"]).unwrap_err();
    assert_eq!(err.kind(), clap::error::ErrorKind::ArgumentConflict);
    assert!(parse(Vec::<String>::new()).is_err());
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(main_with(Vec::<String>::new()), EXIT_USAGE);
    assert_eq!(main_with(["distance", "--gamma", "1.0", "--xi", "0.4"]), EXIT_USAGE);
    assert_eq!(main_with(["teleport"]), EXIT_USAGE);
    assert_eq!(main_with(["distance", "--frobnicate"]), EXIT_USAGE);
    // rejected by config validation before any field is sampled
    assert_eq!(main_with(["distance", "--n", "100"]), EXIT_USAGE);
    assert_eq!(main_with(["experiment", "--experiment", "nope"]), EXIT_USAGE);
    let dir = tempfile::tempdir().unwrap();
    let unknown = args(
        dir.path(),
        &[
            "experiment",
            "--experiment",
            "weyl_check",
            "--xi",
            "1",
            "--param",
            "c=1",
            "--param",
            "colour=2",
        ],
    );
    assert_eq!(main_with(unknown), EXIT_USAGE);
}

#[test]
fn binary_prints_usage_and_tagged_errors() {
    let exe = env!("CARGO_BIN_EXE_lfpp");
    let out = Command::new(exe).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));

    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(exe)
        .args(args(
            dir.path(),
            &[
                "across",
                "--n",
                "64",
                "--half-width",
                "1.5",
                "--r1",
                "0.5",
                "--r2",
                "0.52",
                "--xi",
                "1",
            ],
        ))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[geometry]"));
}

#[test]
fn weyl_check_factor_column() {
    let dir = tempfile::tempdir().unwrap();
    let code = main_with(args(
        dir.path(),
        &[
            "experiment",
            "--experiment",
            "weyl_check",
            "--xi",
            "1",
            "--param",
            "c=0.7",
            "--param",
            "queries=8",
            "--n",
            "128",
            "--half-width",
            "1.5",
            "--replicas",
            "4",
            "--seed",
            "3",
        ],
    ));
    assert_eq!(code, EXIT_PASS);
    let factors = csv_column(&dir.path().join("weyl_check.csv"), "factor (1)");
    assert_eq!(factors.len(), 8);
    for f in factors {
        assert!((f - 0.7f64.exp()).abs() <= 1e-12 * f, "{f}");
        assert_eq!(format!("{f:.6}"), "2.013753");
    }
    let report = read_report(dir.path().join("weyl_check.report.json")).unwrap();
    assert_eq!(report.verdicts["constant_shift_exact"].outcome.to_string(), "pass");
    assert_eq!(
        main_with(["report", dir.path().join("weyl_check.report.json").to_str().unwrap()]),
        EXIT_PASS
    );
}

#[test]
fn exponent_scan_recovers_an_injected_exponent() {
    let dir = tempfile::tempdir().unwrap();
    let code = main_with(args(
        dir.path(),
        &[
            "experiment",
            "--experiment",
            "exponent_scan",
            "--source",
            "eps-scaling:0.5",
            "--xi",
            "0.5",
            "--param",
            "eps_ladder=2^-3..2^-5",
            "--n",
            "256",
            "--half-width",
            "1.5",
            "--replicas",
            "16",
        ],
    ));
    assert_eq!(code, EXIT_PASS);
    let report = read_report(dir.path().join("exponent_scan.report.json")).unwrap();
    assert!(report.synthetic);
    assert!(report.verdicts.keys().any(|k| k.starts_with("injection_recovered")));
}

/// An 8 x 8 lattice (64 vertices) with distances from the brute-force oracle.
fn oracle_fixture() -> Fixture {
    let n = 8;
    let mut state = 0x2545_f491_4f6c_dd1du64;
    let mut next = || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    let heights: Vec<f64> = (0..n * n).map(|_| 2.0 * next() - 1.0).collect();
    let mut fx = Fixture {
        n,
        half_width: 1.0,
        pad_factor: 2,
        xi: 1.5,
        eps: 0.5,
        heights,
        cases: Vec::new(),
    };
    let spec = GridSpec::new(n, 1.0, 2).unwrap();
    let grid = fx.weighted_grid().unwrap();
    let lattice = Lattice::new(n, spec.delta(), grid.weights().to_vec(), vec![true; n * n]);
    for k in 0..12usize {
        let a = (k * 37 + 5) % (n * n);
        let b = (k * 11 + 50) % (n * n);
        if a == b {
            continue;
        }
        let (pa, pb) = (spec.point(spec.node(a)), spec.point(spec.node(b)));
        let expected = lattice.shortest_path(&[a.min(b)], &[a.max(b)]).unwrap().length;
        fx.cases.push(Case::Distance {
            from: [pa.x, pa.y],
            to: [pb.x, pb.y],
            expected,
        });
    }
    fx
}

fn write_fixture(fx: &Fixture, path: &Path) {
    std::fs::write(path, serde_json::to_string(fx).unwrap()).unwrap();
}

#[test]
fn oracle_fixture_passes_and_a_broken_one_fails_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let good = oracle_fixture();
    let path = dir.path().join("good.json");
    write_fixture(&good, &path);
    assert_eq!(
        main_with(args(dir.path(), &["distance", "--fixture", path.to_str().unwrap()])),
        EXIT_PASS
    );

    let mut broken = good.clone();
    if let Some(Case::Distance { expected, .. }) = broken.cases.get_mut(3) {
        *expected *= 1.0 + 1e-9;
    }
    let path = dir.path().join("broken.json");
    write_fixture(&broken, &path);
    assert_eq!(
        main_with(args(dir.path(), &["distance", "--fixture", path.to_str().unwrap()])),
        EXIT_FAIL
    );
    let text = std::fs::read_to_string(dir.path().join("distance-fixture.report.json")).unwrap();
    let report: QueryReport = serde_json::from_str(&text).unwrap();
    let v = &report.verdicts["oracle_equivalence"];
    assert_eq!(v.outcome.to_string(), "fail");
    assert!(v.detail.contains("case 3"), "{}", v.detail);
    assert_eq!(
        main_with([
            "report",
            dir.path().join("distance-fixture.report.json").to_str().unwrap()
        ]),
        EXIT_FAIL
    );

    // a fixture without cases for the verb is a usage error
    assert_eq!(
        main_with(args(dir.path(), &["around", "--fixture", path.to_str().unwrap()])),
        EXIT_USAGE
    );
}

#[test]
fn query_outputs_are_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let run = [
        "distance",
        "--n",
        "64",
        "--half-width",
        "1.5",
        "--replicas",
        "3",
        "--seed",
        "9",
        "--xi",
        "0.5",
    ];
    assert_eq!(main_with(args(a.path(), &run)), EXIT_PASS);
    assert_eq!(main_with(args(b.path(), &run)), EXIT_PASS);
    for f in ["distance.csv", "distance.report.json"] {
        let (x, y) = (
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
        );
        assert_eq!(x, y, "{f}");
    }
    let header = std::fs::read_to_string(a.path().join("distance.csv")).unwrap();
    assert!(header.starts_with("replica,seed,value (lfpp),relaxations (count)\n"));
    assert_eq!(header.lines().count(), 4);
}

#[test]
fn gamma_routes_through_the_enclosure_midpoint() {
    let dir = tempfile::tempdir().unwrap();
    let run = [
        "across",
        "--n",
        "64",
        "--half-width",
        "1.5",
        "--replicas",
        "1",
        "--gamma",
        "1.0",
        "--source",
        "zero",
    ];
    assert_eq!(main_with(args(dir.path(), &run)), EXIT_PASS);
    let text = std::fs::read_to_string(dir.path().join("across.report.json")).unwrap();
    let report: QueryReport = serde_json::from_str(&text).unwrap();
    let (lo, hi) = lfpp_core::estimate::xi_bounds_of_gamma(1.0).unwrap();
    assert_eq!(report.xi, Some(0.5 * (lo + hi)));
}

#[test]
fn estimate_fits_a_slope_along_the_ladder() {
    let dir = tempfile::tempdir().unwrap();
    let run = [
        "estimate",
        "--source",
        "eps-scaling:1",
        "--xi",
        "0.25",
        "--n",
        "128",
        "--half-width",
        "1.5",
        "--replicas",
        "16",
        "--config",
    ];
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[estimate]\neps_ladder = \"2^-2..2^-4\"\n").unwrap();
    let mut a = args(dir.path(), &run);
    a.insert(run.len(), cfg.display().to_string());
    assert_eq!(main_with(a), EXIT_PASS);
    let report: QueryReport =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("estimate.report.json")).unwrap()).unwrap();
    // eps-scaling:1 multiplies lengths by eps^(-xi)
    assert!((report.summary["slope"] + 0.25).abs() < 1e-9, "{:?}", report.summary);
}
