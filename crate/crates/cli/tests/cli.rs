use std::path::Path;
use std::process::{Command, Output};

use edgewatt::model::Phase;
use edgewatt::report::{read_results_csv, RowSource};

fn edgewatt(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_edgewatt"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn rows(path: &Path) -> Vec<edgewatt::report::ReportRow> {
    read_results_csv(std::fs::File::open(path).unwrap()).unwrap()
}

#[test]
fn full_matrix_and_restriction() {
    let d = tempfile::tempdir().unwrap();
    assert!(edgewatt(&["run", "--seed", "1", "--out", "all"], d.path()).status.success());
    assert_eq!(rows(&d.path().join("all/results.csv")).len(), 144);
    assert!(d.path().join("all/report.txt").exists());
    assert!(d.path().join("all/plots/rpi-energy.csv").exists());

    let out = edgewatt(
        &["run", "--seed", "1", "--out", "few", "--scenarios", "1,2,3,4,5", "--platforms", "hadoop", "--workloads", "kmeans"],
        d.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = rows(&d.path().join("few/results.csv"));
    assert_eq!(r.len(), 5);
    assert!(r[1..].iter().all(|x| x.savings_vs_baseline.is_some()));
}

#[test]
fn catalog_round_trips_through_run() {
    let d = tempfile::tempdir().unwrap();
    assert!(edgewatt(&["catalog", "--default", "--out", "plan.toml"], d.path()).status.success());
    assert!(edgewatt(&["run", "--plan", "plan.toml", "--seed", "3", "--out", "a"], d.path()).status.success());
    assert!(edgewatt(&["run", "--seed", "3", "--out", "b"], d.path()).status.success());
    assert_eq!(
        std::fs::read(d.path().join("a/results.csv")).unwrap(),
        std::fs::read(d.path().join("b/results.csv")).unwrap()
    );
}

#[test]
fn invalid_plan_lists_issues() {
    let d = tempfile::tempdir().unwrap();
    assert!(edgewatt(&["catalog", "--default", "--out", "plan.toml"], d.path()).status.success());
    let text = std::fs::read_to_string(d.path().join("plan.toml")).unwrap();
    let bad = text.replacen("bandwidth = 2.7", "bandwidth = 0.0", 1);
    assert_ne!(bad, text);
    std::fs::write(d.path().join("bad.toml"), bad).unwrap();
    let out = edgewatt(&["run", "--plan", "bad.toml", "--out", "x"], d.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("bandwidth must be positive"));
}

#[test]
fn plotdata_shapes_and_unknown_figure() {
    let d = tempfile::tempdir().unwrap();
    assert!(edgewatt(&["run", "--out", "r"], d.path()).status.success());
    let out = edgewatt(&["plotdata", "--results", "r/results.csv", "--figure", "rpi-energy"], d.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 1 + 4 * 5 * 3);

    let out = edgewatt(&["plotdata", "--results", "r/results.csv", "--figure", "nope"], d.path());
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("rpi-energy") && err.contains("device-time"), "{err}");
}

#[test]
fn exported_traces_ingest_back() {
    let d = tempfile::tempdir().unwrap();
    let out = edgewatt(&["run", "--seed", "5", "--out", "sim", "--scenarios", "1,2,6,7", "--workloads", "grep", "--export-traces"], d.path());
    assert!(out.status.success());
    let out = edgewatt(&["ingest", "--traces", "sim/traces", "--out", "meas"], d.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let sim = rows(&d.path().join("sim/results.csv"));
    let meas = rows(&d.path().join("meas/results.csv"));
    assert_eq!(sim.len(), meas.len());
    for (s, m) in sim.iter().zip(&meas) {
        assert_eq!(m.source, RowSource::Measured);
        assert_eq!((s.scenario, s.platform, s.workload), (m.scenario, m.platform, m.workload));
        for p in Phase::ALL {
            let (a, b) = (s.phase_energy(p), m.phase_energy(p));
            assert!((a - b).abs() <= 0.01 * a, "{p}: {a} vs {b}");
        }
        let (a, b) = (s.savings_vs_baseline, m.savings_vs_baseline);
        assert_eq!(a.is_some(), b.is_some());
    }
}

#[test]
fn constant_power_meter_log() {
    let d = tempfile::tempdir().unwrap();
    let t = d.path().join("t");
    std::fs::create_dir(&t).unwrap();
    // 5 V, 1 A for 100 s
    let log: String = (0..=100).map(|s| format!("{s} 5 1\n")).collect();
    std::fs::write(t.join("power_meter.log"), log).unwrap();
    std::fs::write(
        t.join("m.log"),
        "# client=rpi server=rpi platform=spark workload=grep scenario=1\ndata_processing 0 100\n",
    )
    .unwrap();
    let out = edgewatt(&["ingest", "--traces", "t", "--markers", "t/m.log", "--out", "o"], d.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = rows(&d.path().join("o/results.csv"));
    assert_eq!(r.len(), 1);
    assert_eq!(r[0].total_energy, 500.0);
    assert_eq!(r[0].phase_time(Phase::DataProcessing), 100.0);

    std::fs::write(t.join("late.log"), "# client=rpi platform=spark workload=grep\ndata_processing 50 150\n").unwrap();
    let out = edgewatt(&["ingest", "--traces", "t", "--markers", "t/late.log", "--out", "o2"], d.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("outside"));

    let out = edgewatt(&["ingest", "--traces", "t", "--out", "o3"], d.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing marker log"));
}

#[test]
fn calibrate_writes_plan_and_report() {
    let d = tempfile::tempdir().unwrap();
    let inputs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data/reference");
    let out = edgewatt(&["calibrate", "--inputs", inputs.to_str().unwrap(), "--out", "cal.toml"], d.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = std::fs::read_to_string(d.path().join("cal.toml.calibration.csv")).unwrap();
    assert!(report.starts_with("parameter,value,residual,source\n"));
    assert!(edgewatt(&["run", "--plan", "cal.toml", "--out", "r"], d.path()).status.success());
}
