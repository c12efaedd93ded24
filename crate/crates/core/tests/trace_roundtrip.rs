use edgewatt::model::{default_catalog, PlatformName, WorkloadName};
use edgewatt::probes::{export_traces, read_trace_dir, segment_phases, PhaseMarkerLog, MARKER_FILE, RAPL_FILE};
use edgewatt::sim::run_scenario;

fn round_trip(scenario: u32, platform: PlatformName, workload: WorkloadName, seed: u64) {
    let cat = default_catalog();
    let s = cat.scenario(scenario).unwrap();
    let r = run_scenario(s, platform, workload, &cat, seed).unwrap();
    let dir = tempfile::tempdir().unwrap();
    export_traces(&r, cat.node(&s.client).unwrap(), dir.path()).unwrap();
    let traces = read_trace_dir(dir.path()).unwrap();
    let markers = PhaseMarkerLog::load(&dir.path().join(MARKER_FILE)).unwrap();
    let got = segment_phases(&traces, &markers).unwrap();
    let want: Vec<_> = r.phases.iter().filter(|p| p.duration > 0.0).collect();
    assert_eq!(got.len(), want.len());
    for (g, w) in got.iter().zip(want) {
        assert_eq!(g.phase, w.phase);
        let rel = (g.client_energy - w.client_energy).abs() / w.client_energy;
        assert!(rel < 0.01, "scenario {scenario} {}: {} vs {}", w.phase, g.client_energy, w.client_energy);
        assert!((g.mean_client_cpu_util - w.mean_client_cpu_util).abs() < 0.05);
    }
}

#[test]
fn power_meter_client() {
    for (s, w) in [(1, WorkloadName::Grep), (3, WorkloadName::Pagerank), (5, WorkloadName::Kmeans)] {
        round_trip(s, PlatformName::Spark, w, 4);
    }
}

#[test]
fn rapl_clients_including_counter_wrap() {
    for (s, seed) in [(6, 1), (7, 2), (9, 3), (12, 4)] {
        round_trip(s, PlatformName::Hadoop, WorkloadName::Wordcount, seed);
    }
    let cat = default_catalog();
    let s = cat.scenario(6).unwrap();
    let r = run_scenario(s, PlatformName::Hadoop, WorkloadName::Pagerank, &cat, 7).unwrap();
    let dir = tempfile::tempdir().unwrap();
    export_traces(&r, cat.node(&s.client).unwrap(), dir.path()).unwrap();
    let text = std::fs::read_to_string(dir.path().join(RAPL_FILE)).unwrap();
    let counters: Vec<u64> = text
        .lines()
        .filter_map(|l| l.split_whitespace().nth(1)?.parse().ok())
        .collect();
    assert!(counters.windows(2).any(|w| w[1] < w[0]), "export should wrap the counter");
}

#[test]
fn unmetered_trace_dir_has_no_energy() {
    let cat = default_catalog();
    let s = cat.scenario(1).unwrap();
    let r = run_scenario(s, PlatformName::Flink, WorkloadName::Grep, &cat, 0).unwrap();
    let dir = tempfile::tempdir().unwrap();
    export_traces(&r, cat.node(&s.client).unwrap(), dir.path()).unwrap();
    std::fs::remove_file(dir.path().join(edgewatt::probes::POWER_METER_FILE)).unwrap();
    let traces = read_trace_dir(dir.path()).unwrap();
    let markers = PhaseMarkerLog::load(&dir.path().join(MARKER_FILE)).unwrap();
    assert!(segment_phases(&traces, &markers).is_err());
}
