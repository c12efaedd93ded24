use edgewatt::model::{default_plan, validate_plan, ExperimentPlan, PlatformName, WorkloadName};
use edgewatt::sim::{integrate_oracle, run_scenario, Rule, Stepping};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn perturbed_plan(seed: u64) -> ExperimentPlan {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = |lo: f64, hi: f64| rng.gen_range(lo..hi);
    let mut plan = default_plan();
    for u in [
        &mut plan.model.generation_util,
        &mut plan.model.transfer_util,
        &mut plan.model.copy_util,
    ] {
        *u = f(0.0, 1.0);
    }
    for n in plan.nodes.iter_mut() {
        n.p_idle *= f(0.5, 2.0);
        n.p_busy = n.p_idle * f(1.0, 5.0);
        n.core_speed *= f(0.5, 2.0);
        n.disk_write_rate *= f(0.5, 2.0);
        n.generation_rate = n.generation_rate.map(|g| g * f(0.5, 2.0));
    }
    for l in plan.links.iter_mut() {
        l.bandwidth *= f(0.5, 2.0);
        l.distance *= f(0.0, 2.0);
        l.handshake_latency = f(0.0, 0.5);
    }
    for p in plan.platforms.iter_mut() {
        p.cpu_util_processing.batch = f(0.05, 0.95);
        p.cpu_util_processing.iterative = f(0.05, 0.95);
        p.cpu_util_idle_wait = f(0.0, 0.1);
        p.init_energy_fraction = f(0.0, 0.1);
        p.ingest_rate *= f(0.5, 2.0);
        for c in p.work_coeff.values_mut() {
            *c *= f(0.5, 2.0);
        }
    }
    for w in plan.workloads.iter_mut() {
        w.data_size = f(64.0, 6000.0);
        w.io_stall *= f(0.0, 2.0);
        w.result_fraction = f(0.0, 0.2);
        w.generation_cost *= f(0.5, 2.0);
    }
    plan
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn stepped_integration_matches_phase_sum(seed in any::<u64>(), s in 0usize..12, p in 0usize..3, w in 0usize..4) {
        let cat = validate_plan(perturbed_plan(seed)).unwrap();
        let scenario = &cat.scenarios()[s];
        let r = run_scenario(scenario, PlatformName::ALL[p], WorkloadName::ALL[w], &cat, seed).unwrap();
        let e = r.total_client_energy;
        for rule in [Rule::LeftRiemann, Rule::Trapezoid] {
            let aligned = integrate_oracle(&r, 1.0, rule, Stepping::Aligned).unwrap();
            prop_assert!((aligned - e).abs() <= 1e-9 * e);
            let uniform = integrate_oracle(&r, r.total_time / 20_000.0, rule, Stepping::Uniform).unwrap();
            prop_assert!((uniform - e).abs() <= 0.005 * e, "{rule:?}: {uniform} vs {e}");
        }
    }

    #[test]
    fn phase_sums_hold_on_perturbed_plans(seed in any::<u64>()) {
        let cat = validate_plan(perturbed_plan(seed)).unwrap();
        for s in cat.scenarios() {
            let r = run_scenario(s, PlatformName::Flink, WorkloadName::Kmeans, &cat, 1).unwrap();
            let t: f64 = r.phases.iter().map(|p| p.duration).sum();
            let e: f64 = r.phases.iter().map(|p| p.client_energy).sum();
            prop_assert!((t - r.total_time).abs() <= 1e-9 * t);
            prop_assert!((e - r.total_client_energy).abs() <= 1e-9 * e.max(1e-12));
            let client = cat.node(&s.client).unwrap();
            for ph in &r.phases {
                prop_assert!(ph.duration >= 0.0);
                prop_assert!(ph.client_energy >= client.p_idle * ph.duration * (1.0 - 1e-12));
            }
        }
    }
}
