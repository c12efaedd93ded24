//! Closed-form time and energy of each phase under a power model that is
//! linear in CPU utilization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{LinkSpec, NodeSpec, Phase, PhaseModel, PlatformProfile, WorkloadSpec};

/// Time and client energy of one phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseEstimate {
    pub phase: Phase,
    /// s
    pub duration: f64,
    /// J; zero for unmetered clients.
    pub client_energy: f64,
    pub mean_client_cpu_util: f64,
    /// MB
    pub bytes_moved: f64,
}

impl PhaseEstimate {
    pub fn zero(phase: Phase) -> Self {
        PhaseEstimate {
            phase,
            duration: 0.0,
            client_energy: 0.0,
            mean_client_cpu_util: 0.0,
            bytes_moved: 0.0,
        }
    }

    /// Estimate of a phase in which `client` runs at `utilization` for `duration`.
    pub fn at_utilization(
        phase: Phase,
        client: &NodeSpec,
        duration: f64,
        utilization: f64,
        bytes_moved: f64,
    ) -> Result<Self> {
        let client_energy = if client.metered {
            phase_energy(client, duration, utilization)?
        } else {
            0.0
        };
        Ok(PhaseEstimate {
            phase,
            duration,
            client_energy,
            mean_client_cpu_util: utilization,
            bytes_moved,
        })
    }
}

/// Power drawn by `node` at the given utilization: `p_idle + u·(p_busy − p_idle)`.
pub fn instantaneous_power(node: &NodeSpec, utilization: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&utilization) {
        return Err(Error::Utilization(utilization));
    }
    Ok(node.p_idle + utilization * (node.p_busy - node.p_idle))
}

pub fn phase_energy(node: &NodeSpec, duration: f64, utilization: f64) -> Result<f64> {
    if duration < 0.0 || duration.is_nan() {
        return Err(Error::NegativeDuration(duration));
    }
    Ok(instantaneous_power(node, utilization)? * duration)
}

/// Seconds to move `size` MB over `link`. Each `chunk_size` chunk pays the
/// link's handshake latency plus one round trip at signal speed.
pub fn transmission_time(link: &LinkSpec, size: f64, model: &PhaseModel) -> f64 {
    if link.is_local() || size <= 0.0 {
        return 0.0;
    }
    let chunks = (size / model.chunk_size).ceil();
    let round_trip = 2.0 * link.distance / model.signal_speed;
    size / link.bandwidth + chunks * (link.handshake_latency + round_trip)
}

pub fn transmission_energy(client: &NodeSpec, link: &LinkSpec, size: f64, model: &PhaseModel) -> f64 {
    if !client.metered {
        return 0.0;
    }
    let t = transmission_time(link, size, model);
    // transfer_util is validated into [0, 1] and t is never negative
    phase_energy(client, t, model.transfer_util).unwrap_or(0.0)
}

/// Seconds spent stalled on intermediate-data writes on `server`.
pub fn disk_penalty(platform: &PlatformProfile, workload: &WorkloadSpec, server: &NodeSpec) -> f64 {
    let intermediate = platform.disk_write_rate_active * workload.io_stall;
    intermediate / platform.disk_write_rate_active.min(server.disk_write_rate)
}

pub fn processing_time(platform: &PlatformProfile, workload: &WorkloadSpec, server: &NodeSpec) -> Result<f64> {
    let coeff = platform
        .work_coeff
        .get(&workload.name)
        .ok_or_else(|| Error::unknown("workload", format!("{} for {}", workload.name, platform.name)))?;
    let compute = f64::from(workload.iterations) * coeff / server.capacity();
    Ok(compute + disk_penalty(platform, workload, server))
}

/// Energy a client burns while idling on a remote server for `wait` seconds.
pub fn processing_wait_energy(client: &NodeSpec, wait: f64, platform: &PlatformProfile) -> Result<f64> {
    phase_energy(client, wait, platform.cpu_util_idle_wait)
}

/// Generation depends only on the client and the workload, never on the server.
pub fn generation_time_energy(client: &NodeSpec, workload: &WorkloadSpec, model: &PhaseModel) -> Result<PhaseEstimate> {
    let duration = workload.data_size * workload.generation_cost / client.generation_rate();
    PhaseEstimate::at_utilization(
        Phase::DataGeneration,
        client,
        duration,
        model.generation_util,
        workload.data_size,
    )
}

/// Loading `size` MB into the distributed file system on `server`. A remote
/// client idles at the platform's wait utilization meanwhile; a local client
/// does the copy itself.
pub fn dfs_copy_time_energy(
    server: &NodeSpec,
    size: f64,
    platform: &PlatformProfile,
    client: &NodeSpec,
    model: &PhaseModel,
) -> Result<PhaseEstimate> {
    if size < 0.0 {
        return Err(Error::NegativeDuration(size));
    }
    let duration = size / server.disk_write_rate.min(platform.ingest_rate);
    let util = if client.id == server.id {
        model.copy_util
    } else {
        platform.cpu_util_idle_wait
    };
    PhaseEstimate::at_utilization(Phase::CopyToDfs, client, duration, util, size)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{default_catalog, Tier, WorkloadName};
    use proptest::prelude::*;

    fn node(p_idle: f64, p_busy: f64) -> NodeSpec {
        NodeSpec {
            id: "n".into(),
            tier: Tier::Rpi,
            cores: 4,
            ram: 8.0,
            disk: 128.0,
            disk_read_rate: 40.0,
            disk_write_rate: 20.0,
            p_idle,
            p_busy,
            metered: true,
            cluster_size: 1,
            core_speed: 1.0,
            generation_rate: Some(16.0),
        }
    }

    fn link(bandwidth: f64, distance: f64, handshake_latency: f64) -> LinkSpec {
        LinkSpec {
            client: "a".into(),
            server: "b".into(),
            bandwidth,
            distance,
            handshake_latency,
            estimated: false,
        }
    }

    #[test]
    fn power_endpoints_and_midpoint() {
        let n = node(2.0, 6.0);
        assert_eq!(instantaneous_power(&n, 0.0).unwrap(), 2.0);
        assert_eq!(instantaneous_power(&n, 1.0).unwrap(), 6.0);
        assert_eq!(instantaneous_power(&n, 0.5).unwrap(), 4.0);
        assert!(matches!(instantaneous_power(&n, 1.2), Err(Error::Utilization(_))));
        assert!(instantaneous_power(&n, -0.1).is_err());
    }

    #[test]
    fn phase_energy_examples() {
        let n = node(2.0, 6.0);
        assert_eq!(phase_energy(&n, 10.0, 0.0).unwrap(), 20.0);
        assert_eq!(phase_energy(&n, 0.0, 0.7).unwrap(), 0.0);
        // 2 + 0.342 * 4 = 3.368 W for 100 s
        assert!((phase_energy(&n, 100.0, 0.342).unwrap() - 336.8).abs() < 1e-9);
        assert!(matches!(phase_energy(&n, -1.0, 0.1), Err(Error::NegativeDuration(_))));
    }

    #[test]
    fn transmission_time_examples() {
        let m = PhaseModel::default();
        let t = transmission_time(&link(2.7, 0.0, 0.0), 3072.0, &m);
        assert!((t - 1137.78).abs() < 0.005, "{t}");
        let t = transmission_time(&link(4.1, 0.0, 0.0), 3072.0, &m);
        assert!((t - 749.27).abs() < 0.005, "{t}");
        assert_eq!(transmission_time(&LinkSpec::local("a"), 3072.0, &m), 0.0);
        // 48 chunks, each paying 0.5 s handshake and a 1 ms round trip
        let t = transmission_time(&link(4.0, 100_000.0, 0.5), 3072.0, &m);
        assert!((t - (768.0 + 48.0 * 0.501)).abs() < 1e-9);
    }

    #[test]
    fn unmetered_client_spends_nothing() {
        let mut n = node(2.0, 6.0);
        n.metered = false;
        assert_eq!(transmission_energy(&n, &link(4.1, 0.0, 0.0), 3072.0, &PhaseModel::default()), 0.0);
        let est = PhaseEstimate::at_utilization(Phase::DataProcessing, &n, 10.0, 0.5, 0.0).unwrap();
        assert_eq!(est.client_energy, 0.0);
    }

    #[test]
    fn processing_time_on_edge_node_matches_reference_table() {
        let cat = default_catalog();
        let edge = cat.node("edge_node").unwrap();
        let cases = [
            (crate::model::PlatformName::Hadoop, WorkloadName::Pagerank, 600.0),
            (crate::model::PlatformName::Flink, WorkloadName::Kmeans, 62.0),
            (crate::model::PlatformName::Spark, WorkloadName::Grep, 40.0),
        ];
        for (p, w, expected) in cases {
            let t = processing_time(cat.platform(p).unwrap(), cat.workload(w).unwrap(), edge).unwrap();
            assert!((t - expected).abs() < 1e-9, "{p} {w}: {t}");
        }
    }

    #[test]
    fn processing_time_unknown_workload() {
        let cat = default_catalog();
        let mut hadoop = cat.platform(crate::model::PlatformName::Hadoop).unwrap().clone();
        hadoop.work_coeff.remove(&WorkloadName::Grep);
        let grep = cat.workload(WorkloadName::Grep).unwrap();
        assert!(processing_time(&hadoop, grep, cat.node("edge_node").unwrap()).is_err());
    }

    #[test]
    fn wait_energy() {
        let cat = default_catalog();
        let hadoop = cat.platform(crate::model::PlatformName::Hadoop).unwrap();
        let rpi = cat.node("rpi").unwrap();
        assert_eq!(
            processing_wait_energy(rpi, 100.0, hadoop).unwrap(),
            phase_energy(rpi, 100.0, hadoop.cpu_util_idle_wait).unwrap()
        );
        assert_eq!(processing_wait_energy(rpi, 0.0, hadoop).unwrap(), 0.0);
        let en = processing_wait_energy(cat.node("edge_node").unwrap(), 100.0, hadoop).unwrap();
        let es = processing_wait_energy(cat.node("edge_server").unwrap(), 100.0, hadoop).unwrap();
        assert!(es > en);
    }

    #[test]
    fn generation_is_server_independent_and_scales_with_size() {
        let cat = default_catalog();
        let rpi = cat.node("rpi").unwrap();
        let mut w = cat.workload(WorkloadName::Grep).unwrap().clone();
        let a = generation_time_energy(rpi, &w, cat.model()).unwrap();
        assert!(a.duration > 0.0 && a.client_energy > 0.0);
        w.data_size = 0.0;
        let z = generation_time_energy(rpi, &w, cat.model()).unwrap();
        assert_eq!((z.duration, z.client_energy), (0.0, 0.0));
    }

    #[test]
    fn dfs_copy_zero_and_local() {
        let cat = default_catalog();
        let es = cat.node("edge_server").unwrap();
        let pc = cat.node("private_cloud").unwrap();
        let spark = cat.platform(crate::model::PlatformName::Spark).unwrap();
        let z = dfs_copy_time_energy(pc, 0.0, spark, es, cat.model()).unwrap();
        assert_eq!((z.duration, z.client_energy), (0.0, 0.0));
        let remote = dfs_copy_time_energy(pc, 3072.0, spark, es, cat.model()).unwrap();
        assert_eq!(remote.mean_client_cpu_util, spark.cpu_util_idle_wait);
        let local = dfs_copy_time_energy(es, 3072.0, spark, es, cat.model()).unwrap();
        assert_eq!(local.mean_client_cpu_util, cat.model().copy_util);
    }

    proptest! {
        #[test]
        fn power_is_monotone(p_idle in 0.01f64..100.0, span in 0.0f64..400.0, a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            let n = node(p_idle, p_idle + span);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(instantaneous_power(&n, lo).unwrap() <= instantaneous_power(&n, hi).unwrap());
        }

        #[test]
        fn energy_lower_bound(p_idle in 0.01f64..100.0, span in 0.0f64..400.0, t in 0.0f64..1e5, u in 0.0f64..=1.0) {
            let n = node(p_idle, p_idle + span);
            prop_assert!(phase_energy(&n, t, u).unwrap() >= p_idle * t * (1.0 - 1e-12));
        }

        #[test]
        fn bandwidth_and_distance_monotone(
            bw in 0.1f64..100.0, extra in 0.0f64..50.0,
            d in 0.0f64..2e6, dd in 0.0f64..2e6,
            lat in 0.0f64..2.0, size in 0.0f64..10_000.0,
        ) {
            let m = PhaseModel::default();
            let n = node(2.0, 6.0);
            let slow = link(bw, d, lat);
            let fast = link(bw + extra, d, lat);
            prop_assert!(transmission_time(&fast, size, &m) <= transmission_time(&slow, size, &m));
            prop_assert!(transmission_energy(&n, &fast, size, &m) <= transmission_energy(&n, &slow, size, &m));
            let far = link(bw, d + dd, lat);
            prop_assert!(transmission_time(&far, size, &m) >= transmission_time(&slow, size, &m));
        }
    }
}
