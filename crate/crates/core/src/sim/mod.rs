//! Executes scenarios as a strictly sequential phase pipeline.

mod oracle;
mod traces;

pub use oracle::{integrate_oracle, Rule, Stepping};
pub use traces::{meter_exact, synthesize_traces, JITTER, METER_VOLTS, PHASE_EDGE};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{
    dfs_copy_time_energy, generation_time_energy, instantaneous_power, processing_time, transmission_time,
    PhaseEstimate,
};
use crate::error::{Error, Result};
use crate::model::{Catalog, NodeSpec, Phase, PhasePlan, PlatformName, Scenario, WorkloadName};
use crate::series::TraceSet;

/// Piece of the client's piecewise-constant power signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerStep {
    pub phase: Phase,
    pub start: f64,
    pub end: f64,
    pub watts: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub scenario: Scenario,
    pub platform: PlatformName,
    pub workload: WorkloadName,
    pub phases: Vec<PhaseEstimate>,
    pub total_time: f64,
    pub total_client_energy: f64,
    /// Noise-free client power, one step per phase.
    pub power_profile: Vec<PowerStep>,
    pub traces: TraceSet,
    pub seed: u64,
}

impl ScenarioResult {
    pub fn phase(&self, phase: Phase) -> Option<&PhaseEstimate> {
        self.phases.iter().find(|p| p.phase == phase)
    }

    /// Start time of every phase, in pipeline order.
    pub fn phase_spans(&self) -> Vec<(Phase, f64, f64)> {
        let mut t = 0.0;
        self.phases
            .iter()
            .map(|p| {
                let start = t;
                t += p.duration;
                (p.phase, start, t)
            })
            .collect()
    }
}

/// Per-phase estimates without traces.
pub(crate) fn estimate_phases(
    scenario: &Scenario,
    platform: PlatformName,
    workload: WorkloadName,
    catalog: &Catalog,
) -> Result<(Vec<PhaseEstimate>, Vec<PowerStep>)> {
    let client = catalog
        .node(&scenario.client)
        .ok_or_else(|| Error::unknown("node", &scenario.client))?;
    let server = catalog
        .node(&scenario.server)
        .ok_or_else(|| Error::unknown("node", &scenario.server))?;
    let profile = catalog
        .platform(platform)
        .ok_or_else(|| Error::unknown("platform", platform.as_str()))?;
    let spec = catalog
        .workload(workload)
        .ok_or_else(|| Error::unknown("workload", workload.as_str()))?;
    let model = catalog.model();
    let f = profile.init_energy_fraction;
    let share = f / (1.0 - f);

    let generation = generation_time_energy(client, spec, model)?;
    let copy = dfs_copy_time_energy(server, spec.data_size, profile, client, model)?;
    let proc_time = processing_time(profile, spec, server)?;

    let mut by_phase: Vec<PhaseEstimate> = Vec::with_capacity(6);
    if scenario.is_offloading() {
        let link = catalog
            .link(&scenario.client, &scenario.server)
            .ok_or_else(|| Error::unknown("link", format!("{}→{}", scenario.client, scenario.server)))?;
        let wait = profile.cpu_util_idle_wait;
        let init = PhaseEstimate::at_utilization(
            Phase::InitPlatform,
            client,
            share * (copy.duration + proc_time),
            wait,
            0.0,
        )?;
        let tx_time = transmission_time(&link, spec.data_size, model);
        let transmission =
            PhaseEstimate::at_utilization(Phase::DataTransmission, client, tx_time, model.transfer_util, spec.data_size)?;
        let processing = PhaseEstimate::at_utilization(Phase::DataProcessing, client, proc_time, wait, 0.0)?;
        let result_size = spec.data_size * spec.result_fraction;
        let ret_time = transmission_time(&link, result_size, model);
        let result = PhaseEstimate::at_utilization(Phase::ResultReturn, client, ret_time, model.transfer_util, result_size)?;
        by_phase.extend([init, generation, transmission, copy, processing, result]);
    } else {
        let util = profile.cpu_util_processing.get(spec.kind);
        let processing = PhaseEstimate::at_utilization(Phase::DataProcessing, client, proc_time, util, 0.0)?;
        // init takes the configured share of the whole local run's energy
        let others = [&generation, &copy, &processing];
        let rest: f64 = others
            .iter()
            .map(|p| raw_power(client, p.mean_client_cpu_util) * p.duration)
            .sum();
        let init_power = raw_power(client, util);
        let init_time = share * rest / init_power;
        let init = PhaseEstimate::at_utilization(Phase::InitPlatform, client, init_time, util, 0.0)?;
        by_phase.extend([init, generation, copy, processing]);
    }

    let plan = PhasePlan::for_concept(scenario.concept);
    debug_assert_eq!(plan.phases(), by_phase.iter().map(|p| p.phase).collect::<Vec<_>>().as_slice());

    let mut t = 0.0;
    let profile_steps = by_phase
        .iter()
        .map(|p| {
            let start = t;
            t += p.duration;
            let watts = if client.metered {
                raw_power(client, p.mean_client_cpu_util)
            } else {
                0.0
            };
            PowerStep {
                phase: p.phase,
                start,
                end: t,
                watts,
            }
        })
        .collect();
    Ok((by_phase, profile_steps))
}

fn raw_power(node: &NodeSpec, util: f64) -> f64 {
    // utilizations come from a validated catalog
    instantaneous_power(node, util).unwrap_or(node.p_idle)
}

/// Run one scenario cell. Deterministic in its inputs and `seed`.
pub fn run_scenario(
    scenario: &Scenario,
    platform: PlatformName,
    workload: WorkloadName,
    catalog: &Catalog,
    seed: u64,
) -> Result<ScenarioResult> {
    let (phases, power_profile) = estimate_phases(scenario, platform, workload, catalog)?;
    let total_time = phases.iter().map(|p| p.duration).sum();
    let total_client_energy = phases.iter().map(|p| p.client_energy).sum();
    let mut result = ScenarioResult {
        scenario: scenario.clone(),
        platform,
        workload,
        phases,
        total_time,
        total_client_energy,
        power_profile,
        traces: TraceSet::default(),
        seed,
    };
    result.traces = synthesize_traces(&result, catalog, seed)?;
    Ok(result)
}

/// One cell of a matrix run. Failures stay inside the cell.
#[derive(Debug)]
pub struct MatrixCell {
    pub scenario: u32,
    pub platform: PlatformName,
    pub workload: WorkloadName,
    pub outcome: std::result::Result<ScenarioResult, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatrixOptions {
    /// Synthesize sampled traces for every cell.
    pub traces: bool,
}

impl Default for MatrixOptions {
    fn default() -> Self {
        MatrixOptions { traces: true }
    }
}

/// Seed of one cell, independent of evaluation order.
pub fn cell_seed(seed: u64, scenario: u32, platform: PlatformName, workload: WorkloadName) -> u64 {
    let mut z = seed
        ^ (u64::from(scenario) << 32)
        ^ ((platform as u64) << 16)
        ^ (workload as u64)
        ^ 0x9E37_79B9_7F4A_7C15;
    // splitmix64 finalizer
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Cartesian product scenarios × platforms × workloads, ordered by
/// (scenario, platform, workload) in catalog order.
pub fn run_matrix(catalog: &Catalog, seed: u64, options: MatrixOptions) -> Vec<MatrixCell> {
    let cells: Vec<(&Scenario, PlatformName, WorkloadName)> = catalog
        .scenarios()
        .iter()
        .flat_map(|s| {
            catalog
                .platforms()
                .iter()
                .flat_map(move |p| catalog.workloads().iter().map(move |w| (s, p.name, w.name)))
        })
        .collect();
    cells
        .into_par_iter()
        .map(|(s, p, w)| {
            let cell = cell_seed(seed, s.id, p, w);
            let outcome = if options.traces {
                run_scenario(s, p, w, catalog, cell)
            } else {
                run_without_traces(s, p, w, catalog, cell)
            };
            MatrixCell {
                scenario: s.id,
                platform: p,
                workload: w,
                outcome: outcome.map_err(|e| e.to_string()),
            }
        })
        .collect()
}

fn run_without_traces(
    scenario: &Scenario,
    platform: PlatformName,
    workload: WorkloadName,
    catalog: &Catalog,
    seed: u64,
) -> Result<ScenarioResult> {
    let (phases, power_profile) = estimate_phases(scenario, platform, workload, catalog)?;
    Ok(ScenarioResult {
        scenario: scenario.clone(),
        platform,
        workload,
        total_time: phases.iter().map(|p| p.duration).sum(),
        total_client_energy: phases.iter().map(|p| p.client_energy).sum(),
        phases,
        power_profile,
        traces: TraceSet::default(),
        seed,
    })
}
