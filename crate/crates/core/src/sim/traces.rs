//! 1 Hz synthetic probe traces whose per-phase means equal the model values.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::energy::instantaneous_power;
use crate::error::{Error, Result};
use crate::model::{Catalog, NodeSpec, Phase};
use crate::series::{MeasurementSeries, Metric, Source, TraceSet};

use super::ScenarioResult;

/// Offset of the closing sample of a phase from its end, so that the next
/// phase can start exactly on the boundary.
pub const PHASE_EDGE: f64 = 1e-6;

/// Relative half-width of the uniform jitter.
pub const JITTER: f64 = 0.10;

/// Supply voltage of the USB power meter used for exported traces.
pub const METER_VOLTS: f64 = 5.0;

/// Snap `p` to a value that survives being written as `p / 5 V` amps and
/// multiplied back.
pub fn meter_exact(p: f64) -> f64 {
    let mut q = p;
    for _ in 0..8 {
        let next = METER_VOLTS * (q / METER_VOLTS);
        if next == q {
            return q;
        }
        q = next;
    }
    q
}

/// Per-phase mean of every synthesized metric.
#[derive(Debug, Clone, Copy)]
struct Levels {
    power: f64,
    cpu: f64,
    mem: f64,
    read: f64,
    write: f64,
}

fn levels(result: &ScenarioResult, catalog: &Catalog, client: &NodeSpec, phase: Phase, util: f64) -> Result<Levels> {
    let profile = catalog
        .platform(result.platform)
        .ok_or_else(|| Error::unknown("platform", result.platform.as_str()))?;
    let est = result.phase(phase).expect("phase present");
    let local = !result.scenario.is_offloading();
    let rate = if est.duration > 0.0 { est.bytes_moved / est.duration } else { 0.0 };
    let (read, write) = match phase {
        Phase::DataGeneration => (0.0, rate),
        Phase::DataTransmission => (rate, 0.0),
        Phase::ResultReturn => (0.0, rate),
        Phase::CopyToDfs if local => (rate, rate),
        Phase::DataProcessing if local => (profile.disk_read_rate_active, profile.disk_write_rate_active),
        _ => (0.0, 0.0),
    };
    let ram_mb = client.ram * 1024.0;
    Ok(Levels {
        power: if client.metered {
            instantaneous_power(client, util)?
        } else {
            0.0
        },
        cpu: 100.0 * util,
        mem: ram_mb * (0.12 + 0.6 * util).min(1.0),
        read,
        write,
    })
}

/// Sample times of a phase `[start, end)` at 1 Hz plus a closing sample.
fn sample_times(start: f64, end: f64, last: bool) -> Vec<f64> {
    let mut ts = Vec::new();
    if end <= start {
        return ts;
    }
    let close = if last { end } else { end - PHASE_EDGE };
    let mut k = 0u64;
    loop {
        let t = start + k as f64;
        if t >= close {
            break;
        }
        ts.push(t);
        k += 1;
    }
    if ts.last().is_none_or(|&t| t < close) {
        ts.push(close);
    }
    ts
}

/// Add mean-preserving jitter: samples with unit spacing on both sides get
/// `+d, −d` in consecutive pairs.
fn jitter(values: &mut [f64], ts: &[f64], level: f64, max: f64, rng: &mut ChaCha8Rng) {
    let n = ts.len();
    if n < 4 || level <= 0.0 {
        return;
    }
    // interior indices whose trapezoid weight is exactly one
    let eligible: Vec<usize> = (1..n - 1)
        .filter(|&i| ts[i] - ts[i - 1] == 1.0 && ts[i + 1] - ts[i] == 1.0)
        .collect();
    for pair in eligible.chunks_exact(2) {
        let headroom = level.min(max - level).max(0.0);
        let d = (rng.gen_range(-JITTER..=JITTER) * level).clamp(-headroom, headroom);
        values[pair[0]] = level + d;
        values[pair[1]] = level - d;
    }
}

/// Synthesize one series per metric for the client of `result`.
pub fn synthesize_traces(result: &ScenarioResult, catalog: &Catalog, seed: u64) -> Result<TraceSet> {
    let client = catalog
        .node(&result.scenario.client)
        .ok_or_else(|| Error::unknown("node", &result.scenario.client))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let metrics = [
        Metric::PowerW,
        Metric::CpuPct,
        Metric::MemMb,
        Metric::DiskReadMbps,
        Metric::DiskWriteMbps,
    ];
    let mut series: Vec<MeasurementSeries> = metrics
        .iter()
        .map(|&m| MeasurementSeries::empty(m, Source::Simulated))
        .collect();

    let spans = result.phase_spans();
    let last_nonempty = spans.iter().rposition(|(_, s, e)| e > s);
    for (i, &(phase, start, end)) in spans.iter().enumerate() {
        let ts = sample_times(start, end, Some(i) == last_nonempty);
        if ts.is_empty() {
            continue;
        }
        let util = result.phase(phase).expect("phase present").mean_client_cpu_util;
        let lv = levels(result, catalog, client, phase, util)?;
        let caps = [
            (lv.power, client.p_busy),
            (lv.cpu, 100.0),
            (lv.mem, client.ram * 1024.0),
            (lv.read, f64::INFINITY),
            (lv.write, f64::INFINITY),
        ];
        for (s, (level, max)) in series.iter_mut().zip(caps) {
            let mut values = vec![level; ts.len()];
            jitter(&mut values, &ts, level, max, &mut rng);
            for (&t, &v) in ts.iter().zip(&values) {
                let v = if s.metric == Metric::PowerW { meter_exact(v) } else { v };
                s.push(t, v)?;
            }
        }
    }
    if !client.metered {
        series.retain(|s| s.metric != Metric::PowerW);
    }
    Ok(series.into_iter().collect())
}
