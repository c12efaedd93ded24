//! Parsers for RAPL counter logs, USB power-meter logs and dstat-style
//! resource CSVs, plus phase segmentation of the resulting series.
//!
//! Line formats:
//!
//! * RAPL: `timestamp_s counter_uj`, with the counter range in a separate
//!   `max_energy_range_uj` file.
//! * Power meter: `timestamp_s volts amps`.
//! * Resource log: `epoch,cpu_usr_pct,cpu_sys_pct,mem_used_mb,disk_read_bps,disk_write_bps`;
//!   lines starting with `"` are headers.
//! * Phase markers: `phase_name start_s end_s`; `#` lines are comments and
//!   `# key=value` pairs on them are read as metadata.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::BufRead;
use std::path::Path;

use crate::energy::PhaseEstimate;
use crate::error::{Error, ParseError, Result};
use crate::model::{NodeSpec, Phase, Tier};
use crate::series::{MeasurementSeries, Metric, Source, TraceSet};
use crate::sim::ScenarioResult;

pub const RAPL_FILE: &str = "rapl.log";
pub const RAPL_RANGE_FILE: &str = "max_energy_range_uj";
pub const POWER_METER_FILE: &str = "power_meter.log";
pub const RESOURCE_FILE: &str = "dstat.csv";
pub const MARKER_FILE: &str = "markers.log";

/// Range of the common package-domain counter.
pub const DEFAULT_MAX_RANGE_UJ: u64 = 262_143_328_850;

const BYTES_PER_MB: f64 = 1_048_576.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RaplSample {
    /// s
    pub timestamp: f64,
    /// µJ, cumulative modulo `max_range`
    pub counter: u64,
    pub max_range: u64,
}

fn err(source: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Trace(ParseError {
        source_name: source.to_string(),
        line,
        message: message.into(),
    })
}

fn fields<'a>(line: &'a str, n: usize, source: &str, lineno: usize) -> Result<Vec<&'a str>> {
    let f: Vec<&str> = line.split_whitespace().collect();
    if f.len() != n {
        return Err(err(source, lineno, format!("expected {n} fields, found {}", f.len())));
    }
    Ok(f)
}

fn number(s: &str, what: &str, source: &str, lineno: usize) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| err(source, lineno, format!("invalid {what} `{s}`")))?;
    if !v.is_finite() {
        return Err(err(source, lineno, format!("non-finite {what}")));
    }
    Ok(v)
}

/// Lines with their 1-based numbers, blank lines removed.
fn lines<R: BufRead>(reader: R, source: &str) -> Result<Vec<(usize, String)>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| err(source, i + 1, e.to_string()))?;
        if !line.trim().is_empty() {
            out.push((i + 1, line));
        }
    }
    Ok(out)
}

fn push_checked(series: &mut MeasurementSeries, t: f64, v: f64, source: &str, lineno: usize) -> Result<()> {
    if let Some((_, last)) = series.span() {
        if t <= last {
            return Err(err(source, lineno, format!("timestamp {t} does not follow {last}")));
        }
    }
    series.push(t, v).map_err(|e| err(source, lineno, e.to_string()))
}

/// Energy deltas between consecutive counter readings, unwrapping at `max_range`.
pub fn rapl_deltas(counters: &[u64], max_range: u64) -> Vec<u64> {
    counters
        .windows(2)
        .map(|w| {
            if w[1] >= w[0] {
                w[1] - w[0]
            } else {
                max_range - w[0] + w[1]
            }
        })
        .collect()
}

pub fn read_max_range(text: &str, source: &str) -> Result<u64> {
    let v: u64 = text
        .trim()
        .parse()
        .map_err(|_| err(source, 1, format!("invalid max range `{}`", text.trim())))?;
    if v == 0 {
        return Err(err(source, 1, "max range must be positive"));
    }
    Ok(v)
}

/// Cumulative energy in joules from the first reading.
pub fn read_rapl_log<R: BufRead>(reader: R, max_range: u64, source: &str) -> Result<MeasurementSeries> {
    if max_range == 0 {
        return Err(err(source, 0, "max range must be positive"));
    }
    let mut series = MeasurementSeries::empty(Metric::EnergyJ, Source::Rapl);
    let mut prev: Option<u64> = None;
    let mut total: u128 = 0;
    for (lineno, line) in lines(reader, source)? {
        let f = fields(&line, 2, source, lineno)?;
        let t = number(f[0], "timestamp", source, lineno)?;
        let counter: u64 = f[1]
            .parse()
            .map_err(|_| err(source, lineno, format!("invalid counter `{}`", f[1])))?;
        if counter > max_range {
            return Err(err(source, lineno, format!("counter {counter} exceeds max range {max_range}")));
        }
        if let Some(p) = prev {
            total += u128::from(rapl_deltas(&[p, counter], max_range)[0]);
        }
        prev = Some(counter);
        push_checked(&mut series, t, total as f64 / 1e6, source, lineno)?;
    }
    Ok(series)
}

pub fn read_power_meter_log<R: BufRead>(reader: R, source: &str) -> Result<MeasurementSeries> {
    let mut series = MeasurementSeries::empty(Metric::PowerW, Source::PowerMeter);
    for (lineno, line) in lines(reader, source)? {
        let f = fields(&line, 3, source, lineno)?;
        let t = number(f[0], "timestamp", source, lineno)?;
        let v = number(f[1], "voltage", source, lineno)?;
        let i = number(f[2], "current", source, lineno)?;
        if v < 0.0 || i < 0.0 {
            return Err(err(source, lineno, "negative voltage or current"));
        }
        push_checked(&mut series, t, v * i, source, lineno)?;
    }
    Ok(series)
}

pub fn read_resource_log<R: BufRead>(reader: R, source: &str) -> Result<TraceSet> {
    let mut cpu = MeasurementSeries::empty(Metric::CpuPct, Source::ResourceLog);
    let mut mem = MeasurementSeries::empty(Metric::MemMb, Source::ResourceLog);
    let mut read = MeasurementSeries::empty(Metric::DiskReadMbps, Source::ResourceLog);
    let mut write = MeasurementSeries::empty(Metric::DiskWriteMbps, Source::ResourceLog);
    for (lineno, line) in lines(reader, source)? {
        if line.trim_start().starts_with('"') {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(err(source, lineno, format!("expected 6 fields, found {}", f.len())));
        }
        let t = number(f[0], "epoch", source, lineno)?;
        let usr = number(f[1], "cpu usr", source, lineno)?;
        let sys = number(f[2], "cpu sys", source, lineno)?;
        let used = number(f[3], "memory", source, lineno)?;
        let rd = number(f[4], "disk read", source, lineno)?;
        let wr = number(f[5], "disk write", source, lineno)?;
        push_checked(&mut cpu, t, usr + sys, source, lineno)?;
        push_checked(&mut mem, t, used, source, lineno)?;
        push_checked(&mut read, t, rd / BYTES_PER_MB, source, lineno)?;
        push_checked(&mut write, t, wr / BYTES_PER_MB, source, lineno)?;
    }
    Ok([cpu, mem, read, write].into_iter().collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseMarker {
    pub phase: Phase,
    pub start: f64,
    pub end: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PhaseMarkerLog {
    pub markers: Vec<PhaseMarker>,
    pub meta: BTreeMap<String, String>,
}

impl PhaseMarkerLog {
    pub fn parse<R: BufRead>(reader: R, source: &str) -> Result<Self> {
        let mut log = PhaseMarkerLog::default();
        for (lineno, line) in lines(reader, source)? {
            if let Some(comment) = line.trim_start().strip_prefix('#') {
                for pair in comment.split_whitespace() {
                    if let Some((k, v)) = pair.split_once('=') {
                        log.meta.insert(k.to_string(), v.to_string());
                    }
                }
                continue;
            }
            let f = fields(&line, 3, source, lineno)?;
            let phase: Phase = f[0].parse().map_err(|e: Error| err(source, lineno, e.to_string()))?;
            let start = number(f[1], "start", source, lineno)?;
            let end = number(f[2], "end", source, lineno)?;
            if !(start < end) {
                return Err(err(source, lineno, format!("phase {phase}: start {start} not before end {end}")));
            }
            if let Some(prev) = log.markers.last() {
                if start < prev.end {
                    return Err(err(source, lineno, format!("phase {phase} overlaps {}", prev.phase)));
                }
            }
            log.markers.push(PhaseMarker { phase, start, end });
        }
        Ok(log)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::parse(std::io::BufReader::new(file), &path.display().to_string())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if !self.meta.is_empty() {
            out.push('#');
            for (k, v) in &self.meta {
                let _ = write!(out, " {k}={v}");
            }
            out.push('\n');
        }
        for m in &self.markers {
            let _ = writeln!(out, "{} {} {}", m.phase, m.start, m.end);
        }
        out
    }
}

/// Trapezoidal integral of `series` over `[start, end]`, with linear
/// interpolation at the span ends.
pub fn integrate_energy(series: &MeasurementSeries, start: f64, end: f64) -> Result<f64> {
    let s = series.samples();
    if s.len() < 2 {
        return Err(Error::Segment(format!(
            "{}: at least 2 samples needed, found {}",
            series.metric.as_str(),
            s.len()
        )));
    }
    let (lo, hi) = series.span().expect("non-empty");
    if start < lo || end > hi || start > end {
        return Err(Error::Segment(format!(
            "span [{start}, {end}] outside samples [{lo}, {hi}]"
        )));
    }
    let mut pts = vec![(start, series.value_at(start).expect("in span"))];
    pts.extend(s.iter().copied().filter(|&(t, _)| t > start && t < end));
    pts.push((end, series.value_at(end).expect("in span")));
    Ok(pts.windows(2).map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0)).sum())
}

/// Energy in `[start, end]` from a power series, or failing that from a
/// cumulative-energy series.
pub fn span_energy(traces: &TraceSet, start: f64, end: f64) -> Result<f64> {
    if let Some(p) = traces.get(Metric::PowerW) {
        return integrate_energy(p, start, end);
    }
    if let Some(e) = traces.get(Metric::EnergyJ) {
        let (lo, hi) = e.span().ok_or(Error::EmptyTrace)?;
        if start < lo || end > hi {
            return Err(Error::Segment(format!("span [{start}, {end}] outside samples [{lo}, {hi}]")));
        }
        return Ok(e.value_at(end).expect("in span") - e.value_at(start).expect("in span"));
    }
    Err(Error::Segment("no power or energy series".into()))
}

/// Per-phase estimates from ingested traces.
pub fn segment_phases(traces: &TraceSet, markers: &PhaseMarkerLog) -> Result<Vec<PhaseEstimate>> {
    let mut out = Vec::with_capacity(markers.markers.len());
    for (i, m) in markers.markers.iter().enumerate() {
        if i > 0 && m.start < markers.markers[i - 1].end {
            return Err(Error::Segment(format!("phase {} overlaps {}", m.phase, markers.markers[i - 1].phase)));
        }
        let energy = span_energy(traces, m.start, m.end).map_err(|e| match e {
            Error::Segment(msg) => Error::Segment(format!("marker {} [{}, {}]: {msg}", m.phase, m.start, m.end)),
            other => other,
        })?;
        let cpu = traces
            .get(Metric::CpuPct)
            .and_then(|c| {
                let vals: Vec<f64> = c
                    .samples()
                    .iter()
                    .filter(|(t, _)| *t >= m.start && *t < m.end)
                    .map(|&(_, v)| v)
                    .collect();
                (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
            })
            .unwrap_or(0.0);
        out.push(PhaseEstimate {
            phase: m.phase,
            duration: m.end - m.start,
            client_energy: energy,
            mean_client_cpu_util: cpu / 100.0,
            bytes_moved: 0.0,
        });
    }
    Ok(out)
}

/// Markers for the non-empty phases of a simulated result.
pub fn markers_for(result: &ScenarioResult) -> PhaseMarkerLog {
    let mut meta = BTreeMap::new();
    meta.insert("scenario".to_string(), result.scenario.id.to_string());
    meta.insert("client".to_string(), result.scenario.client.clone());
    meta.insert("server".to_string(), result.scenario.server.clone());
    meta.insert("platform".to_string(), result.platform.to_string());
    meta.insert("workload".to_string(), result.workload.to_string());
    let markers = result
        .phase_spans()
        .into_iter()
        .filter(|(_, s, e)| e > s)
        .map(|(phase, start, end)| PhaseMarker { phase, start, end })
        .collect();
    PhaseMarkerLog { markers, meta }
}

/// Power meter line text for a power series at the meter's supply voltage.
pub fn power_meter_text(power: &MeasurementSeries) -> String {
    let v = crate::sim::METER_VOLTS;
    let mut out = String::new();
    for &(t, p) in power.samples() {
        let _ = writeln!(out, "{t} {v} {}", p / v);
    }
    out
}

/// RAPL counter log for a power series, starting at `offset` µJ.
pub fn rapl_text(power: &MeasurementSeries, max_range: u64, offset: u64) -> String {
    let mut out = String::new();
    let mut cum = 0.0;
    let mut prev: Option<(f64, f64)> = None;
    for &(t, p) in power.samples() {
        if let Some((t0, p0)) = prev {
            cum += 0.5 * (p0 + p) * (t - t0);
        }
        prev = Some((t, p));
        let counter = (u128::from(offset) + (cum * 1e6).round() as u128) % u128::from(max_range);
        let _ = writeln!(out, "{t} {counter}");
    }
    out
}

pub fn resource_log_text(traces: &TraceSet) -> Result<String> {
    let get = |m: Metric| traces.get(m).ok_or_else(|| Error::Segment(format!("missing {} series", m.as_str())));
    let cpu = get(Metric::CpuPct)?.samples();
    let mem = get(Metric::MemMb)?.samples();
    let rd = get(Metric::DiskReadMbps)?.samples();
    let wr = get(Metric::DiskWriteMbps)?.samples();
    let mut out = String::from("\"Dstat CSV output\"\n\"epoch\",\"usr\",\"sys\",\"used\",\"read\",\"writ\"\n");
    for i in 0..cpu.len() {
        let (t, c) = cpu[i];
        let mut sys = c * 0.125;
        let mut usr = c - sys;
        if usr + sys != c {
            usr = c;
            sys = 0.0;
        }
        let _ = writeln!(
            out,
            "{t},{usr},{sys},{},{},{}",
            mem[i].1,
            rd[i].1 * BYTES_PER_MB,
            wr[i].1 * BYTES_PER_MB
        );
    }
    Ok(out)
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Export a simulated result in the probe formats a real run of its client
/// would produce: power-meter log for the RPi, RAPL counters otherwise.
pub fn export_traces(result: &ScenarioResult, client: &NodeSpec, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    if let Some(power) = result.traces.get(Metric::PowerW) {
        if client.tier == Tier::Rpi {
            write(&dir.join(POWER_METER_FILE), &power_meter_text(power))?;
        } else {
            let max = DEFAULT_MAX_RANGE_UJ;
            // start near the top of the range so most runs wrap at least once
            let offset = max - 1 - (result.seed % 1_000_000_000);
            write(&dir.join(RAPL_FILE), &rapl_text(power, max, offset))?;
            write(&dir.join(RAPL_RANGE_FILE), &format!("{max}\n"))?;
        }
    }
    write(&dir.join(RESOURCE_FILE), &resource_log_text(&result.traces)?)?;
    write(&dir.join(MARKER_FILE), &markers_for(result).to_text())
}

fn open(path: &Path) -> Result<std::io::BufReader<std::fs::File>> {
    std::fs::File::open(path)
        .map(std::io::BufReader::new)
        .map_err(|e| Error::io(path, e))
}

/// Read every recognised trace file in `dir`.
pub fn read_trace_dir(dir: &Path) -> Result<TraceSet> {
    let mut set = TraceSet::default();
    let meter = dir.join(POWER_METER_FILE);
    if meter.exists() {
        set.insert(read_power_meter_log(open(&meter)?, &meter.display().to_string())?);
    }
    let rapl = dir.join(RAPL_FILE);
    if rapl.exists() {
        let range_path = dir.join(RAPL_RANGE_FILE);
        let max = if range_path.exists() {
            let text = std::fs::read_to_string(&range_path).map_err(|e| Error::io(&range_path, e))?;
            read_max_range(&text, &range_path.display().to_string())?
        } else {
            DEFAULT_MAX_RANGE_UJ
        };
        set.insert(read_rapl_log(open(&rapl)?, max, &rapl.display().to_string())?);
    }
    let res = dir.join(RESOURCE_FILE);
    if res.exists() {
        for s in read_resource_log(open(&res)?, &res.display().to_string())?.iter() {
            set.insert(s.clone());
        }
    }
    if set.is_empty() {
        return Err(Error::Segment(format!("{}: no trace files found", dir.display())));
    }
    Ok(set)
}
