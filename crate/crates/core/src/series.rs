//! Timestamped sample streams shared by the simulator and the trace parsers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    PowerW,
    /// Cumulative energy in joules since the first sample.
    EnergyJ,
    CpuPct,
    MemMb,
    DiskReadMbps,
    DiskWriteMbps,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::PowerW => "power_w",
            Metric::EnergyJ => "energy_j",
            Metric::CpuPct => "cpu_pct",
            Metric::MemMb => "mem_mb",
            Metric::DiskReadMbps => "disk_read_mbps",
            Metric::DiskWriteMbps => "disk_write_mbps",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Simulated,
    Rapl,
    PowerMeter,
    ResourceLog,
}

/// Samples with strictly increasing timestamps and non-negative values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSeries {
    pub metric: Metric,
    pub source: Source,
    samples: Vec<(f64, f64)>,
}

impl MeasurementSeries {
    pub fn empty(metric: Metric, source: Source) -> Self {
        MeasurementSeries {
            metric,
            source,
            samples: Vec::new(),
        }
    }

    pub fn new(metric: Metric, source: Source, samples: Vec<(f64, f64)>) -> Result<Self> {
        let mut s = Self::empty(metric, source);
        for (t, v) in samples {
            s.push(t, v)?;
        }
        Ok(s)
    }

    pub fn push(&mut self, t: f64, v: f64) -> Result<()> {
        if !t.is_finite() || !v.is_finite() {
            return Err(Error::Parse(format!("{}: non-finite sample ({t}, {v})", self.metric.as_str())));
        }
        if let Some(&(last, _)) = self.samples.last() {
            if t <= last {
                return Err(Error::Parse(format!(
                    "{}: timestamp {t} does not follow {last}",
                    self.metric.as_str()
                )));
            }
        }
        if v < 0.0 {
            return Err(Error::Parse(format!("{}: negative value {v} at t={t}", self.metric.as_str())));
        }
        self.samples.push((t, v));
        Ok(())
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn span(&self) -> Option<(f64, f64)> {
        Some((self.samples.first()?.0, self.samples.last()?.0))
    }

    /// Linear interpolation at `t`; `None` outside the sampled span.
    pub fn value_at(&self, t: f64) -> Option<f64> {
        let (lo, hi) = self.span()?;
        if t < lo || t > hi {
            return None;
        }
        let i = self.samples.partition_point(|&(ts, _)| ts < t);
        let (t1, v1) = self.samples[i];
        if t1 == t || i == 0 {
            return Some(v1);
        }
        let (t0, v0) = self.samples[i - 1];
        Some(v0 + (v1 - v0) * (t - t0) / (t1 - t0))
    }

    /// Arithmetic mean of samples with timestamps in `[start, end]`.
    pub fn mean_in(&self, start: f64, end: f64) -> Option<f64> {
        let vals: Vec<f64> = self
            .samples
            .iter()
            .filter(|(t, _)| *t >= start && *t <= end)
            .map(|&(_, v)| v)
            .collect();
        if vals.is_empty() {
            None
        } else {
            Some(vals.iter().sum::<f64>() / vals.len() as f64)
        }
    }
}

/// A set of series, at most one per metric.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TraceSet {
    series: Vec<MeasurementSeries>,
}

impl TraceSet {
    pub fn insert(&mut self, s: MeasurementSeries) {
        self.series.retain(|x| x.metric != s.metric);
        self.series.push(s);
        self.series.sort_by_key(|x| x.metric);
    }

    pub fn get(&self, metric: Metric) -> Option<&MeasurementSeries> {
        self.series.iter().find(|s| s.metric == metric)
    }

    pub fn iter(&self) -> impl Iterator<Item = &MeasurementSeries> {
        self.series.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }
}

impl FromIterator<MeasurementSeries> for TraceSet {
    fn from_iter<I: IntoIterator<Item = MeasurementSeries>>(iter: I) -> Self {
        let mut set = TraceSet::default();
        for s in iter {
            set.insert(s);
        }
        set
    }
}
