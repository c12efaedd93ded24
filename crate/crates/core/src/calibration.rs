//! Fitting model coefficients from reference data or ingested traces.
//!
//! An inputs directory may contain:
//!
//! * `base.toml`: the plan to start from (defaults to the built-in catalog)
//! * `processing_times.csv`: `platform,workload,seconds`
//! * `phase_fractions.csv`: `kind,phase,percent` with phases
//!   `generation`, `transmission`, `copy`, `processing`
//! * `anchors.csv`: `quantity,client,server,platform,low_j,high_j` where
//!   quantity is `transmission` or `copy` and platform may be `*`
//! * `bandwidth/<client>__<server>.log`: `timestamp_s bandwidth_MBps`
//! * `power/<node id>/`: a trace directory used to fit that node's power line

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::BufRead;
use std::path::Path;

use crate::energy::{dfs_copy_time_energy, disk_penalty, transmission_energy};
use crate::error::{Error, ParseError, Result};
use crate::model::{
    validate_plan, Catalog, ExperimentPlan, LinkSpec, NodeSpec, PlatformName, PlatformProfile, WorkloadKind,
    WorkloadName, WorkloadSpec,
};
use crate::report::{edge_node_offload_fractions, rows_from_results, PhaseFractions, ReportRow};
use crate::series::{MeasurementSeries, Metric};
use crate::sim::{run_matrix, MatrixOptions};

pub type ProcessingTimes = BTreeMap<(PlatformName, WorkloadName), f64>;

/// Work coefficients that make `processing_time` on `reference` equal `times`.
pub fn fit_work_coefficients(
    times: &ProcessingTimes,
    reference: &NodeSpec,
    platforms: &[PlatformProfile],
    workloads: &[WorkloadSpec],
) -> Result<BTreeMap<PlatformName, BTreeMap<WorkloadName, f64>>> {
    if !(reference.capacity() > 0.0) {
        return Err(Error::Calibration(format!("reference node `{}` has no capacity", reference.id)));
    }
    let mut out = BTreeMap::new();
    for p in platforms {
        let mut coeffs = BTreeMap::new();
        for w in workloads {
            let t = *times
                .get(&(p.name, w.name))
                .ok_or_else(|| Error::Calibration(format!("missing processing time for {} {}", p.name, w.name)))?;
            if !(t > 0.0) {
                return Err(Error::Calibration(format!("processing time for {} {} must be positive", p.name, w.name)));
            }
            let compute = t - disk_penalty(p, w, reference);
            if !(compute > 0.0) {
                return Err(Error::Calibration(format!(
                    "{} {}: disk penalty exceeds the {t} s processing time",
                    p.name, w.name
                )));
            }
            coeffs.insert(w.name, compute * reference.capacity() / f64::from(w.iterations));
        }
        out.insert(p.name, coeffs);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerFit {
    pub p_idle: f64,
    pub p_busy: f64,
    /// Root-mean-square residual in watts.
    pub residual: f64,
    /// The unconstrained fit had `p_busy < p_idle` and was clamped.
    pub clamped: bool,
}

/// Least-squares line `P = p_idle + u (p_busy − p_idle)` through power
/// samples, with `u` read from a CPU-percent series at the same instants.
pub fn fit_power_params(power: &MeasurementSeries, cpu: &MeasurementSeries) -> Result<PowerFit> {
    let pts: Vec<(f64, f64)> = power
        .samples()
        .iter()
        .filter_map(|&(t, p)| cpu.value_at(t).map(|c| (c / 100.0, p)))
        .collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return Err(Error::Calibration("power fit needs at least 2 paired samples".into()));
    }
    let mu = pts.iter().map(|x| x.0).sum::<f64>() / n;
    let mp = pts.iter().map(|x| x.1).sum::<f64>() / n;
    let suu: f64 = pts.iter().map(|x| (x.0 - mu).powi(2)).sum();
    let sup: f64 = pts.iter().map(|x| (x.0 - mu) * (x.1 - mp)).sum();
    let umax = pts.iter().map(|x| x.0).fold(f64::MIN, f64::max);
    let umin = pts.iter().map(|x| x.0).fold(f64::MAX, f64::min);
    if umax - umin <= 1e-12 * umax.abs().max(1.0) {
        return Err(Error::Calibration("power fit needs at least 2 distinct utilization levels".into()));
    }
    let mut slope = sup / suu;
    let mut p_idle = mp - slope * mu;
    let clamped = slope < 0.0;
    if clamped {
        slope = 0.0;
        p_idle = mp;
    }
    let sse: f64 = pts.iter().map(|&(u, p)| (p - p_idle - slope * u).powi(2)).sum();
    Ok(PowerFit {
        p_idle,
        p_busy: p_idle + slope,
        residual: (sse / n).sqrt(),
        clamped,
    })
}

/// Percent shares of client energy by bucket.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FractionTarget {
    pub generation: f64,
    pub transmission: f64,
    pub copy: f64,
    pub processing: f64,
}

impl FractionTarget {
    fn sum(&self) -> f64 {
        self.generation + self.transmission + self.copy + self.processing
    }

    fn deviations(&self, got: &PhaseFractions) -> [f64; 4] {
        [
            got.generation - self.generation,
            got.transmission - self.transmission,
            got.copy - self.copy,
            got.processing - self.processing,
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FractionFit {
    pub generation_rate: f64,
    pub iterative_generation_cost: f64,
    pub batch_result_fraction: f64,
    pub iterative_result_fraction: f64,
    pub ingest_scale: f64,
    pub batch: Option<PhaseFractions>,
    pub iterative: Option<PhaseFractions>,
    /// Largest absolute deviation from any target, in points.
    pub max_deviation: f64,
}

#[derive(Debug, Clone, Copy)]
enum Knob {
    GenerationRate,
    IterativeGenerationCost,
    ResultFraction(WorkloadKind),
    IngestScale,
}

fn apply(plan: &mut ExperimentPlan, base: &ExperimentPlan, client: &str, knob: Knob, x: f64) {
    match knob {
        Knob::GenerationRate => {
            if let Some(n) = plan.nodes.iter_mut().find(|n| n.id == client) {
                n.generation_rate = Some(x);
            }
        }
        Knob::IterativeGenerationCost => {
            for w in plan.workloads.iter_mut().filter(|w| w.kind == WorkloadKind::Iterative) {
                w.generation_cost = x;
            }
        }
        Knob::ResultFraction(kind) => {
            for w in plan.workloads.iter_mut().filter(|w| w.kind == kind) {
                w.result_fraction = x;
            }
        }
        Knob::IngestScale => {
            for (p, b) in plan.platforms.iter_mut().zip(&base.platforms) {
                p.ingest_rate = b.ingest_rate * x;
            }
        }
    }
}

fn offload_rows(plan: &ExperimentPlan, client: &str) -> Result<Vec<ReportRow>> {
    let mut p = plan.clone();
    p.scenarios.retain(|s| s.client == client);
    let cat = validate_plan(p)?;
    let cells = run_matrix(&cat, 0, MatrixOptions { traces: false });
    let results = cells
        .iter()
        .map(|c| c.outcome.as_ref().map_err(|e| Error::Calibration(e.clone())))
        .collect::<Result<Vec<_>>>()?;
    rows_from_results(results, &cat)
}

fn fractions(plan: &ExperimentPlan, client: &str) -> Result<(Option<PhaseFractions>, Option<PhaseFractions>)> {
    let rows = offload_rows(plan, client)?;
    let mut rows = rows;
    let tier = plan
        .nodes
        .iter()
        .find(|n| n.id == client)
        .map(|n| n.tier)
        .ok_or_else(|| Error::unknown("node", client))?;
    // the edge-node helper filters on tier; rewrite so any client works
    for r in rows.iter_mut() {
        if r.client_tier == tier {
            r.client_tier = crate::model::Tier::EdgeNode;
        }
    }
    Ok((
        edge_node_offload_fractions(&rows, WorkloadKind::Batch),
        edge_node_offload_fractions(&rows, WorkloadKind::Iterative),
    ))
}

/// Accepted distance from a fraction target, in points.
pub const FRACTION_BAND: f64 = 1.0;

/// Leave `knob` alone when `metric` is already within [`FRACTION_BAND`] of
/// `target`; otherwise bisect in `[lo, hi]` onto a point just inside the
/// band. `metric` must be monotone in the knob.
fn solve_1d(
    plan: &mut ExperimentPlan,
    base: &ExperimentPlan,
    client: &str,
    knob: Knob,
    (lo, hi): (f64, f64),
    target: f64,
    metric: &dyn Fn(&ExperimentPlan) -> Result<f64>,
) -> Result<()> {
    let d0 = metric(plan)? - target;
    if d0.abs() <= FRACTION_BAND {
        return Ok(());
    }
    let target = target + d0.signum() * 0.9 * FRACTION_BAND;
    let eval = |plan: &mut ExperimentPlan, x: f64| -> Result<f64> {
        apply(plan, base, client, knob, x);
        Ok(metric(plan)? - target)
    };
    let (mut a, mut b) = (lo, hi);
    let fa = eval(plan, a)?;
    let fb = eval(plan, b)?;
    if fa.signum() == fb.signum() {
        let x = if fa.abs() < fb.abs() { a } else { b };
        apply(plan, base, client, knob, x);
        return Ok(());
    }
    let increasing = fb > fa;
    for _ in 0..100 {
        // geometric midpoint: knobs are positive rates and ratios
        let m = if a > 0.0 { (a * b).sqrt() } else { 0.5 * (a + b) };
        if m <= a || m >= b || (b - a) <= 1e-12 * b {
            break;
        }
        let fm = eval(plan, m)?;
        if (fm > 0.0) == increasing {
            b = m;
        } else {
            a = m;
        }
    }
    apply(plan, base, client, knob, 0.5 * (a + b));
    Ok(())
}

/// Adjust generation rate, iterative generation cost, result sizes and the
/// ingest rates so offloading runs from `client` match the targets. Each
/// parameter is solved in one dimension and the solves are repeated in turn.
pub fn fit_phase_fractions(
    plan: &ExperimentPlan,
    client: &str,
    batch: Option<FractionTarget>,
    iterative: Option<FractionTarget>,
) -> Result<(ExperimentPlan, FractionFit)> {
    for (name, t) in [("batch", batch), ("iterative", iterative)] {
        if let Some(t) = t {
            let s = t.sum();
            if (s - 100.0).abs() > 2.0 {
                return Err(Error::Calibration(format!(
                    "infeasible {name} targets: shares sum to {s:.2}%, achievable sums are 98-102%"
                )));
            }
            if [t.generation, t.transmission, t.copy, t.processing].iter().any(|v| !(*v > 0.0)) {
                return Err(Error::Calibration(format!("infeasible {name} targets: every share must be positive")));
            }
        }
    }
    let base = plan.clone();
    let mut plan = plan.clone();
    let client_node = plan
        .nodes
        .iter()
        .find(|n| n.id == client)
        .ok_or_else(|| Error::unknown("node", client))?
        .clone();
    let gen0 = client_node
        .generation_rate
        .unwrap_or(client_node.disk_write_rate * plan.model.generation_rate_factor);

    let b = |f: fn(&PhaseFractions) -> f64| {
        move |p: &ExperimentPlan| -> Result<f64> {
            fractions(p, client)?
                .0
                .map(|x| f(&x))
                .ok_or_else(|| Error::Calibration("no batch offloading cells".into()))
        }
    };
    let i = |f: fn(&PhaseFractions) -> f64| {
        move |p: &ExperimentPlan| -> Result<f64> {
            fractions(p, client)?
                .1
                .map(|x| f(&x))
                .ok_or_else(|| Error::Calibration("no iterative offloading cells".into()))
        }
    };

    for _sweep in 0..12 {
        let before = fractions(&plan, client)?;
        if let Some(t) = batch {
            solve_1d(&mut plan, &base, client, Knob::GenerationRate, (gen0 / 50.0, gen0 * 50.0), t.generation, &b(|f| f.generation))?;
            solve_1d(&mut plan, &base, client, Knob::ResultFraction(WorkloadKind::Batch), (0.0, 1.0), t.transmission, &b(|f| f.transmission))?;
            solve_1d(&mut plan, &base, client, Knob::IngestScale, (0.02, 50.0), t.copy, &b(|f| f.copy))?;
        }
        if let Some(t) = iterative {
            solve_1d(&mut plan, &base, client, Knob::IterativeGenerationCost, (0.05, 20.0), t.generation, &i(|f| f.generation))?;
            solve_1d(&mut plan, &base, client, Knob::ResultFraction(WorkloadKind::Iterative), (0.0, 1.0), t.transmission, &i(|f| f.transmission))?;
        }
        if fractions(&plan, client)? == before {
            break;
        }
    }

    let (fb, fi) = fractions(&plan, client)?;
    let mut max_deviation: f64 = 0.0;
    for (t, got) in [(batch, fb), (iterative, fi)] {
        if let (Some(t), Some(got)) = (t, got) {
            for d in t.deviations(&got) {
                max_deviation = max_deviation.max(d.abs());
            }
        }
    }
    let value = |k: WorkloadKind, f: fn(&WorkloadSpec) -> f64| {
        plan.workloads.iter().find(|w| w.kind == k).map(f).unwrap_or(0.0)
    };
    let fit = FractionFit {
        generation_rate: plan
            .nodes
            .iter()
            .find(|n| n.id == client)
            .and_then(|n| n.generation_rate)
            .unwrap_or(gen0),
        iterative_generation_cost: value(WorkloadKind::Iterative, |w| w.generation_cost),
        batch_result_fraction: value(WorkloadKind::Batch, |w| w.result_fraction),
        iterative_result_fraction: value(WorkloadKind::Iterative, |w| w.result_fraction),
        ingest_scale: match (plan.platforms.first(), base.platforms.first()) {
            (Some(p), Some(b)) => p.ingest_rate / b.ingest_rate,
            _ => 1.0,
        },
        batch: fb,
        iterative: fi,
        max_deviation,
    };
    Ok((plan, fit))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandwidthEstimate {
    pub bandwidth: f64,
    pub samples: usize,
    /// s between first and last sample.
    pub duration: f64,
}

/// Mean of a per-second bandwidth log.
pub fn ingest_bandwidth_log<R: BufRead>(reader: R, source: &str) -> Result<BandwidthEstimate> {
    let mut values = Vec::new();
    let mut first = None;
    let mut last = None;
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let err = |m: String| {
            Error::Trace(ParseError {
                source_name: source.to_string(),
                line: lineno,
                message: m,
            })
        };
        let line = line.map_err(|e| err(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 2 {
            return Err(err(format!("expected 2 fields, found {}", f.len())));
        }
        let t: f64 = f[0].parse().map_err(|_| err(format!("invalid timestamp `{}`", f[0])))?;
        let bw: f64 = f[1].parse().map_err(|_| err(format!("invalid bandwidth `{}`", f[1])))?;
        if !(bw >= 0.0) || !bw.is_finite() {
            return Err(err(format!("negative bandwidth {bw}")));
        }
        first.get_or_insert(t);
        last = Some(t);
        values.push(bw);
    }
    if values.is_empty() {
        return Err(Error::Calibration(format!("{source}: empty bandwidth log")));
    }
    Ok(BandwidthEstimate {
        bandwidth: values.iter().sum::<f64>() / values.len() as f64,
        samples: values.len(),
        duration: last.unwrap_or(0.0) - first.unwrap_or(0.0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum AnchorQuantity {
    Transmission,
    Copy,
}

/// A quoted absolute client energy, as a closed interval.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyAnchor {
    pub quantity: AnchorQuantity,
    pub client: String,
    pub server: String,
    /// `None` applies to every platform.
    pub platform: Option<PlatformName>,
    pub low: f64,
    pub high: f64,
}

impl EnergyAnchor {
    fn target(&self) -> f64 {
        0.5 * (self.low + self.high)
    }

    /// Model energies for this anchor with the catalog's current power lines.
    fn energies(&self, catalog: &Catalog) -> Result<Vec<f64>> {
        let client = catalog.node(&self.client).ok_or_else(|| Error::unknown("node", &self.client))?;
        let server = catalog.node(&self.server).ok_or_else(|| Error::unknown("node", &self.server))?;
        let link = catalog
            .link(&self.client, &self.server)
            .ok_or_else(|| Error::unknown("link", format!("{}→{}", self.client, self.server)))?;
        let size = catalog.workloads().first().map_or(crate::model::DEFAULT_DATA_SIZE_MB, |w| w.data_size);
        match self.quantity {
            AnchorQuantity::Transmission => Ok(vec![transmission_energy(client, &link, size, catalog.model())]),
            AnchorQuantity::Copy => catalog
                .platforms()
                .iter()
                .filter(|p| self.platform.is_none_or(|q| q == p.name))
                .map(|p| dfs_copy_time_energy(server, size, p, client, catalog.model()).map(|e| e.client_energy))
                .collect(),
        }
    }
}

/// One row of the calibration report.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationEntry {
    pub parameter: String,
    pub value: f64,
    pub residual: f64,
    pub source: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CalibrationReport {
    pub entries: Vec<CalibrationEntry>,
}

impl CalibrationReport {
    fn push(&mut self, parameter: impl Into<String>, value: f64, residual: f64, source: impl Into<String>) {
        self.entries.push(CalibrationEntry {
            parameter: parameter.into(),
            value,
            residual,
            source: source.into(),
        });
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let e = |e: csv::Error| Error::Calibration(e.to_string());
        w.write_record(["parameter", "value", "residual", "source"]).map_err(e)?;
        for x in &self.entries {
            w.write_record([x.parameter.as_str(), &x.value.to_string(), &x.residual.to_string(), x.source.as_str()])
                .map_err(e)?;
        }
        let buf = w.into_inner().map_err(|e| Error::Calibration(e.to_string()))?;
        Ok(String::from_utf8(buf).expect("utf-8"))
    }
}

/// Relative margin kept between consecutive tiers in the baseline ordering.
const ORDER_MARGIN: f64 = 0.02;

/// Per-node power scale factors fitted to the anchors, then raised where
/// needed so that baseline client energy grows from RPi to edge node to
/// edge server and an edge server waits more expensively than an edge node.
fn fit_power_scales(plan: &mut ExperimentPlan, anchors: &[EnergyAnchor], report: &mut CalibrationReport) -> Result<()> {
    use crate::model::Tier;
    let cat = validate_plan(plan.clone())?;
    // least squares on relative error: k = Σ(e/t) / Σ(e/t)²
    let mut sums: BTreeMap<String, (f64, f64)> = BTreeMap::new();
    for a in anchors {
        for e in a.energies(&cat)? {
            let r = e / a.target();
            let s = sums.entry(a.client.clone()).or_default();
            s.0 += r;
            s.1 += r * r;
        }
    }
    let mut scale: BTreeMap<String, f64> = cat.nodes().iter().map(|n| (n.id.clone(), 1.0)).collect();
    for (node, (s1, s2)) in &sums {
        if *s2 > 0.0 {
            scale.insert(node.clone(), s1 / s2);
        }
    }

    let ids: Vec<String> = [Tier::Rpi, Tier::EdgeNode, Tier::EdgeServer]
        .iter()
        .filter_map(|t| cat.node_by_tier(*t).map(|n| n.id.clone()))
        .collect();
    let baseline = |id: &str| -> Result<Vec<f64>> {
        let Some(s) = cat.scenarios().iter().find(|s| s.client == id && s.server == id) else {
            return Ok(Vec::new());
        };
        let mut out = Vec::new();
        for p in cat.platforms() {
            for w in cat.workloads() {
                out.push(crate::sim::run_scenario(s, p.name, w.name, &cat, 0)?.total_client_energy);
            }
        }
        Ok(out)
    };
    let energies: Vec<Vec<f64>> = ids.iter().map(|id| baseline(id)).collect::<Result<_>>()?;
    for k in 1..ids.len() {
        let (lo, hi) = (&energies[k - 1], &energies[k]);
        if lo.is_empty() || lo.len() != hi.len() {
            continue;
        }
        let lo_k = scale[&ids[k - 1]];
        let mut need = lo
            .iter()
            .zip(hi)
            .map(|(a, b)| lo_k * a / b * (1.0 + ORDER_MARGIN))
            .fold(0.0, f64::max);
        let (a, b) = (cat.node(&ids[k - 1]).expect("id"), cat.node(&ids[k]).expect("id"));
        for p in cat.platforms() {
            let u = p.cpu_util_idle_wait;
            let pa = a.p_idle + u * (a.p_busy - a.p_idle);
            let pb = b.p_idle + u * (b.p_busy - b.p_idle);
            need = need.max(lo_k * pa / pb * (1.0 + ORDER_MARGIN));
        }
        let cur = scale[&ids[k]];
        if cur < need {
            scale.insert(ids[k].clone(), need);
        }
    }

    for n in plan.nodes.iter_mut().filter(|n| n.metered) {
        let k = scale[&n.id];
        n.p_idle *= k;
        n.p_busy *= k;
        report.push(format!("node.{}.power_scale", n.id), k, 0.0, "anchors");
    }
    let cat = validate_plan(plan.clone())?;
    for a in anchors {
        for (i, e) in a.energies(&cat)?.into_iter().enumerate() {
            let residual = if e < a.low {
                (e - a.low) / a.low
            } else if e > a.high {
                (e - a.high) / a.high
            } else {
                0.0
            };
            let name = match a.quantity {
                AnchorQuantity::Transmission => format!("anchor.transmission.{}->{}", a.client, a.server),
                AnchorQuantity::Copy => {
                    let p = cat
                        .platforms()
                        .iter()
                        .filter(|p| a.platform.is_none_or(|q| q == p.name))
                        .nth(i)
                        .map_or("?", |p| p.name.as_str());
                    format!("anchor.copy.{}->{}.{p}", a.client, a.server)
                }
            };
            report.push(name, e, residual, "anchors");
        }
    }
    Ok(())
}

/// Mean power of each interval of a cumulative-energy series, placed at
/// the interval midpoint. Intervals shorter than a millisecond are skipped.
pub fn power_from_energy(energy: &MeasurementSeries) -> Result<MeasurementSeries> {
    let pts = energy
        .samples()
        .windows(2)
        .filter(|w| w[1].0 - w[0].0 >= 1e-3)
        .map(|w| (0.5 * (w[0].0 + w[1].0), (w[1].1 - w[0].1) / (w[1].0 - w[0].0)))
        .collect();
    MeasurementSeries::new(Metric::PowerW, energy.source, pts)
}

/// Everything a calibration run reads.
#[derive(Debug, Clone, Default)]
pub struct CalibrationInputs {
    pub base: Option<ExperimentPlan>,
    pub processing_times: Option<ProcessingTimes>,
    /// Node whose processing times are given.
    pub reference_node: String,
    pub fraction_client: String,
    pub batch_fractions: Option<FractionTarget>,
    pub iterative_fractions: Option<FractionTarget>,
    pub anchors: Vec<EnergyAnchor>,
    pub bandwidth: BTreeMap<(String, String), BandwidthEstimate>,
    pub power: BTreeMap<String, PowerFit>,
}

fn read_csv(path: &Path) -> Result<Vec<csv::StringRecord>> {
    let mut rd = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| Error::Calibration(format!("{}: {e}", path.display())))?;
    rd.records()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::Calibration(format!("{}: {e}", path.display())))
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, path: &Path) -> Result<T> {
    rec.get(i)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Calibration(format!("{}: bad field {} in {:?}", path.display(), i + 1, rec)))
}

impl CalibrationInputs {
    pub fn load(dir: &Path) -> Result<Self> {
        if !dir.is_dir() {
            return Err(Error::Calibration(format!("{}: not a directory", dir.display())));
        }
        let mut inputs = CalibrationInputs {
            reference_node: "edge_node".into(),
            fraction_client: "edge_node".into(),
            ..Default::default()
        };
        let base = dir.join("base.toml");
        if base.exists() {
            inputs.base = Some(ExperimentPlan::load(&base)?);
        }
        let times = dir.join("processing_times.csv");
        if times.exists() {
            let mut t = ProcessingTimes::new();
            for rec in read_csv(&times)? {
                t.insert((field(&rec, 0, &times)?, field(&rec, 1, &times)?), field(&rec, 2, &times)?);
            }
            inputs.processing_times = Some(t);
        }
        let fr = dir.join("phase_fractions.csv");
        if fr.exists() {
            let mut by_kind: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
            for rec in read_csv(&fr)? {
                by_kind
                    .entry(field(&rec, 0, &fr)?)
                    .or_default()
                    .insert(field(&rec, 1, &fr)?, field(&rec, 2, &fr)?);
            }
            let target = |m: &BTreeMap<String, f64>| -> Result<FractionTarget> {
                let g = |k: &str| {
                    m.get(k)
                        .copied()
                        .ok_or_else(|| Error::Calibration(format!("{}: missing `{k}` share", fr.display())))
                };
                Ok(FractionTarget {
                    generation: g("generation")?,
                    transmission: g("transmission")?,
                    copy: g("copy")?,
                    processing: g("processing")?,
                })
            };
            if let Some(m) = by_kind.get("batch") {
                inputs.batch_fractions = Some(target(m)?);
            }
            if let Some(m) = by_kind.get("iterative") {
                inputs.iterative_fractions = Some(target(m)?);
            }
        }
        let an = dir.join("anchors.csv");
        if an.exists() {
            for rec in read_csv(&an)? {
                let quantity = match rec.get(0) {
                    Some("transmission") => AnchorQuantity::Transmission,
                    Some("copy") => AnchorQuantity::Copy,
                    other => return Err(Error::Calibration(format!("{}: unknown quantity {other:?}", an.display()))),
                };
                let platform = match rec.get(3) {
                    Some("*") | Some("") | None => None,
                    Some(p) => Some(p.parse()?),
                };
                inputs.anchors.push(EnergyAnchor {
                    quantity,
                    client: field(&rec, 1, &an)?,
                    server: field(&rec, 2, &an)?,
                    platform,
                    low: field(&rec, 4, &an)?,
                    high: field(&rec, 5, &an)?,
                });
            }
        }
        let bw = dir.join("bandwidth");
        if bw.is_dir() {
            let mut entries: Vec<_> = std::fs::read_dir(&bw)
                .map_err(|e| Error::io(&bw, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "log"))
                .collect();
            entries.sort();
            for path in entries {
                let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
                let Some((c, s)) = stem.split_once("__") else {
                    return Err(Error::Calibration(format!(
                        "{}: expected <client>__<server>.log",
                        path.display()
                    )));
                };
                let file = std::fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
                let est = ingest_bandwidth_log(std::io::BufReader::new(file), &path.display().to_string())?;
                inputs.bandwidth.insert((c.to_string(), s.to_string()), est);
            }
        }
        let pw = dir.join("power");
        if pw.is_dir() {
            let mut entries: Vec<_> = std::fs::read_dir(&pw)
                .map_err(|e| Error::io(&pw, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.is_dir())
                .collect();
            entries.sort();
            for path in entries {
                let node = path.file_name().and_then(|s| s.to_str()).unwrap_or_default().to_string();
                let traces = crate::probes::read_trace_dir(&path)?;
                let derived;
                let power = match traces.get(Metric::PowerW) {
                    Some(p) => p,
                    None => {
                        let e = traces.get(Metric::EnergyJ).ok_or_else(|| {
                            Error::Calibration(format!("{}: power fit needs a power or energy log", path.display()))
                        })?;
                        derived = power_from_energy(e)?;
                        &derived
                    }
                };
                let cpu = traces
                    .get(Metric::CpuPct)
                    .ok_or_else(|| Error::Calibration(format!("{}: power fit needs a resource log", path.display())))?;
                inputs.power.insert(node, fit_power_params(power, cpu)?);
            }
        }
        Ok(inputs)
    }
}

/// Run every fit for which inputs exist, in order: measured bandwidths and
/// power lines, work coefficients, phase fractions, anchor power scales.
pub fn calibrate(inputs: &CalibrationInputs) -> Result<(ExperimentPlan, CalibrationReport)> {
    let mut plan = match &inputs.base {
        Some(p) => p.clone(),
        None => crate::model::default_plan(),
    };
    let mut report = CalibrationReport::default();

    for ((c, s), est) in &inputs.bandwidth {
        match plan.links.iter_mut().find(|l| &l.client == c && &l.server == s) {
            Some(l) => l.bandwidth = est.bandwidth,
            None => plan.links.push(LinkSpec {
                client: c.clone(),
                server: s.clone(),
                bandwidth: est.bandwidth,
                distance: 0.0,
                handshake_latency: 0.0,
                estimated: false,
            }),
        }
        if let Some(l) = plan.links.iter_mut().find(|l| &l.client == c && &l.server == s) {
            l.estimated = false;
        }
        report.push(format!("link.{c}->{s}.bandwidth"), est.bandwidth, 0.0, format!("bandwidth log, {} samples", est.samples));
    }

    for (node, fit) in &inputs.power {
        let n = plan
            .nodes
            .iter_mut()
            .find(|n| &n.id == node)
            .ok_or_else(|| Error::unknown("node", node))?;
        n.p_idle = fit.p_idle;
        n.p_busy = fit.p_busy;
        let src = if fit.clamped { "power trace, clamped" } else { "power trace" };
        report.push(format!("node.{node}.p_idle"), fit.p_idle, fit.residual, src);
        report.push(format!("node.{node}.p_busy"), fit.p_busy, fit.residual, src);
    }

    if let Some(times) = &inputs.processing_times {
        let reference = plan
            .nodes
            .iter()
            .find(|n| n.id == inputs.reference_node)
            .ok_or_else(|| Error::unknown("node", &inputs.reference_node))?
            .clone();
        let coeffs = fit_work_coefficients(times, &reference, &plan.platforms, &plan.workloads)?;
        for p in plan.platforms.iter_mut() {
            p.work_coeff = coeffs[&p.name].clone();
        }
        let cat = validate_plan(plan.clone())?;
        for p in cat.platforms() {
            for w in cat.workloads() {
                let t = crate::energy::processing_time(p, w, &reference)?;
                let want = times[&(p.name, w.name)];
                report.push(format!("platform.{}.work_coeff.{}", p.name, w.name), p.work_coeff[&w.name], t - want, "processing times");
            }
        }
    }

    // fill defaults before the simulation-based fits
    plan = validate_plan(plan)?.into_plan();

    if inputs.batch_fractions.is_some() || inputs.iterative_fractions.is_some() {
        let (fitted, fit) = fit_phase_fractions(&plan, &inputs.fraction_client, inputs.batch_fractions, inputs.iterative_fractions)?;
        plan = fitted;
        let src = "phase fractions";
        let c = &inputs.fraction_client;
        report.push(format!("node.{c}.generation_rate"), fit.generation_rate, 0.0, src);
        report.push("workload.iterative.generation_cost", fit.iterative_generation_cost, 0.0, src);
        report.push("workload.batch.result_fraction", fit.batch_result_fraction, 0.0, src);
        report.push("workload.iterative.result_fraction", fit.iterative_result_fraction, 0.0, src);
        report.push("platform.ingest_scale", fit.ingest_scale, 0.0, src);
        for (kind, t, got) in [
            ("batch", inputs.batch_fractions, fit.batch),
            ("iterative", inputs.iterative_fractions, fit.iterative),
        ] {
            if let (Some(t), Some(got)) = (t, got) {
                let d = t.deviations(&got);
                for (k, (name, v)) in [
                    ("generation", got.generation),
                    ("transmission", got.transmission),
                    ("copy", got.copy),
                    ("processing", got.processing),
                ]
                .into_iter()
                .enumerate()
                {
                    report.push(format!("fraction.{kind}.{name}"), v, d[k], src);
                }
            }
        }
    }

    if !inputs.anchors.is_empty() {
        fit_power_scales(&mut plan, &inputs.anchors, &mut report)?;
    }

    plan.meta.calibration = report
        .entries
        .iter()
        .map(|e| (e.parameter.clone(), format!("{} residual {} ({})", e.value, e.residual, e.source)))
        .collect();
    validate_plan(plan.clone())?;
    Ok((plan, report))
}

/// Human-readable summary of a calibration report.
pub fn summarize(report: &CalibrationReport) -> String {
    let mut out = String::new();
    for e in &report.entries {
        let _ = writeln!(out, "{:<48} {:>16.6} residual {:+.3e}  {}", e.parameter, e.value, e.residual, e.source);
    }
    out
}
