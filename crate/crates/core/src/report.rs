//! Result rows, the derived-metric report and tidy plot data.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::energy::PhaseEstimate;
use crate::error::{Error, Result};
use crate::model::{Catalog, Phase, PlatformName, Tier, WorkloadKind, WorkloadName};
use crate::sim::ScenarioResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowSource {
    Simulated,
    Measured,
}

impl RowSource {
    pub fn as_str(self) -> &'static str {
        match self {
            RowSource::Simulated => "simulated",
            RowSource::Measured => "measured",
        }
    }
}

/// One matrix cell as written to `results.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub scenario: u32,
    pub client: String,
    pub server: String,
    pub client_tier: Tier,
    pub server_tier: Tier,
    pub platform: PlatformName,
    pub workload: WorkloadName,
    /// (time s, energy J) per phase, `None` where the phase did not run.
    pub phases: [Option<(f64, f64)>; 6],
    pub total_time: f64,
    pub total_energy: f64,
    pub savings_vs_baseline: Option<f64>,
    pub source: RowSource,
}

impl ReportRow {
    pub fn from_phases(
        scenario: u32,
        (client, client_tier): (&str, Tier),
        (server, server_tier): (&str, Tier),
        platform: PlatformName,
        workload: WorkloadName,
        estimates: &[PhaseEstimate],
        source: RowSource,
    ) -> Self {
        let mut phases = [None; 6];
        for p in estimates {
            phases[p.phase as usize] = Some((p.duration, p.client_energy));
        }
        ReportRow {
            scenario,
            client: client.to_string(),
            server: server.to_string(),
            client_tier,
            server_tier,
            platform,
            workload,
            phases,
            total_time: estimates.iter().map(|p| p.duration).sum(),
            total_energy: estimates.iter().map(|p| p.client_energy).sum(),
            savings_vs_baseline: None,
            source,
        }
    }

    pub fn from_result(r: &ScenarioResult, catalog: &Catalog) -> Result<Self> {
        let tier = |id: &str| {
            catalog
                .node(id)
                .map(|n| n.tier)
                .ok_or_else(|| Error::unknown("node", id))
        };
        let mut row = Self::from_phases(
            r.scenario.id,
            (&r.scenario.client, tier(&r.scenario.client)?),
            (&r.scenario.server, tier(&r.scenario.server)?),
            r.platform,
            r.workload,
            &r.phases,
            RowSource::Simulated,
        );
        row.total_time = r.total_time;
        row.total_energy = r.total_client_energy;
        Ok(row)
    }

    pub fn is_offloading(&self) -> bool {
        self.client != self.server
    }

    pub fn phase_energy(&self, phase: Phase) -> f64 {
        self.phases[phase as usize].map_or(0.0, |(_, e)| e)
    }

    pub fn phase_time(&self, phase: Phase) -> f64 {
        self.phases[phase as usize].map_or(0.0, |(t, _)| t)
    }
}

/// `100 × (baseline − offload) / baseline`.
pub fn savings_percent(offload: &ReportRow, baseline: &ReportRow) -> Result<f64> {
    if baseline.is_offloading() {
        return Err(Error::Report(format!("scenario {} is not a non-offloading baseline", baseline.scenario)));
    }
    if (&offload.client, offload.platform, offload.workload) != (&baseline.client, baseline.platform, baseline.workload) {
        return Err(Error::Report(format!(
            "scenario {} and baseline {} differ in client, platform or workload",
            offload.scenario, baseline.scenario
        )));
    }
    if baseline.total_energy == 0.0 {
        return Err(Error::Report(format!("baseline scenario {} has zero energy", baseline.scenario)));
    }
    Ok(100.0 * (baseline.total_energy - offload.total_energy) / baseline.total_energy)
}

/// Fill `savings_vs_baseline` for every offloading row whose baseline is present.
pub fn attach_savings(rows: &mut [ReportRow]) {
    let baselines: BTreeMap<(String, PlatformName, WorkloadName), ReportRow> = rows
        .iter()
        .filter(|r| !r.is_offloading())
        .map(|r| ((r.client.clone(), r.platform, r.workload), r.clone()))
        .collect();
    for row in rows.iter_mut() {
        row.savings_vs_baseline = if row.is_offloading() {
            baselines
                .get(&(row.client.clone(), row.platform, row.workload))
                .and_then(|b| savings_percent(row, b).ok())
        } else {
            None
        };
    }
}

/// Rows for every successful result, with savings attached.
pub fn rows_from_results<'a, I>(results: I, catalog: &Catalog) -> Result<Vec<ReportRow>>
where
    I: IntoIterator<Item = &'a ScenarioResult>,
{
    let mut rows = results
        .into_iter()
        .map(|r| ReportRow::from_result(r, catalog))
        .collect::<Result<Vec<_>>>()?;
    attach_savings(&mut rows);
    Ok(rows)
}

fn header() -> Vec<String> {
    let mut h: Vec<String> = ["scenario", "client", "server", "client_tier", "server_tier", "platform", "workload"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for p in Phase::ALL {
        h.push(format!("{p}_time_s"));
        h.push(format!("{p}_energy_j"));
    }
    for s in ["total_time_s", "total_energy_j", "savings_vs_baseline_pct", "source"] {
        h.push(s.to_string());
    }
    h
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_err(e: csv::Error) -> Error {
    Error::Report(e.to_string())
}

pub fn write_results_csv<W: Write>(rows: &[ReportRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(header()).map_err(csv_err)?;
    for r in rows {
        let mut rec = vec![
            r.scenario.to_string(),
            r.client.clone(),
            r.server.clone(),
            r.client_tier.as_str().to_string(),
            r.server_tier.as_str().to_string(),
            r.platform.to_string(),
            r.workload.to_string(),
        ];
        for p in r.phases {
            rec.push(opt(p.map(|x| x.0)));
            rec.push(opt(p.map(|x| x.1)));
        }
        rec.push(r.total_time.to_string());
        rec.push(r.total_energy.to_string());
        rec.push(opt(r.savings_vs_baseline));
        rec.push(r.source.as_str().to_string());
        w.write_record(rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Report(e.to_string()))
}

pub fn results_csv_string(rows: &[ReportRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_results_csv(rows, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

fn tier_from(s: &str) -> Result<Tier> {
    [Tier::Rpi, Tier::EdgeNode, Tier::EdgeServer, Tier::PrivateCloud, Tier::PublicCloud]
        .into_iter()
        .find(|t| t.as_str() == s)
        .ok_or_else(|| Error::Parse(format!("unknown tier `{s}`")))
}

pub fn read_results_csv<R: Read>(input: R) -> Result<Vec<ReportRow>> {
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let expected = header();
    let got: Vec<String> = rd.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    if got != expected {
        return Err(Error::Parse("results.csv header does not match the expected columns".into()));
    }
    let mut rows = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let line = i + 2;
        let bad = |col: usize| Error::Parse(format!("results.csv:{line}: invalid `{}` in {}", &rec[col], expected[col]));
        let num = |col: usize| -> Result<f64> { rec[col].parse::<f64>().map_err(|_| bad(col)) };
        let opt_num = |col: usize| -> Result<Option<f64>> {
            if rec[col].is_empty() {
                Ok(None)
            } else {
                num(col).map(Some)
            }
        };
        let mut phases = [None; 6];
        for (k, slot) in phases.iter_mut().enumerate() {
            let (t, e) = (opt_num(7 + 2 * k)?, opt_num(8 + 2 * k)?);
            *slot = match (t, e) {
                (Some(t), Some(e)) => Some((t, e)),
                (None, None) => None,
                _ => return Err(bad(7 + 2 * k)),
            };
        }
        let source = match &rec[22] {
            "simulated" => RowSource::Simulated,
            "measured" => RowSource::Measured,
            _ => return Err(bad(22)),
        };
        rows.push(ReportRow {
            scenario: rec[0].parse().map_err(|_| bad(0))?,
            client: rec[1].to_string(),
            server: rec[2].to_string(),
            client_tier: tier_from(&rec[3])?,
            server_tier: tier_from(&rec[4])?,
            platform: rec[5].parse()?,
            workload: rec[6].parse()?,
            phases,
            total_time: num(19)?,
            total_energy: num(20)?,
            savings_vs_baseline: opt_num(21)?,
            source,
        });
    }
    Ok(rows)
}

fn mean(xs: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (n, s) = xs.into_iter().fold((0usize, 0.0), |(n, s), x| (n + 1, s + x));
    (n > 0).then(|| s / n as f64)
}

/// Energy shares of one scenario class, in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseFractions {
    /// Data generation.
    pub generation: f64,
    /// Data transmission plus result return.
    pub transmission: f64,
    pub copy: f64,
    /// Processing plus platform initialisation.
    pub processing: f64,
    pub cells: usize,
}

impl PhaseFractions {
    fn of(rows: &[&ReportRow]) -> Option<Self> {
        let share = |f: &dyn Fn(&ReportRow) -> f64| mean(rows.iter().map(|r| 100.0 * f(r) / r.total_energy));
        Some(PhaseFractions {
            generation: share(&|r| r.phase_energy(Phase::DataGeneration))?,
            transmission: share(&|r| r.phase_energy(Phase::DataTransmission) + r.phase_energy(Phase::ResultReturn))?,
            copy: share(&|r| r.phase_energy(Phase::CopyToDfs))?,
            processing: share(&|r| r.phase_energy(Phase::DataProcessing) + r.phase_energy(Phase::InitPlatform))?,
            cells: rows.len(),
        })
    }
}

/// Private- versus public-cloud comparison for one client.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CloudDelta {
    pub private_energy: f64,
    pub public_energy: f64,
    pub private_transmission: f64,
    pub public_transmission: f64,
}

impl CloudDelta {
    /// How much lower private is, relative to public.
    pub fn total_lower_pct(&self) -> f64 {
        100.0 * (self.public_energy - self.private_energy) / self.public_energy
    }

    /// How much higher public is, relative to private.
    pub fn total_higher_pct(&self) -> f64 {
        100.0 * (self.public_energy - self.private_energy) / self.private_energy
    }

    pub fn transmission_lower_pct(&self) -> f64 {
        100.0 * (self.public_transmission - self.private_transmission) / self.public_transmission
    }

    pub fn transmission_higher_pct(&self) -> f64 {
        100.0 * (self.public_transmission - self.private_transmission) / self.private_transmission
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ranking {
    pub scenario: u32,
    pub workload: WorkloadName,
    /// Platforms from lowest to highest client energy.
    pub order: Vec<(PlatformName, f64)>,
}

impl Ranking {
    /// `(max − min) / min` of client energy, in percent.
    pub fn spread_pct(&self) -> f64 {
        let lo = self.order.first().map_or(0.0, |x| x.1);
        let hi = self.order.last().map_or(0.0, |x| x.1);
        100.0 * (hi - lo) / lo
    }

    /// Flink ≤ Spark ≤ Hadoop, when all three are present.
    pub fn flink_spark_hadoop(&self) -> Option<bool> {
        let e = |p| self.order.iter().find(|x| x.0 == p).map(|x| x.1);
        let (h, s, f) = (e(PlatformName::Hadoop)?, e(PlatformName::Spark)?, e(PlatformName::Flink)?);
        Some(f <= s && s <= h)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    /// Mean savings over all offloading cells with a baseline.
    pub overall_savings: Option<f64>,
    /// Per client tier: mean over its offloading cells.
    pub client_savings: BTreeMap<Tier, f64>,
    /// Per (client tier, server tier).
    pub destination_savings: BTreeMap<(Tier, Tier), f64>,
    /// Per client tier: `100 × (1 − batch / iterative)` of baseline processing energy.
    pub batch_iterative_gap: BTreeMap<Tier, f64>,
    pub rankings: Vec<Ranking>,
    pub cloud_deltas: BTreeMap<Tier, CloudDelta>,
    /// Per (client tier, offloading, kind).
    pub fractions: BTreeMap<(Tier, bool, WorkloadKind), PhaseFractions>,
    /// Edge-server to cloud savings per platform, grep excluded.
    pub edge_server_cloud_savings: BTreeMap<PlatformName, f64>,
    /// Edge-server to cloud grep cells: (platform, server tier, savings).
    pub edge_server_grep: Vec<(PlatformName, Tier, f64)>,
}

pub fn aggregate_report(rows: &[ReportRow]) -> Result<Report> {
    if rows.is_empty() {
        return Err(Error::Report("no result rows".into()));
    }
    let saved: Vec<&ReportRow> = rows.iter().filter(|r| r.savings_vs_baseline.is_some()).collect();
    let s = |r: &ReportRow| r.savings_vs_baseline.expect("filtered");

    let mut client_savings = BTreeMap::new();
    let mut destination_savings = BTreeMap::new();
    let mut tiers: Vec<Tier> = rows.iter().map(|r| r.client_tier).collect();
    tiers.sort();
    tiers.dedup();
    for &c in &tiers {
        if let Some(m) = mean(saved.iter().filter(|r| r.client_tier == c).map(|r| s(r))) {
            client_savings.insert(c, m);
        }
        let mut dests: Vec<Tier> = saved.iter().filter(|r| r.client_tier == c).map(|r| r.server_tier).collect();
        dests.sort();
        dests.dedup();
        for d in dests {
            let m = mean(
                saved
                    .iter()
                    .filter(|r| r.client_tier == c && r.server_tier == d)
                    .map(|r| s(r)),
            )
            .expect("non-empty");
            destination_savings.insert((c, d), m);
        }
    }

    let mut batch_iterative_gap = BTreeMap::new();
    for &c in &tiers {
        let base = |k: WorkloadKind| {
            mean(
                rows.iter()
                    .filter(|r| !r.is_offloading() && r.client_tier == c && r.workload.kind() == k)
                    .map(|r| r.phase_energy(Phase::DataProcessing)),
            )
        };
        if let (Some(b), Some(i)) = (base(WorkloadKind::Batch), base(WorkloadKind::Iterative)) {
            if i > 0.0 {
                batch_iterative_gap.insert(c, 100.0 * (1.0 - b / i));
            }
        }
    }

    let mut groups: BTreeMap<(u32, WorkloadName), Vec<(PlatformName, f64)>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.scenario, r.workload)).or_default().push((r.platform, r.total_energy));
    }
    let rankings = groups
        .into_iter()
        .map(|((scenario, workload), mut order)| {
            order.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            Ranking {
                scenario,
                workload,
                order,
            }
        })
        .collect();

    let mut cloud_deltas = BTreeMap::new();
    for &c in &tiers {
        let of = |d: Tier, f: &dyn Fn(&ReportRow) -> f64| {
            mean(rows.iter().filter(|r| r.client_tier == c && r.server_tier == d).map(f))
        };
        let total = |r: &ReportRow| r.total_energy;
        let tx = |r: &ReportRow| r.phase_energy(Phase::DataTransmission);
        if let (Some(pe), Some(ue), Some(pt), Some(ut)) = (
            of(Tier::PrivateCloud, &total),
            of(Tier::PublicCloud, &total),
            of(Tier::PrivateCloud, &tx),
            of(Tier::PublicCloud, &tx),
        ) {
            cloud_deltas.insert(
                c,
                CloudDelta {
                    private_energy: pe,
                    public_energy: ue,
                    private_transmission: pt,
                    public_transmission: ut,
                },
            );
        }
    }

    let mut fractions = BTreeMap::new();
    for &c in &tiers {
        for off in [false, true] {
            for k in [WorkloadKind::Batch, WorkloadKind::Iterative] {
                // edge-to-edge offloading is reported with the cloud classes
                let cls: Vec<&ReportRow> = rows
                    .iter()
                    .filter(|r| {
                        r.client_tier == c && r.is_offloading() == off && r.workload.kind() == k && r.total_energy > 0.0
                    })
                    .collect();
                if let Some(f) = PhaseFractions::of(&cls) {
                    fractions.insert((c, off, k), f);
                }
            }
        }
    }

    let es_cloud = |r: &&&ReportRow| r.client_tier == Tier::EdgeServer && r.server_tier.is_cloud();
    let mut edge_server_cloud_savings = BTreeMap::new();
    for p in PlatformName::ALL {
        if let Some(m) = mean(
            saved
                .iter()
                .filter(es_cloud)
                .filter(|r| r.platform == p && r.workload != WorkloadName::Grep)
                .map(|r| s(r)),
        ) {
            edge_server_cloud_savings.insert(p, m);
        }
    }
    let edge_server_grep = saved
        .iter()
        .filter(es_cloud)
        .filter(|r| r.workload == WorkloadName::Grep)
        .map(|r| (r.platform, r.server_tier, s(r)))
        .collect();

    Ok(Report {
        overall_savings: mean(saved.iter().map(|r| s(r))),
        client_savings,
        destination_savings,
        batch_iterative_gap,
        rankings,
        cloud_deltas,
        fractions,
        edge_server_cloud_savings,
        edge_server_grep,
    })
}

/// Edge-node offloading fractions as quoted: mean over the edge-server and
/// cloud destinations.
pub fn edge_node_offload_fractions(rows: &[ReportRow], kind: WorkloadKind) -> Option<PhaseFractions> {
    let cls: Vec<&ReportRow> = rows
        .iter()
        .filter(|r| r.client_tier == Tier::EdgeNode && r.is_offloading() && r.workload.kind() == kind)
        .collect();
    PhaseFractions::of(&cls)
}

fn f2(x: f64) -> String {
    format!("{x:.2}")
}

impl Report {
    pub fn render(&self, rows: &[ReportRow]) -> String {
        let mut o = String::new();
        let _ = writeln!(o, "# edgewatt report");
        let _ = writeln!(o, "# means are unweighted over platforms and workloads");
        let _ = writeln!(o, "# savings = 100 * (baseline - offload) / baseline, same client/platform/workload");
        let _ = writeln!(o);
        let _ = writeln!(o, "[savings]");
        if let Some(m) = self.overall_savings {
            let _ = writeln!(o, "all_clients_mean = {}", f2(m));
        }
        for (c, m) in &self.client_savings {
            let _ = writeln!(o, "{}_mean = {}", c.as_str(), f2(*m));
        }
        for ((c, d), m) in &self.destination_savings {
            let _ = writeln!(o, "{}->{} = {}", c.as_str(), d.as_str(), f2(*m));
        }
        for (p, m) in &self.edge_server_cloud_savings {
            let _ = writeln!(o, "edge_server->cloud_no_grep.{p} = {}", f2(*m));
        }
        for (p, d, m) in &self.edge_server_grep {
            let _ = writeln!(o, "edge_server->{}.grep.{p} = {}", d.as_str(), f2(*m));
        }
        let _ = writeln!(o);
        let _ = writeln!(o, "[batch_vs_iterative]");
        for (c, g) in &self.batch_iterative_gap {
            let _ = writeln!(o, "{}_baseline_processing_gap = {}", c.as_str(), f2(*g));
        }
        let _ = writeln!(o);
        let _ = writeln!(o, "[private_vs_public]");
        for (c, d) in &self.cloud_deltas {
            let n = c.as_str();
            let _ = writeln!(o, "{n}.total_private_lower = {}", f2(d.total_lower_pct()));
            let _ = writeln!(o, "{n}.total_public_higher = {}", f2(d.total_higher_pct()));
            let _ = writeln!(o, "{n}.transmission_private_lower = {}", f2(d.transmission_lower_pct()));
            let _ = writeln!(o, "{n}.transmission_public_higher = {}", f2(d.transmission_higher_pct()));
        }
        let _ = writeln!(o);
        let _ = writeln!(o, "[phase_fractions]");
        let _ = writeln!(o, "# class = generation transmission copy processing (percent of client energy)");
        for ((c, off, k), f) in &self.fractions {
            let _ = writeln!(
                o,
                "{}.{}.{} = {} {} {} {}",
                c.as_str(),
                if *off { "offloading" } else { "local" },
                match k {
                    WorkloadKind::Batch => "batch",
                    WorkloadKind::Iterative => "iterative",
                },
                f2(f.generation),
                f2(f.transmission),
                f2(f.copy),
                f2(f.processing)
            );
        }
        let _ = writeln!(o);
        let _ = writeln!(o, "[platform_ranking]");
        let _ = writeln!(o, "# scenario workload: lowest to highest client energy; spread in percent");
        for r in &self.rankings {
            let order: Vec<&str> = r.order.iter().map(|x| x.0.as_str()).collect();
            let _ = writeln!(o, "{} {} = {} spread {}", r.scenario, r.workload, order.join(" < "), f2(r.spread_pct()));
        }
        let _ = writeln!(o);
        let _ = writeln!(o, "rows = {}", rows.len());
        o
    }
}

/// Figure identifiers accepted by [`plot_data`].
pub const FIGURES: [&str; 8] = [
    "rpi-energy",
    "edge-node-energy",
    "edge-server-energy",
    "transmission",
    "transmission-edge-node",
    "stages",
    "device-energy",
    "device-time",
];

#[derive(Debug, Clone, PartialEq)]
pub struct PlotRow {
    pub panel: String,
    pub x: String,
    pub series: String,
    pub value: f64,
}

fn find<'a>(rows: &'a [ReportRow], c: Tier, s: Tier, p: PlatformName, w: WorkloadName) -> Option<&'a ReportRow> {
    rows.iter()
        .find(|r| r.client_tier == c && r.server_tier == s && r.platform == p && r.workload == w)
}

fn cells(
    rows: &[ReportRow],
    client: Tier,
    servers: &[Tier],
    value: &dyn Fn(&ReportRow) -> f64,
    out: &mut Vec<PlotRow>,
    missing: &mut Vec<String>,
) {
    for w in WorkloadName::ALL {
        for &s in servers {
            for p in PlatformName::ALL {
                match find(rows, client, s, p, w) {
                    Some(r) => out.push(PlotRow {
                        panel: w.to_string(),
                        x: s.as_str().to_string(),
                        series: p.to_string(),
                        value: value(r),
                    }),
                    None => missing.push(format!("{}->{} {p} {w}", client.as_str(), s.as_str())),
                }
            }
        }
    }
}

fn transmission(rows: &[ReportRow], client: Tier, servers: &[Tier], out: &mut Vec<PlotRow>, missing: &mut Vec<String>) {
    for w in WorkloadName::ALL {
        for &s in servers {
            let rs: Vec<&ReportRow> = PlatformName::ALL
                .iter()
                .filter_map(|&p| {
                    let r = find(rows, client, s, p, w);
                    if r.is_none() {
                        missing.push(format!("{}->{} {p} {w}", client.as_str(), s.as_str()));
                    }
                    r
                })
                .collect();
            if rs.len() == PlatformName::ALL.len() {
                for (panel, f) in [
                    ("time_s", Phase::DataTransmission as usize),
                    ("energy_j", Phase::DataTransmission as usize),
                ] {
                    let v = mean(rs.iter().map(|r| {
                        let (t, e) = r.phases[f].unwrap_or((0.0, 0.0));
                        if panel == "time_s" {
                            t
                        } else {
                            e
                        }
                    }))
                    .expect("non-empty");
                    out.push(PlotRow {
                        panel: panel.to_string(),
                        x: w.to_string(),
                        series: s.as_str().to_string(),
                        value: v,
                    });
                }
            }
        }
    }
}

/// Tidy rows for one figure; errors name every missing cell.
pub fn plot_data(rows: &[ReportRow], figure: &str) -> Result<Vec<PlotRow>> {
    use Tier::*;
    let mut out = Vec::new();
    let mut missing = Vec::new();
    let energy = |r: &ReportRow| r.total_energy;
    let time = |r: &ReportRow| r.total_time;
    match figure {
        "rpi-energy" => cells(rows, Rpi, &[Rpi, EdgeNode, EdgeServer, PrivateCloud, PublicCloud], &energy, &mut out, &mut missing),
        "edge-node-energy" => cells(rows, EdgeNode, &[EdgeNode, EdgeServer, PrivateCloud, PublicCloud], &energy, &mut out, &mut missing),
        "edge-server-energy" => cells(rows, EdgeServer, &[EdgeServer, PrivateCloud, PublicCloud], &energy, &mut out, &mut missing),
        "transmission" => transmission(rows, Rpi, &[PrivateCloud, PublicCloud], &mut out, &mut missing),
        "transmission-edge-node" => {
            transmission(rows, EdgeNode, &[EdgeServer, PrivateCloud, PublicCloud], &mut out, &mut missing)
        }
        "stages" => {
            let mut scen: Vec<(u32, Tier, Tier)> = rows.iter().map(|r| (r.scenario, r.client_tier, r.server_tier)).collect();
            scen.sort_by_key(|x| x.0);
            scen.dedup();
            if scen.is_empty() {
                missing.push("any scenario".into());
            }
            for (id, c, s) in scen {
                for w in WorkloadName::ALL {
                    let rs: Vec<&ReportRow> = rows.iter().filter(|r| r.scenario == id && r.workload == w).collect();
                    if rs.is_empty() {
                        missing.push(format!("scenario {id} {w}"));
                        continue;
                    }
                    for ph in Phase::ALL {
                        if rs.iter().all(|r| r.phases[ph as usize].is_none()) {
                            continue;
                        }
                        out.push(PlotRow {
                            panel: format!("{}->{}", c.as_str(), s.as_str()),
                            x: w.to_string(),
                            series: ph.to_string(),
                            value: mean(rs.iter().map(|r| r.phase_energy(ph))).expect("non-empty"),
                        });
                    }
                }
            }
        }
        "device-energy" | "device-time" => {
            let f: &dyn Fn(&ReportRow) -> f64 = if figure == "device-energy" { &energy } else { &time };
            for w in WorkloadName::ALL {
                for d in [Rpi, EdgeNode, EdgeServer] {
                    for p in PlatformName::ALL {
                        match find(rows, d, d, p, w) {
                            Some(r) => out.push(PlotRow {
                                panel: w.to_string(),
                                x: d.as_str().to_string(),
                                series: p.to_string(),
                                value: f(r),
                            }),
                            None => missing.push(format!("{}->{} {p} {w}", d.as_str(), d.as_str())),
                        }
                    }
                }
            }
        }
        other => {
            return Err(Error::Report(format!(
                "unknown figure `{other}`; valid ids: {}",
                FIGURES.join(", ")
            )))
        }
    }
    if !missing.is_empty() {
        return Err(Error::Report(format!("figure {figure}: missing cells: {}", missing.join("; "))));
    }
    Ok(out)
}

pub fn plot_csv_string(rows: &[PlotRow]) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(["panel", "x", "series", "value"]).map_err(csv_err)?;
    for r in rows {
        w.write_record([r.panel.as_str(), r.x.as_str(), r.series.as_str(), &r.value.to_string()])
            .map_err(csv_err)?;
    }
    let buf = w.into_inner().map_err(|e| Error::Report(e.to_string()))?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}
