//! Declarative description of an experiment: nodes, links, platforms,
//! workloads and the scenarios that pair a client with a server.
//!
//! An [`ExperimentPlan`] is plain data loaded from (or written to) a TOML
//! file. [`validate_plan`] checks every invariant, fills defaults, and
//! returns a [`Catalog`], which is immutable and cheap to share between
//! concurrently running scenario cells.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, PlanError};

/// Output of `edgewatt calibrate --inputs data/reference`.
const BUNDLED: &str = include_str!("../data/default.toml");

pub const DEFAULT_DATA_SIZE_MB: f64 = 3072.0;
pub const DEFAULT_ITERATIONS: u32 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    Rpi,
    EdgeNode,
    EdgeServer,
    PrivateCloud,
    PublicCloud,
}

impl Tier {
    pub fn is_cloud(self) -> bool {
        matches!(self, Tier::PrivateCloud | Tier::PublicCloud)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Tier::Rpi => "rpi",
            Tier::EdgeNode => "edge_node",
            Tier::EdgeServer => "edge_server",
            Tier::PrivateCloud => "private_cloud",
            Tier::PublicCloud => "public_cloud",
        }
    }
}

/// The (client, server) tier pairs of the twelve reference scenarios.
pub const TABLE_I_PAIRS: [(Tier, Tier); 12] = [
    (Tier::Rpi, Tier::Rpi),
    (Tier::Rpi, Tier::EdgeNode),
    (Tier::Rpi, Tier::EdgeServer),
    (Tier::Rpi, Tier::PrivateCloud),
    (Tier::Rpi, Tier::PublicCloud),
    (Tier::EdgeNode, Tier::EdgeNode),
    (Tier::EdgeNode, Tier::EdgeServer),
    (Tier::EdgeNode, Tier::PrivateCloud),
    (Tier::EdgeNode, Tier::PublicCloud),
    (Tier::EdgeServer, Tier::EdgeServer),
    (Tier::EdgeServer, Tier::PrivateCloud),
    (Tier::EdgeServer, Tier::PublicCloud),
];

/// A compute device. For cloud tiers the fields describe one VM and
/// `cluster_size` how many of them form the cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub id: String,
    pub tier: Tier,
    pub cores: u32,
    /// GB
    pub ram: f64,
    /// GB
    pub disk: f64,
    /// MB/s
    pub disk_read_rate: f64,
    /// MB/s
    pub disk_write_rate: f64,
    /// W
    pub p_idle: f64,
    /// W
    pub p_busy: f64,
    pub metered: bool,
    #[serde(default = "one")]
    pub cluster_size: u32,
    /// Relative per-core throughput; the edge node is the 1.0 reference.
    #[serde(default = "one_f")]
    pub core_speed: f64,
    /// MB/s of synthetic input produced on this node. Defaults to
    /// `disk_write_rate × model.generation_rate_factor`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generation_rate: Option<f64>,
}

impl NodeSpec {
    /// Aggregate processing capacity in core-equivalents.
    pub fn capacity(&self) -> f64 {
        f64::from(self.cluster_size) * f64::from(self.cores) * self.core_speed
    }

    /// Generation rate after defaults have been filled in by validation.
    pub fn generation_rate(&self) -> f64 {
        self.generation_rate.unwrap_or(self.disk_write_rate)
    }
}

fn one() -> u32 {
    1
}

fn one_f() -> f64 {
    1.0
}

/// A directed client→server channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkSpec {
    pub client: String,
    pub server: String,
    /// MB/s
    pub bandwidth: f64,
    /// m
    pub distance: f64,
    /// s per chunk transfer
    #[serde(default)]
    pub handshake_latency: f64,
    /// The value is an editable estimate, not a measured figure.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub estimated: bool,
}

impl LinkSpec {
    pub fn is_local(&self) -> bool {
        self.client == self.server
    }

    /// Implicit link used when a scenario executes on its own client.
    pub fn local(node: &str) -> Self {
        LinkSpec {
            client: node.to_string(),
            server: node.to_string(),
            bandwidth: f64::INFINITY,
            distance: 0.0,
            handshake_latency: 0.0,
            estimated: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlatformName {
    Hadoop,
    Spark,
    Flink,
}

impl PlatformName {
    pub const ALL: [PlatformName; 3] = [PlatformName::Hadoop, PlatformName::Spark, PlatformName::Flink];

    pub fn as_str(self) -> &'static str {
        match self {
            PlatformName::Hadoop => "hadoop",
            PlatformName::Spark => "spark",
            PlatformName::Flink => "flink",
        }
    }
}

impl fmt::Display for PlatformName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for PlatformName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown platform `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StorageMode {
    DiskBased,
    MemoryBased,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorkloadKind {
    Batch,
    Iterative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KindUtilization {
    pub batch: f64,
    pub iterative: f64,
}

impl KindUtilization {
    pub fn get(&self, kind: WorkloadKind) -> f64 {
        match kind {
            WorkloadKind::Batch => self.batch,
            WorkloadKind::Iterative => self.iterative,
        }
    }
}

/// Behavioral coefficients of a data processing platform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlatformProfile {
    pub name: PlatformName,
    pub storage_mode: StorageMode,
    /// Normalized work units per iteration, fitted from processing times.
    #[serde(default)]
    pub work_coeff: BTreeMap<WorkloadName, f64>,
    /// Share of a local run's energy spent initializing the platform.
    pub init_energy_fraction: f64,
    /// MB/s written while processing.
    pub disk_write_rate_active: f64,
    /// MB/s read while processing.
    pub disk_read_rate_active: f64,
    /// MB/s accepted when loading input into the distributed file system.
    pub ingest_rate: f64,
    pub cpu_util_processing: KindUtilization,
    /// Client utilization while it waits on a remote server.
    pub cpu_util_idle_wait: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorkloadName {
    Grep,
    Wordcount,
    Kmeans,
    Pagerank,
}

impl WorkloadName {
    pub const ALL: [WorkloadName; 4] = [
        WorkloadName::Grep,
        WorkloadName::Wordcount,
        WorkloadName::Kmeans,
        WorkloadName::Pagerank,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            WorkloadName::Grep => "grep",
            WorkloadName::Wordcount => "wordcount",
            WorkloadName::Kmeans => "kmeans",
            WorkloadName::Pagerank => "pagerank",
        }
    }

    pub fn kind(self) -> WorkloadKind {
        match self {
            WorkloadName::Grep | WorkloadName::Wordcount => WorkloadKind::Batch,
            WorkloadName::Kmeans | WorkloadName::Pagerank => WorkloadKind::Iterative,
        }
    }
}

impl fmt::Display for WorkloadName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for WorkloadName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|w| w.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown workload `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadSpec {
    pub name: WorkloadName,
    pub kind: WorkloadKind,
    /// MB
    #[serde(default = "default_data_size")]
    pub data_size: f64,
    /// 0 means "use the default for the kind".
    #[serde(default)]
    pub iterations: u32,
    /// Relative cost of producing one MB of this workload's input.
    #[serde(default = "one_f")]
    pub generation_cost: f64,
    /// Seconds the workload is bound on intermediate-data writes at the
    /// platform's active write rate, independent of core count.
    #[serde(default)]
    pub io_stall: f64,
    /// Result size as a share of the input size.
    #[serde(default = "default_result_fraction")]
    pub result_fraction: f64,
}

fn default_data_size() -> f64 {
    DEFAULT_DATA_SIZE_MB
}

fn default_result_fraction() -> f64 {
    0.01
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Concept {
    Offloading,
    NonOffloading,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: u32,
    pub client: String,
    pub server: String,
    pub concept: Concept,
}

impl Scenario {
    pub fn is_offloading(&self) -> bool {
        self.concept == Concept::Offloading
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    InitPlatform,
    DataGeneration,
    DataTransmission,
    CopyToDfs,
    DataProcessing,
    ResultReturn,
}

impl Phase {
    pub const ALL: [Phase; 6] = [
        Phase::InitPlatform,
        Phase::DataGeneration,
        Phase::DataTransmission,
        Phase::CopyToDfs,
        Phase::DataProcessing,
        Phase::ResultReturn,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Phase::InitPlatform => "init_platform",
            Phase::DataGeneration => "data_generation",
            Phase::DataTransmission => "data_transmission",
            Phase::CopyToDfs => "copy_to_dfs",
            Phase::DataProcessing => "data_processing",
            Phase::ResultReturn => "result_return",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Phase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown phase `{s}`")))
    }
}

/// Ordered phases executed for one scenario.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhasePlan(Vec<Phase>);

impl PhasePlan {
    pub fn for_concept(concept: Concept) -> Self {
        let phases = Phase::ALL.into_iter().filter(|p| match concept {
            Concept::Offloading => true,
            Concept::NonOffloading => !matches!(p, Phase::DataTransmission | Phase::ResultReturn),
        });
        PhasePlan(phases.collect())
    }

    pub fn phases(&self) -> &[Phase] {
        &self.0
    }
}

/// Global constants of the phase model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseModel {
    /// MB per transfer chunk; each chunk pays one handshake plus a round trip.
    pub chunk_size: f64,
    /// m/s
    pub signal_speed: f64,
    /// Client utilization while generating input data.
    pub generation_util: f64,
    /// Client utilization while sending or receiving data.
    pub transfer_util: f64,
    /// Client utilization while copying data into a local file system.
    pub copy_util: f64,
    /// Multiplier on `disk_write_rate` for nodes without an explicit
    /// generation rate.
    pub generation_rate_factor: f64,
}

impl Default for PhaseModel {
    fn default() -> Self {
        PhaseModel {
            chunk_size: 64.0,
            signal_speed: 2.0e8,
            generation_util: 0.25,
            transfer_util: 0.02,
            copy_util: 0.1,
            generation_rate_factor: 0.8,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PlanMeta {
    #[serde(default)]
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    /// Free-form calibration provenance (residuals, sources).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub calibration: BTreeMap<String, String>,
}

/// Everything needed to run a matrix of scenarios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    #[serde(default)]
    pub meta: PlanMeta,
    #[serde(default)]
    pub model: PhaseModel,
    #[serde(default)]
    pub nodes: Vec<NodeSpec>,
    #[serde(default)]
    pub links: Vec<LinkSpec>,
    #[serde(default)]
    pub platforms: Vec<PlatformProfile>,
    #[serde(default)]
    pub workloads: Vec<WorkloadSpec>,
    #[serde(default)]
    pub scenarios: Vec<Scenario>,
}

impl ExperimentPlan {
    pub fn from_toml(text: &str) -> Result<Self, Error> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String, Error> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn save(&self, path: &Path) -> Result<(), Error> {
        std::fs::write(path, self.to_toml()?).map_err(|e| Error::io(path, e))
    }

    /// Keep only the listed scenarios, platforms and workloads. `None` keeps all.
    pub fn restrict(
        &mut self,
        scenarios: Option<&[u32]>,
        platforms: Option<&[PlatformName]>,
        workloads: Option<&[WorkloadName]>,
    ) {
        if let Some(ids) = scenarios {
            self.scenarios.retain(|s| ids.contains(&s.id));
        }
        if let Some(names) = platforms {
            self.platforms.retain(|p| names.contains(&p.name));
        }
        if let Some(names) = workloads {
            self.workloads.retain(|w| names.contains(&w.name));
        }
    }
}

/// The built-in catalog: five nodes, the bandwidth matrix, three
/// platform profiles, four workloads and the twelve reference scenarios.
pub fn default_plan() -> ExperimentPlan {
    ExperimentPlan::from_toml(BUNDLED).expect("bundled default.toml parses")
}

pub fn default_catalog() -> Catalog {
    validate_plan(default_plan()).expect("bundled default.toml validates")
}

/// A validated, normalized plan with id lookups.
#[derive(Debug, Clone)]
pub struct Catalog {
    plan: ExperimentPlan,
    nodes: HashMap<String, usize>,
    links: HashMap<(String, String), usize>,
}

impl Catalog {
    /// Index a plan without validating it.
    #[cfg(test)]
    pub(crate) fn unchecked(plan: ExperimentPlan) -> Self {
        let nodes = plan.nodes.iter().enumerate().map(|(i, n)| (n.id.clone(), i)).collect();
        let links = plan
            .links
            .iter()
            .enumerate()
            .map(|(i, l)| ((l.client.clone(), l.server.clone()), i))
            .collect();
        Catalog { plan, nodes, links }
    }

    pub fn plan(&self) -> &ExperimentPlan {
        &self.plan
    }

    pub fn into_plan(self) -> ExperimentPlan {
        self.plan
    }

    pub fn model(&self) -> &PhaseModel {
        &self.plan.model
    }

    pub fn node(&self, id: &str) -> Option<&NodeSpec> {
        self.nodes.get(id).map(|&i| &self.plan.nodes[i])
    }

    pub fn node_by_tier(&self, tier: Tier) -> Option<&NodeSpec> {
        self.plan.nodes.iter().find(|n| n.tier == tier)
    }

    /// Link for the pair; a local pair always resolves to the implicit link.
    pub fn link(&self, client: &str, server: &str) -> Option<LinkSpec> {
        if client == server {
            return Some(LinkSpec::local(client));
        }
        self.links
            .get(&(client.to_string(), server.to_string()))
            .map(|&i| self.plan.links[i].clone())
    }

    pub fn platform(&self, name: PlatformName) -> Option<&PlatformProfile> {
        self.plan.platforms.iter().find(|p| p.name == name)
    }

    pub fn workload(&self, name: WorkloadName) -> Option<&WorkloadSpec> {
        self.plan.workloads.iter().find(|w| w.name == name)
    }

    pub fn scenario(&self, id: u32) -> Option<&Scenario> {
        self.plan.scenarios.iter().find(|s| s.id == id)
    }

    pub fn scenarios(&self) -> &[Scenario] {
        &self.plan.scenarios
    }

    pub fn platforms(&self) -> &[PlatformProfile] {
        &self.plan.platforms
    }

    pub fn workloads(&self) -> &[WorkloadSpec] {
        &self.plan.workloads
    }

    pub fn nodes(&self) -> &[NodeSpec] {
        &self.plan.nodes
    }
}

/// Check every invariant of the plan and fill defaults. All problems are
/// collected rather than stopping at the first.
pub fn validate_plan(mut plan: ExperimentPlan) -> Result<Catalog, PlanError> {
    let mut issues = Vec::new();
    let mut issue = |msg: String| issues.push(msg);

    let model = &plan.model;
    if !(model.chunk_size > 0.0) {
        issue("model.chunk_size must be positive".into());
    }
    if !(model.signal_speed > 0.0) {
        issue("model.signal_speed must be positive".into());
    }
    if !(model.generation_rate_factor > 0.0) {
        issue("model.generation_rate_factor must be positive".into());
    }
    for (name, u) in [
        ("generation_util", model.generation_util),
        ("transfer_util", model.transfer_util),
        ("copy_util", model.copy_util),
    ] {
        if !(0.0..=1.0).contains(&u) {
            issue(format!("model.{name} must be in [0, 1], got {u}"));
        }
    }

    let mut nodes = HashMap::new();
    for (i, n) in plan.nodes.iter_mut().enumerate() {
        if nodes.insert(n.id.clone(), i).is_some() {
            issue(format!("duplicate node id `{}`", n.id));
        }
        let id = &n.id;
        if n.cores < 1 {
            issue(format!("node `{id}`: cores must be at least 1"));
        }
        for (field, v) in [
            ("ram", n.ram),
            ("disk", n.disk),
            ("disk_read_rate", n.disk_read_rate),
            ("disk_write_rate", n.disk_write_rate),
            ("p_idle", n.p_idle),
            ("core_speed", n.core_speed),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                issue(format!("node `{id}`: {field} must be positive and finite, got {v}"));
            }
        }
        if !(n.p_busy >= n.p_idle) {
            issue(format!("node `{id}`: p_busy ({}) below p_idle ({})", n.p_busy, n.p_idle));
        }
        if n.tier.is_cloud() && n.metered {
            issue(format!("node `{id}`: cloud tiers cannot be metered"));
        }
        if !n.tier.is_cloud() && n.cluster_size != 1 {
            issue(format!("node `{id}`: cluster_size must be 1 for non-cloud tiers"));
        }
        if n.cluster_size < 1 {
            issue(format!("node `{id}`: cluster_size must be at least 1"));
        }
        match n.generation_rate {
            Some(r) if !(r > 0.0) => issue(format!("node `{id}`: generation_rate must be positive")),
            Some(_) => {}
            None => n.generation_rate = Some(n.disk_write_rate * plan.model.generation_rate_factor),
        }
    }

    let mut links = HashMap::new();
    for (i, l) in plan.links.iter().enumerate() {
        for end in [&l.client, &l.server] {
            if !nodes.contains_key(end) {
                issue(format!("link {}→{}: unknown node id `{end}`", l.client, l.server));
            }
        }
        if !(l.bandwidth > 0.0) {
            issue(format!("link {}→{}: bandwidth must be positive, got {}", l.client, l.server, l.bandwidth));
        }
        if !(l.distance >= 0.0) {
            issue(format!("link {}→{}: distance must be non-negative", l.client, l.server));
        }
        if !(l.handshake_latency >= 0.0) {
            issue(format!("link {}→{}: handshake_latency must be non-negative", l.client, l.server));
        }
        if links.insert((l.client.clone(), l.server.clone()), i).is_some() {
            issue(format!("duplicate link {}→{}", l.client, l.server));
        }
    }

    let mut seen_platforms = Vec::new();
    for p in &plan.platforms {
        let name = p.name;
        if seen_platforms.contains(&name) {
            issue(format!("duplicate platform `{name}`"));
        }
        seen_platforms.push(name);
        let expected = match name {
            PlatformName::Hadoop => StorageMode::DiskBased,
            PlatformName::Spark | PlatformName::Flink => StorageMode::MemoryBased,
        };
        if p.storage_mode != expected {
            issue(format!("platform `{name}`: storage_mode must be {expected:?}"));
        }
        if !(0.0..1.0).contains(&p.init_energy_fraction) {
            issue(format!("platform `{name}`: init_energy_fraction must be in [0, 1)"));
        }
        for (field, u) in [
            ("cpu_util_processing.batch", p.cpu_util_processing.batch),
            ("cpu_util_processing.iterative", p.cpu_util_processing.iterative),
            ("cpu_util_idle_wait", p.cpu_util_idle_wait),
        ] {
            if !(0.0..=1.0).contains(&u) {
                issue(format!("platform `{name}`: {field} must be in [0, 1], got {u}"));
            }
        }
        for (field, v) in [
            ("disk_write_rate_active", p.disk_write_rate_active),
            ("disk_read_rate_active", p.disk_read_rate_active),
            ("ingest_rate", p.ingest_rate),
        ] {
            if !(v > 0.0) {
                issue(format!("platform `{name}`: {field} must be positive, got {v}"));
            }
        }
        for (w, c) in &p.work_coeff {
            if !(*c > 0.0) || !c.is_finite() {
                issue(format!("platform `{name}`: work_coeff[{w}] must be positive, got {c}"));
            }
        }
    }

    let mut seen_workloads = Vec::new();
    for w in plan.workloads.iter_mut() {
        let name = w.name;
        if seen_workloads.contains(&name) {
            issue(format!("duplicate workload `{name}`"));
        }
        seen_workloads.push(name);
        if w.kind != name.kind() {
            issue(format!("workload `{name}`: kind must be {:?}", name.kind()));
        }
        if w.iterations == 0 {
            w.iterations = match w.kind {
                WorkloadKind::Batch => 1,
                WorkloadKind::Iterative => DEFAULT_ITERATIONS,
            };
        }
        match w.kind {
            WorkloadKind::Batch if w.iterations != 1 => {
                issue(format!("workload `{name}`: batch workloads run exactly one iteration"))
            }
            WorkloadKind::Iterative if w.iterations < 2 => {
                issue(format!("workload `{name}`: iterative workloads need at least 2 iterations"))
            }
            _ => {}
        }
        if !(w.data_size > 0.0) {
            issue(format!("workload `{name}`: data_size must be positive, got {}", w.data_size));
        }
        if !(w.generation_cost > 0.0) {
            issue(format!("workload `{name}`: generation_cost must be positive"));
        }
        if !(w.io_stall >= 0.0) {
            issue(format!("workload `{name}`: io_stall must be non-negative"));
        }
        if !(0.0..=1.0).contains(&w.result_fraction) {
            issue(format!("workload `{name}`: result_fraction must be in [0, 1]"));
        }
        for p in &plan.platforms {
            if !p.work_coeff.contains_key(&name) {
                issue(format!("platform `{}`: missing work_coeff for workload `{name}`", p.name));
            }
        }
    }

    let mut seen_scenarios = Vec::new();
    for s in &plan.scenarios {
        let id = s.id;
        if seen_scenarios.contains(&id) {
            issue(format!("duplicate scenario id {id}"));
        }
        seen_scenarios.push(id);
        let client = nodes.get(&s.client).map(|&i| &plan.nodes[i]);
        let server = nodes.get(&s.server).map(|&i| &plan.nodes[i]);
        if client.is_none() {
            issue(format!("scenario {id}: unknown node id `{}`", s.client));
        }
        if server.is_none() {
            issue(format!("scenario {id}: unknown node id `{}`", s.server));
        }
        let local = s.client == s.server;
        if local != (s.concept == Concept::NonOffloading) {
            issue(format!("scenario {id}: concept must be non_offloading exactly when client = server"));
        }
        if let (Some(c), Some(v)) = (client, server) {
            if c.tier.is_cloud() {
                issue(format!("scenario {id}: cloud tier cannot be a client"));
            } else if !TABLE_I_PAIRS.contains(&(c.tier, v.tier)) {
                issue(format!(
                    "scenario {id}: offloading from {} to {} does not go towards a richer tier",
                    c.tier.as_str(),
                    v.tier.as_str()
                ));
            }
            if !local && !links.contains_key(&(s.client.clone(), s.server.clone())) {
                issue(format!("scenario {id}: missing link {}→{}", s.client, s.server));
            }
        }
    }

    if !issues.is_empty() {
        return Err(PlanError { issues });
    }
    Ok(Catalog { plan, nodes, links })
}
