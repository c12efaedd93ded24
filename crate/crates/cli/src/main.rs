use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use edgewatt::calibration::{calibrate, summarize, CalibrationInputs};
use edgewatt::model::{default_plan, validate_plan, Catalog, ExperimentPlan, PlatformName, Tier, WorkloadName};
use edgewatt::probes::{read_trace_dir, segment_phases, PhaseMarkerLog, MARKER_FILE};
use edgewatt::report::{
    aggregate_report, attach_savings, plot_csv_string, plot_data, read_results_csv, results_csv_string, ReportRow,
    RowSource, FIGURES,
};
use edgewatt::sim::{run_matrix, MatrixOptions};

#[derive(Parser)]
#[command(name = "edgewatt", version, about = "Edge/cloud offloading energy simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario matrix and write results, report and plot data.
    Run(RunArgs),
    /// Build result rows from measured traces and phase markers.
    Ingest(IngestArgs),
    /// Emit tidy plot data for one figure from a results file.
    Plotdata(PlotArgs),
    /// Write the built-in catalog as a plan file.
    Catalog(CatalogArgs),
    /// Fit a plan from reference data and traces.
    Calibrate(CalibrateArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Plan file; the built-in catalog when omitted.
    #[arg(long)]
    plan: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated scenario ids.
    #[arg(long, value_delimiter = ',')]
    scenarios: Option<Vec<u32>>,
    #[arg(long, value_delimiter = ',')]
    platforms: Option<Vec<PlatformName>>,
    #[arg(long, value_delimiter = ',')]
    workloads: Option<Vec<WorkloadName>>,
    /// Also write each metered cell's traces in probe formats under `traces/`.
    #[arg(long)]
    export_traces: bool,
}

#[derive(Args)]
struct IngestArgs {
    /// A trace directory, or a directory of per-run trace directories each
    /// holding its own marker log when `--markers` is omitted.
    #[arg(long)]
    traces: PathBuf,
    #[arg(long)]
    markers: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Plan used to resolve node tiers; the built-in catalog when omitted.
    #[arg(long)]
    plan: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long)]
    results: PathBuf,
    #[arg(long)]
    figure: String,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CatalogArgs {
    #[arg(long = "default", required = true)]
    default: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(long)]
    inputs: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Calibration report CSV; `<out>.calibration.csv` when omitted.
    #[arg(long)]
    report: Option<PathBuf>,
}

fn load_plan(path: Option<&Path>) -> Result<ExperimentPlan> {
    match path {
        Some(p) => ExperimentPlan::load(p).with_context(|| format!("loading plan {}", p.display())),
        None => Ok(default_plan()),
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// results.csv, report.txt and one CSV per figure the rows fully cover.
fn write_outputs(rows: &[ReportRow], out: &Path) -> Result<()> {
    write(&out.join("results.csv"), &results_csv_string(rows)?)?;
    let report = aggregate_report(rows)?;
    write(&out.join("report.txt"), &report.render(rows))?;
    for fig in FIGURES {
        if let Ok(data) = plot_data(rows, fig) {
            write(&out.join("plots").join(format!("{fig}.csv")), &plot_csv_string(&data)?)?;
        }
    }
    Ok(())
}

fn cmd_run(a: RunArgs) -> Result<ExitCode> {
    let mut plan = load_plan(a.plan.as_deref())?;
    plan.restrict(a.scenarios.as_deref(), a.platforms.as_deref(), a.workloads.as_deref());
    let catalog = validate_plan(plan)?;
    let cells = run_matrix(&catalog, a.seed, MatrixOptions { traces: a.export_traces });
    let mut failed = Vec::new();
    let mut ok = Vec::new();
    for c in &cells {
        match &c.outcome {
            Ok(r) => ok.push(r),
            Err(e) => failed.push(format!("scenario {} {} {}: {e}", c.scenario, c.platform, c.workload)),
        }
    }
    let rows = edgewatt::report::rows_from_results(ok.iter().copied(), &catalog)?;
    if rows.is_empty() {
        for f in &failed {
            eprintln!("error: {f}");
        }
        bail!("no cell completed");
    }
    write_outputs(&rows, &a.out)?;
    if a.export_traces {
        for r in &ok {
            let client = catalog.node(&r.scenario.client).expect("validated");
            if client.metered {
                let dir = a
                    .out
                    .join("traces")
                    .join(format!("s{:02}_{}_{}", r.scenario.id, r.platform, r.workload));
                edgewatt::probes::export_traces(r, client, &dir)?;
            }
        }
    }
    println!("{} rows written to {}", rows.len(), a.out.display());
    if failed.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        for f in &failed {
            eprintln!("error: {f}");
        }
        eprintln!("partial results: {} of {} cells failed", failed.len(), cells.len());
        Ok(ExitCode::FAILURE)
    }
}

fn ingest_one(traces: &Path, markers: &Path, catalog: &Catalog) -> Result<ReportRow> {
    let log = PhaseMarkerLog::load(markers)?;
    if log.markers.is_empty() {
        bail!("{}: no phase markers", markers.display());
    }
    let set = read_trace_dir(traces)?;
    if set.is_empty() {
        bail!("{}: no trace files", traces.display());
    }
    let phases = segment_phases(&set, &log).with_context(|| format!("segmenting {}", traces.display()))?;
    let meta = |k: &str| log.meta.get(k).map(String::as_str);
    let node = |id: &str| -> Result<Tier> {
        catalog
            .node(id)
            .map(|n| n.tier)
            .with_context(|| format!("{}: unknown node `{id}`", markers.display()))
    };
    let client = meta("client").context("marker log lacks `client`")?;
    let server = meta("server").unwrap_or(client);
    Ok(ReportRow::from_phases(
        meta("scenario").map(str::parse).transpose().context("bad `scenario`")?.unwrap_or(0),
        (client, node(client)?),
        (server, node(server)?),
        meta("platform").context("marker log lacks `platform`")?.parse()?,
        meta("workload").context("marker log lacks `workload`")?.parse()?,
        &phases,
        RowSource::Measured,
    ))
}

fn cmd_ingest(a: IngestArgs) -> Result<ExitCode> {
    let catalog = validate_plan(load_plan(a.plan.as_deref())?)?;
    let mut rows = Vec::new();
    if let Some(m) = &a.markers {
        rows.push(ingest_one(&a.traces, m, &catalog)?);
    } else if a.traces.join(MARKER_FILE).exists() {
        rows.push(ingest_one(&a.traces, &a.traces.join(MARKER_FILE), &catalog)?);
    } else {
        let mut dirs: Vec<PathBuf> = std::fs::read_dir(&a.traces)
            .with_context(|| format!("reading {}", a.traces.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.join(MARKER_FILE).exists())
            .collect();
        dirs.sort();
        if dirs.is_empty() {
            bail!("missing marker log: no {MARKER_FILE} under {}", a.traces.display());
        }
        for d in dirs {
            rows.push(ingest_one(&d, &d.join(MARKER_FILE), &catalog)?);
        }
    }
    rows.sort_by(|x, y| (x.scenario, x.platform, x.workload).cmp(&(y.scenario, y.platform, y.workload)));
    attach_savings(&mut rows);
    write_outputs(&rows, &a.out)?;
    println!("{} measured rows written to {}", rows.len(), a.out.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_plotdata(a: PlotArgs) -> Result<ExitCode> {
    let file = std::fs::File::open(&a.results).with_context(|| format!("opening {}", a.results.display()))?;
    let rows = read_results_csv(file)?;
    let text = plot_csv_string(&plot_data(&rows, &a.figure)?)?;
    match a.out {
        Some(p) => write(&p, &text)?,
        None => print!("{text}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_catalog(a: CatalogArgs) -> Result<ExitCode> {
    debug_assert!(a.default);
    write(&a.out, &default_plan().to_toml()?)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_calibrate(a: CalibrateArgs) -> Result<ExitCode> {
    let inputs = CalibrationInputs::load(&a.inputs)?;
    let (plan, report) = calibrate(&inputs)?;
    write(&a.out, &plan.to_toml()?)?;
    let report_path = a.report.unwrap_or_else(|| {
        let mut s = a.out.clone().into_os_string();
        s.push(".calibration.csv");
        s.into()
    });
    write(&report_path, &report.to_csv()?)?;
    print!("{}", summarize(&report));
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let r = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Ingest(a) => cmd_ingest(a),
        Command::Plotdata(a) => cmd_plotdata(a),
        Command::Catalog(a) => cmd_catalog(a),
        Command::Calibrate(a) => cmd_calibrate(a),
    };
    match r {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
