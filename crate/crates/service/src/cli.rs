//! The `flowstate` command line.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use flowstate_core::session::{aggregate, load_session, GroupBy};
use flowstate_core::{run_batch, BatchOptions, EngineConfig, MetricSnapshot};
use flowstate_ingest::{
    listen_udp, read_csv_session, replay, write_csv_session, ChannelMapping, CsvOptions, DropOldestQueue, OscSender,
    Speed, DEFAULT_UDP_PORT,
};

use crate::api::{router, AppState};
use crate::live::{spawn_worker, Clock, FrameSource, Hub, SessionStore};
use crate::simulate::{simulate, Profile, SimOptions};

#[derive(Debug, Parser)]
#[command(name = "flowstate", version, about = "Flow-state metrics from frontal EEG")]
pub struct Cli {
    /// Engine configuration file (TOML).
    #[arg(long, global = true, env = "FLOWSTATE_CONFIG")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute the metric series of a CSV recording.
    Analyze(AnalyzeArgs),
    /// Send a CSV recording as OSC over UDP at its recorded pace.
    Replay(ReplayArgs),
    /// Run the HTTP/WebSocket service and the UDP receiver.
    Serve(ServeArgs),
    /// Aggregate finalized session files into a grouped report.
    Report(ReportArgs),
    /// Write a synthetic recording.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct CsvArgs {
    /// Fail on the first malformed row instead of skipping it.
    #[arg(long)]
    pub strict: bool,
    /// Cells use `,` as decimal separator and `;` between fields.
    #[arg(long)]
    pub decimal_comma: bool,
}

impl CsvArgs {
    fn options(&self) -> CsvOptions {
        CsvOptions { strict: self.strict, decimal_comma: self.decimal_comma }
    }
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    pub input: PathBuf,
    /// One snapshot per sample instead of one per emit hop.
    #[arg(long)]
    pub exact: bool,
    /// Forward-backward filtering (offline only).
    #[arg(long)]
    pub zero_phase: bool,
    /// Output file; stdout when omitted.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub csv: CsvArgs,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    pub input: PathBuf,
    /// Playback speed factor, or `max`.
    #[arg(long, default_value = "1")]
    pub speed: Speed,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, default_value_t = DEFAULT_UDP_PORT)]
    pub port: u16,
    /// OSC address and argument order, e.g. `/eeg:TP9,AF7,AF8,TP10`.
    #[arg(long, default_value_t = ChannelMapping::default())]
    pub mapping: ChannelMapping,
    #[command(flatten)]
    pub csv: CsvArgs,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub listen: SocketAddr,
    #[arg(long, default_value_t = DEFAULT_UDP_PORT)]
    pub udp_port: u16,
    #[arg(long, default_value = "0.0.0.0")]
    pub udp_host: String,
    #[arg(long, default_value_t = ChannelMapping::default())]
    pub mapping: ChannelMapping,
    /// Directory session files are loaded from and written to.
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 4096)]
    pub queue_capacity: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Session files (`.jsonl`).
    #[arg(required = true)]
    pub sessions: Vec<PathBuf>,
    #[arg(long, default_value = "kind")]
    pub group_by: GroupBy,
    #[arg(long, value_enum, default_value_t = ReportFormat::Csv)]
    pub format: ReportFormat,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value = "flow")]
    pub profile: Profile,
    #[arg(long, default_value_t = 60.0)]
    pub seconds: f64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

fn output(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub const METRIC_COLUMNS: [&str; 19] = [
    "time",
    "sequence",
    "fsi",
    "theta_pct",
    "alpha_pct",
    "beta_pct",
    "stress",
    "entropy_norm",
    "af7_power",
    "af8_power",
    "total_power",
    "fog",
    "sharpness",
    "stress_recovery",
    "cognitive_load",
    "mental_fatigue",
    "energy_efficiency",
    "energy_consumption",
    "formula_version",
];

/// One row per snapshot, columns as in [`METRIC_COLUMNS`].
pub fn write_metric_csv<W: Write>(out: W, snapshots: &[MetricSnapshot]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(METRIC_COLUMNS)?;
    for s in snapshots {
        let f = &s.features;
        let mut row = vec![s.time.to_string(), s.sequence.to_string()];
        row.extend(
            [s.fsi, f.theta_pct, f.alpha_pct, f.beta_pct, f.stress, f.entropy_norm, f.af7_power, f.af8_power, s.total_power]
                .iter()
                .chain(s.kpis.as_array().iter())
                .map(f64::to_string),
        );
        row.push(s.formula_version.clone());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn analyze(config: &EngineConfig, args: &AnalyzeArgs) -> anyhow::Result<()> {
    let session = read_csv_session(&args.input, args.csv.options()).with_context(|| format!("reading {}", args.input.display()))?;
    for e in &session.row_errors {
        tracing::warn!("{}: skipped {e}", args.input.display());
    }
    let mut options = if args.exact { BatchOptions::exact() } else { BatchOptions::streaming(config) };
    options.zero_phase = args.zero_phase;
    let out = run_batch(&session.frames, config, options)?;
    if !out.rejected.is_empty() {
        tracing::warn!("{} frames rejected", out.rejected.len());
    }
    write_metric_csv(output(args.output.as_deref())?, &out.snapshots)
}

fn replay_csv(args: &ReplayArgs) -> anyhow::Result<()> {
    let session = read_csv_session(&args.input, args.csv.options()).with_context(|| format!("reading {}", args.input.display()))?;
    let sender = OscSender::connect((args.host.as_str(), args.port), args.mapping.clone())
        .with_context(|| format!("connecting to {}:{}", args.host, args.port))?;
    let mut sent = 0u64;
    for frame in replay(session.frames, args.speed) {
        sender.send(&frame)?;
        sent += 1;
    }
    tracing::info!("sent {sent} frames");
    Ok(())
}

fn report(args: &ReportArgs) -> anyhow::Result<()> {
    let records = args
        .sessions
        .iter()
        .map(|p| load_session(p).with_context(|| format!("loading {}", p.display())))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let report = aggregate(&records, args.group_by);
    let mut out = output(args.output.as_deref())?;
    match args.format {
        ReportFormat::Csv => report.write_csv(&mut out)?,
        ReportFormat::Json => writeln!(out, "{}", report.to_json())?,
    }
    out.flush()?;
    Ok(())
}

fn simulate_csv(args: &SimulateArgs) -> anyhow::Result<()> {
    anyhow::ensure!(args.seconds.is_finite() && args.seconds > 0.0, "--seconds must be positive");
    let frames = simulate(args.profile, &SimOptions { seconds: args.seconds, seed: args.seed, ..Default::default() });
    write_csv_session(output(args.output.as_deref())?, &frames)?;
    Ok(())
}

async fn serve(config: EngineConfig, args: &ServeArgs) -> anyhow::Result<()> {
    let store = match &args.data_dir {
        Some(dir) => {
            let (store, failures) = SessionStore::open(dir).with_context(|| format!("opening {}", dir.display()))?;
            for (path, e) in failures {
                tracing::warn!("skipping {}: {e}", path.display());
            }
            store
        }
        None => SessionStore::new(None),
    };
    anyhow::ensure!(args.queue_capacity > 0, "--queue-capacity must be positive");
    let queue = Arc::new(DropOldestQueue::new(args.queue_capacity));
    let udp = listen_udp((args.udp_host.as_str(), args.udp_port), args.mapping.clone(), Arc::clone(&queue))?;
    let source = FrameSource { queue: Arc::clone(&queue), ingest: Some(udp.counters()) };
    let hub = Arc::new(Hub::new(Arc::new(store), source));
    let worker = spawn_worker(Arc::clone(&hub));
    let state = AppState::new(hub, Clock::new(udp.epoch()), config);

    let listener = tokio::net::TcpListener::bind(args.listen).await.with_context(|| format!("binding {}", args.listen))?;
    tracing::info!("http on {}, osc on udp {}", listener.local_addr()?, udp.local_addr());
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    udp.shutdown();
    queue.close();
    let _ = worker.join();
    Ok(())
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    let config = match &cli.config {
        Some(path) => EngineConfig::load(path)?,
        None => EngineConfig::default(),
    };
    match &cli.command {
        Command::Analyze(a) => analyze(&config, a),
        Command::Replay(a) => replay_csv(a),
        Command::Report(a) => report(a),
        Command::Simulate(a) => simulate_csv(a),
        Command::Serve(a) => tokio::runtime::Runtime::new()?.block_on(serve(config, a)),
    }
}
