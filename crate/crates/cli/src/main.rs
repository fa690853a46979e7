//! `a2gs`: synthesize, calibrate and analyze sounder captures.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use a2gs_core::calibration::mean_record;
use a2gs_core::capture::{AttenuatorModel, RecordType};
use a2gs_core::pipeline::{analyze_series, calibrate_series};
use a2gs_core::processing::{route_report, summarize, write_metrics_csv, SnapshotMetrics, Window};
use a2gs_core::{
    parse_scenario, read_capture, selftest, stability_stats, write_capture, write_stability_csv, ArraySpec,
    CalibratedResponse, CaptureFile, Error, Preset, ScenarioConfig, Simulator,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};

#[derive(Parser)]
#[command(
    name = "a2gs",
    version,
    about = "Air-to-ground massive-MIMO channel sounder simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate measurement captures for a scenario.
    Synth {
        #[command(flatten)]
        scenario: ScenarioArg,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the capture seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Simulate a back-to-back calibration series.
    B2b {
        #[command(flatten)]
        scenario: ScenarioArg,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the B2B seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the number of B2B snapshots.
        #[arg(long)]
        snapshots: Option<usize>,
    },
    /// Calibrate a measurement file against a B2B file.
    Calibrate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        analysis: SourceArgs,
    },
    /// Per-snapshot metrics of a measurement or calibrated file.
    Analyze {
        #[arg(long = "in")]
        input: PathBuf,
        /// B2B reference; required for measurement files.
        #[arg(long = "ref")]
        reference: Option<PathBuf>,
        #[command(flatten)]
        analysis: SourceArgs,
        #[arg(long, value_enum)]
        window: Option<WindowArg>,
        /// Port whose LOS-bin power is tracked; defaults to the strongest
        /// port of the first snapshot.
        #[arg(long)]
        port: Option<usize>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Amplitude and phase stability of a B2B series.
    Stability {
        #[arg(long = "in")]
        input: PathBuf,
        /// Single port; all ports when omitted.
        #[arg(long)]
        port: Option<usize>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Location-indexed route table.
    Report {
        /// Measurement or calibrated file; the scenario is simulated when omitted.
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[arg(long = "ref")]
        reference: Option<PathBuf>,
        #[command(flatten)]
        analysis: SourceArgs,
        #[arg(long, value_enum)]
        window: Option<WindowArg>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the invariant suite.
    Selftest {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
}

#[derive(Args)]
struct ScenarioArg {
    /// Scenario JSON file or preset name (paper-static, paper-hover, paper-route).
    #[arg(long)]
    scenario: String,
}

#[derive(Args)]
struct SourceArgs {
    /// Scenario supplying gate, window, attenuator and array settings and
    /// the hashes the input files are checked against.
    #[arg(long)]
    scenario: Option<String>,
    /// Flat attenuator loss in dB, overriding the scenario.
    #[arg(long)]
    attenuator_db: Option<f64>,
    /// Treat header hash mismatches as errors.
    #[arg(long)]
    strict_hash: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum WindowArg {
    Rect,
    Hann,
}

impl From<WindowArg> for Window {
    fn from(w: WindowArg) -> Self {
        match w {
            WindowArg::Rect => Window::Rect,
            WindowArg::Hann => Window::Hann,
        }
    }
}

/// Error with its process exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Io(_) => 3,
            Error::DimensionMismatch(_) | Error::UnknownPort(_) => 4,
            Error::Config { .. } | Error::InvalidParameter { .. } => 5,
            Error::Format(_) | Error::HashMismatch { .. } => 6,
            _ => 1,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        // A closed stdout (`a2gs analyze ... | head`) is not an error.
        let code = if e.kind() == io::ErrorKind::BrokenPipe { 0 } else { 3 };
        Failure::new(code, e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::new(1, e.to_string())
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(f) = configure_threads().and_then(|()| run(cli.command)) {
        if f.code != 0 {
            eprintln!("error: {}", f.message);
        }
        return ExitCode::from(f.code);
    }
    ExitCode::SUCCESS
}

fn configure_threads() -> CliResult {
    let Ok(raw) = std::env::var("A2GS_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::new(2, format!("A2GS_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::new(1, e.to_string()))
}

fn run(command: Command) -> CliResult {
    match command {
        Command::Synth { scenario, out, seed } => {
            let mut config = load_scenario(&scenario.scenario)?;
            if let Some(s) = seed {
                config.seeds.capture = s;
            }
            let sim = Simulator::new(config)?;
            let file = sim.file(sim.capture_series()?)?;
            write_capture(&out, &file)?;
            info!("wrote {} snapshots to {}", file.header.snapshot_count, out.display());
            Ok(())
        }
        Command::B2b {
            scenario,
            out,
            seed,
            snapshots,
        } => {
            let mut config = load_scenario(&scenario.scenario)?;
            if let Some(s) = seed {
                config.seeds.b2b = s;
            }
            if let Some(n) = snapshots {
                config.capture.b2b_snapshots = n;
            }
            let sim = Simulator::new(config)?;
            let file = sim.file(sim.b2b_series()?)?;
            write_capture(&out, &file)?;
            info!(
                "wrote {} B2B snapshots to {}",
                file.header.snapshot_count,
                out.display()
            );
            Ok(())
        }
        Command::Calibrate {
            input,
            reference,
            out,
            analysis,
        } => {
            let source = Source::open(&analysis)?;
            let meas = source.read(&input)?;
            let responses = source.calibrated(&meas, Some(&reference))?;
            let seed = meas.records.first().map_or(0, |r| r.seed);
            let records = responses.iter().map(|r| r.to_record(seed)).collect();
            let file = CaptureFile::new(
                records,
                meas.header.tone_plan,
                meas.header.config_hash.clone(),
                meas.header.geometry_hash.clone(),
            )?;
            write_capture(&out, &file)?;
            Ok(())
        }
        Command::Analyze {
            input,
            reference,
            analysis,
            window,
            port,
            format,
            out,
        } => {
            let source = Source::open(&analysis)?;
            let file = source.read(&input)?;
            let metrics = source.metrics(&file, reference.as_deref(), window, port)?;
            let hash = file.header.config_hash.as_str();
            with_output(out.as_deref(), |w| match format {
                Format::Csv => Ok(write_metrics_csv(&metrics, Some(hash), w)?),
                Format::Json => {
                    let summary = summarize(&metrics, Some(hash.to_string()), file.header.tone_count);
                    let doc = serde_json::json!({ "summary": summary, "snapshots": metrics });
                    Ok(write_json(w, &doc)?)
                }
            })
        }
        Command::Stability {
            input,
            port,
            format,
            out,
        } => {
            let file = read_capture(&input)?;
            if file.record_type() != RecordType::BackToBack {
                return Err(Failure::new(6, "stability needs a B2B file"));
            }
            let ports: Vec<usize> = match port {
                Some(p) => vec![p],
                None => (0..file.header.port_count).collect(),
            };
            let reports = ports
                .into_iter()
                .map(|p| stability_stats(&file.records, p))
                .collect::<Result<Vec<_>, _>>()?;
            let hash = file.header.config_hash.as_str();
            with_output(out.as_deref(), |w| match format {
                Format::Csv => Ok(write_stability_csv(&reports, Some(hash), w)?),
                Format::Json => {
                    let rows: Vec<_> = reports
                        .iter()
                        .map(|r| {
                            serde_json::json!({
                                "port": r.port,
                                "snapshots": r.rel_amp_db.len(),
                                "amplitude_std_db": r.amplitude_std_db,
                                "phase_std_deg": r.phase_std_deg,
                            })
                        })
                        .collect();
                    Ok(write_json(
                        w,
                        &serde_json::json!({ "config_hash": hash, "ports": rows }),
                    )?)
                }
            })
        }
        Command::Report {
            input,
            reference,
            analysis,
            window,
            format,
            out,
        } => {
            let source = Source::open(&analysis)?;
            let (metrics, hash) = match &input {
                Some(path) => {
                    let file = source.read(path)?;
                    let m = source.metrics(&file, reference.as_deref(), window, None)?;
                    (m, file.header.config_hash.clone())
                }
                None => {
                    let mut config = source
                        .config
                        .clone()
                        .ok_or_else(|| Failure::new(2, "report needs --in or --scenario"))?;
                    if let Some(w) = window {
                        config.window = w.into();
                    }
                    let sim = Simulator::new(config)?;
                    (sim.run()?.metrics, sim.config_hash())
                }
            };
            let report = route_report(&metrics)?;
            with_output(out.as_deref(), |w| match format {
                Format::Csv => Ok(report.write_csv(Some(&hash), w)?),
                Format::Json => {
                    let doc = serde_json::json!({
                        "config_hash": hash,
                        "visited_columns": report.visited_columns(),
                        "report": report,
                    });
                    Ok(write_json(w, &doc)?)
                }
            })
        }
        Command::Selftest { seed, format } => {
            let report = selftest::run(seed);
            let mut stdout = io::stdout().lock();
            match format {
                Format::Csv => {
                    writeln!(stdout, "check,passed,detail")?;
                    for c in &report.checks {
                        writeln!(stdout, "{},{},\"{}\"", c.name, c.passed, c.detail.replace('"', "\"\""))?;
                    }
                }
                Format::Json => write_json(&mut stdout, &report)?,
            }
            if report.all_passed() {
                Ok(())
            } else {
                let names: Vec<&str> = report.failures().map(|c| c.name).collect();
                Err(Failure::new(7, format!("selftest failed: {}", names.join(", "))))
            }
        }
    }
}

fn load_scenario(spec: &str) -> CliResult<ScenarioConfig> {
    let path = Path::new(spec);
    if !path.exists() {
        if let Some(p) = Preset::from_name(spec) {
            return Ok(p.config());
        }
    }
    let text = std::fs::read_to_string(path).map_err(|e| Failure::new(3, format!("{spec}: {e}")))?;
    let config = parse_scenario(&text)?;
    config.validate()?;
    Ok(config)
}

/// Settings shared by the commands that consume capture files.
struct Source {
    config: Option<ScenarioConfig>,
    attenuator: AttenuatorModel,
    strict: bool,
}

impl Source {
    fn open(args: &SourceArgs) -> CliResult<Self> {
        let config = args.scenario.as_deref().map(load_scenario).transpose()?;
        let mut attenuator = config.as_ref().map_or_else(AttenuatorModel::default, |c| c.attenuator);
        if let Some(db) = args.attenuator_db {
            attenuator = AttenuatorModel::flat(db);
            attenuator.validate()?;
        }
        Ok(Source {
            config,
            attenuator,
            strict: args.strict_hash,
        })
    }

    /// Reads a capture file and checks its hashes against the scenario.
    fn read(&self, path: &Path) -> CliResult<CaptureFile> {
        let file = read_capture(path).map_err(|e| match e {
            Error::Io(io) => Failure::new(3, format!("{}: {io}", path.display())),
            other => other.into(),
        })?;
        if let Some(c) = &self.config {
            let geometry = c.geometry()?.content_hash();
            file.check_hashes(Some(&c.config_hash()), Some(&geometry), self.strict)?;
        }
        Ok(file)
    }

    fn calibrated(&self, file: &CaptureFile, reference: Option<&Path>) -> CliResult<Vec<CalibratedResponse>> {
        match file.record_type() {
            RecordType::Calibrated => {
                if reference.is_some() {
                    warn!("input is already calibrated; ignoring --ref");
                }
                Ok(file
                    .records
                    .iter()
                    .map(CalibratedResponse::from_record)
                    .collect::<Result<_, _>>()?)
            }
            RecordType::Measurement => {
                let path = reference.ok_or_else(|| Failure::new(2, "measurement input needs --ref"))?;
                let b2b = self.read(path)?;
                if b2b.record_type() != RecordType::BackToBack {
                    return Err(Failure::new(6, format!("{} is not a B2B file", path.display())));
                }
                // Fails early with a clear shape error before the per-snapshot loop.
                mean_record(&b2b.records)?;
                Ok(calibrate_series(&file.records, &b2b.records, &self.attenuator)?)
            }
            RecordType::BackToBack => Err(Failure::new(6, "expected a measurement or calibrated file, got B2B")),
        }
    }

    fn metrics(
        &self,
        file: &CaptureFile,
        reference: Option<&Path>,
        window: Option<WindowArg>,
        port: Option<usize>,
    ) -> CliResult<Vec<SnapshotMetrics>> {
        let responses = self.calibrated(file, reference)?;
        let (mut options, geometry) = match &self.config {
            Some(c) => (c.analysis_options(), c.geometry()?),
            None => (Default::default(), ArraySpec::default().build()?),
        };
        if geometry.port_count() != file.header.port_count {
            return Err(Failure::new(
                4,
                format!(
                    "file has {} ports, array has {}",
                    file.header.port_count,
                    geometry.port_count()
                ),
            ));
        }
        if let Some(w) = window {
            options.window = w.into();
        }
        if let Some(p) = port {
            if p >= file.header.port_count {
                return Err(Error::UnknownPort(p).into());
            }
            options.los_port = Some(p);
        }
        Ok(analyze_series(&responses, &file.header.tone_plan, &geometry, &options)?)
    }
}

fn with_output(path: Option<&Path>, body: impl FnOnce(&mut dyn Write) -> CliResult) -> CliResult {
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            body(&mut w)?;
            w.flush()?;
        }
        None => {
            let mut w = io::stdout().lock();
            body(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn write_json(w: &mut dyn Write, value: &impl serde::Serialize) -> CliResult {
    serde_json::to_writer_pretty(&mut *w, value)?;
    writeln!(w)?;
    Ok(())
}
