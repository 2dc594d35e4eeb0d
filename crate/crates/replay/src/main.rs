use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use lsp_server::Connection;
use serde::Serialize;

use ghostline_core::backend::{build_corpus, write_corpus};
use ghostline_core::LanguageFamily;
use ghostline_replay::{
    ground_truth_files, replay_corpus, ParsedSink, ReplayError, ReplaySettings, ToolConfig,
    CONTINUATIONS_FILE,
};
use ghostline_server::{serve, Engine, SystemClock, TelemetrySink};
use ghostline_sim::{run_simulation, sample_workload};

#[derive(Parser)]
#[command(
    name = "ghostline",
    version,
    about = "Multi-line inline completion: server, replay, simulator and reports"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the completion server over stdin/stdout.
    Serve {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Replay the ground-truth files of a corpus directory and report the funnel.
    Replay {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides `latency_scale` from the config.
        #[arg(long)]
        latency_scale: Option<f64>,
        /// Also write the replay telemetry as line-delimited JSON.
        #[arg(long)]
        telemetry: Option<PathBuf>,
    },
    /// Run the serving simulator on a sampled workload.
    Sim {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Aggregate telemetry sinks into a funnel report.
    Report {
        #[arg(long = "in", required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write mock continuations for the ground-truth files of a directory.
    BuildCorpus {
        #[arg(long)]
        dir: PathBuf,
        /// Fraction of continuations whose first line is replaced by a wrong one.
        #[arg(long, default_value_t = 0.15)]
        noise: f64,
    },
}

enum Failure {
    Config(anyhow::Error),
    Runtime(anyhow::Error),
}

impl From<ReplayError> for Failure {
    fn from(e: ReplayError) -> Self {
        match e {
            ReplayError::Invalid { .. } | ReplayError::Parse(_) => Failure::Config(e.into()),
            ReplayError::Io { .. } => Failure::Runtime(e.into()),
        }
    }
}

fn runtime(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Runtime(e.into())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<ToolConfig, Failure> {
    match path {
        None => Ok(ToolConfig::default()),
        Some(path) => ToolConfig::load(path).map_err(|e| match e {
            ReplayError::Io { .. } => Failure::Config(e.into()),
            other => other.into(),
        }),
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Serve { config } => {
            let cfg = load_config(config.as_deref())?;
            let base = config
                .as_deref()
                .and_then(Path::parent)
                .map(Path::to_path_buf)
                .unwrap_or_default();
            let engine_config = cfg.engine()?;
            let backend = cfg
                .server
                .backend(&base)
                .map_err(|e| Failure::Config(anyhow!("engine: {e}")))?;
            let sink = match &cfg.server.telemetry.sink {
                None => None,
                Some(path) => Some(
                    TelemetrySink::append_to(&base.join(path))
                        .with_context(|| format!("opening telemetry sink {}", path.display()))
                        .map_err(Failure::Runtime)?,
                ),
            };
            let engine = Engine::new(
                engine_config,
                backend,
                std::sync::Arc::new(SystemClock::new()),
            );
            let (connection, io) = Connection::stdio();
            serve(&connection, engine, sink).map_err(runtime)?;
            drop(connection);
            io.join().map_err(runtime)
        }
        Command::Replay {
            dir,
            config,
            seed,
            out,
            latency_scale,
            telemetry,
        } => {
            let mut cfg = load_config(config.as_deref())?;
            if let Some(scale) = latency_scale {
                cfg.latency_scale = scale;
                cfg.validate()?;
            }
            let settings = ReplaySettings::from_config(&cfg)?;
            let report = replay_corpus(&dir, &settings, seed)?;
            if let Some(path) = telemetry {
                let mut w = create(&path)?;
                for e in report.telemetry() {
                    serde_json::to_writer(&mut w, e).map_err(runtime)?;
                    writeln!(w).map_err(runtime)?;
                }
                w.flush().map_err(runtime)?;
            }
            write_json(out.as_deref(), &report)
        }
        Command::Sim { config, seed, out } => {
            let cfg = load_config(config.as_deref())?;
            let requests = sample_workload(seed, &cfg.sim.workload);
            let report =
                run_simulation(seed, &requests, &cfg.sim).map_err(|e| Failure::Config(e.into()))?;
            write_json(out.as_deref(), &report)
        }
        Command::Report { inputs, out } => {
            let mut sink = ParsedSink::default();
            for path in &inputs {
                let file = File::open(path)
                    .with_context(|| format!("opening {}", path.display()))
                    .map_err(Failure::Runtime)?;
                sink.read(&path.display().to_string(), BufReader::new(file))
                    .with_context(|| format!("reading {}", path.display()))
                    .map_err(Failure::Runtime)?;
            }
            write_json(out.as_deref(), &sink.report())
        }
        Command::BuildCorpus { dir, noise } => {
            if !(0.0..=1.0).contains(&noise) {
                return Err(Failure::Config(anyhow!(
                    "invalid value for `noise`: must be within [0, 1]"
                )));
            }
            let mut files = Vec::new();
            for path in ground_truth_files(&dir)? {
                let text = std::fs::read_to_string(&path)
                    .with_context(|| format!("reading {}", path.display()))
                    .map_err(Failure::Runtime)?;
                let ext = path
                    .extension()
                    .and_then(|e| e.to_str())
                    .unwrap_or_default();
                files.push((
                    text,
                    LanguageFamily::from_extension(ext).expect("filtered by extension"),
                ));
            }
            let corpus = build_corpus(files.iter().map(|(t, f)| (t.as_str(), *f)), noise);
            let path = dir.join(CONTINUATIONS_FILE);
            let mut w = create(&path)?;
            write_corpus(&corpus, &mut w).map_err(runtime)?;
            w.flush().map_err(runtime)
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .with_context(|| format!("creating {}", path.display()))
        .map_err(Failure::Runtime)
}

fn write_json(out: Option<&Path>, value: &impl Serialize) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(runtime)?;
    match out {
        None => println!("{text}"),
        Some(path) => std::fs::write(path, text + "\n")
            .with_context(|| format!("writing {}", path.display()))
            .map_err(Failure::Runtime)?,
    }
    Ok(())
}
