use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use newsgallery_core::concept_graph::{FixtureResolver, LanglinkResolver, NoLinks};
use newsgallery_core::edit_stream::{IrcSource, ReplaySource, StreamSource, LIVE_SERVER};
use newsgallery_core::layout::{balance_gallery, classify_prominent, GalleryKind, LayoutItem};
use newsgallery_core::media_ingest::load_items;
use newsgallery_core::metrics::{compute_metrics, load_labels, parse_labels, BUNDLED_LABELS};
use newsgallery_core::pipeline::{publisher_for, LanglinkConfig, Pipeline, PipelineConfig};
use newsgallery_core::spike_detector::Monitor;
use newsgallery_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "newsgallery",
    version,
    about = "Wikipedia breaking-news monitor and media gallery generator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monitor an edit stream and archive a gallery pair per breaking event.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Replay fixture instead of the live stream.
        #[arg(long, conflicts_with = "live")]
        replay: Option<PathBuf>,
        #[arg(long)]
        live: bool,
        #[arg(long)]
        archive_dir: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
        /// Write the run report as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Print the breaking-news events detected in a replay, one JSON object per line.
    Detect {
        #[arg(long)]
        replay: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Recall and precision from rater labels (the bundled transcription by default).
    Metrics {
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// Lay out a JSON array of media items and print the balanced gallery.
    Layout {
        #[arg(long)]
        items: PathBuf,
        #[arg(long, default_value = "strict")]
        kind: GalleryKind,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidSpec(_) | Error::InvalidArgument(_) => 1,
        Error::Io { .. } | Error::ReplayRecord { .. } | Error::Label { .. } | Error::Json(_) => 2,
        _ => 3,
    }
}

fn load_config(path: Option<&PathBuf>) -> Result<PipelineConfig> {
    match path {
        Some(p) => PipelineConfig::load(p),
        None => Ok(PipelineConfig::default()),
    }
}

fn print_line(text: &str) -> Result<()> {
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Error::io("<stdout>", e)),
        _ => Ok(()),
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    print_line(&serde_json::to_string_pretty(value)?)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            replay,
            live,
            archive_dir,
            workers,
            report,
        } => {
            let mut cfg = PipelineConfig::load(&config)?;
            if let Some(dir) = archive_dir {
                cfg.archive_dir = dir;
            }
            if let Some(w) = workers {
                cfg.workers = w;
            }
            let mut publisher = publisher_for(&cfg.publisher);
            let pipeline = Pipeline::from_config(cfg)?;
            let result = match (replay, live) {
                (Some(path), _) => pipeline.run(ReplaySource::open(&path)?, publisher.as_mut())?,
                (None, true) => {
                    let c = pipeline.config();
                    let source = IrcSource::new(LIVE_SERVER, c.irc_nick.clone(), &c.languages)?;
                    pipeline.run(source, publisher.as_mut())?
                }
                (None, false) => {
                    return Err(Error::InvalidArgument(
                        "pass --replay <file> or --live".into(),
                    ))
                }
            };
            eprintln!(
                "events={} unique={} illustrated={} galleries={} failed={} malformed={}",
                result.events,
                result.unique_events,
                result.illustrated,
                result.galleries,
                result.failed,
                result.malformed_records
            );
            if let Some(path) = report {
                let text = serde_json::to_string_pretty(&result)?;
                std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
            }
            Ok(())
        }
        Command::Detect { replay, config } => {
            let cfg = load_config(config.as_ref())?;
            let resolver: Box<dyn LanglinkResolver> = match &cfg.langlinks {
                LanglinkConfig::Fixture { path } => Box::new(FixtureResolver::load(path)?),
                _ => Box::new(NoLinks),
            };
            let mut monitor = Monitor::new(cfg.monitor.clone(), resolver);
            let mut source = ReplaySource::open(&replay)?;
            while let Some(record) = source.next_record() {
                match record.and_then(|r| r.parse()) {
                    Ok(edit) => {
                        if let Some(event) = monitor.ingest(&edit) {
                            print_line(&serde_json::to_string(&event)?)?;
                        }
                    }
                    Err(e) => log::warn!("{e}"),
                }
            }
            Ok(())
        }
        Command::Metrics { labels } => {
            let labels = match labels {
                Some(p) => load_labels(&p)?,
                None => parse_labels(BUNDLED_LABELS)?,
            };
            print_json(&compute_metrics(&labels)?)
        }
        Command::Layout {
            items,
            kind,
            config,
        } => {
            let cfg = load_config(config.as_ref())?;
            let items = load_items(&items)?;
            let flags = classify_prominent(&items, &cfg.rank_weights);
            let all = LayoutItem::zip(&items, &flags);
            let g = balance_gallery(
                &all,
                &[],
                cfg.layout.spec(kind),
                kind,
                cfg.max_balance_steps,
            )?;
            print_json(&g)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
