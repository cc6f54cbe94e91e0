use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use anpr_tracker::experiment::{run_experiment, track_frames, ExperimentSpec};
use anpr_tracker::metrics::{evaluate, MatchConfig};
use anpr_tracker::replay::{self, LogFormat, LogSink};
use anpr_tracker::simulator::{generate, load_scenario};
use anpr_tracker::TrackerConfig;

#[derive(Parser)]
#[command(name = "anpr-tracker", version, about = "Vehicle logging from detection/OCR traces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the tracker over a JSONL trace and write the vehicle log.
    Track {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// csv or jsonl; inferred from --out when omitted.
        #[arg(long)]
        format: Option<String>,
    },
    /// Generate a synthetic trace and its ground-truth log.
    Simulate {
        /// Scenario JSON file or bundled scenario name.
        #[arg(long)]
        spec: String,
        #[arg(long)]
        out_trace: PathBuf,
        #[arg(long)]
        out_truth: PathBuf,
    },
    /// Score a predicted log against ground truth.
    Evaluate {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        match_config: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Simulate, track and evaluate in one run.
    Experiment {
        #[arg(long)]
        spec: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        match_config: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        repetitions: u32,
    },
}

fn tracker_config(path: Option<&Path>) -> Result<TrackerConfig> {
    Ok(match path {
        Some(p) => replay::load_config(p)?,
        None => TrackerConfig::default(),
    })
}

fn match_config(path: Option<&Path>) -> Result<MatchConfig> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            MatchConfig::parse(&text).with_context(|| p.display().to_string())
        }
        None => Ok(MatchConfig::default()),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Track {
            input,
            config,
            out,
            format,
        } => {
            let cfg = tracker_config(config.as_deref())?;
            let format = match format {
                Some(f) => f.parse()?,
                None => LogFormat::from_path(&out),
            };
            let (header, frames) = replay::read_trace(&input)?;
            cfg.roi
                .validate_within(header.frame_width as f64, header.frame_height as f64)
                .with_context(|| format!("config ROI against {}", input.display()))?;
            if header.fps != cfg.fps {
                eprintln!("warning: trace is {} fps, config assumes {} fps", header.fps, cfg.fps);
            }
            let mut sink = LogSink::create(&out, format)?;
            let summary = track_frames(frames, &cfg, Some(&mut sink))?;
            println!(
                "frames={} entries={} textless_commits={}",
                summary.frames,
                summary.entries.len(),
                summary.textless_commits
            );
        }
        Command::Simulate {
            spec,
            out_trace,
            out_truth,
        } => {
            let spec = load_scenario(&spec)?;
            let sim = generate(&spec)?;
            replay::write_trace(&out_trace, &sim.header, &sim.frames)?;
            replay::write_log(&sim.truth, &out_truth, LogFormat::from_path(&out_truth))?;
            println!("frames={} vehicles={}", sim.frames.len(), sim.truth.len());
        }
        Command::Evaluate {
            pred,
            truth,
            match_config: mc,
            report,
        } => {
            let mc = match_config(mc.as_deref())?;
            let pred = replay::read_log(&pred, LogFormat::from_path(&pred))?;
            let truth = replay::read_log(&truth, LogFormat::from_path(&truth))?;
            let r = evaluate(&pred, &truth, &mc);
            if let Some(path) = report {
                replay::write_json(path, &r)?;
            }
            println!("{r}");
        }
        Command::Experiment {
            spec,
            config,
            report,
            match_config: mc,
            repetitions,
        } => {
            let scenario = load_scenario(&spec)?;
            let cfg = match config {
                Some(p) => replay::load_config(p)?,
                None => TrackerConfig {
                    roi: scenario.roi(),
                    ..TrackerConfig::for_fps(scenario.fps)
                },
            };
            let mut exp = ExperimentSpec::new(scenario, cfg);
            exp.match_config = match_config(mc.as_deref())?;
            exp.repetitions = repetitions;
            let r = run_experiment(&exp)?;
            if let Some(path) = report {
                replay::write_json(path, &r)?;
            }
            print!("{r}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
