//! Scores a predicted log against ground truth.
//!
//! `cargo run --example evaluate_logs -- pred.csv truth.csv`; without
//! arguments the bundled checkpoint trace is tracked and scored.

use std::path::PathBuf;

use anpr_tracker::experiment::track_frames;
use anpr_tracker::metrics::{evaluate, MatchConfig};
use anpr_tracker::replay::{self, LogFormat};

fn main() -> anyhow::Result<()> {
    let args: Vec<PathBuf> = std::env::args().skip(1).map(PathBuf::from).collect();
    let (pred, truth) = match args.as_slice() {
        [p, t] => (
            replay::read_log(p, LogFormat::from_path(p))?,
            replay::read_log(t, LogFormat::from_path(t))?,
        ),
        _ => {
            let data = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data");
            let cfg = replay::load_config(data.join("configs/default.toml"))?;
            let (_, frames) = replay::read_trace(data.join("traces/checkpoint_demo.jsonl"))?;
            let pred = track_frames(frames, &cfg, None)?.entries;
            let truth = replay::read_log(data.join("traces/checkpoint_demo.truth.csv"), LogFormat::Csv)?;
            (pred, truth)
        }
    };
    let report = evaluate(&pred, &truth, &MatchConfig::default());
    println!("{report}");
    for e in &report.unmatched_truth {
        println!("missed: {} {} @{}", e.vehicle_number, e.vehicle_type, e.timestamp);
    }
    for e in &report.unmatched_pred {
        println!("spurious: {} {} @{}", e.vehicle_number, e.vehicle_type, e.timestamp);
    }
    Ok(())
}
