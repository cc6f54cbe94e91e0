//! Replays the bundled checkpoint trace and writes a CSV log.
//!
//! `cargo run --example track_trace -- [trace.jsonl] [config.toml] [out.csv]`

use std::path::PathBuf;

use anpr_tracker::experiment::track_frames;
use anpr_tracker::replay::{self, LogFormat, LogSink};

fn main() -> anyhow::Result<()> {
    let data = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data");
    let mut args = std::env::args().skip(1);
    let trace = args.next().map_or_else(|| data.join("traces/checkpoint_demo.jsonl"), PathBuf::from);
    let config = args.next().map_or_else(|| data.join("configs/default.toml"), PathBuf::from);
    let out = args.next().map_or_else(|| std::env::temp_dir().join("checkpoint_demo.log.csv"), PathBuf::from);

    let cfg = replay::load_config(&config)?;
    let (header, frames) = replay::read_trace(&trace)?;
    println!("{} @ {} fps, {}x{}", header.source_id, header.fps, header.frame_width, header.frame_height);

    let mut sink = LogSink::create(&out, LogFormat::from_path(&out))?;
    let summary = track_frames(frames, &cfg, Some(&mut sink))?;
    for e in &summary.entries {
        println!("{:<14} {:<6} {}", e.vehicle_number, e.vehicle_type, e.timestamp);
    }
    println!(
        "{} frames, {} entries, {} textless commits -> {}",
        summary.frames,
        summary.entries.len(),
        summary.textless_commits,
        out.display()
    );
    Ok(())
}
