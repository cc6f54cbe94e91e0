//! Interpretable vehicle logging at a security checkpoint.
//!
//! Per-frame detector and OCR output is filtered down to at most one plate
//! observation, which drives a three-state automaton that writes one log
//! entry per vehicle. Around that core sit a JSONL trace reader/writer, a
//! seeded scenario simulator with detector and OCR noise models, and an
//! evaluator for detection rate and word accuracy.
//!
//! ```no_run
//! use anpr_tracker::{replay, Tracker, TrackerConfig};
//!
//! let (_header, frames) = replay::read_trace("trace.jsonl")?;
//! let mut tracker = Tracker::new(TrackerConfig::default());
//! for frame in frames {
//!     if let Some(entry) = tracker.process_frame(&frame?) {
//!         println!("{} {} {}", entry.vehicle_number, entry.vehicle_type, entry.timestamp);
//!     }
//! }
//! # Ok::<(), anpr_tracker::Error>(())
//! ```

pub mod domain;
pub mod error;
pub mod experiment;
pub mod filter;
pub mod fsm;
pub mod metrics;
pub mod replay;
pub mod simulator;

pub use domain::{
    contains, iou, normalize_plate, BBox, FrameRecord, PlateDetection, Roi, SelectionStrategy, TimestampMs,
    TrackerConfig, VehicleClass, VehicleDetection,
};
pub use error::{Error, Result};
pub use filter::{filter_frame, select_primary, PlateObservation};
pub use fsm::{
    class_vote, classify, new_tracker, select_representative, step, AutomatonState, InputSymbol, TrackEvidence,
    Tracker, TrackerState, VehicleLogEntry,
};
