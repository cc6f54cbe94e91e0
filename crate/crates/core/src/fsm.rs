//! Three-state vehicle tracking automaton.
//!
//! | from      | input                      | to        | effect                         |
//! |-----------|----------------------------|-----------|--------------------------------|
//! | NoVehicle | none                       | NoVehicle |                                |
//! | NoVehicle | match                      | Detected  | new track, fc = 1              |
//! | Detected  | match, fc < fc_thresh      | Detected  | fc += 1                        |
//! | Detected  | match, fc == fc_thresh     | Logged    | fc = 0, zc = 0, write log      |
//! | Detected  | mismatch                   | Detected  | fc = 0, track restarts         |
//! | Detected  | none, zc < zc_thresh       | Detected  | zc += 1                        |
//! | Detected  | none, zc == zc_thresh      | NoVehicle | fc = 0, zc = 0, drop track     |
//! | Logged    | match                      | Logged    |                                |
//! | Logged    | mismatch                   | Detected  | new track, fc = 1              |
//! | Logged    | none, zc < zc_thresh       | Logged    | zc += 1                        |
//! | Logged    | none, zc == zc_thresh      | NoVehicle | fc = 0, zc = 0, drop track     |
//!
//! Any detection resets `zc`.
//!
//! The automaton is single-track: it follows one plate box at a time, counts
//! consecutive matching detections in `fc` and consecutive empty frames in
//! `zc`, and writes exactly one log entry when a track is committed.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::domain::{
    iou, normalize_plate, BBox, FrameRecord, SelectionStrategy, TimestampMs, TrackerConfig, VehicleClass,
};
use crate::filter::{filter_frame, select_primary, PlateObservation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AutomatonState {
    /// No vehicle detected.
    NoVehicle,
    /// A vehicle is present in the current frame; evidence is accumulating.
    Detected,
    /// The current vehicle has been logged.
    Logged,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InputSymbol {
    /// Detection similar to the current track reference (or the first one).
    Match,
    /// Detection that does not overlap the reference enough.
    Mismatch,
    NoDetection,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackEvidence {
    pub ref_bbox: BBox,
    pub texts: Vec<(Option<String>, TimestampMs)>,
    pub classes: Vec<VehicleClass>,
    pub first_seen: TimestampMs,
}

impl TrackEvidence {
    fn start(obs: PlateObservation, t: TimestampMs) -> Self {
        TrackEvidence {
            ref_bbox: obs.bbox,
            texts: vec![(obs.text, t)],
            classes: vec![obs.vehicle_class],
            first_seen: t,
        }
    }

    fn extend(&mut self, obs: PlateObservation, t: TimestampMs) {
        self.ref_bbox = obs.bbox;
        self.texts.push((obs.text, t));
        self.classes.push(obs.vehicle_class);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackerState {
    pub state: AutomatonState,
    /// Frame counter: matching detections since the track (re)started.
    pub fc: u32,
    /// Zero counter: successive frames without a detection.
    pub zc: u32,
    pub track: Option<TrackEvidence>,
}

/// One row of the vehicle log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VehicleLogEntry {
    pub vehicle_number: String,
    pub vehicle_type: VehicleClass,
    #[serde(rename = "timestamp_ms")]
    pub timestamp: TimestampMs,
}

pub fn new_tracker(_cfg: &TrackerConfig) -> TrackerState {
    TrackerState {
        state: AutomatonState::NoVehicle,
        fc: 0,
        zc: 0,
        track: None,
    }
}

pub fn classify(state: &TrackerState, obs: Option<&PlateObservation>, cfg: &TrackerConfig) -> InputSymbol {
    let Some(obs) = obs else {
        return InputSymbol::NoDetection;
    };
    match &state.track {
        None => InputSymbol::Match,
        Some(track) if iou(&obs.bbox, &track.ref_bbox) >= cfg.iou_similarity => InputSymbol::Match,
        Some(_) => InputSymbol::Mismatch,
    }
}

/// What happens to the track evidence on an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum EvidenceAction {
    Keep,
    /// Begin a fresh track from the observation.
    Start,
    /// Append the observation to the current track.
    Extend,
    /// Append, then write the log entry.
    Commit,
    /// Only move the reference box.
    Follow,
    Drop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Edge {
    next: AutomatonState,
    fc: u32,
    zc: u32,
    action: EvidenceAction,
}

/// The transition relation. Every edge, guard and counter update lives here.
fn transition(from: AutomatonState, symbol: InputSymbol, fc: u32, zc: u32, cfg: &TrackerConfig) -> Edge {
    use AutomatonState::*;
    use EvidenceAction::*;
    use InputSymbol::*;

    let edge = |next, fc, zc, action| Edge { next, fc, zc, action };
    match (from, symbol) {
        (NoVehicle, NoDetection) => edge(NoVehicle, 0, 0, Keep),
        // without a track every detection classifies as a match
        (NoVehicle, Match | Mismatch) => edge(Detected, 1, 0, Start),

        (Detected, Match) if fc == cfg.fc_thresh => edge(Logged, 0, 0, Commit),
        (Detected, Match) => edge(Detected, fc + 1, 0, Extend),
        (Detected, Mismatch) => edge(Detected, 0, 0, Start),
        (Detected, NoDetection) if zc == cfg.zc_thresh => edge(NoVehicle, 0, 0, Drop),
        (Detected, NoDetection) => edge(Detected, fc, zc + 1, Keep),

        (Logged, Match) => edge(Logged, fc, 0, Follow),
        (Logged, Mismatch) => edge(Detected, 1, 0, Start),
        (Logged, NoDetection) if zc == cfg.zc_thresh => edge(NoVehicle, 0, 0, Drop),
        (Logged, NoDetection) => edge(Logged, fc, zc + 1, Keep),
    }
}

/// Advances the automaton by one frame. Returns a log entry only on the
/// `Detected -> Logged` edge, and only when the track carries OCR text.
pub fn step(
    state: TrackerState,
    obs: Option<PlateObservation>,
    t: TimestampMs,
    cfg: &TrackerConfig,
) -> (TrackerState, Option<VehicleLogEntry>) {
    let symbol = classify(&state, obs.as_ref(), cfg);
    let edge = transition(state.state, symbol, state.fc, state.zc, cfg);
    let mut track = state.track;
    let mut entry = None;

    match edge.action {
        EvidenceAction::Keep => {}
        EvidenceAction::Drop => track = None,
        EvidenceAction::Start => {
            track = obs.map(|o| TrackEvidence::start(o, t));
        }
        EvidenceAction::Extend | EvidenceAction::Commit => {
            if let (Some(tr), Some(o)) = (track.as_mut(), obs) {
                tr.extend(o, t);
            }
            if edge.action == EvidenceAction::Commit {
                entry = track.as_ref().and_then(|tr| {
                    select_representative(tr, cfg.selection_strategy).map(|number| VehicleLogEntry {
                        vehicle_number: number,
                        vehicle_type: class_vote(tr),
                        timestamp: t,
                    })
                });
            }
        }
        EvidenceAction::Follow => {
            if let (Some(tr), Some(o)) = (track.as_mut(), obs) {
                tr.ref_bbox = o.bbox;
            }
        }
    }

    let next = TrackerState {
        state: edge.next,
        fc: edge.fc,
        zc: edge.zc,
        track,
    };
    (next, entry)
}

/// Picks the vehicle number to log from a track's readings. `None` when the
/// track never produced any text.
pub fn select_representative(track: &TrackEvidence, strategy: SelectionStrategy) -> Option<String> {
    let mut texts = track.texts.iter().filter_map(|(t, _)| t.as_deref());
    match strategy {
        SelectionStrategy::LastPrediction => texts.next_back().map(str::to_string),
        SelectionStrategy::MajorityVote => {
            // normalized key -> (count, last position, last raw reading)
            let mut groups: HashMap<String, (usize, usize, &str)> = HashMap::new();
            for (pos, raw) in texts.enumerate() {
                let g = groups.entry(normalize_plate(raw)).or_insert((0, pos, raw));
                g.0 += 1;
                g.1 = pos;
                g.2 = raw;
            }
            groups
                .into_values()
                .max_by_key(|&(count, pos, _)| (count, pos))
                .map(|(_, _, raw)| raw.to_string())
        }
    }
}

/// Plurality vote over the track's classes; ties go to the most recent.
pub fn class_vote(track: &TrackEvidence) -> VehicleClass {
    let mut tally: HashMap<VehicleClass, (usize, usize)> = HashMap::new();
    for (pos, cls) in track.classes.iter().enumerate() {
        let e = tally.entry(*cls).or_insert((0, pos));
        e.0 += 1;
        e.1 = pos;
    }
    tally
        .into_iter()
        .max_by_key(|&(_, key)| key)
        .map(|(cls, _)| cls)
        .expect("track evidence always holds at least one class vote")
}

/// Stateful driver around [`step`] for one stream.
#[derive(Debug, Clone)]
pub struct Tracker {
    cfg: TrackerConfig,
    state: TrackerState,
    frames: u64,
    commits: u64,
    textless_commits: u64,
}

impl Tracker {
    pub fn new(cfg: TrackerConfig) -> Self {
        let state = new_tracker(&cfg);
        Tracker {
            cfg,
            state,
            frames: 0,
            commits: 0,
            textless_commits: 0,
        }
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.cfg
    }

    pub fn state(&self) -> &TrackerState {
        &self.state
    }

    pub fn frames(&self) -> u64 {
        self.frames
    }

    /// Number of commits, including the ones suppressed for lack of text.
    pub fn commits(&self) -> u64 {
        self.commits
    }

    pub fn textless_commits(&self) -> u64 {
        self.textless_commits
    }

    pub fn observe(&mut self, obs: Option<PlateObservation>, t: TimestampMs) -> Option<VehicleLogEntry> {
        let prev = self.state.state;
        let state = std::mem::replace(&mut self.state, new_tracker(&self.cfg));
        let (next, entry) = step(state, obs, t, &self.cfg);
        let committed = prev == AutomatonState::Detected && next.state == AutomatonState::Logged;
        self.state = next;
        self.frames += 1;
        if committed {
            self.commits += 1;
            if entry.is_none() {
                self.textless_commits += 1;
            }
        }
        entry
    }

    /// Filter, reduce to the primary observation, then step.
    pub fn process_frame(&mut self, frame: &FrameRecord) -> Option<VehicleLogEntry> {
        let obs = select_primary(filter_frame(frame, &self.cfg), &self.cfg.roi);
        self.observe(obs, frame.timestamp)
    }
}
