//! End-to-end runs: trace → tracker → log, and simulate → track → evaluate.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::domain::{FrameRecord, TrackerConfig};
use crate::error::{Error, Result};
use crate::fsm::{Tracker, VehicleLogEntry};
use crate::metrics::{match_logs, per_class_report, EvalReport, MatchConfig, RateRow};
use crate::replay::LogSink;
use crate::simulator::{generate, sop_compliant, ScenarioSpec, SimStats};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrackSummary {
    pub frames: u64,
    pub entries: Vec<VehicleLogEntry>,
    pub commits: u64,
    pub textless_commits: u64,
}

/// Runs every frame through filter, primary selection and the automaton.
/// Entries are also appended to `sink` as they are emitted.
pub fn track_frames<I>(frames: I, cfg: &TrackerConfig, mut sink: Option<&mut LogSink>) -> Result<TrackSummary>
where
    I: IntoIterator<Item = Result<FrameRecord>>,
{
    let mut tracker = Tracker::new(cfg.clone());
    let mut entries = Vec::new();
    for frame in frames {
        if let Some(entry) = tracker.process_frame(&frame?) {
            if let Some(s) = sink.as_deref_mut() {
                s.append(&entry)?;
            }
            entries.push(entry);
        }
    }
    Ok(TrackSummary {
        frames: tracker.frames(),
        entries,
        commits: tracker.commits(),
        textless_commits: tracker.textless_commits(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub scenario: ScenarioSpec,
    pub config: TrackerConfig,
    pub match_config: MatchConfig,
    /// Run `r` uses seed `scenario.seed + r * seed_stride`.
    pub repetitions: u32,
    pub seed_stride: u64,
}

impl ExperimentSpec {
    pub fn new(scenario: ScenarioSpec, config: TrackerConfig) -> Self {
        ExperimentSpec {
            scenario,
            config,
            match_config: MatchConfig::default(),
            repetitions: 1,
            seed_stride: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions < 1 {
            return Err(Error::invalid("repetitions", "must be >= 1"));
        }
        self.scenario.validate()?;
        self.config.validate()?;
        self.config
            .roi
            .validate_within(self.scenario.frame_width as f64, self.scenario.frame_height as f64)?;
        self.match_config.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub seed: u64,
    pub frames: u64,
    pub entries: usize,
    pub textless_commits: u64,
    pub eval: EvalReport,
    /// `compliant` / `violating` detection rates by minimum-dwell compliance.
    pub sop: BTreeMap<String, RateRow>,
    pub sim: SimStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub runs: Vec<RunReport>,
}

/// Simulate, track and evaluate one scenario.
pub fn run_once(scenario: &ScenarioSpec, cfg: &TrackerConfig, mc: &MatchConfig) -> Result<RunReport> {
    let sim = generate(scenario)?;
    let summary = track_frames(sim.frames.into_iter().map(Ok), cfg, None)?;
    let matches = match_logs(&summary.entries, &sim.truth, mc);
    let eval = per_class_report(&matches, &summary.entries, &sim.truth, mc);

    let mut detected = vec![false; sim.truth.len()];
    for &(_, ti) in &matches.pairs {
        detected[ti] = true;
    }
    let mut tally = [(0usize, 0usize); 2];
    for (v, hit) in scenario.vehicles.iter().zip(&detected) {
        let slot = &mut tally[usize::from(!sop_compliant(v, scenario.fps))];
        slot.0 += usize::from(*hit);
        slot.1 += 1;
    }
    let sop = [("compliant", tally[0]), ("violating", tally[1])]
        .into_iter()
        .map(|(k, (d, n))| (k.to_string(), RateRow::new(d, n)))
        .collect();

    Ok(RunReport {
        seed: scenario.seed,
        frames: summary.frames,
        entries: summary.entries.len(),
        textless_commits: summary.textless_commits,
        eval,
        sop,
        sim: sim.stats,
    })
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    spec.validate()?;
    let runs = (0..spec.repetitions as u64)
        .map(|r| {
            let mut scenario = spec.scenario.clone();
            scenario.seed = spec.scenario.seed.wrapping_add(r.wrapping_mul(spec.seed_stride));
            run_once(&scenario, &spec.config, &spec.match_config)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentReport { runs })
}

fn pct(row: &RateRow) -> String {
    row.rate.map_or_else(|| "n/a".into(), |r| format!("{:.1}", r * 100.0))
}

impl fmt::Display for ExperimentReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, run) in self.runs.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            writeln!(
                f,
                "run {i} (seed {}): {} frames, {} entries, {} textless commits",
                run.seed, run.frames, run.entries, run.textless_commits
            )?;
            writeln!(f, "{:<24} {:>16} {:>10}", "vehicle movement", "detection rate(%)", "instances")?;
            for (k, row) in &run.sop {
                let label = if k == "compliant" { "following SOP" } else { "violating SOP" };
                writeln!(f, "{:<24} {:>16} {:>10}", label, pct(row), row.observed)?;
            }
            writeln!(f)?;
            writeln!(f, "{}", run.eval)?;
        }
        Ok(())
    }
}
