//! Exit criteria for the tracker, the simulator experiments and the metrics.
//! Each test prints one `[PASS]`/`[FAIL]` line to stderr, uncaptured.

use std::io::Write;
use std::panic::{catch_unwind, resume_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use anpr_tracker::experiment::{run_once, track_frames};
use anpr_tracker::metrics::{detection_rate, evaluate, word_accuracy, MatchConfig};
use anpr_tracker::replay::{self, LogFormat};
use anpr_tracker::simulator::{bundled, convoy, generate, synthetic_plate, DetectorNoise, OcrNoise, ScenarioSpec};
use anpr_tracker::{
    step, AutomatonState, BBox, PlateObservation, SelectionStrategy, TrackEvidence, TrackerConfig, TrackerState,
    VehicleClass, VehicleLogEntry,
};

fn criterion(name: &str, budget: Duration, body: impl FnOnce()) {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(body));
    let elapsed = start.elapsed();
    let ok = outcome.is_ok() && elapsed <= budget;
    let _ = writeln!(
        std::io::stderr(),
        "[{}] {name} ({:.2}s, budget {:.0}s)",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        budget.as_secs_f64()
    );
    if let Err(p) = outcome {
        resume_unwind(p);
    }
    assert!(elapsed <= budget, "{name} exceeded its runtime budget: {elapsed:?}");
}

fn data(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(rel)
}

// ---------------------------------------------------------------- AC1

fn plate_at(x: f64, text: &str, cls: VehicleClass) -> Option<PlateObservation> {
    Some(PlateObservation {
        bbox: BBox::new(x, 100.0, 80.0, 20.0).unwrap(),
        text: Some(text.to_string()),
        confidence: 0.9,
        vehicle_class: cls,
        timestamp: 0,
    })
}

fn tracked(state: AutomatonState, fc: u32, zc: u32) -> TrackerState {
    TrackerState {
        state,
        fc,
        zc,
        track: Some(TrackEvidence {
            ref_bbox: BBox::new(100.0, 100.0, 80.0, 20.0).unwrap(),
            texts: vec![(Some("KA06N9659".into()), 0)],
            classes: vec![VehicleClass::Bus],
            first_seen: 0,
        }),
    }
}

fn idle() -> TrackerState {
    TrackerState {
        state: AutomatonState::NoVehicle,
        fc: 0,
        zc: 0,
        track: None,
    }
}

#[test]
fn ac1_transition_table_conformance() {
    criterion("AC1 transition-table conformance", Duration::from_secs(1), || {
        use AutomatonState::*;
        let cfg = TrackerConfig {
            fc_thresh: 3,
            zc_thresh: 2,
            ..TrackerConfig::default()
        };
        let a = || plate_at(100.0, "KA06N9659", VehicleClass::Bus);
        let b = || plate_at(600.0, "MH03CS0071", VehicleClass::Car);
        let shape = |s: &TrackerState| (s.state, s.fc, s.zc);

        // (from, input, expected (state, fc, zc), emits)
        type Case = (&'static str, TrackerState, Option<PlateObservation>, (AutomatonState, u32, u32), bool);
        let cases: Vec<Case> = vec![
            ("q1 (None) stay", idle(), None, (NoVehicle, 0, 0), false),
            ("q1 (a) fc++", idle(), a(), (Detected, 1, 0), false),
            ("q2 (a) fc++", tracked(Detected, 1, 1), a(), (Detected, 2, 0), false),
            ("q2 (a) fc==thresh log", tracked(Detected, 3, 1), a(), (Logged, 0, 0), true),
            ("q2 (b) fc=0", tracked(Detected, 2, 0), b(), (Detected, 0, 0), false),
            ("q2 (None) zc++", tracked(Detected, 2, 1), None, (Detected, 2, 2), false),
            ("q2 (None) zc==thresh", tracked(Detected, 2, 2), None, (NoVehicle, 0, 0), false),
            ("q3 (a) stay", tracked(Logged, 0, 0), a(), (Logged, 0, 0), false),
            ("q3 (None) zc++", tracked(Logged, 0, 1), None, (Logged, 0, 2), false),
            ("q3 (None) zc==thresh [ext]", tracked(Logged, 0, 2), None, (NoVehicle, 0, 0), false),
            ("q3 (b) new track [ext]", tracked(Logged, 0, 1), b(), (Detected, 1, 0), false),
        ];
        for (name, from, input, expect, emits) in cases {
            let (next, entry) = step(from, input, 42, &cfg);
            assert_eq!(shape(&next), expect, "{name}");
            assert_eq!(entry.is_some(), emits, "{name}");
            if next.state == NoVehicle {
                assert!(next.track.is_none(), "{name}");
            }
        }

        // commit happens exactly at fc == fc_thresh, with both counters reset
        let (next, entry) = step(tracked(Detected, 3, 1), a(), 42, &cfg);
        assert_eq!((next.fc, next.zc), (0, 0));
        assert_eq!(
            entry,
            Some(VehicleLogEntry {
                vehicle_number: "KA06N9659".into(),
                vehicle_type: VehicleClass::Bus,
                timestamp: 42,
            })
        );
        let (_, entry) = step(tracked(Detected, 2, 1), a(), 42, &cfg);
        assert!(entry.is_none());
    });
}

// ---------------------------------------------------------------- AC2

/// Literal transition-table interpreter, independent of the library stepper.
mod oracle {
    #[derive(Clone, Copy, PartialEq, Eq, Debug)]
    pub enum Sym {
        A,
        B,
        None,
    }

    #[derive(Clone, Copy, PartialEq)]
    enum Guard {
        Any,
        FcLt,
        FcEq,
        ZcLt,
        ZcEq,
    }

    #[derive(Clone, Copy)]
    enum Op {
        Keep,
        Inc,
        Zero,
        One,
    }

    #[derive(Clone, Copy, PartialEq)]
    enum Track {
        Keep,
        New,
        Append,
        Clear,
    }

    // from, symbol, guard, to, fc, zc, track, write log
    type Row = (u8, Sym, Guard, u8, Op, Op, Track, bool);
    const TABLE: &[Row] = &[
        (1, Sym::None, Guard::Any, 1, Op::Zero, Op::Zero, Track::Keep, false),
        (1, Sym::A, Guard::Any, 2, Op::One, Op::Zero, Track::New, false),
        (2, Sym::A, Guard::FcLt, 2, Op::Inc, Op::Zero, Track::Append, false),
        (2, Sym::A, Guard::FcEq, 3, Op::Zero, Op::Zero, Track::Append, true),
        (2, Sym::B, Guard::Any, 2, Op::Zero, Op::Zero, Track::New, false),
        (2, Sym::None, Guard::ZcLt, 2, Op::Keep, Op::Inc, Track::Keep, false),
        (2, Sym::None, Guard::ZcEq, 1, Op::Zero, Op::Zero, Track::Clear, false),
        (3, Sym::A, Guard::Any, 3, Op::Keep, Op::Zero, Track::Keep, false),
        (3, Sym::None, Guard::ZcLt, 3, Op::Keep, Op::Inc, Track::Keep, false),
        (3, Sym::None, Guard::ZcEq, 1, Op::Zero, Op::Zero, Track::Clear, false),
        (3, Sym::B, Guard::Any, 2, Op::One, Op::Zero, Track::New, false),
    ];

    pub struct Oracle {
        pub state: u8,
        pub fc: u32,
        pub zc: u32,
        fc_thresh: u32,
        zc_thresh: u32,
        ref_pos: Option<u8>,
        texts: Vec<Option<String>>,
        classes: Vec<u8>,
    }

    fn apply(op: Op, v: u32) -> u32 {
        match op {
            Op::Keep => v,
            Op::Inc => v + 1,
            Op::Zero => 0,
            Op::One => 1,
        }
    }

    impl Oracle {
        pub fn new(fc_thresh: u32, zc_thresh: u32) -> Self {
            Oracle {
                state: 1,
                fc: 0,
                zc: 0,
                fc_thresh,
                zc_thresh,
                ref_pos: None,
                texts: vec![],
                classes: vec![],
            }
        }

        /// input: (position id, text, class id). Returns the logged (text, class).
        pub fn feed(&mut self, input: Option<(u8, Option<String>, u8)>) -> Option<(String, u8)> {
            let sym = match (&input, self.ref_pos) {
                (None, _) => Sym::None,
                (Some(_), None) => Sym::A,
                (Some((p, _, _)), Some(r)) if *p == r => Sym::A,
                _ => Sym::B,
            };
            let row = TABLE
                .iter()
                .find(|r| {
                    r.0 == self.state
                        && r.1 == sym
                        && match r.2 {
                            Guard::Any => true,
                            Guard::FcLt => self.fc < self.fc_thresh,
                            Guard::FcEq => self.fc == self.fc_thresh,
                            Guard::ZcLt => self.zc < self.zc_thresh,
                            Guard::ZcEq => self.zc == self.zc_thresh,
                        }
                })
                .expect("table is total");
            self.state = row.3;
            self.fc = apply(row.4, self.fc);
            self.zc = apply(row.5, self.zc);
            match row.6 {
                Track::Keep => {}
                Track::Clear => {
                    self.ref_pos = None;
                    self.texts.clear();
                    self.classes.clear();
                }
                Track::New | Track::Append => {
                    let (p, t, c) = input.expect("detection rows carry input");
                    if row.6 == Track::New {
                        self.texts.clear();
                        self.classes.clear();
                    }
                    self.ref_pos = Some(p);
                    self.texts.push(t);
                    self.classes.push(c);
                }
            }
            if !row.7 {
                return None;
            }
            let text = self.texts.iter().rev().find_map(|t| t.clone())?;
            // plurality, ties to the latest vote
            let mut best = (0usize, 0usize, 0u8);
            for c in 0..4u8 {
                let count = self.classes.iter().filter(|&&x| x == c).count();
                let last = self.classes.iter().rposition(|&x| x == c).unwrap_or(0);
                if count > 0 && (count, last) > (best.0, best.1) {
                    best = (count, last, c);
                }
            }
            Some((text, best.2))
        }
    }
}

#[test]
fn ac2_oracle_equivalence() {
    criterion("AC2 oracle equivalence on 1e5 sequences", Duration::from_secs(30), || {
        const CLASSES: [VehicleClass; 4] = [VehicleClass::Car, VehicleClass::Jeep, VehicleClass::Bus, VehicleClass::Truck];
        const TEXTS: [&str; 3] = ["MH03CS0071", "KA06N9659", "DL01A0001"];
        let mut rng = ChaCha8Rng::seed_from_u64(0xF5A);
        let mut total_steps = 0u64;
        let mut total_logs = 0u64;
        for _ in 0..100_000 {
            let fc_thresh = rng.gen_range(1..=8);
            let zc_thresh = rng.gen_range(1..=16);
            let cfg = TrackerConfig {
                fc_thresh,
                zc_thresh,
                selection_strategy: SelectionStrategy::LastPrediction,
                ..TrackerConfig::default()
            };
            let p_none: f64 = rng.gen_range(0.0..0.6);
            let len = rng.gen_range(1..=1000);
            let mut oracle = oracle::Oracle::new(fc_thresh, zc_thresh);
            let mut state = anpr_tracker::new_tracker(&cfg);
            let mut pos = 0u8;
            for t in 0..len {
                let input = if rng.gen_bool(p_none) {
                    None
                } else {
                    if rng.gen_bool(0.15) {
                        pos = rng.gen_range(0..3);
                    }
                    let text = rng.gen_bool(0.9).then(|| TEXTS[rng.gen_range(0..3)].to_string());
                    Some((pos, text, rng.gen_range(0..4u8)))
                };
                let obs = input.as_ref().map(|(p, text, c)| PlateObservation {
                    bbox: BBox::new(100.0 + *p as f64 * 400.0, 100.0, 80.0, 20.0).unwrap(),
                    text: text.clone(),
                    confidence: 0.9,
                    vehicle_class: CLASSES[*c as usize],
                    timestamp: t,
                });
                let expected = oracle.feed(input);
                let (next, entry) = step(state, obs, t, &cfg);
                state = next;
                let got_state = match state.state {
                    AutomatonState::NoVehicle => 1,
                    AutomatonState::Detected => 2,
                    AutomatonState::Logged => 3,
                };
                assert_eq!((got_state, state.fc, state.zc), (oracle.state, oracle.fc, oracle.zc), "step {t}");
                let got = entry.map(|e| {
                    assert_eq!(e.timestamp, t);
                    (e.vehicle_number, CLASSES.iter().position(|c| *c == e.vehicle_type).unwrap() as u8)
                });
                assert_eq!(got, expected, "emission at step {t}");
                total_logs += u64::from(got.is_some());
            }
            total_steps += len;
        }
        assert!(total_logs > 100_000, "sequences should exercise commits, got {total_logs}");
        assert!(total_steps > 10_000_000);
    });
}

// ---------------------------------------------------------------- AC3/AC4

fn lane(vehicles: Vec<anpr_tracker::simulator::VehicleSpec>) -> ScenarioSpec {
    ScenarioSpec {
        seed: 11,
        fps: 10.0,
        frame_width: 1920,
        frame_height: 1080,
        roi: BBox::new(640.0, 300.0, 640.0, 480.0).unwrap(),
        start_ts_ms: 1_654_598_400_000,
        speed_px_per_frame: 250.0,
        tail_frames: 20,
        vehicles,
        detector: DetectorNoise::default(),
        ocr: OcrNoise::default(),
    }
}

fn scenario_config(s: &ScenarioSpec) -> TrackerConfig {
    TrackerConfig {
        roi: s.roi(),
        ..TrackerConfig::for_fps(s.fps)
    }
}

fn noise_free(dwell: u64) -> ScenarioSpec {
    let vs = (0..20).map(|i| (synthetic_plate(i), VehicleClass::ALL[i % 4], 0, dwell, 0));
    lane(convoy(vs, 5, 20))
}

#[test]
fn ac3_noise_free_sop_scenario() {
    criterion("AC3 noise-free SOP scenario", Duration::from_secs(5), || {
        let s = noise_free(12);
        let cfg = scenario_config(&s);
        assert_eq!((cfg.fc_thresh, cfg.zc_thresh), (6, 12));
        let r = run_once(&s, &cfg, &MatchConfig::default()).unwrap();
        assert_eq!(r.eval.detection_rate, Some(1.0));
        assert_eq!(r.eval.word_accuracy, Some(1.0));
        assert_eq!(r.entries, 20, "no duplicate entries");
        assert_eq!(r.eval.counts.unmatched_pred, 0);
    });
}

#[test]
fn ac4_sop_violation() {
    criterion("AC4 SOP violation lowers detection rate", Duration::from_secs(10), || {
        let s = noise_free(4);
        let r = run_once(&s, &scenario_config(&s), &MatchConfig::default()).unwrap();
        assert_eq!(r.eval.detection_rate, Some(0.0));
        assert_eq!(r.entries, 0);

        let mixed = bundled("sop_vs_violation").unwrap();
        let r = run_once(&mixed, &scenario_config(&mixed), &MatchConfig::default()).unwrap();
        let (ok, bad) = (&r.sop["compliant"], &r.sop["violating"]);
        assert_eq!((ok.observed, bad.observed), (50, 50));
        assert!(ok.rate.unwrap() > bad.rate.unwrap(), "compliant {:?} vs violating {:?}", ok.rate, bad.rate);
    });
}

// ---------------------------------------------------------------- AC5

#[test]
fn ac5_class_bias() {
    criterion("AC5 class-bias direction", Duration::from_secs(10), || {
        let s = bundled("class_bias").unwrap();
        let d = &s.detector;
        assert_eq!(d.conf_mean(VehicleClass::Car), 0.8);
        assert_eq!(d.conf_mean(VehicleClass::Jeep), 0.8);
        assert_eq!(d.conf_mean(VehicleClass::Bus), 0.45);
        assert_eq!(d.conf_mean(VehicleClass::Truck), 0.45);
        let cfg = scenario_config(&s);
        assert_eq!(cfg.pred_confidence, 0.5);
        let r = run_once(&s, &cfg, &MatchConfig::default()).unwrap();
        let major = &r.eval.class_groups["car+jeep"];
        let minor = &r.eval.class_groups["truck+bus"];
        assert_eq!((major.observed, minor.observed), (100, 100));
        assert!(
            minor.rate.unwrap() < major.rate.unwrap(),
            "truck+bus {:?} vs car+jeep {:?}",
            minor.rate,
            major.rate
        );
    });
}

// ---------------------------------------------------------------- AC6

#[test]
fn ac6_ocr_noise_sweep() {
    criterion("AC6 OCR noise sweep", Duration::from_secs(20), || {
        let base = bundled("ocr_noise_sweep").unwrap();
        assert_eq!(base.vehicles.len(), 200);
        let wa = |p: f64, strategy: SelectionStrategy| {
            let mut s = base.clone();
            s.ocr.char_sub_prob = p;
            let cfg = TrackerConfig {
                selection_strategy: strategy,
                ..scenario_config(&s)
            };
            run_once(&s, &cfg, &MatchConfig::default()).unwrap().eval.word_accuracy.unwrap()
        };
        let last: Vec<f64> = [0.0, 0.05, 0.10].iter().map(|&p| wa(p, SelectionStrategy::LastPrediction)).collect();
        assert_eq!(last[0], 1.0);
        assert!(last.windows(2).all(|w| w[1] <= w[0]), "WA not monotone: {last:?}");
        let majority = wa(0.10, SelectionStrategy::MajorityVote);
        assert!(majority >= last[2], "majority {majority} < last {}", last[2]);
        let _ = writeln!(std::io::stderr(), "    WA(last) = {last:?}, WA(majority @ 0.10) = {majority}");
    });
}

// ---------------------------------------------------------------- AC7

#[test]
fn ac7_metric_arithmetic() {
    criterion("AC7 metric arithmetic", Duration::from_secs(1), || {
        assert!((detection_rate(139, 155).unwrap() - 0.8968).abs() <= 1e-4);

        let truth: Vec<VehicleLogEntry> = (0..700)
            .map(|i| VehicleLogEntry {
                vehicle_number: synthetic_plate(i),
                vehicle_type: VehicleClass::Jeep,
                timestamp: i as u64 * 60_000,
            })
            .collect();
        let pred: Vec<VehicleLogEntry> = truth
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let mut p = t.clone();
                if i % 50 < 3 {
                    // one flipped character: still paired, but wrong
                    p.vehicle_number.replace_range(0..1, "X");
                }
                p
            })
            .collect();
        assert_eq!(pred.iter().zip(&truth).filter(|(p, t)| p != t).count(), 42);
        let r = evaluate(&pred, &truth, &MatchConfig::default());
        assert_eq!(r.counts.matched, 700);
        let drop = 1.0 - r.word_accuracy.unwrap();
        assert!((drop - 0.06).abs() <= 0.001, "WA drop {drop}");
        assert_eq!(word_accuracy(pred.iter().zip(&truth)), r.word_accuracy);
    });
}

// ---------------------------------------------------------------- AC8

#[test]
fn ac8_golden_replay() {
    criterion("AC8 golden replay determinism", Duration::from_secs(5), || {
        let dir = tempfile::tempdir().unwrap();
        let cfg = replay::load_config(data("configs/default.toml")).unwrap();
        let mut outputs = Vec::new();
        for run in 0..2 {
            let (_, frames) = replay::read_trace(data("traces/checkpoint_demo.jsonl")).unwrap();
            let out = dir.path().join(format!("run{run}.csv"));
            let mut sink = replay::LogSink::create(&out, LogFormat::Csv).unwrap();
            track_frames(frames, &cfg, Some(&mut sink)).unwrap();
            drop(sink);
            outputs.push(std::fs::read(&out).unwrap());
        }
        assert_eq!(outputs[0], outputs[1]);
        let golden = std::fs::read_to_string(data("traces/checkpoint_demo.expected.csv")).unwrap();
        let got = String::from_utf8(outputs[0].clone()).unwrap();
        assert_eq!(got.replace("\r\n", "\n"), golden.replace("\r\n", "\n"));
        assert!(got.lines().count() > 1);
    });
}

#[test]
fn simulated_trace_matches_generator() {
    // the bundled trace is what the bundled demo scenario generates
    let spec: ScenarioSpec = replay::read_json(data("traces/checkpoint_demo.scenario.json")).unwrap();
    let sim = generate(&spec).unwrap();
    let (header, frames) = replay::read_trace_all(data("traces/checkpoint_demo.jsonl")).unwrap();
    assert_eq!(header, sim.header);
    assert_eq!(frames, sim.frames);
}
