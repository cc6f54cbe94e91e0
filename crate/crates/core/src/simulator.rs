//! Seeded synthetic traffic: detection traces plus the ground-truth log.
//!
//! Vehicles move along a single horizontal lane through the ROI: a constant
//! speed approach, a stop at the ROI centre for `dwell_frames`, then a
//! constant speed exit. Each vehicle draws its noise from its own ChaCha
//! stream keyed by `(seed, vehicle index)`, so editing one vehicle never
//! perturbs another.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::domain::{
    BBox, FrameRecord, PlateDetection, Roi, TimestampMs, VehicleClass, VehicleDetection, MIN_DWELL_SECONDS,
};
use crate::error::{Error, Result};
use crate::fsm::VehicleLogEntry;
use crate::replay::TraceHeader;

/// Stand-in for the arrow symbol on defence plates, outside the OCR vocabulary.
pub const OUT_OF_VOCAB_MARKER: char = '^';

const OCR_ALPHABET: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";

const CONFUSABLE: &[(char, char)] = &[('0', 'O'), ('1', 'I'), ('8', 'B'), ('5', 'S'), ('2', 'Z'), ('6', 'G')];

fn plate_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^[A-Z]{2}[0-9]{1,2}[A-Z]{0,3}[0-9]{1,4}$").unwrap())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleSpec {
    pub plate: String,
    pub cls: VehicleClass,
    pub entry_frame: u64,
    #[serde(default)]
    pub approach_frames: u64,
    pub dwell_frames: u64,
    #[serde(default)]
    pub exit_frames: u64,
}

impl VehicleSpec {
    pub fn presence_frames(&self) -> u64 {
        self.approach_frames + self.dwell_frames + self.exit_frames
    }

    pub fn end_frame(&self) -> u64 {
        self.entry_frame + self.presence_frames()
    }
}

/// Whether the vehicle's stop satisfies the minimum dwell.
pub fn sop_compliant(v: &VehicleSpec, fps: f64) -> bool {
    v.dwell_frames > 0 && v.dwell_frames as f64 / fps >= MIN_DWELL_SECONDS - 1e-9
}

fn default_plate_conf() -> f64 {
    0.9
}

fn default_class_conf() -> f64 {
    0.9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorNoise {
    #[serde(default)]
    pub miss_prob: f64,
    /// Mean vehicle confidence per class; absent classes use 0.9.
    #[serde(default)]
    pub conf_mean_by_class: BTreeMap<VehicleClass, f64>,
    #[serde(default)]
    pub conf_jitter: f64,
    #[serde(default)]
    pub bbox_jitter_px: f64,
    #[serde(default = "default_plate_conf")]
    pub plate_conf_mean: f64,
}

impl Default for DetectorNoise {
    fn default() -> Self {
        DetectorNoise {
            miss_prob: 0.0,
            conf_mean_by_class: BTreeMap::new(),
            conf_jitter: 0.0,
            bbox_jitter_px: 0.0,
            plate_conf_mean: default_plate_conf(),
        }
    }
}

impl DetectorNoise {
    pub fn conf_mean(&self, cls: VehicleClass) -> f64 {
        self.conf_mean_by_class.get(&cls).copied().unwrap_or_else(default_class_conf)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OcrNoise {
    /// Independent per-character substitution.
    #[serde(default)]
    pub char_sub_prob: f64,
    /// Truncates one or two characters at either end.
    #[serde(default)]
    pub occlusion_prob: f64,
    /// Swaps one visually confusable character (0/O, 1/I, 8/B, ...).
    #[serde(default)]
    pub blur_prob: f64,
    /// Replaces the whole reading with random characters.
    #[serde(default)]
    pub illegible_prob: f64,
}

fn default_speed() -> f64 {
    250.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub seed: u64,
    pub fps: f64,
    pub frame_width: u32,
    pub frame_height: u32,
    pub roi: BBox,
    #[serde(default)]
    pub start_ts_ms: TimestampMs,
    /// Horizontal speed outside the ROI, pixels per frame.
    #[serde(default = "default_speed")]
    pub speed_px_per_frame: f64,
    /// Empty frames appended after the last vehicle leaves.
    #[serde(default)]
    pub tail_frames: u64,
    pub vehicles: Vec<VehicleSpec>,
    #[serde(default)]
    pub detector: DetectorNoise,
    #[serde(default)]
    pub ocr: OcrNoise,
}

fn prob(key: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::invalid(key, format!("probability {p} outside [0, 1]")))
    }
}

fn non_negative(key: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(key, format!("{v} must be finite and >= 0")))
    }
}

/// Vehicle box size (w, h) in pixels.
fn vehicle_size(cls: VehicleClass) -> (f64, f64) {
    match cls {
        VehicleClass::Car => (220.0, 140.0),
        VehicleClass::Jeep => (240.0, 160.0),
        VehicleClass::Bus => (380.0, 240.0),
        VehicleClass::Truck => (360.0, 240.0),
    }
}

/// Plate box for a vehicle box: centred horizontally in the lower part.
fn plate_box(v: &BBox) -> BBox {
    let w = v.w * 0.36;
    let h = v.h * 0.12;
    BBox {
        x: v.x + (v.w - w) / 2.0,
        y: v.y + v.h * 0.72,
        w,
        h,
    }
}

impl ScenarioSpec {
    pub fn roi(&self) -> Roi {
        Roi { rect: self.roi }
    }

    pub fn header(&self, source_id: impl Into<String>) -> TraceHeader {
        TraceHeader {
            fps: self.fps,
            frame_width: self.frame_width,
            frame_height: self.frame_height,
            source_id: source_id.into(),
        }
    }

    pub fn timestamp(&self, frame: u64) -> TimestampMs {
        self.start_ts_ms + (frame as f64 * 1000.0 / self.fps).round() as u64
    }

    pub fn total_frames(&self) -> u64 {
        self.vehicles.iter().map(VehicleSpec::end_frame).max().unwrap_or(0) + self.tail_frames
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(Error::invalid("fps", "must be positive"));
        }
        if self.frame_width == 0 || self.frame_height == 0 {
            return Err(Error::invalid("frame_width/frame_height", "must be positive"));
        }
        let roi = self.roi();
        roi.rect.validate().map_err(|e| e.rekey("roi"))?;
        roi.validate_within(self.frame_width as f64, self.frame_height as f64)?;
        if !(self.speed_px_per_frame.is_finite() && self.speed_px_per_frame > 0.0) {
            return Err(Error::invalid("speed_px_per_frame", "must be positive"));
        }

        let d = &self.detector;
        prob("detector.miss_prob", d.miss_prob)?;
        prob("detector.plate_conf_mean", d.plate_conf_mean)?;
        for (cls, m) in &d.conf_mean_by_class {
            prob(&format!("detector.conf_mean_by_class.{cls}"), *m)?;
        }
        non_negative("detector.conf_jitter", d.conf_jitter)?;
        non_negative("detector.bbox_jitter_px", d.bbox_jitter_px)?;
        let o = &self.ocr;
        prob("ocr.char_sub_prob", o.char_sub_prob)?;
        prob("ocr.occlusion_prob", o.occlusion_prob)?;
        prob("ocr.blur_prob", o.blur_prob)?;
        prob("ocr.illegible_prob", o.illegible_prob)?;

        let mut prev_end: Option<u64> = None;
        for (i, v) in self.vehicles.iter().enumerate() {
            let key = |field: &str| format!("vehicles[{i}].{field}");
            if !(plate_pattern().is_match(&v.plate) || v.plate.contains(OUT_OF_VOCAB_MARKER)) {
                return Err(Error::invalid(
                    key("plate"),
                    format!("{:?} is neither a registration number nor marked with '^'", v.plate),
                ));
            }
            if v.presence_frames() == 0 {
                return Err(Error::invalid(key("dwell_frames"), "vehicle is never present"));
            }
            if let Some(end) = prev_end {
                if v.entry_frame < end {
                    return Err(Error::invalid(
                        key("entry_frame"),
                        format!("enters at frame {} before the previous vehicle leaves at {end}", v.entry_frame),
                    ));
                }
            }
            prev_end = Some(v.end_frame());
            let stop = self.vehicle_box(v.cls, self.dwell_center_x());
            if !self.in_frame(&stop) {
                return Err(Error::invalid(key("cls"), "vehicle stopped in the ROI does not fit the frame"));
            }
        }
        Ok(())
    }

    fn dwell_center_x(&self) -> f64 {
        self.roi.x + self.roi.w / 2.0
    }

    fn vehicle_box(&self, cls: VehicleClass, cx: f64) -> BBox {
        let (w, h) = vehicle_size(cls);
        let cy = self.roi.y + self.roi.h / 2.0;
        BBox {
            x: cx - w / 2.0,
            y: cy - h / 2.0,
            w,
            h,
        }
    }

    fn in_frame(&self, b: &BBox) -> bool {
        b.x >= 0.0 && b.y >= 0.0 && b.lies_within(self.frame_width as f64, self.frame_height as f64)
    }

    /// Centre x of the vehicle `k` frames after it enters.
    fn position(&self, v: &VehicleSpec, k: u64) -> f64 {
        let (w, _) = vehicle_size(v.cls);
        let speed = self.speed_px_per_frame;
        if k < v.approach_frames {
            // last approach frame sits just left of the ROI
            self.roi.x - w / 2.0 - (v.approach_frames - 1 - k) as f64 * speed
        } else if k < v.approach_frames + v.dwell_frames {
            self.dwell_center_x()
        } else {
            let j = k - v.approach_frames - v.dwell_frames;
            self.roi.x + self.roi.w + w / 2.0 + j as f64 * speed
        }
    }

    fn truth_entry(&self, v: &VehicleSpec) -> VehicleLogEntry {
        let mid = v.entry_frame + v.approach_frames + v.dwell_frames / 2;
        VehicleLogEntry {
            vehicle_number: v.plate.clone(),
            vehicle_type: v.cls,
            timestamp: self.timestamp(mid),
        }
    }
}

/// Which corruptions touched one OCR reading.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Corruption {
    pub out_of_vocab: bool,
    pub illegible: bool,
    pub occluded: bool,
    pub blurred: bool,
    pub substituted: bool,
}

fn random_char(rng: &mut ChaCha8Rng) -> char {
    OCR_ALPHABET[rng.gen_range(0..OCR_ALPHABET.len())] as char
}

/// One simulated OCR reading of `plate`.
pub fn read_plate(plate: &str, ocr: &OcrNoise, rng: &mut ChaCha8Rng) -> (Option<String>, Corruption) {
    let mut c = Corruption::default();
    let mut chars: Vec<char> = plate.chars().filter(|&ch| ch != OUT_OF_VOCAB_MARKER).collect();
    c.out_of_vocab = chars.len() != plate.chars().count();

    if rng.gen_bool(ocr.illegible_prob) {
        c.illegible = true;
        let text: String = (0..chars.len()).map(|_| random_char(rng)).collect();
        return ((!text.is_empty()).then_some(text), c);
    }
    if rng.gen_bool(ocr.occlusion_prob) && chars.len() > 1 {
        let k = rng.gen_range(1..=2usize).min(chars.len() - 1);
        if rng.gen_bool(0.5) {
            chars.drain(..k);
        } else {
            chars.truncate(chars.len() - k);
        }
        c.occluded = true;
    }
    if rng.gen_bool(ocr.blur_prob) {
        let spots: Vec<usize> = chars
            .iter()
            .enumerate()
            .filter(|(_, ch)| CONFUSABLE.iter().any(|&(a, b)| **ch == a || **ch == b))
            .map(|(i, _)| i)
            .collect();
        if !spots.is_empty() {
            let i = spots[rng.gen_range(0..spots.len())];
            let ch = chars[i];
            chars[i] = CONFUSABLE
                .iter()
                .find_map(|&(a, b)| if ch == a { Some(b) } else if ch == b { Some(a) } else { None })
                .unwrap_or(ch);
            c.blurred = true;
        }
    }
    if ocr.char_sub_prob > 0.0 {
        for ch in chars.iter_mut() {
            if rng.gen_bool(ocr.char_sub_prob) {
                let orig = *ch;
                while *ch == orig {
                    *ch = random_char(rng);
                }
                c.substituted = true;
            }
        }
    }
    let text: String = chars.into_iter().collect();
    ((!text.is_empty()).then_some(text), c)
}

/// Counters describing what the noise models did during generation.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimStats {
    pub frames: u64,
    /// Vehicle-frames where the vehicle was inside the image.
    pub visible_frames: u64,
    pub missed_frames: u64,
    pub readings: u64,
    pub corrupted_readings: u64,
    pub out_of_vocab: u64,
    pub illegible: u64,
    pub occluded: u64,
    pub blurred: u64,
    pub substituted: u64,
}

impl SimStats {
    fn record(&mut self, clean: &str, text: &Option<String>, c: Corruption) {
        self.readings += 1;
        if text.as_deref() != Some(clean) {
            self.corrupted_readings += 1;
        }
        self.out_of_vocab += c.out_of_vocab as u64;
        self.illegible += c.illegible as u64;
        self.occluded += c.occluded as u64;
        self.blurred += c.blurred as u64;
        self.substituted += c.substituted as u64;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub header: TraceHeader,
    pub frames: Vec<FrameRecord>,
    pub truth: Vec<VehicleLogEntry>,
    pub stats: SimStats,
}

fn sample(rng: &mut ChaCha8Rng, mean: f64, std: f64) -> f64 {
    if std == 0.0 {
        return mean;
    }
    Normal::new(mean, std).expect("validated std").sample(rng)
}

pub fn generate(spec: &ScenarioSpec) -> Result<Simulation> {
    spec.validate()?;
    let total = spec.total_frames();
    let mut frames: Vec<FrameRecord> = (0..total).map(|f| FrameRecord::empty(f, spec.timestamp(f))).collect();
    let mut stats = SimStats {
        frames: total,
        ..SimStats::default()
    };
    let det = &spec.detector;

    for (index, v) in spec.vehicles.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(index as u64);
        for k in 0..v.presence_frames() {
            let mut vbox = spec.vehicle_box(v.cls, spec.position(v, k));
            if det.bbox_jitter_px > 0.0 {
                vbox.x += sample(&mut rng, 0.0, det.bbox_jitter_px);
                vbox.y += sample(&mut rng, 0.0, det.bbox_jitter_px);
            }
            if !spec.in_frame(&vbox) {
                continue;
            }
            stats.visible_frames += 1;
            if rng.gen_bool(det.miss_prob) {
                stats.missed_frames += 1;
                continue;
            }
            let vconf = sample(&mut rng, det.conf_mean(v.cls), det.conf_jitter).clamp(0.0, 1.0);
            let pconf = sample(&mut rng, det.plate_conf_mean, det.conf_jitter).clamp(0.0, 1.0);
            let (text, corruption) = read_plate(&v.plate, &spec.ocr, &mut rng);
            stats.record(&v.plate, &text, corruption);

            let frame = &mut frames[(v.entry_frame + k) as usize];
            frame.vehicles.push(VehicleDetection {
                bbox: vbox,
                cls: v.cls,
                confidence: vconf,
            });
            frame.plates.push(PlateDetection {
                bbox: plate_box(&vbox),
                confidence: pconf,
                text,
            });
        }
    }

    Ok(Simulation {
        header: spec.header(format!("sim-seed-{}", spec.seed)),
        frames,
        truth: spec.vehicles.iter().map(|v| spec.truth_entry(v)).collect(),
        stats,
    })
}

const BUNDLED: &[(&str, &str)] = &[
    ("sop_vs_violation", include_str!("../data/scenarios/sop_vs_violation.json")),
    ("class_bias", include_str!("../data/scenarios/class_bias.json")),
    ("ocr_noise_sweep", include_str!("../data/scenarios/ocr_noise_sweep.json")),
];

pub fn bundled_names() -> impl Iterator<Item = &'static str> {
    BUNDLED.iter().map(|(n, _)| *n)
}

/// One of the scenario specs shipped with the crate.
pub fn bundled(name: &str) -> Option<ScenarioSpec> {
    BUNDLED
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| serde_json::from_str(text).expect("bundled scenarios are valid JSON"))
}

/// Resolves `arg` as a bundled scenario name first, then as a file path.
pub fn load_scenario(arg: &str) -> Result<ScenarioSpec> {
    let spec = match bundled(arg) {
        Some(s) => s,
        None => crate::replay::read_json(arg)?,
    };
    spec.validate()?;
    Ok(spec)
}

/// Deterministic registration numbers (`SS DD L NNNN`). Indices below
/// 10 000 give distinct plates, and nearby indices differ in most
/// characters so neighbouring vehicles cannot be confused when matching.
pub fn synthetic_plate(i: usize) -> String {
    const STATES: [&str; 8] = ["MH", "KA", "DL", "GJ", "TN", "UP", "RJ", "KL"];
    let digits = (i * 7919 + 1234) % 10_000;
    let series = (b'A' + ((i * 11 + i / 10_000) % 26) as u8) as char;
    let district = (i * 37) % 99 + 1;
    format!("{}{:02}{}{:04}", STATES[(i * 3) % STATES.len()], district, series, digits)
}

/// Lays vehicles out back to back with `gap` empty frames between them.
pub fn convoy(
    vehicles: impl IntoIterator<Item = (String, VehicleClass, u64, u64, u64)>,
    lead_in: u64,
    gap: u64,
) -> Vec<VehicleSpec> {
    let mut next = lead_in;
    vehicles
        .into_iter()
        .map(|(plate, cls, approach, dwell, exit)| {
            let v = VehicleSpec {
                plate,
                cls,
                entry_frame: next,
                approach_frames: approach,
                dwell_frames: dwell,
                exit_frames: exit,
            };
            next = v.end_frame() + gap;
            v
        })
        .collect()
}
