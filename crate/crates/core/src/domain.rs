//! Value types, box geometry and tracker configuration shared by every stage.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Milliseconds since the Unix epoch.
pub type TimestampMs = u64;

/// Axis-aligned box in pixel coordinates, `(x, y)` being the top-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Result<Self> {
        let b = BBox { x, y, w, h };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.x, self.y, self.w, self.h].iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid("bbox", "coordinates must be finite"));
        }
        if self.x < 0.0 || self.y < 0.0 {
            return Err(Error::invalid("bbox", format!("negative origin ({}, {})", self.x, self.y)));
        }
        if self.w <= 0.0 || self.h <= 0.0 {
            return Err(Error::invalid("bbox", format!("non-positive size {}x{}", self.w, self.h)));
        }
        Ok(())
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    /// Half-open point test: left/top edges inclusive, right/bottom exclusive.
    pub fn contains_point(&self, px: f64, py: f64) -> bool {
        px >= self.x && px < self.right() && py >= self.y && py < self.bottom()
    }

    pub fn intersection_area(&self, other: &BBox) -> f64 {
        let iw = self.right().min(other.right()) - self.x.max(other.x);
        let ih = self.bottom().min(other.bottom()) - self.y.max(other.y);
        if iw <= 0.0 || ih <= 0.0 {
            0.0
        } else {
            iw * ih
        }
    }

    pub fn lies_within(&self, width: f64, height: f64) -> bool {
        self.right() <= width && self.bottom() <= height
    }
}

/// Intersection over union of two valid boxes.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    if a == b {
        return 1.0;
    }
    let inter = a.intersection_area(b);
    if inter == 0.0 {
        return 0.0;
    }
    let union = a.area() + b.area() - inter;
    (inter / union).clamp(0.0, 1.0)
}

/// Minimum share of the plate's area that must overlap the vehicle box.
pub const CONTAINMENT_AREA_FRACTION: f64 = 0.9;

/// Plate-in-vehicle predicate: the inner center lies inside `outer` and at
/// least 90% of `inner`'s area overlaps it.
pub fn contains(outer: &BBox, inner: &BBox) -> bool {
    let (cx, cy) = inner.center();
    if !outer.contains_point(cx, cy) {
        return false;
    }
    outer.intersection_area(inner) / inner.area() >= CONTAINMENT_AREA_FRACTION
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VehicleClass {
    Car,
    Jeep,
    Bus,
    Truck,
}

impl VehicleClass {
    pub const ALL: [VehicleClass; 4] = [
        VehicleClass::Car,
        VehicleClass::Jeep,
        VehicleClass::Bus,
        VehicleClass::Truck,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            VehicleClass::Car => "car",
            VehicleClass::Jeep => "jeep",
            VehicleClass::Bus => "bus",
            VehicleClass::Truck => "truck",
        }
    }
}

impl fmt::Display for VehicleClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for VehicleClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "car" => Ok(VehicleClass::Car),
            "jeep" => Ok(VehicleClass::Jeep),
            "bus" => Ok(VehicleClass::Bus),
            "truck" => Ok(VehicleClass::Truck),
            other => Err(Error::invalid("vehicle_type", format!("unknown class {other:?}"))),
        }
    }
}

/// Canonical plate form: uppercase, spaces and hyphens removed. The
/// out-of-vocabulary marker `^` is preserved.
pub fn normalize_plate(s: &str) -> String {
    s.chars()
        .filter(|c| !c.is_whitespace() && *c != '-')
        .flat_map(char::to_uppercase)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleDetection {
    pub bbox: BBox,
    pub cls: VehicleClass,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlateDetection {
    pub bbox: BBox,
    pub confidence: f64,
    /// OCR output; `None` when the reader produced nothing.
    pub text: Option<String>,
}

/// One frame's raw detector and OCR output.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameRecord {
    pub frame_index: u64,
    pub timestamp: TimestampMs,
    pub vehicles: Vec<VehicleDetection>,
    pub plates: Vec<PlateDetection>,
}

impl FrameRecord {
    pub fn empty(frame_index: u64, timestamp: TimestampMs) -> Self {
        FrameRecord {
            frame_index,
            timestamp,
            vehicles: Vec::new(),
            plates: Vec::new(),
        }
    }
}

/// The checkpoint region where vehicles are expected to stop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Roi {
    pub rect: BBox,
}

impl Roi {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Result<Self> {
        Ok(Roi {
            rect: BBox::new(x, y, w, h)?,
        })
    }

    pub fn contains_center(&self, b: &BBox) -> bool {
        let (cx, cy) = b.center();
        self.rect.contains_point(cx, cy)
    }

    pub fn validate_within(&self, width: f64, height: f64) -> Result<()> {
        if !self.rect.lies_within(width, height) {
            return Err(Error::invalid(
                "roi",
                format!("region {:?} exceeds frame {width}x{height}", self.rect),
            ));
        }
        Ok(())
    }
}

impl Default for Roi {
    fn default() -> Self {
        Roi {
            rect: BBox {
                x: 320.0,
                y: 180.0,
                w: 640.0,
                h: 360.0,
            },
        }
    }
}

/// How the logged vehicle number is chosen from a track's OCR readings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionStrategy {
    #[default]
    LastPrediction,
    MajorityVote,
}

impl FromStr for SelectionStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "last_prediction" => Ok(SelectionStrategy::LastPrediction),
            "majority_vote" => Ok(SelectionStrategy::MajorityVote),
            other => Err(Error::invalid("selection_strategy", format!("unknown strategy {other:?}"))),
        }
    }
}

/// Minimum stop duration at the checkpoint, in seconds.
pub const MIN_DWELL_SECONDS: f64 = 0.6;
pub const DEFAULT_FPS: f64 = 10.0;
pub const DEFAULT_PRED_CONFIDENCE: f64 = 0.5;
pub const DEFAULT_IOU_SIMILARITY: f64 = 0.3;

/// Frame count covering the minimum dwell at `fps`.
pub fn frames_for_min_dwell(fps: f64) -> u32 {
    // 0.6 * fps is not exact in binary; shave the rounding error before ceil.
    ((MIN_DWELL_SECONDS * fps) - 1e-9).ceil().max(1.0) as u32
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackerConfig {
    pub pred_confidence: f64,
    /// Commit threshold on the frame counter.
    pub fc_thresh: u32,
    /// Gap tolerance on the zero counter.
    pub zc_thresh: u32,
    pub iou_similarity: f64,
    pub roi: Roi,
    pub fps: f64,
    pub selection_strategy: SelectionStrategy,
}

impl TrackerConfig {
    /// Defaults derived from the frame rate: the commit threshold covers the
    /// minimum dwell, the gap tolerance is twice that.
    pub fn for_fps(fps: f64) -> Self {
        let fc = frames_for_min_dwell(fps);
        TrackerConfig {
            pred_confidence: DEFAULT_PRED_CONFIDENCE,
            fc_thresh: fc,
            zc_thresh: 2 * fc,
            iou_similarity: DEFAULT_IOU_SIMILARITY,
            roi: Roi::default(),
            fps,
            selection_strategy: SelectionStrategy::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.fc_thresh < 1 {
            return Err(Error::invalid("fc_thresh", "must be >= 1"));
        }
        if self.zc_thresh < 1 {
            return Err(Error::invalid("zc_thresh", "must be >= 1"));
        }
        if !(self.pred_confidence > 0.0 && self.pred_confidence < 1.0) {
            return Err(Error::invalid("pred_confidence", "must lie strictly between 0 and 1"));
        }
        if !(self.iou_similarity > 0.0 && self.iou_similarity < 1.0) {
            return Err(Error::invalid("iou_similarity", "must lie strictly between 0 and 1"));
        }
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(Error::invalid("fps", "must be positive"));
        }
        self.roi.rect.validate().map_err(|e| e.rekey("roi"))?;
        Ok(())
    }
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig::for_fps(DEFAULT_FPS)
    }
}
