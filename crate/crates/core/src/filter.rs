//! Per-frame prediction filtering: confidence gate, plate-in-vehicle
//! containment, then vehicle boxes are dropped and only plate observations
//! travel on to the tracker.

use std::cmp::Ordering;

use crate::domain::{contains, iou, BBox, FrameRecord, Roi, TimestampMs, TrackerConfig, VehicleClass};

/// A plate that survived filtering, tagged with its parent vehicle's class.
#[derive(Debug, Clone, PartialEq)]
pub struct PlateObservation {
    pub bbox: BBox,
    pub text: Option<String>,
    pub confidence: f64,
    pub vehicle_class: VehicleClass,
    pub timestamp: TimestampMs,
}

pub fn filter_frame(frame: &FrameRecord, cfg: &TrackerConfig) -> Vec<PlateObservation> {
    let vehicles: Vec<_> = frame
        .vehicles
        .iter()
        .filter(|v| v.confidence >= cfg.pred_confidence)
        .collect();
    if vehicles.is_empty() {
        return Vec::new();
    }

    frame
        .plates
        .iter()
        .filter(|p| p.confidence >= cfg.pred_confidence)
        .filter_map(|p| {
            // largest-IoU container wins; first in input order on equal IoU
            let parent = vehicles
                .iter()
                .filter(|v| contains(&v.bbox, &p.bbox))
                .fold(None, |best: Option<(f64, VehicleClass)>, v| {
                    let score = iou(&v.bbox, &p.bbox);
                    match best {
                        Some((s, _)) if s >= score => best,
                        _ => Some((score, v.cls)),
                    }
                })?;
            Some(PlateObservation {
                bbox: p.bbox,
                text: p.text.clone(),
                confidence: p.confidence,
                vehicle_class: parent.1,
                timestamp: frame.timestamp,
            })
        })
        .collect()
}

fn rank(a: &PlateObservation, b: &PlateObservation) -> Ordering {
    // "greater" means preferred
    a.confidence
        .total_cmp(&b.confidence)
        .then(a.bbox.area().total_cmp(&b.bbox.area()))
        .then(b.bbox.x.total_cmp(&a.bbox.x))
}

/// Reduces one frame's observations to the single one the automaton sees.
/// Observations centred in the ROI take precedence over everything else.
pub fn select_primary(observations: Vec<PlateObservation>, roi: &Roi) -> Option<PlateObservation> {
    let (inside, outside): (Vec<_>, Vec<_>) = observations
        .into_iter()
        .partition(|o| roi.contains_center(&o.bbox));
    let pool = if inside.is_empty() { outside } else { inside };
    pool.into_iter().max_by(rank)
}
