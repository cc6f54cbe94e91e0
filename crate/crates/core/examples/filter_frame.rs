//! Plate-in-vehicle filtering and primary selection on one frame.

use anpr_tracker::{filter_frame, select_primary, BBox, FrameRecord, PlateDetection, TrackerConfig, VehicleClass, VehicleDetection};

fn main() -> anpr_tracker::Result<()> {
    let cfg = TrackerConfig::default();
    let frame = FrameRecord {
        frame_index: 0,
        timestamp: 0,
        vehicles: vec![
            VehicleDetection {
                bbox: BBox::new(400.0, 250.0, 240.0, 160.0)?,
                cls: VehicleClass::Jeep,
                confidence: 0.92,
            },
            VehicleDetection {
                bbox: BBox::new(1000.0, 600.0, 380.0, 240.0)?,
                cls: VehicleClass::Bus,
                confidence: 0.35,
            },
        ],
        plates: vec![
            // inside the jeep
            PlateDetection {
                bbox: BBox::new(477.0, 365.0, 86.0, 19.0)?,
                confidence: 0.88,
                text: Some("KA05MN4411".into()),
            },
            // inside the bus, but the bus is below threshold
            PlateDetection {
                bbox: BBox::new(1120.0, 770.0, 137.0, 29.0)?,
                confidence: 0.90,
                text: Some("TN09BZ7000".into()),
            },
            // floating, no container
            PlateDetection {
                bbox: BBox::new(50.0, 50.0, 80.0, 20.0)?,
                confidence: 0.95,
                text: Some("DL3CAF0001".into()),
            },
        ],
    };

    let kept = filter_frame(&frame, &cfg);
    println!("{} of {} plates survive filtering", kept.len(), frame.plates.len());
    for o in &kept {
        println!("  {:?} in a {} (conf {:.2})", o.text, o.vehicle_class, o.confidence);
    }
    let primary = select_primary(kept, &cfg.roi);
    println!("primary: {:?}", primary.and_then(|o| o.text));
    Ok(())
}
