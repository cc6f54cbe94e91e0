//! Generates a small noisy scenario and shows what the OCR model did.

use anpr_tracker::simulator::{convoy, generate, synthetic_plate, DetectorNoise, OcrNoise, ScenarioSpec};
use anpr_tracker::{BBox, VehicleClass};

fn main() -> anpr_tracker::Result<()> {
    let vehicles = (0..6).map(|i| (synthetic_plate(i), VehicleClass::ALL[i % 4], 3, 12, 3));
    let spec = ScenarioSpec {
        seed: 42,
        fps: 10.0,
        frame_width: 1920,
        frame_height: 1080,
        roi: BBox::new(640.0, 300.0, 640.0, 480.0)?,
        start_ts_ms: 0,
        speed_px_per_frame: 250.0,
        tail_frames: 10,
        vehicles: convoy(vehicles, 5, 20),
        detector: DetectorNoise {
            miss_prob: 0.05,
            conf_jitter: 0.05,
            bbox_jitter_px: 3.0,
            ..DetectorNoise::default()
        },
        ocr: OcrNoise {
            char_sub_prob: 0.05,
            occlusion_prob: 0.05,
            blur_prob: 0.1,
            illegible_prob: 0.05,
        },
    };
    let sim = generate(&spec)?;
    println!("{} frames, {} vehicles", sim.frames.len(), sim.truth.len());
    println!("{:#?}", sim.stats);

    for (v, t) in spec.vehicles.iter().zip(&sim.truth) {
        let readings: Vec<String> = sim
            .frames
            .iter()
            .filter(|f| (v.entry_frame..v.end_frame()).contains(&f.frame_index))
            .flat_map(|f| f.plates.iter().map(|p| p.text.clone().unwrap_or_else(|| "?".into())))
            .collect();
        println!("{} ({}) @{}: {}", t.vehicle_number, t.vehicle_type, t.timestamp, readings.join(" "));
    }
    Ok(())
}
