use anpr_tracker::replay::write_trace_to;
use anpr_tracker::simulator::{convoy, generate, synthetic_plate, DetectorNoise, OcrNoise, ScenarioSpec};
use anpr_tracker::{contains, filter_frame, BBox, TrackerConfig, VehicleClass};

fn lane(vehicles: Vec<anpr_tracker::simulator::VehicleSpec>, seed: u64) -> ScenarioSpec {
    ScenarioSpec {
        seed,
        fps: 10.0,
        frame_width: 1920,
        frame_height: 1080,
        roi: BBox::new(640.0, 300.0, 640.0, 480.0).unwrap(),
        start_ts_ms: 0,
        speed_px_per_frame: 250.0,
        tail_frames: 0,
        vehicles,
        detector: DetectorNoise::default(),
        ocr: OcrNoise::default(),
    }
}

fn trace_bytes(s: &ScenarioSpec) -> Vec<u8> {
    let sim = generate(s).unwrap();
    let mut buf = Vec::new();
    write_trace_to(&mut buf, &sim.header, &sim.frames).unwrap();
    buf
}

fn noisy(seed: u64) -> ScenarioSpec {
    let vs = (0..30).map(|i| (synthetic_plate(i), VehicleClass::ALL[i % 4], 2, 10, 2));
    let mut s = lane(convoy(vs, 0, 15), seed);
    s.detector.miss_prob = 0.1;
    s.detector.conf_jitter = 0.1;
    s.detector.bbox_jitter_px = 4.0;
    s.ocr = OcrNoise {
        char_sub_prob: 0.05,
        occlusion_prob: 0.05,
        blur_prob: 0.05,
        illegible_prob: 0.05,
    };
    s
}

#[test]
fn same_seed_gives_identical_bytes() {
    assert_eq!(trace_bytes(&noisy(5)), trace_bytes(&noisy(5)));
    assert_ne!(trace_bytes(&noisy(5)), trace_bytes(&noisy(6)));
}

#[test]
fn adding_a_vehicle_leaves_others_untouched() {
    let base = noisy(9);
    let mut more = base.clone();
    let last_end = more.vehicles.last().unwrap().end_frame();
    more.vehicles.extend(convoy([(synthetic_plate(99), VehicleClass::Bus, 0, 8, 0)], last_end + 10, 0));
    let a = generate(&base).unwrap();
    let b = generate(&more).unwrap();
    assert_eq!(a.frames[..], b.frames[..a.frames.len()]);
}

#[test]
fn noise_free_plates_pass_containment() {
    let vs = (0..8).map(|i| (synthetic_plate(i), VehicleClass::ALL[i % 4], 3, 6, 3));
    let s = lane(convoy(vs, 0, 5), 1);
    let sim = generate(&s).unwrap();
    let cfg = TrackerConfig {
        roi: s.roi(),
        ..TrackerConfig::default()
    };
    let mut plates = 0;
    for f in &sim.frames {
        for (v, p) in f.vehicles.iter().zip(&f.plates) {
            assert!(contains(&v.bbox, &p.bbox));
            plates += 1;
        }
        assert_eq!(filter_frame(f, &cfg).len(), f.plates.len());
    }
    assert!(plates > 0);
}

#[test]
fn truth_size_is_independent_of_noise() {
    let clean = {
        let mut s = noisy(3);
        s.detector = DetectorNoise::default();
        s.ocr = OcrNoise::default();
        s
    };
    assert_eq!(generate(&clean).unwrap().truth, generate(&noisy(3)).unwrap().truth);
    assert_eq!(generate(&noisy(3)).unwrap().truth.len(), 30);
}

#[test]
fn per_frame_miss_rate_matches_probability() {
    let vs = (0..100).map(|i| (synthetic_plate(i), VehicleClass::Car, 0, 100, 0));
    let mut s = lane(convoy(vs, 0, 0), 77);
    s.detector.miss_prob = 0.3;
    let sim = generate(&s).unwrap();
    let present = sim.frames.len();
    assert_eq!(present, 10_000);
    let missed = sim.frames.iter().filter(|f| f.vehicles.is_empty()).count();
    let rate = missed as f64 / present as f64;
    assert!((rate - 0.3).abs() <= 0.02, "miss rate {rate}");
    assert_eq!(sim.stats.missed_frames as usize, missed);
}

#[test]
fn substitution_corrupts_expected_share_of_plates() {
    // 8-character plates, one reading each: P(corrupted) = 1 - 0.9^8
    let vs = (0..1000).map(|i| (format!("MH{:02}A{:03}", i % 100, i % 1000), VehicleClass::Jeep, 0, 1, 0));
    let mut s = lane(convoy(vs, 0, 0), 2024);
    s.ocr.char_sub_prob = 0.1;
    let sim = generate(&s).unwrap();
    let mut corrupted = 0;
    for (f, v) in sim.frames.iter().zip(&s.vehicles) {
        assert_eq!(v.plate.len(), 8);
        corrupted += usize::from(f.plates[0].text.as_deref() != Some(v.plate.as_str()));
    }
    let frac = corrupted as f64 / 1000.0;
    let expected = 1.0 - 0.9f64.powi(8);
    assert!((expected - 0.5695).abs() < 1e-3);
    assert!((frac - expected).abs() <= 0.05, "corrupted fraction {frac}");
}

#[test]
fn low_class_confidence_is_filtered_out() {
    let vs = (0..20).map(|i| (synthetic_plate(i), VehicleClass::Truck, 0, 10, 0));
    let mut s = lane(convoy(vs, 0, 0), 4);
    s.detector.conf_mean_by_class.insert(VehicleClass::Truck, 0.3);
    let sim = generate(&s).unwrap();
    let cfg = TrackerConfig::default();
    assert!(sim.frames.iter().all(|f| filter_frame(f, &cfg).is_empty()));
}
