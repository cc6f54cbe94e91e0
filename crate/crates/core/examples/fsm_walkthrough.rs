//! Drives the automaton by hand and prints every transition.

use anpr_tracker::{classify, new_tracker, step, BBox, PlateObservation, TrackerConfig, VehicleClass};

fn obs(x: f64, text: &str) -> PlateObservation {
    PlateObservation {
        bbox: BBox::new(x, 400.0, 90.0, 24.0).unwrap(),
        text: Some(text.into()),
        confidence: 0.9,
        vehicle_class: VehicleClass::Jeep,
        timestamp: 0,
    }
}

fn main() {
    let cfg = TrackerConfig {
        fc_thresh: 3,
        zc_thresh: 2,
        ..TrackerConfig::default()
    };
    // one jeep for five frames, a gap, then a second vehicle elsewhere
    let mut inputs: Vec<Option<PlateObservation>> = Vec::new();
    inputs.extend(["MH12AB1234", "MH12A81234", "MH12AB1234", "MH12AB1234", "MH12AB1234"].map(|t| Some(obs(600.0, t))));
    inputs.extend([None, None, None]);
    inputs.extend((0..4).map(|_| Some(obs(900.0, "GJ01CD0042"))));

    let mut state = new_tracker(&cfg);
    println!("{:>3} {:<12} {:<12} {:<10} {:>3} {:>3}  entry", "t", "input", "symbol", "state", "fc", "zc");
    for (t, o) in inputs.into_iter().enumerate() {
        let label = o.as_ref().and_then(|o| o.text.clone()).unwrap_or_else(|| "-".into());
        let symbol = classify(&state, o.as_ref(), &cfg);
        let (next, entry) = step(state, o, t as u64 * 100, &cfg);
        println!(
            "{:>3} {:<12} {:<12} {:<10} {:>3} {:>3}  {}",
            t,
            label,
            format!("{symbol:?}"),
            format!("{:?}", next.state),
            next.fc,
            next.zc,
            entry.map(|e| format!("{} {} @{}", e.vehicle_number, e.vehicle_type, e.timestamp)).unwrap_or_default()
        );
        state = next;
    }
}
