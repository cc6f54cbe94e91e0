//! Detection rate by vehicle class when the detector is weak on heavy vehicles.

use anpr_tracker::experiment::run_once;
use anpr_tracker::metrics::MatchConfig;
use anpr_tracker::simulator::bundled;
use anpr_tracker::{TrackerConfig, VehicleClass};

fn main() -> anpr_tracker::Result<()> {
    let scenario = bundled("class_bias").expect("bundled scenario");
    let cfg = TrackerConfig {
        roi: scenario.roi(),
        ..TrackerConfig::for_fps(scenario.fps)
    };
    for cls in VehicleClass::ALL {
        println!("{cls:<6} mean detector confidence {:.2}", scenario.detector.conf_mean(cls));
    }
    let run = run_once(&scenario, &cfg, &MatchConfig::default())?;
    println!();
    println!("{}", run.eval);
    Ok(())
}
