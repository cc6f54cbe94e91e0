//! Vehicles that stop long enough are logged; those that roll through are not.

use anpr_tracker::experiment::{run_experiment, ExperimentSpec};
use anpr_tracker::simulator::bundled;
use anpr_tracker::TrackerConfig;

fn main() -> anpr_tracker::Result<()> {
    let scenario = bundled("sop_vs_violation").expect("bundled scenario");
    let cfg = TrackerConfig {
        roi: scenario.roi(),
        ..TrackerConfig::for_fps(scenario.fps)
    };
    let mut spec = ExperimentSpec::new(scenario, cfg);
    spec.repetitions = 3;
    print!("{}", run_experiment(&spec)?);
    Ok(())
}
