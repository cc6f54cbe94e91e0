//! Word accuracy as OCR substitution noise grows, for both selection strategies.

use anpr_tracker::experiment::run_once;
use anpr_tracker::metrics::MatchConfig;
use anpr_tracker::simulator::bundled;
use anpr_tracker::{SelectionStrategy, TrackerConfig};

fn main() -> anpr_tracker::Result<()> {
    let base = bundled("ocr_noise_sweep").expect("bundled scenario");
    println!("{:>8} {:>14} {:>14} {:>8}", "char_sub", "WA(last)", "WA(majority)", "DR");
    for p in [0.0, 0.02, 0.05, 0.10, 0.15, 0.20] {
        let mut s = base.clone();
        s.ocr.char_sub_prob = p;
        let mut row = Vec::new();
        let mut dr = None;
        for strategy in [SelectionStrategy::LastPrediction, SelectionStrategy::MajorityVote] {
            let cfg = TrackerConfig {
                roi: s.roi(),
                selection_strategy: strategy,
                ..TrackerConfig::for_fps(s.fps)
            };
            let eval = run_once(&s, &cfg, &MatchConfig::default())?.eval;
            row.push(eval.word_accuracy.map_or_else(|| "n/a".into(), |w| format!("{:.1}%", w * 100.0)));
            dr = eval.detection_rate;
        }
        println!(
            "{:>8.2} {:>14} {:>14} {:>7.1}%",
            p,
            row[0],
            row[1],
            dr.unwrap_or(0.0) * 100.0
        );
    }
    Ok(())
}
