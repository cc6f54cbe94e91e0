//! Detection rate and word accuracy of a predicted vehicle log against a
//! ground-truth log.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::domain::{normalize_plate, VehicleClass};
use crate::error::{Error, Result};
use crate::fsm::VehicleLogEntry;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatchConfig {
    /// Largest allowed |predicted - truth| timestamp gap.
    pub time_window_ms: u64,
    /// Plate tolerance used for pairing only; word accuracy stays exact.
    pub max_edit_distance: usize,
}

impl Default for MatchConfig {
    fn default() -> Self {
        MatchConfig {
            time_window_ms: 10_000,
            max_edit_distance: 2,
        }
    }
}

impl MatchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.time_window_ms == 0 {
            return Err(Error::invalid("time_window_ms", "must be > 0"));
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            time_window_ms: Option<u64>,
            max_edit_distance: Option<usize>,
        }
        let raw: Raw = toml::from_str(text).map_err(|e| Error::invalid("match config", e.message().to_string()))?;
        let d = MatchConfig::default();
        let mc = MatchConfig {
            time_window_ms: raw.time_window_ms.unwrap_or(d.time_window_ms),
            max_edit_distance: raw.max_edit_distance.unwrap_or(d.max_edit_distance),
        };
        mc.validate()?;
        Ok(mc)
    }
}

/// Levenshtein distance over chars.
pub fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let next = (diag + usize::from(ca != cb)).min(row[j] + 1).min(row[j + 1] + 1);
            diag = row[j + 1];
            row[j + 1] = next;
        }
    }
    row[b.len()]
}

/// Index pairs `(pred, truth)` plus whatever stayed unpaired on each side.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MatchResult {
    pub pairs: Vec<(usize, usize)>,
    pub unmatched_pred: Vec<usize>,
    pub unmatched_truth: Vec<usize>,
}

/// Greedy chronological one-to-one pairing. Each truth entry, in order,
/// takes the nearest-in-time unpaired prediction inside the window whose
/// normalized plate is within the edit tolerance; earlier predictions win
/// ties.
pub fn match_logs(pred: &[VehicleLogEntry], truth: &[VehicleLogEntry], mc: &MatchConfig) -> MatchResult {
    let pred_norm: Vec<String> = pred.iter().map(|p| normalize_plate(&p.vehicle_number)).collect();
    let mut taken = vec![false; pred.len()];
    let mut result = MatchResult::default();

    for (ti, t) in truth.iter().enumerate() {
        let tn = normalize_plate(&t.vehicle_number);
        let best = pred
            .iter()
            .enumerate()
            .filter(|(pi, _)| !taken[*pi])
            .map(|(pi, p)| (pi, p.timestamp.abs_diff(t.timestamp)))
            .filter(|&(pi, dt)| dt <= mc.time_window_ms && edit_distance(&pred_norm[pi], &tn) <= mc.max_edit_distance)
            .min_by_key(|&(pi, dt)| (dt, pi));
        match best {
            Some((pi, _)) => {
                taken[pi] = true;
                result.pairs.push((pi, ti));
            }
            None => result.unmatched_truth.push(ti),
        }
    }
    result.unmatched_pred = (0..pred.len()).filter(|&i| !taken[i]).collect();
    result
}

pub fn detection_rate(matched: usize, observed: usize) -> Option<f64> {
    (observed > 0).then(|| matched as f64 / observed as f64)
}

/// Share of pairs whose normalized plates are identical.
pub fn word_accuracy<'a>(pairs: impl IntoIterator<Item = (&'a VehicleLogEntry, &'a VehicleLogEntry)>) -> Option<f64> {
    let (mut n, mut exact) = (0usize, 0usize);
    for (p, t) in pairs {
        n += 1;
        exact += usize::from(normalize_plate(&p.vehicle_number) == normalize_plate(&t.vehicle_number));
    }
    (n > 0).then(|| exact as f64 / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub detected: usize,
    pub observed: usize,
    pub rate: Option<f64>,
}

impl RateRow {
    pub fn new(detected: usize, observed: usize) -> Self {
        RateRow {
            detected,
            observed,
            rate: detection_rate(detected, observed),
        }
    }

    fn add(self, other: RateRow) -> RateRow {
        RateRow::new(self.detected + other.detected, self.observed + other.observed)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub truth: usize,
    pub pred: usize,
    pub matched: usize,
    pub exact: usize,
    pub unmatched_truth: usize,
    pub unmatched_pred: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub detection_rate: Option<f64>,
    pub word_accuracy: Option<f64>,
    /// Keyed by ground-truth class; only classes present in the truth log.
    pub per_class: BTreeMap<VehicleClass, RateRow>,
    /// `car+jeep` and `truck+bus` aggregates.
    pub class_groups: BTreeMap<String, RateRow>,
    pub counts: Counts,
    pub unmatched_truth: Vec<VehicleLogEntry>,
    pub unmatched_pred: Vec<VehicleLogEntry>,
    pub match_config: MatchConfig,
}

pub const CLASS_GROUPS: [(&str, [VehicleClass; 2]); 2] = [
    ("car+jeep", [VehicleClass::Car, VehicleClass::Jeep]),
    ("truck+bus", [VehicleClass::Truck, VehicleClass::Bus]),
];

pub fn per_class_report(
    matches: &MatchResult,
    pred: &[VehicleLogEntry],
    truth: &[VehicleLogEntry],
    mc: &MatchConfig,
) -> EvalReport {
    let mut detected: BTreeMap<VehicleClass, usize> = BTreeMap::new();
    let mut observed: BTreeMap<VehicleClass, usize> = BTreeMap::new();
    for t in truth {
        *observed.entry(t.vehicle_type).or_default() += 1;
    }
    for &(_, ti) in &matches.pairs {
        *detected.entry(truth[ti].vehicle_type).or_default() += 1;
    }
    let per_class: BTreeMap<_, _> = observed
        .iter()
        .map(|(cls, &n)| (*cls, RateRow::new(detected.get(cls).copied().unwrap_or(0), n)))
        .collect();
    let class_groups = CLASS_GROUPS
        .iter()
        .map(|(name, members)| {
            let row = members
                .iter()
                .filter_map(|c| per_class.get(c).copied())
                .fold(RateRow::new(0, 0), RateRow::add);
            (name.to_string(), row)
        })
        .collect();

    let pairs: Vec<_> = matches.pairs.iter().map(|&(pi, ti)| (&pred[pi], &truth[ti])).collect();
    let exact = pairs
        .iter()
        .filter(|(p, t)| normalize_plate(&p.vehicle_number) == normalize_plate(&t.vehicle_number))
        .count();

    EvalReport {
        detection_rate: detection_rate(matches.pairs.len(), truth.len()),
        word_accuracy: word_accuracy(pairs.iter().copied()),
        per_class,
        class_groups,
        counts: Counts {
            truth: truth.len(),
            pred: pred.len(),
            matched: matches.pairs.len(),
            exact,
            unmatched_truth: matches.unmatched_truth.len(),
            unmatched_pred: matches.unmatched_pred.len(),
        },
        unmatched_truth: matches.unmatched_truth.iter().map(|&i| truth[i].clone()).collect(),
        unmatched_pred: matches.unmatched_pred.iter().map(|&i| pred[i].clone()).collect(),
        match_config: *mc,
    }
}

/// Match, then report.
pub fn evaluate(pred: &[VehicleLogEntry], truth: &[VehicleLogEntry], mc: &MatchConfig) -> EvalReport {
    let m = match_logs(pred, truth, mc);
    per_class_report(&m, pred, truth, mc)
}

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |r| format!("{:.1}", r * 100.0))
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = &self.counts;
        writeln!(f, "detection rate (%)  {:>7}   {}/{}", pct(self.detection_rate), c.matched, c.truth)?;
        writeln!(f, "word accuracy (%)   {:>7}   {}/{}", pct(self.word_accuracy), c.exact, c.matched)?;
        writeln!(f, "predictions         {:>7}   unmatched {}", c.pred, c.unmatched_pred)?;
        writeln!(f)?;
        writeln!(f, "{:<12} {:>16} {:>10}", "class", "detection rate(%)", "instances")?;
        for (cls, row) in &self.per_class {
            writeln!(f, "{:<12} {:>16} {:>10}", cls.as_str(), pct(row.rate), row.observed)?;
        }
        for (name, row) in &self.class_groups {
            writeln!(f, "{:<12} {:>16} {:>10}", name, pct(row.rate), row.observed)?;
        }
        write!(
            f,
            "matching: window {} ms, max edit distance {}",
            self.match_config.time_window_ms, self.match_config.max_edit_distance
        )
    }
}
