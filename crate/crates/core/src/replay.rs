//! File formats: JSONL detection traces, vehicle logs (CSV or JSONL) and
//! the flat TOML tracker configuration.
//!
//! Trace layout, one JSON object per line:
//!
//! ```text
//! {"fps":10.0,"frame_width":1280,"frame_height":720,"source_id":"gate-1"}
//! {"frame":0,"ts_ms":0,"vehicles":[{"x":..,"y":..,"w":..,"h":..,"conf":..,"cls":"car"}],"plates":[{"x":..,"y":..,"w":..,"h":..,"conf":..,"text":"MH03CS0071"}]}
//! ```

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::domain::{
    BBox, FrameRecord, PlateDetection, Roi, SelectionStrategy, TrackerConfig, VehicleClass, VehicleDetection,
    DEFAULT_FPS,
};
use crate::error::{Error, Result};
use crate::fsm::VehicleLogEntry;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceHeader {
    pub fps: f64,
    pub frame_width: u32,
    pub frame_height: u32,
    pub source_id: String,
}

impl TraceHeader {
    pub fn validate(&self) -> Result<()> {
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(Error::invalid("fps", "must be positive"));
        }
        if self.frame_width == 0 || self.frame_height == 0 {
            return Err(Error::invalid("frame dimensions", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireVehicle {
    x: f64,
    y: f64,
    w: f64,
    h: f64,
    conf: f64,
    cls: VehicleClass,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WirePlate {
    x: f64,
    y: f64,
    w: f64,
    h: f64,
    conf: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    text: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireFrame {
    frame: u64,
    ts_ms: u64,
    #[serde(default)]
    vehicles: Vec<WireVehicle>,
    #[serde(default)]
    plates: Vec<WirePlate>,
}

fn check_conf(conf: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&conf) {
        Ok(conf)
    } else {
        Err(Error::invalid("conf", format!("{conf} outside [0, 1]")))
    }
}

impl WireFrame {
    fn into_record(self) -> Result<FrameRecord> {
        let vehicles = self
            .vehicles
            .into_iter()
            .map(|v| {
                Ok(VehicleDetection {
                    bbox: BBox::new(v.x, v.y, v.w, v.h)?,
                    cls: v.cls,
                    confidence: check_conf(v.conf)?,
                })
            })
            .collect::<Result<_>>()?;
        let plates = self
            .plates
            .into_iter()
            .map(|p| {
                Ok(PlateDetection {
                    bbox: BBox::new(p.x, p.y, p.w, p.h)?,
                    confidence: check_conf(p.conf)?,
                    text: p.text.filter(|t| !t.trim().is_empty()),
                })
            })
            .collect::<Result<_>>()?;
        Ok(FrameRecord {
            frame_index: self.frame,
            timestamp: self.ts_ms,
            vehicles,
            plates,
        })
    }

    fn from_record(r: &FrameRecord) -> Self {
        WireFrame {
            frame: r.frame_index,
            ts_ms: r.timestamp,
            vehicles: r
                .vehicles
                .iter()
                .map(|v| WireVehicle {
                    x: v.bbox.x,
                    y: v.bbox.y,
                    w: v.bbox.w,
                    h: v.bbox.h,
                    conf: v.confidence,
                    cls: v.cls,
                })
                .collect(),
            plates: r
                .plates
                .iter()
                .map(|p| WirePlate {
                    x: p.bbox.x,
                    y: p.bbox.y,
                    w: p.bbox.w,
                    h: p.bbox.h,
                    conf: p.confidence,
                    text: p.text.clone(),
                })
                .collect(),
        }
    }
}

/// Streaming reader over the frame lines of a trace. Validates ordering as
/// it goes; the first error ends iteration.
pub struct TraceReader<R> {
    lines: std::io::Lines<R>,
    path: PathBuf,
    line_no: usize,
    record: usize,
    last: Option<(u64, u64)>,
    failed: bool,
}

impl<R: BufRead> TraceReader<R> {
    /// Parses the header line and positions the reader at the first frame.
    pub fn new(reader: R, path: impl Into<PathBuf>) -> Result<(TraceHeader, Self)> {
        let path = path.into();
        let mut lines = reader.lines();
        let first = match lines.next() {
            Some(l) => l.map_err(|e| Error::io(&path, e))?,
            None => {
                return Err(Error::Parse {
                    path,
                    line: 1,
                    msg: "missing trace header".into(),
                })
            }
        };
        let header: TraceHeader = serde_json::from_str(&first).map_err(|e| Error::Parse {
            path: path.clone(),
            line: 1,
            msg: e.to_string(),
        })?;
        header.validate().map_err(|e| Error::Parse {
            path: path.clone(),
            line: 1,
            msg: e.to_string(),
        })?;
        let reader = TraceReader {
            lines,
            path,
            line_no: 1,
            record: 0,
            last: None,
            failed: false,
        };
        Ok((header, reader))
    }

    fn parse_line(&mut self, line: &str) -> Result<FrameRecord> {
        let parse_err = |msg: String| Error::Parse {
            path: self.path.clone(),
            line: self.line_no,
            msg,
        };
        let wire: WireFrame = serde_json::from_str(line).map_err(|e| parse_err(e.to_string()))?;
        let rec = wire.into_record().map_err(|e| parse_err(e.to_string()))?;
        self.record += 1;
        if let Some((prev_frame, prev_ts)) = self.last {
            if rec.frame_index <= prev_frame {
                return Err(Error::NonMonotonicFrame {
                    path: self.path.clone(),
                    line: self.line_no,
                    record: self.record,
                    prev: prev_frame,
                    got: rec.frame_index,
                });
            }
            if rec.timestamp < prev_ts {
                return Err(Error::NonMonotonicTimestamp {
                    path: self.path.clone(),
                    line: self.line_no,
                    record: self.record,
                    prev: prev_ts,
                    got: rec.timestamp,
                });
            }
        }
        self.last = Some((rec.frame_index, rec.timestamp));
        Ok(rec)
    }
}

impl<R: BufRead> Iterator for TraceReader<R> {
    type Item = Result<FrameRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        loop {
            let line = self.lines.next()?;
            self.line_no += 1;
            let item = match line {
                Err(e) => Err(Error::io(&self.path, e)),
                Ok(l) if l.trim().is_empty() => continue,
                Ok(l) => self.parse_line(&l),
            };
            self.failed = item.is_err();
            return Some(item);
        }
    }
}

pub fn read_trace(path: impl AsRef<Path>) -> Result<(TraceHeader, TraceReader<BufReader<File>>)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    TraceReader::new(BufReader::new(file), path)
}

/// Reads a whole trace into memory.
pub fn read_trace_all(path: impl AsRef<Path>) -> Result<(TraceHeader, Vec<FrameRecord>)> {
    let (header, reader) = read_trace(path)?;
    let frames = reader.collect::<Result<Vec<_>>>()?;
    Ok((header, frames))
}

pub fn write_trace_to<W: Write>(mut out: W, header: &TraceHeader, frames: &[FrameRecord]) -> std::io::Result<()> {
    serde_json::to_writer(&mut out, header)?;
    out.write_all(b"\n")?;
    for f in frames {
        serde_json::to_writer(&mut out, &WireFrame::from_record(f))?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn write_trace(path: impl AsRef<Path>, header: &TraceHeader, frames: &[FrameRecord]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_trace_to(BufWriter::new(file), header, frames).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LogFormat {
    #[default]
    Csv,
    Jsonl,
}

impl LogFormat {
    /// `.jsonl`/`.json` means JSONL, anything else CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl" | "json") => LogFormat::Jsonl,
            _ => LogFormat::Csv,
        }
    }
}

impl std::str::FromStr for LogFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(LogFormat::Csv),
            "jsonl" => Ok(LogFormat::Jsonl),
            other => Err(Error::invalid("format", format!("expected csv or jsonl, got {other:?}"))),
        }
    }
}

pub const LOG_CSV_HEADER: [&str; 3] = ["vehicle_number", "vehicle_type", "timestamp_ms"];

enum SinkInner {
    Csv(Box<csv::Writer<File>>),
    Jsonl(BufWriter<File>),
}

/// Append-only vehicle log. Every entry is flushed as soon as it is written.
pub struct LogSink {
    inner: SinkInner,
    path: PathBuf,
    written: usize,
}

impl LogSink {
    pub fn create(path: impl AsRef<Path>, format: LogFormat) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let inner = match format {
            LogFormat::Csv => {
                let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
                w.write_record(LOG_CSV_HEADER)?;
                w.flush().map_err(|e| Error::io(&path, e))?;
                SinkInner::Csv(Box::new(w))
            }
            LogFormat::Jsonl => SinkInner::Jsonl(BufWriter::new(file)),
        };
        Ok(LogSink {
            inner,
            path,
            written: 0,
        })
    }

    pub fn append(&mut self, entry: &VehicleLogEntry) -> Result<()> {
        let io = |e| Error::io(&self.path, e);
        match &mut self.inner {
            SinkInner::Csv(w) => {
                w.serialize(entry)?;
                w.flush().map_err(io)?;
            }
            SinkInner::Jsonl(w) => {
                serde_json::to_writer(&mut *w, entry).map_err(|e| io(e.into()))?;
                w.write_all(b"\n").map_err(io)?;
                w.flush().map_err(io)?;
            }
        }
        self.written += 1;
        Ok(())
    }

    pub fn written(&self) -> usize {
        self.written
    }
}

pub fn write_log<'a>(
    entries: impl IntoIterator<Item = &'a VehicleLogEntry>,
    path: impl AsRef<Path>,
    format: LogFormat,
) -> Result<()> {
    let mut sink = LogSink::create(path, format)?;
    for e in entries {
        sink.append(e)?;
    }
    Ok(())
}

pub fn read_log(path: impl AsRef<Path>, format: LogFormat) -> Result<Vec<VehicleLogEntry>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    match format {
        LogFormat::Csv => {
            let mut rdr = csv::Reader::from_reader(file);
            let headers = rdr.headers()?.clone();
            if headers.iter().ne(LOG_CSV_HEADER) {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: 1,
                    msg: format!("expected header {}", LOG_CSV_HEADER.join(",")),
                });
            }
            rdr.deserialize()
                .enumerate()
                .map(|(i, r)| {
                    r.map_err(|e| Error::Parse {
                        path: path.to_path_buf(),
                        line: i + 2,
                        msg: e.to_string(),
                    })
                })
                .collect()
        }
        LogFormat::Jsonl => BufReader::new(file)
            .lines()
            .enumerate()
            .filter(|(_, l)| l.as_ref().map_or(true, |l| !l.trim().is_empty()))
            .map(|(i, l)| {
                let l = l.map_err(|e| Error::io(path, e))?;
                serde_json::from_str(&l).map_err(|e| Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    msg: e.to_string(),
                })
            })
            .collect(),
    }
}

/// Flat key-value layout of the tracker configuration file. Every key is
/// optional; missing keys take the frame-rate derived defaults.
#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pred_confidence: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fc_thresh: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    zc_thresh: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    iou_similarity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    roi_x: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    roi_y: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    roi_w: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    roi_h: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    selection_strategy: Option<SelectionStrategy>,
}

fn threshold(key: &str, v: Option<i64>, default: u32) -> Result<u32> {
    match v {
        None => Ok(default),
        Some(n) if n >= 1 && n <= u32::MAX as i64 => Ok(n as u32),
        Some(n) => Err(Error::invalid(key, format!("must be >= 1, got {n}"))),
    }
}

impl ConfigFile {
    fn resolve(self) -> Result<TrackerConfig> {
        let fps = self.fps.unwrap_or(DEFAULT_FPS);
        if !(fps.is_finite() && fps > 0.0) {
            return Err(Error::invalid("fps", format!("must be positive, got {fps}")));
        }
        let base = TrackerConfig::for_fps(fps);
        let fc_thresh = threshold("fc_thresh", self.fc_thresh, base.fc_thresh)?;
        // gap tolerance follows an explicit commit threshold unless set itself
        let zc_thresh = threshold("zc_thresh", self.zc_thresh, 2 * fc_thresh)?;
        let d = base.roi.rect;
        let rect = BBox {
            x: self.roi_x.unwrap_or(d.x),
            y: self.roi_y.unwrap_or(d.y),
            w: self.roi_w.unwrap_or(d.w),
            h: self.roi_h.unwrap_or(d.h),
        };
        if rect.validate().is_err() {
            let key = if rect.w.is_nan() || rect.w <= 0.0 {
                "roi_w"
            } else if rect.h.is_nan() || rect.h <= 0.0 {
                "roi_h"
            } else if rect.x.is_nan() || rect.x < 0.0 {
                "roi_x"
            } else {
                "roi_y"
            };
            return Err(Error::invalid(key, "roi must be a finite, non-negative, non-empty rectangle"));
        }
        let cfg = TrackerConfig {
            pred_confidence: self.pred_confidence.unwrap_or(base.pred_confidence),
            fc_thresh,
            zc_thresh,
            iou_similarity: self.iou_similarity.unwrap_or(base.iou_similarity),
            roi: Roi { rect },
            fps,
            selection_strategy: self.selection_strategy.unwrap_or_default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn from_config(cfg: &TrackerConfig) -> Self {
        ConfigFile {
            pred_confidence: Some(cfg.pred_confidence),
            fc_thresh: Some(cfg.fc_thresh as i64),
            zc_thresh: Some(cfg.zc_thresh as i64),
            iou_similarity: Some(cfg.iou_similarity),
            roi_x: Some(cfg.roi.rect.x),
            roi_y: Some(cfg.roi.rect.y),
            roi_w: Some(cfg.roi.rect.w),
            roi_h: Some(cfg.roi.rect.h),
            fps: Some(cfg.fps),
            selection_strategy: Some(cfg.selection_strategy),
        }
    }
}

pub fn parse_config(text: &str) -> Result<TrackerConfig> {
    let raw: ConfigFile = toml::from_str(text).map_err(|e| Error::invalid("config", e.message().to_string()))?;
    raw.resolve()
}

/// Renders every key explicitly, so the output reloads to an equal config.
pub fn config_to_string(cfg: &TrackerConfig) -> String {
    toml::to_string(&ConfigFile::from_config(cfg)).expect("flat config always serializes")
}

pub fn load_config(path: impl AsRef<Path>) -> Result<TrackerConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text).map_err(|e| Error::Config {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })
}

pub fn save_config(path: impl AsRef<Path>, cfg: &TrackerConfig) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, config_to_string(cfg)).map_err(|e| Error::io(path, e))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::io(path, e.into()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        msg: e.to_string(),
    })
}
