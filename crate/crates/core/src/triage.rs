//! End-to-end dataset triage: read a manifest, window gait segments,
//! score each window with a trained model, and emit a filtered manifest
//! plus a reconciliation report.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::audio_io::{load_wav, AudioClip, CANONICAL_SAMPLE_RATE};
use crate::classifier::{predict, GaitLabel, Metrics, TriageModel};
use crate::dataset::FeatureRow;
use crate::error::{Error, Result};
use crate::features::extract_features;
use crate::spectro::{melspectrogram_db, SpectroParams};

/// Downstream-detector F1 gain reported for this filtering approach;
/// shipped in reports as a reference annotation for comparison, never
/// recomputed here (the downstream detector is out of scope).
pub const REFERENCE_DOWNSTREAM_F1_DELTA: f64 = 0.25;

pub const DEFAULT_WINDOW_S: f64 = 3.0;
pub const DEFAULT_HOP_S: f64 = 1.5;

/// Shortest segment that still yields one zero-padded window.
const MIN_SEGMENT_S: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClassLabel {
    #[serde(rename = "gait")]
    Gait,
    #[serde(rename = "non_gait")]
    NonGait,
}

impl std::fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ClassLabel::Gait => "gait",
            ClassLabel::NonGait => "non_gait",
        })
    }
}

impl std::str::FromStr for ClassLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gait" => Ok(ClassLabel::Gait),
            "non_gait" => Ok(ClassLabel::NonGait),
            other => Err(Error::Parse(format!(
                "unknown class label '{other}', expected 'gait' or 'non_gait'"
            ))),
        }
    }
}

/// One manifest row: a time span of one audio file with its labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    /// Audio path, resolved relative to the manifest's directory.
    pub path: String,
    pub start_s: f64,
    pub end_s: f64,
    pub class_label: ClassLabel,
    pub quality_label: Option<GaitLabel>,
}

impl ManifestEntry {
    pub fn span_s(&self) -> f64 {
        self.end_s - self.start_s
    }
}

fn validate_manifest(entries: &[ManifestEntry]) -> Result<()> {
    let mut seen = std::collections::HashSet::new();
    for e in entries {
        if !(e.start_s.is_finite()
            && e.end_s.is_finite()
            && 0.0 <= e.start_s
            && e.start_s < e.end_s)
        {
            return Err(Error::manifest(
                &e.id,
                format!("invalid span [{}, {}]", e.start_s, e.end_s),
            ));
        }
        if !seen.insert(e.id.as_str()) {
            return Err(Error::manifest(&e.id, "duplicate id"));
        }
    }
    Ok(())
}

/// Read a manifest file; `.jsonl`/`.json` parse as JSON lines, anything
/// else as headed CSV.
pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let body = std::fs::read_to_string(path)?;
    let ext = path
        .extension()
        .map(|e| e.to_string_lossy().to_lowercase())
        .unwrap_or_default();
    let entries = if ext == "jsonl" || ext == "json" {
        parse_manifest_jsonl(&body)?
    } else {
        parse_manifest_csv(&body)?
    };
    validate_manifest(&entries)?;
    Ok(entries)
}

pub fn parse_manifest_csv(body: &str) -> Result<Vec<ManifestEntry>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(body.as_bytes());
    let mut entries = Vec::new();
    for (line, record) in reader.deserialize::<ManifestEntry>().enumerate() {
        entries.push(record.map_err(|e| Error::Parse(format!("manifest row {line}: {e}")))?);
    }
    Ok(entries)
}

pub fn parse_manifest_jsonl(body: &str) -> Result<Vec<ManifestEntry>> {
    let mut entries = Vec::new();
    for (line, raw) in body.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        entries.push(
            serde_json::from_str(raw)
                .map_err(|e| Error::Parse(format!("manifest line {line}: {e}")))?,
        );
    }
    Ok(entries)
}

pub fn manifest_to_csv(entries: &[ManifestEntry]) -> String {
    let mut out = String::from("id,path,start_s,end_s,class_label,quality_label\n");
    for e in entries {
        let quality = e.quality_label.map(|l| l.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            e.id, e.path, e.start_s, e.end_s, e.class_label, quality
        ));
    }
    out
}

pub fn write_manifest_csv(path: &Path, entries: &[ManifestEntry]) -> Result<()> {
    validate_manifest(entries)?;
    crate::dataset::write_atomic(path, manifest_to_csv(entries).as_bytes())
}

/// One fixed-length analysis window cut from a manifest entry.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub id: String,
    /// True (unpadded) span within the source file.
    pub start_s: f64,
    pub end_s: f64,
    pub clip: AudioClip,
}

/// Cut an entry's span into `window_s`-long windows every `hop_s`.
/// Spans shorter than one window but at least 1 s yield a single
/// zero-padded window whose recorded span stays unpadded.
pub fn window_segment(
    clip: &AudioClip,
    entry: &ManifestEntry,
    window_s: f64,
    hop_s: f64,
) -> Result<Vec<Window>> {
    if !(window_s.is_finite() && window_s > 0.0 && hop_s.is_finite() && hop_s > 0.0) {
        return Err(Error::InvalidParams(format!(
            "window_s and hop_s must be positive, got {window_s} and {hop_s}"
        )));
    }
    let sr = clip.sample_rate_hz() as f64;
    let start = (entry.start_s * sr).round() as usize;
    let end = (entry.end_s * sr).round() as usize;
    if end > clip.len() || start >= end {
        return Err(Error::InvalidInput(format!(
            "entry '{}' span [{}, {}] s outside clip of {:.3} s",
            entry.id,
            entry.start_s,
            entry.end_s,
            clip.duration_s()
        )));
    }
    let span = &clip.samples()[start..end];
    let span_s = span.len() as f64 / sr;
    let win_len = (window_s * sr).round() as usize;
    let hop_len = (hop_s * sr).round() as usize;

    let mut windows = Vec::new();
    if span.len() >= win_len {
        let n = (span.len() - win_len) / hop_len + 1;
        for k in 0..n {
            let lo = k * hop_len;
            let samples = span[lo..lo + win_len].to_vec();
            let id = format!("{}#w{k:04}", entry.id);
            let start_s = entry.start_s + lo as f64 / sr;
            windows.push(Window {
                clip: AudioClip::new(samples, clip.sample_rate_hz(), id.clone())?,
                id,
                start_s,
                end_s: start_s + window_s,
            });
        }
    } else if span_s >= MIN_SEGMENT_S {
        let mut samples = span.to_vec();
        samples.resize(win_len, 0.0);
        let id = format!("{}#w0000", entry.id);
        windows.push(Window {
            clip: AudioClip::new(samples, clip.sample_rate_hz(), id.clone())?,
            id,
            start_s: entry.start_s,
            end_s: entry.end_s,
        });
    } else {
        return Err(Error::InvalidInput(format!(
            "entry '{}' span of {span_s:.3} s is shorter than {MIN_SEGMENT_S} s",
            entry.id
        )));
    }
    Ok(windows)
}

/// Knobs for triage and feature extraction over a manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct TriageParams {
    pub window_s: f64,
    pub hop_s: f64,
    pub spectro: SpectroParams,
    pub min_prominence_ratio: f64,
    /// Abort on the first unreadable entry instead of recording and
    /// continuing.
    pub strict: bool,
    /// Replaces the model's stored threshold when set.
    pub threshold_override: Option<f64>,
}

impl Default for TriageParams {
    fn default() -> Self {
        TriageParams {
            window_s: DEFAULT_WINDOW_S,
            hop_s: DEFAULT_HOP_S,
            spectro: SpectroParams::default(),
            min_prominence_ratio: crate::features::DEFAULT_MIN_PROMINENCE_RATIO,
            strict: false,
            threshold_override: None,
        }
    }
}

/// Outcome for one scored gait window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowDecision {
    pub window_id: String,
    pub entry_id: String,
    pub start_s: f64,
    pub end_s: f64,
    pub good_score: f64,
    pub predicted: GaitLabel,
    pub kept: bool,
}

/// Per-class window accounting plus every decision taken.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriageReport {
    pub gait_windows_in: usize,
    pub gait_windows_kept: usize,
    pub gait_windows_removed: usize,
    pub non_gait_in: usize,
    pub non_gait_kept: usize,
    pub entries_failed: Vec<EntryFailure>,
    pub decisions: Vec<WindowDecision>,
    pub model_seed: u64,
    pub threshold: f64,
    pub reference_downstream_f1_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryFailure {
    pub entry_id: String,
    pub error: String,
}

/// Windows of one entry with their extracted features.
fn entry_windows(
    entry: &ManifestEntry,
    base_dir: &Path,
    params: &TriageParams,
) -> Result<Vec<(Window, FeatureRow)>> {
    let path = base_dir.join(&entry.path);
    let clip = load_wav(&path).map_err(|e| Error::manifest(&entry.id, e))?;
    clip.ensure_rate(CANONICAL_SAMPLE_RATE)
        .map_err(|e| Error::manifest(&entry.id, e))?;
    let windows = window_segment(&clip, entry, params.window_s, params.hop_s)
        .map_err(|e| Error::manifest(&entry.id, e))?;
    windows
        .into_iter()
        .map(|w| {
            let mel = melspectrogram_db(&w.clip, &params.spectro)
                .map_err(|e| Error::manifest(&entry.id, e))?;
            let features = extract_features(&mel, params.min_prominence_ratio)
                .map_err(|e| Error::manifest(&entry.id, e))?;
            let row = FeatureRow {
                id: w.id.clone(),
                features,
                label: entry.quality_label,
            };
            Ok((w, row))
        })
        .collect()
}

/// Extract features for every window of every entry, in manifest order.
/// Lenient mode records failed entries and continues; strict mode stops
/// at the first failure.
pub fn extract_manifest_features(
    entries: &[ManifestEntry],
    base_dir: &Path,
    params: &TriageParams,
) -> Result<(Vec<FeatureRow>, Vec<EntryFailure>)> {
    validate_manifest(entries)?;
    let results: Vec<Result<Vec<(Window, FeatureRow)>>> = entries
        .par_iter()
        .map(|entry| entry_windows(entry, base_dir, params))
        .collect();

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (entry, result) in entries.iter().zip(results) {
        match result {
            Ok(windows) => rows.extend(windows.into_iter().map(|(_, row)| row)),
            Err(e) if params.strict => return Err(e),
            Err(e) => failures.push(EntryFailure {
                entry_id: entry.id.clone(),
                error: e.to_string(),
            }),
        }
    }
    Ok((rows, failures))
}

/// Apply the model as a dataset filter: score every gait window, keep the
/// ones predicted good, and pass non-gait entries through untouched.
pub fn triage_dataset(
    entries: &[ManifestEntry],
    base_dir: &Path,
    model: &TriageModel,
    params: &TriageParams,
) -> Result<(Vec<ManifestEntry>, TriageReport)> {
    validate_manifest(entries)?;
    let threshold = match params.threshold_override {
        Some(t) => {
            if !t.is_finite() || !(0.0..=1.0).contains(&t) {
                return Err(Error::InvalidParams(format!(
                    "threshold must be in [0, 1], got {t}"
                )));
            }
            t
        }
        None => model.threshold,
    };
    let mut scoring_model = model.clone();
    scoring_model.threshold = threshold;

    let gait: Vec<&ManifestEntry> = entries
        .iter()
        .filter(|e| e.class_label == ClassLabel::Gait)
        .collect();
    let results: Vec<Result<Vec<(Window, FeatureRow)>>> = gait
        .par_iter()
        .map(|entry| entry_windows(entry, base_dir, params))
        .collect();

    let mut report = TriageReport {
        gait_windows_in: 0,
        gait_windows_kept: 0,
        gait_windows_removed: 0,
        non_gait_in: 0,
        non_gait_kept: 0,
        entries_failed: Vec::new(),
        decisions: Vec::new(),
        model_seed: model.seed,
        threshold,
        reference_downstream_f1_delta: REFERENCE_DOWNSTREAM_F1_DELTA,
    };
    let mut kept_windows: Vec<(String, ManifestEntry)> = Vec::new();

    for (entry, result) in gait.iter().zip(results) {
        let windows = match result {
            Ok(w) => w,
            Err(e) if params.strict => return Err(e),
            Err(e) => {
                report.entries_failed.push(EntryFailure {
                    entry_id: entry.id.clone(),
                    error: e.to_string(),
                });
                continue;
            }
        };
        for (window, row) in windows {
            let (predicted, good_score) = predict(&scoring_model, &row.features)?;
            let kept = predicted == GaitLabel::GoodGait;
            report.gait_windows_in += 1;
            if kept {
                report.gait_windows_kept += 1;
                kept_windows.push((
                    entry.id.clone(),
                    ManifestEntry {
                        id: window.id.clone(),
                        path: entry.path.clone(),
                        start_s: window.start_s,
                        end_s: window.end_s,
                        class_label: ClassLabel::Gait,
                        quality_label: entry.quality_label,
                    },
                ));
            } else {
                report.gait_windows_removed += 1;
            }
            report.decisions.push(WindowDecision {
                window_id: window.id,
                entry_id: entry.id.clone(),
                start_s: window.start_s,
                end_s: window.end_s,
                good_score,
                predicted,
                kept,
            });
        }
    }

    // Filtered manifest in input order: kept gait windows replace their
    // entry; non-gait entries pass through verbatim.
    let mut filtered = Vec::new();
    for entry in entries {
        match entry.class_label {
            ClassLabel::NonGait => {
                report.non_gait_in += 1;
                report.non_gait_kept += 1;
                filtered.push(entry.clone());
            }
            ClassLabel::Gait => {
                filtered.extend(
                    kept_windows
                        .iter()
                        .filter(|(eid, _)| *eid == entry.id)
                        .map(|(_, w)| w.clone()),
                );
            }
        }
    }

    debug_assert_eq!(
        report.gait_windows_kept + report.gait_windows_removed,
        report.gait_windows_in
    );
    Ok((filtered, report))
}

/// Per-metric before/after deltas between two evaluations of the same
/// test definition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricDelta {
    pub metric: &'static str,
    pub before: f64,
    pub after: f64,
    pub delta: f64,
}

pub fn filter_effectiveness(before: &Metrics, after: &Metrics) -> Vec<MetricDelta> {
    let rows: [(&'static str, f64, f64); 11] = [
        ("bad_precision", before.bad.precision, after.bad.precision),
        ("bad_recall", before.bad.recall, after.bad.recall),
        ("bad_f1", before.bad.f1, after.bad.f1),
        (
            "good_precision",
            before.good.precision,
            after.good.precision,
        ),
        ("good_recall", before.good.recall, after.good.recall),
        ("good_f1", before.good.f1, after.good.f1),
        (
            "macro_precision",
            before.macro_precision,
            after.macro_precision,
        ),
        ("macro_recall", before.macro_recall, after.macro_recall),
        ("macro_f1", before.macro_f1, after.macro_f1),
        ("weighted_f1", before.weighted_f1, after.weighted_f1),
        ("accuracy", before.accuracy, after.accuracy),
    ];
    rows.into_iter()
        .map(|(metric, b, a)| MetricDelta {
            metric,
            before: b,
            after: a,
            delta: a - b,
        })
        .collect()
}
