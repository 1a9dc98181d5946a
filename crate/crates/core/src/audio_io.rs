//! WAV loading, frame RMS, and the RMS activity gate.
//!
//! The gate mirrors a recording device that only keeps audio while the
//! acoustic level stays above a per-device threshold: contiguous runs of
//! loud frames are extended by a hang time so footstep gaps inside one
//! walking bout stay in a single segment.

use std::path::Path;

use crate::error::{Error, Result};

/// Canonical pipeline sample rate in Hz.
pub const CANONICAL_SAMPLE_RATE: u32 = 16_000;

/// Mono PCM audio with its sample rate.
///
/// Samples are finite and normalized to `[-1.0, 1.0]`. Clips loaded from
/// disk keep their native rate; operations that require the canonical
/// 16 kHz rate check it explicitly.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    samples: Vec<f64>,
    sample_rate_hz: u32,
    source_id: String,
}

impl AudioClip {
    pub fn new(
        samples: Vec<f64>,
        sample_rate_hz: u32,
        source_id: impl Into<String>,
    ) -> Result<Self> {
        if sample_rate_hz == 0 {
            return Err(Error::InvalidParams("sample rate must be positive".into()));
        }
        for (i, &s) in samples.iter().enumerate() {
            if !s.is_finite() || !(-1.0..=1.0).contains(&s) {
                return Err(Error::InvalidInput(format!(
                    "sample {i} out of range [-1, 1]: {s}"
                )));
            }
        }
        Ok(AudioClip {
            samples,
            sample_rate_hz,
            source_id: source_id.into(),
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }

    /// Error unless the clip is at the rate the caller demands.
    pub fn ensure_rate(&self, expected: u32) -> Result<()> {
        if self.sample_rate_hz != expected {
            return Err(Error::SampleRateMismatch {
                expected,
                actual: self.sample_rate_hz,
            });
        }
        Ok(())
    }
}

/// RMS gate configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct GateConfig {
    /// Frames with RMS at or above this level open the gate.
    pub rms_threshold: f64,
    /// Gate frame length in samples; the gate hops by a full frame.
    pub frame_len: usize,
    /// Frames the gate stays open after the level drops, so footstep
    /// gaps (~2 Hz cadence) do not chop one bout into pieces.
    pub hang_time: usize,
}

impl Default for GateConfig {
    fn default() -> Self {
        GateConfig {
            rms_threshold: 0.01,
            frame_len: 1600, // 100 ms at 16 kHz
            hang_time: 5,    // 500 ms
        }
    }
}

/// Half-open sample span `[start_sample, end_sample)` of gated activity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GateSegment {
    pub start_sample: usize,
    pub end_sample: usize,
}

impl GateSegment {
    pub fn len(&self) -> usize {
        self.end_sample - self.start_sample
    }

    pub fn is_empty(&self) -> bool {
        self.end_sample == self.start_sample
    }
}

/// Load a PCM WAV file as a mono clip normalized to `[-1, 1]`.
///
/// Multi-channel audio is averaged per frame. Integer PCM of 8, 16, 24 or
/// 32 bits and 32-bit float are accepted. The clip keeps the file's native
/// sample rate; no resampling is performed.
pub fn load_wav(path: &Path) -> Result<AudioClip> {
    let mut reader = hound::WavReader::open(path).map_err(map_wav_err)?;
    let spec = reader.spec();
    if spec.channels == 0 {
        return Err(Error::Parse("wav declares zero channels".into()));
    }
    if reader.len() == 0 {
        return Err(Error::EmptyInput(format!(
            "no audio samples in {}",
            path.display()
        )));
    }

    let raw: Vec<f64> = match spec.sample_format {
        hound::SampleFormat::Int => {
            if !matches!(spec.bits_per_sample, 8 | 16 | 24 | 32) {
                return Err(Error::UnsupportedFormat(format!(
                    "{}-bit integer PCM",
                    spec.bits_per_sample
                )));
            }
            let scale = (1i64 << (spec.bits_per_sample - 1)) as f64;
            let mut out = Vec::with_capacity(reader.len() as usize);
            for s in reader.samples::<i32>() {
                out.push(s.map_err(map_wav_err)? as f64 / scale);
            }
            out
        }
        hound::SampleFormat::Float => {
            if spec.bits_per_sample != 32 {
                return Err(Error::UnsupportedFormat(format!(
                    "{}-bit float PCM",
                    spec.bits_per_sample
                )));
            }
            let mut out = Vec::with_capacity(reader.len() as usize);
            for s in reader.samples::<f32>() {
                let v = s.map_err(map_wav_err)? as f64;
                if !v.is_finite() {
                    return Err(Error::Parse("non-finite float sample".into()));
                }
                out.push(v.clamp(-1.0, 1.0));
            }
            out
        }
    };

    let channels = spec.channels as usize;
    let mono: Vec<f64> = if channels == 1 {
        raw
    } else {
        raw.chunks_exact(channels)
            .map(|frame| frame.iter().sum::<f64>() / channels as f64)
            .collect()
    };
    if mono.is_empty() {
        return Err(Error::EmptyInput(format!(
            "no complete frames in {}",
            path.display()
        )));
    }

    let source_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    AudioClip::new(mono, spec.sample_rate, source_id)
}

fn map_wav_err(e: hound::Error) -> Error {
    match e {
        // The reader reports truncated or junk-filled containers as
        // UnexpectedEof/Other io errors; those are corrupt files, not OS
        // failures, so they surface as parse errors.
        hound::Error::IoError(io) => match io.kind() {
            std::io::ErrorKind::UnexpectedEof | std::io::ErrorKind::Other => {
                Error::Parse(format!("corrupt wav: {io}"))
            }
            _ => Error::Io(io),
        },
        hound::Error::FormatError(msg) => Error::Parse(msg.to_string()),
        hound::Error::Unsupported => {
            Error::UnsupportedFormat("non-PCM or unknown wav encoding".into())
        }
        hound::Error::InvalidSampleFormat => {
            Error::UnsupportedFormat("invalid sample format".into())
        }
        other => Error::Parse(other.to_string()),
    }
}

/// RMS per frame: value `k` covers samples `[k*hop, k*hop + frame_len)`;
/// a trailing partial frame is dropped.
pub fn frame_rms(clip: &AudioClip, frame_len: usize, hop: usize) -> Result<Vec<f64>> {
    if frame_len == 0 || hop == 0 {
        return Err(Error::InvalidParams(
            "frame_len and hop must be at least 1".into(),
        ));
    }
    if clip.len() < frame_len {
        return Err(Error::EmptyInput(format!(
            "clip of {} samples is shorter than one {frame_len}-sample frame",
            clip.len()
        )));
    }
    let n_frames = (clip.len() - frame_len) / hop + 1;
    let samples = clip.samples();
    let mut out = Vec::with_capacity(n_frames);
    for k in 0..n_frames {
        let frame = &samples[k * hop..k * hop + frame_len];
        let mean_sq = frame.iter().map(|s| s * s).sum::<f64>() / frame_len as f64;
        out.push(mean_sq.sqrt());
    }
    Ok(out)
}

/// Detect activity: maximal runs of frames with RMS >= threshold, each run
/// held open for `hang_time` extra frames, overlapping runs merged, and the
/// result expressed in sample indices clipped to the clip length.
pub fn rms_gate(clip: &AudioClip, cfg: &GateConfig) -> Result<Vec<GateSegment>> {
    if !cfg.rms_threshold.is_finite() || cfg.rms_threshold < 0.0 {
        return Err(Error::InvalidParams(format!(
            "rms_threshold must be finite and non-negative, got {}",
            cfg.rms_threshold
        )));
    }
    let rms = frame_rms(clip, cfg.frame_len, cfg.frame_len)?;

    // Frame-index runs, already extended by the hang time.
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut open: Option<usize> = None;
    for (k, &level) in rms.iter().enumerate() {
        match (level >= cfg.rms_threshold, open) {
            (true, None) => open = Some(k),
            (false, Some(start)) => {
                runs.push((start, k + cfg.hang_time));
                open = None;
            }
            _ => {}
        }
    }
    if let Some(start) = open {
        runs.push((start, rms.len() + cfg.hang_time));
    }

    // Merge runs the hang extension made adjacent or overlapping.
    let mut merged: Vec<(usize, usize)> = Vec::new();
    for run in runs {
        match merged.last_mut() {
            Some(last) if run.0 <= last.1 => last.1 = last.1.max(run.1),
            _ => merged.push(run),
        }
    }

    Ok(merged
        .into_iter()
        .map(|(a, b)| GateSegment {
            start_sample: a * cfg.frame_len,
            end_sample: (b * cfg.frame_len).min(clip.len()),
        })
        .collect())
}

/// Pick an RMS threshold from a background recording: the given percentile
/// (linear interpolation) of its frame-RMS distribution.
pub fn calibrate_threshold(clip: &AudioClip, percentile: f64, frame_len: usize) -> Result<f64> {
    if !percentile.is_finite() || percentile <= 0.0 || percentile > 100.0 {
        return Err(Error::InvalidParams(format!(
            "percentile must be in (0, 100], got {percentile}"
        )));
    }
    let mut rms = frame_rms(clip, frame_len, frame_len)?;
    if rms.len() < 10 {
        return Err(Error::EmptyInput(format!(
            "calibration clip yields only {} frames, need at least 10",
            rms.len()
        )));
    }
    rms.sort_by(|a, b| a.partial_cmp(b).expect("frame RMS is finite"));
    let rank = percentile / 100.0 * (rms.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let frac = rank - lo as f64;
    if lo + 1 >= rms.len() {
        return Ok(rms[rms.len() - 1]);
    }
    Ok(rms[lo] + frac * (rms[lo + 1] - rms[lo]))
}

/// Render gate segments as CSV rows `source_id,start_sample,end_sample`.
pub fn gate_segments_to_csv(source_id: &str, segments: &[GateSegment]) -> String {
    let mut out = String::from("source_id,start_sample,end_sample\n");
    for seg in segments {
        out.push_str(&format!(
            "{source_id},{},{}\n",
            seg.start_sample, seg.end_sample
        ));
    }
    out
}
