//! STFT, mel filterbank, dB mel spectrogram, and the per-frame energy
//! signal E(i) that the triage features are computed from.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::audio_io::{AudioClip, CANONICAL_SAMPLE_RATE};
use crate::error::{Error, Result};

/// Floor applied to mel power before taking the log.
const DB_EPS: f64 = 1e-10;

/// Spectrogram analysis parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectroParams {
    pub n_fft: usize,
    pub hop: usize,
    pub n_mels: usize,
    pub fmin_hz: f64,
    pub fmax_hz: f64,
    /// Clamp floor in dB below the per-clip peak.
    pub db_floor: f64,
}

impl Default for SpectroParams {
    fn default() -> Self {
        SpectroParams {
            n_fft: 1024, // 64 ms at 16 kHz
            hop: 256,    // 16 ms
            n_mels: 64,
            fmin_hz: 40.0,
            fmax_hz: 8000.0,
            db_floor: 80.0,
        }
    }
}

impl SpectroParams {
    pub fn validate(&self, sample_rate_hz: u32) -> Result<()> {
        if self.n_fft < 2 || self.hop == 0 || self.n_mels == 0 {
            return Err(Error::InvalidParams(format!(
                "need n_fft >= 2, hop >= 1, n_mels >= 1; got n_fft={}, hop={}, n_mels={}",
                self.n_fft, self.hop, self.n_mels
            )));
        }
        let nyquist = sample_rate_hz as f64 / 2.0;
        if !(self.fmin_hz >= 0.0 && self.fmin_hz < self.fmax_hz && self.fmax_hz <= nyquist) {
            return Err(Error::InvalidParams(format!(
                "need 0 <= fmin < fmax <= {nyquist} Hz; got fmin={}, fmax={}",
                self.fmin_hz, self.fmax_hz
            )));
        }
        if !self.db_floor.is_finite() || self.db_floor <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "db_floor must be positive, got {}",
                self.db_floor
            )));
        }
        Ok(())
    }
}

/// dB-scaled mel spectrogram, indexed `[frame][mel bin]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MelSpectrogram {
    values: Vec<Vec<f64>>,
    params: SpectroParams,
    sample_rate_hz: u32,
}

impl MelSpectrogram {
    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn params(&self) -> &SpectroParams {
        &self.params
    }

    pub fn n_frames(&self) -> usize {
        self.values.len()
    }

    pub fn n_mels(&self) -> usize {
        self.params.n_mels
    }

    /// Seconds between consecutive frames.
    pub fn frame_period_s(&self) -> f64 {
        self.params.hop as f64 / self.sample_rate_hz as f64
    }

    /// Row-major CSV (one line per frame) with a parameter header line.
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# n_fft={},hop={},n_mels={},fmin_hz={},fmax_hz={},db_floor={},sample_rate_hz={}\n",
            self.params.n_fft,
            self.params.hop,
            self.params.n_mels,
            self.params.fmin_hz,
            self.params.fmax_hz,
            self.params.db_floor,
            self.sample_rate_hz
        );
        for row in &self.values {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

/// Per-frame sum of mel dB values: E(i) = sum over mel bins of frame i.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergySignal {
    values: Vec<f64>,
    frame_period_s: f64,
}

impl EnergySignal {
    pub fn new(values: Vec<f64>, frame_period_s: f64) -> Result<Self> {
        if !frame_period_s.is_finite() || frame_period_s <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "frame period must be positive, got {frame_period_s}"
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "energy signal contains non-finite value {v}"
            )));
        }
        Ok(EnergySignal {
            values,
            frame_period_s,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn frame_period_s(&self) -> f64 {
        self.frame_period_s
    }
}

/// Periodic Hann window of length `n`.
fn hann_window(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (std::f64::consts::TAU * i as f64 / n as f64).cos())
        .collect()
}

/// Power spectrogram: Hann-windowed, hop-strided |FFT|^2 for bins
/// `0..=n_fft/2`. Frame count is `(len - n_fft)/hop + 1`.
pub fn stft_power(clip: &AudioClip, params: &SpectroParams) -> Result<Vec<Vec<f64>>> {
    params.validate(clip.sample_rate_hz())?;
    if clip.len() < params.n_fft {
        return Err(Error::EmptyInput(format!(
            "clip of {} samples is shorter than n_fft={}",
            clip.len(),
            params.n_fft
        )));
    }
    let n_fft = params.n_fft;
    let n_bins = n_fft / 2 + 1;
    let n_frames = (clip.len() - n_fft) / params.hop + 1;
    let window = hann_window(n_fft);
    let samples = clip.samples();

    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n_fft);
    let mut buf = vec![Complex::new(0.0, 0.0); n_fft];

    let mut frames = Vec::with_capacity(n_frames);
    for k in 0..n_frames {
        let start = k * params.hop;
        for (i, slot) in buf.iter_mut().enumerate() {
            *slot = Complex::new(samples[start + i] * window[i], 0.0);
        }
        fft.process(&mut buf);
        frames.push(buf[..n_bins].iter().map(|c| c.norm_sqr()).collect());
    }
    Ok(frames)
}

/// Hz to mel (HTK convention).
pub fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

/// Mel to Hz (HTK convention).
pub fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangular mel filterbank, `n_mels` rows by `n_fft/2 + 1` columns.
///
/// Centers are equally spaced on the mel scale between `fmin_hz` and
/// `fmax_hz`; each triangle peaks at 1 and is sampled at the FFT bin
/// center frequencies.
pub fn mel_filterbank(params: &SpectroParams, sample_rate_hz: u32) -> Result<Vec<Vec<f64>>> {
    params.validate(sample_rate_hz)?;
    let n_bins = params.n_fft / 2 + 1;
    let mel_lo = hz_to_mel(params.fmin_hz);
    let mel_hi = hz_to_mel(params.fmax_hz);
    // n_mels + 2 edge points: filter m spans points m-1 .. m+1.
    let edges: Vec<f64> = (0..params.n_mels + 2)
        .map(|i| mel_to_hz(mel_lo + (mel_hi - mel_lo) * i as f64 / (params.n_mels + 1) as f64))
        .collect();
    let bin_hz = sample_rate_hz as f64 / params.n_fft as f64;

    let mut bank = Vec::with_capacity(params.n_mels);
    for m in 1..=params.n_mels {
        let (left, center, right) = (edges[m - 1], edges[m], edges[m + 1]);
        let mut row = vec![0.0; n_bins];
        let mut any = false;
        for (k, slot) in row.iter_mut().enumerate() {
            let f = k as f64 * bin_hz;
            let rise = if center > left {
                (f - left) / (center - left)
            } else {
                0.0
            };
            let fall = if right > center {
                (right - f) / (right - center)
            } else {
                0.0
            };
            let w = rise.min(fall).max(0.0);
            if w > 0.0 {
                any = true;
            }
            *slot = w;
        }
        if !any {
            return Err(Error::InvalidParams(format!(
                "mel filter {m} ({left:.1}-{right:.1} Hz) covers no FFT bin; \
                 reduce n_mels or widen the frequency range"
            )));
        }
        bank.push(row);
    }
    Ok(bank)
}

/// dB mel spectrogram: filterbank x power per frame, `10*log10(max(x, 1e-10))`,
/// then clamped per clip to `[peak - db_floor, peak]`.
pub fn melspectrogram_db(clip: &AudioClip, params: &SpectroParams) -> Result<MelSpectrogram> {
    clip.ensure_rate(CANONICAL_SAMPLE_RATE)?;
    let power = stft_power(clip, params)?;
    let bank = mel_filterbank(params, clip.sample_rate_hz())?;

    let mut values: Vec<Vec<f64>> = power
        .iter()
        .map(|frame| {
            bank.iter()
                .map(|row| {
                    let p: f64 = row.iter().zip(frame).map(|(w, x)| w * x).sum();
                    10.0 * p.max(DB_EPS).log10()
                })
                .collect()
        })
        .collect();

    let peak = values
        .iter()
        .flatten()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let floor = peak - params.db_floor;
    for row in &mut values {
        for v in row {
            *v = v.max(floor);
        }
    }

    Ok(MelSpectrogram {
        values,
        params: params.clone(),
        sample_rate_hz: clip.sample_rate_hz(),
    })
}

/// Reduce a mel spectrogram to its per-frame energy signal.
pub fn energy_signal(mel: &MelSpectrogram) -> EnergySignal {
    let values: Vec<f64> = mel.values.iter().map(|row| row.iter().sum()).collect();
    EnergySignal {
        values,
        frame_period_s: mel.frame_period_s(),
    }
}
