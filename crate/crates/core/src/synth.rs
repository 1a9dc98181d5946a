//! Synthetic gait scene generator.
//!
//! Produces labelled 16 kHz scenes (footstep bursts over pink noise, plus
//! optional non-gait distractor events) so the whole pipeline can be
//! exercised and measured without recorded audio. The generator is a
//! verification surrogate: it aims for the right energy structure, not
//! psychoacoustic realism.

use std::path::Path;

use rand::Rng;
use rayon::prelude::*;

use crate::audio_io::{AudioClip, CANONICAL_SAMPLE_RATE};
use crate::classifier::GaitLabel;
use crate::error::{Error, Result};
use crate::rng::{derive_rng, mix_seed};
use crate::triage::{write_manifest_csv, ClassLabel, ManifestEntry};

/// Substream purposes; SNR-paired scenes share the same step, noise and
/// distractor realizations because the SNR only enters as a scale factor.
const P_STEPS: u64 = 0x5354_4550; // "STEP"
const P_NOISE: u64 = 0x4E4F_4953; // "NOIS"
const P_DISTRACT: u64 = 0x4449_5354; // "DIST"
const P_SCENE: u64 = 0x5343_4E45; // "SCNE"

/// Footstep burst band, within the observed footstep energy envelope.
const STEP_BAND_HZ: (f64, f64) = (100.0, 2000.0);
/// Sinusoids summed per footstep burst.
const STEP_PARTIALS: usize = 24;
/// Peak level scenes are normalized to, leaving headroom for a 2x gain.
const PEAK_LEVEL: f64 = 0.45;

/// Label bands: specs between the good and bad bands are rejected so the
/// synthetic classes stay unambiguous.
const GOOD_MIN_SNR_DB: f64 = 10.0;
const BAD_MAX_SNR_DB: f64 = 0.0;
const BAD_MIN_DISTRACTORS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub duration_s: f64,
    /// Footstep rate; indoor walking sits around 1.5 to 2.5 Hz.
    pub cadence_hz: f64,
    /// Step timing jitter as a fraction of the step period, in [0, 0.5).
    pub step_jitter_frac: f64,
    /// Exponential decay constant of each footstep burst.
    pub step_decay_ms: f64,
    /// Footstep-to-background ratio.
    pub snr_db: f64,
    /// Non-gait transient events (door-shut thumps, speech-band tones).
    pub distractors: usize,
    pub seed: u64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        SceneSpec {
            duration_s: 6.0,
            cadence_hz: 2.0,
            step_jitter_frac: 0.1,
            step_decay_ms: 60.0,
            snr_db: 20.0,
            distractors: 0,
            seed: 0,
        }
    }
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = self.duration_s.is_finite()
            && self.duration_s > 0.0
            && self.cadence_hz.is_finite()
            && self.cadence_hz > 0.0
            && (0.0..0.5).contains(&self.step_jitter_frac)
            && self.step_decay_ms.is_finite()
            && self.step_decay_ms > 0.0
            && self.snr_db.is_finite();
        if !ok {
            return Err(Error::InvalidParams(format!("invalid scene spec {self:?}")));
        }
        if self.duration_s * self.cadence_hz < 1.0 {
            return Err(Error::InvalidParams(format!(
                "scene of {} s at {} Hz holds no full step",
                self.duration_s, self.cadence_hz
            )));
        }
        self.label().map(|_| ())
    }

    /// Quality label implied by the parameters. Settings in the ambiguous
    /// band (positive SNR below the good floor, fewer distractors than the
    /// bad floor) are rejected.
    pub fn label(&self) -> Result<GaitLabel> {
        if self.snr_db >= GOOD_MIN_SNR_DB && self.distractors == 0 {
            Ok(GaitLabel::GoodGait)
        } else if self.snr_db <= BAD_MAX_SNR_DB || self.distractors >= BAD_MIN_DISTRACTORS {
            Ok(GaitLabel::BadGait)
        } else {
            Err(Error::InvalidParams(format!(
                "ambiguous spec: snr {} dB with {} distractors is neither clearly good nor bad",
                self.snr_db, self.distractors
            )))
        }
    }
}

fn rms(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    (samples.iter().map(|s| s * s).sum::<f64>() / samples.len() as f64).sqrt()
}

/// Add one band-limited noise burst with exponential decay at `onset`;
/// returns the number of samples written.
fn add_burst(
    out: &mut [f64],
    onset: usize,
    decay_s: f64,
    band_hz: (f64, f64),
    partials: usize,
    rng: &mut impl Rng,
) -> usize {
    let sr = CANONICAL_SAMPLE_RATE as f64;
    let len = ((6.0 * decay_s * sr).ceil() as usize).min(out.len() - onset);
    let comps: Vec<(f64, f64)> = (0..partials)
        .map(|_| {
            (
                rng.random_range(band_hz.0..band_hz.1),
                rng.random_range(0.0..std::f64::consts::TAU),
            )
        })
        .collect();
    let amp = 1.0 / (partials as f64).sqrt();
    for i in 0..len {
        let t = i as f64 / sr;
        let env = (-t / decay_s).exp();
        let mut s = 0.0;
        for &(f, phase) in &comps {
            s += (std::f64::consts::TAU * f * t + phase).sin();
        }
        out[onset + i] += amp * env * s;
    }
    len
}

/// Pink noise via Paul Kellet's filtered-white approximation.
fn pink_noise(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let (mut b0, mut b1, mut b2, mut b3, mut b4, mut b5, mut b6) =
        (0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    (0..n)
        .map(|_| {
            let white: f64 = rng.random_range(-1.0..1.0);
            b0 = 0.99886 * b0 + white * 0.0555179;
            b1 = 0.99332 * b1 + white * 0.0750759;
            b2 = 0.96900 * b2 + white * 0.1538520;
            b3 = 0.86650 * b3 + white * 0.3104856;
            b4 = 0.55000 * b4 + white * 0.5329522;
            b5 = -0.7616 * b5 - white * 0.0168980;
            let pink = b0 + b1 + b2 + b3 + b4 + b5 + b6 + white * 0.5362;
            b6 = white * 0.115926;
            0.11 * pink
        })
        .collect()
}

/// Add `count` non-gait transients: door-shut-like low thumps and
/// speech-band tonal complexes, alternating, at uniform random onsets.
fn add_distractors(out: &mut [f64], count: usize, level: f64, rng: &mut impl Rng) {
    let sr = CANONICAL_SAMPLE_RATE as f64;
    for d in 0..count {
        if d % 2 == 0 {
            let onset = rng.random_range(0..out.len());
            let mut burst = vec![0.0; out.len() - onset];
            let active = add_burst(&mut burst, 0, 0.080, (60.0, 300.0), 12, rng);
            burst.truncate(active);
            let r = rms(&burst);
            if r > 0.0 {
                for (o, b) in out[onset..].iter_mut().zip(&burst) {
                    *o += b * level / r;
                }
            }
        } else {
            let len = ((0.3 * sr) as usize).min(out.len());
            let onset = rng.random_range(0..=(out.len() - len));
            let f0: f64 = rng.random_range(200.0..600.0);
            let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let mut tone = vec![0.0; len];
            for (i, v) in tone.iter_mut().enumerate() {
                let t = i as f64 / sr;
                // Raised-cosine envelope keeps the tone click-free.
                let env = 0.5 - 0.5 * (std::f64::consts::TAU * i as f64 / len as f64).cos();
                let mut s = 0.0;
                for (h, w) in [(1.0, 1.0), (2.0, 0.5), (3.0, 0.25)] {
                    s += w * (std::f64::consts::TAU * f0 * h * t + phase * h).sin();
                }
                *v = env * s;
            }
            let r = rms(&tone);
            if r > 0.0 {
                for (o, v) in out[onset..onset + len].iter_mut().zip(&tone) {
                    *o += v * level / r;
                }
            }
        }
    }
}

/// Render one scene. Returns the clip, the ground-truth step onset times
/// in seconds, and the quality label implied by the parameters.
///
/// Step, background and distractor realizations come from independent
/// substreams of `spec.seed`, so two specs differing only in `snr_db`
/// contain the same events at different mix ratios.
pub fn synth_scene(spec: &SceneSpec) -> Result<(AudioClip, Vec<f64>, GaitLabel)> {
    spec.validate()?;
    let label = spec.label()?;
    let sr = CANONICAL_SAMPLE_RATE as f64;
    let n = (spec.duration_s * sr).round() as usize;
    let period = 1.0 / spec.cadence_hz;
    let n_steps = (spec.duration_s * spec.cadence_hz).floor() as usize;

    let mut rng_steps = derive_rng(spec.seed, P_STEPS, 0);
    let mut steps = vec![0.0; n];
    let mut step_times = Vec::with_capacity(n_steps);
    for k in 0..n_steps {
        // Centering at (k + 0.5) keeps every jittered onset inside the
        // clip for any jitter fraction below 0.5.
        let jitter = (rng_steps.random::<f64>() - 0.5) * spec.step_jitter_frac * period;
        let t = (k as f64 + 0.5) * period + jitter;
        let onset = ((t * sr).round() as usize).min(n - 1);
        step_times.push(onset as f64 / sr);
        add_burst(
            &mut steps,
            onset,
            spec.step_decay_ms / 1000.0,
            STEP_BAND_HZ,
            STEP_PARTIALS,
            &mut rng_steps,
        );
    }

    let mut rng_noise = derive_rng(spec.seed, P_NOISE, 0);
    let noise = pink_noise(n, &mut rng_noise);
    let rms_steps = rms(&steps);
    let rms_noise = rms(&noise);
    // snr_db = 20 log10(rms_steps / (gain * rms_noise))
    let noise_gain = if rms_noise > 0.0 {
        rms_steps / (rms_noise * 10f64.powf(spec.snr_db / 20.0))
    } else {
        0.0
    };

    let mut mix: Vec<f64> = steps
        .iter()
        .zip(&noise)
        .map(|(s, w)| s + noise_gain * w)
        .collect();

    let mut rng_distract = derive_rng(spec.seed, P_DISTRACT, 0);
    add_distractors(
        &mut mix,
        spec.distractors,
        3.0 * rms_steps,
        &mut rng_distract,
    );

    let peak = mix.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    if peak > 0.0 {
        let g = PEAK_LEVEL / peak;
        for s in &mut mix {
            *s *= g;
        }
    }
    let clip = AudioClip::new(mix, CANONICAL_SAMPLE_RATE, format!("scene-{}", spec.seed))?;
    Ok((clip, step_times, label))
}

/// Spec for the `idx`-th scene of a generated dataset: good scenes are
/// clean walks, bad scenes alternate between buried-in-noise and
/// distractor-heavy flavors. Cadence and SNR stratify over their ranges.
pub fn dataset_scene_spec(seed: u64, idx: usize, good: bool) -> SceneSpec {
    let mut rng = derive_rng(seed, P_SCENE, idx as u64);
    let cadence_hz = rng.random_range(1.5..2.5);
    let step_jitter_frac = rng.random_range(0.05..0.25);
    let step_decay_ms = rng.random_range(40.0..80.0);
    let (snr_db, distractors) = if good {
        (rng.random_range(10.0..20.0), 0)
    } else if idx.is_multiple_of(2) {
        (rng.random_range(-10.0..0.0), rng.random_range(0..3))
    } else {
        (rng.random_range(2.0..8.0), rng.random_range(3..6))
    };
    SceneSpec {
        duration_s: 6.0,
        cadence_hz,
        step_jitter_frac,
        step_decay_ms,
        snr_db,
        distractors,
        seed: mix_seed(seed, P_SCENE, idx as u64),
    }
}

/// Generate `n_good + n_bad` labelled scenes, write them as 16-bit WAVs
/// under `out_dir/wavs/`, and write `out_dir/manifest.csv`. Returns the
/// manifest entries in file order.
pub fn synth_dataset(
    out_dir: &Path,
    n_good: usize,
    n_bad: usize,
    seed: u64,
) -> Result<Vec<ManifestEntry>> {
    if n_good == 0 || n_bad == 0 {
        return Err(Error::InvalidParams(format!(
            "need at least one scene per class, got {n_good} good and {n_bad} bad"
        )));
    }
    let wav_dir = out_dir.join("wavs");
    std::fs::create_dir_all(&wav_dir)?;

    let total = n_good + n_bad;
    let scenes: Vec<Result<ManifestEntry>> = (0..total)
        .into_par_iter()
        .map(|idx| {
            let spec = dataset_scene_spec(seed, idx, idx < n_good);
            let (clip, _, label) = synth_scene(&spec)?;
            let rel_path = format!("wavs/scene{idx:04}.wav");
            write_wav_i16(&out_dir.join(&rel_path), &clip)?;
            Ok(ManifestEntry {
                id: format!("scene{idx:04}"),
                path: rel_path,
                start_s: 0.0,
                end_s: clip.duration_s(),
                class_label: ClassLabel::Gait,
                quality_label: Some(label),
            })
        })
        .collect();
    let entries: Vec<ManifestEntry> = scenes.into_iter().collect::<Result<_>>()?;
    write_manifest_csv(&out_dir.join("manifest.csv"), &entries)?;
    Ok(entries)
}

pub fn write_wav_i16(path: &Path, clip: &AudioClip) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: clip.sample_rate_hz(),
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path, spec)
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    for &s in clip.samples() {
        let v = (s * 32767.0).round().clamp(-32768.0, 32767.0) as i16;
        writer
            .write_sample(v)
            .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    }
    writer
        .finalize()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    Ok(())
}
