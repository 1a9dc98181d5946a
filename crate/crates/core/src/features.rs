//! The three triage features computed from an energy signal: average
//! peak prominence, RMS residual, and average peak distance.

use crate::error::{Error, Result};
use crate::peaks::{find_peaks, peak_distances};
use crate::spectro::{energy_signal, EnergySignal, MelSpectrogram};

/// Default peak threshold as a fraction of the energy signal's range.
pub const DEFAULT_MIN_PROMINENCE_RATIO: f64 = 0.05;

/// Feature vector for one analysis window.
///
/// `n_peaks` is diagnostic only; the classifier consumes the other three
/// via [`GaitFeatures::as_vector`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaitFeatures {
    pub avg_peak_prominence: f64,
    pub rms_residual: f64,
    pub avg_peak_distance: f64,
    pub n_peaks: usize,
}

impl GaitFeatures {
    pub fn as_vector(&self) -> [f64; 3] {
        [
            self.avg_peak_prominence,
            self.rms_residual,
            self.avg_peak_distance,
        ]
    }
}

/// Mean prominence of detected peaks; 0 when none are found.
pub fn avg_peak_prominence(e: &EnergySignal, min_prominence: f64) -> Result<f64> {
    let peaks = find_peaks(e.values(), min_prominence)?;
    if peaks.is_empty() {
        return Ok(0.0);
    }
    Ok(peaks.iter().map(|p| p.prominence).sum::<f64>() / peaks.len() as f64)
}

/// Sum of squared residuals of E around its RMS:
/// `r = sum_i (E(i) - sqrt(mean(E^2)))^2`.
///
/// The center is the RMS, not the arithmetic mean, and the residuals are
/// summed, not averaged. A constant negative signal therefore has a
/// nonzero residual; that asymmetry is part of the definition.
pub fn rms_residual(e: &EnergySignal) -> Result<f64> {
    if e.is_empty() {
        return Err(Error::EmptyInput("empty energy signal".into()));
    }
    let n = e.len() as f64;
    let rms = (e.values().iter().map(|v| v * v).sum::<f64>() / n).sqrt();
    Ok(e.values().iter().map(|v| (v - rms) * (v - rms)).sum())
}

/// Mean distance in frames between consecutive peaks; the signal length
/// serves as sentinel when fewer than two peaks exist.
pub fn avg_peak_distance(e: &EnergySignal, min_prominence: f64) -> Result<f64> {
    let peaks = find_peaks(e.values(), min_prominence)?;
    let distances = peak_distances(&peaks);
    if distances.is_empty() {
        return Ok(e.len() as f64);
    }
    Ok(distances.iter().sum::<f64>() / distances.len() as f64)
}

/// Compute all three features from a mel spectrogram. The peak threshold
/// is `min_prominence_ratio` times the energy signal's value range.
pub fn extract_features(mel: &MelSpectrogram, min_prominence_ratio: f64) -> Result<GaitFeatures> {
    if !min_prominence_ratio.is_finite() || min_prominence_ratio < 0.0 {
        return Err(Error::InvalidParams(format!(
            "min_prominence_ratio must be finite and >= 0, got {min_prominence_ratio}"
        )));
    }
    if mel.n_frames() < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 frames, got {}",
            mel.n_frames()
        )));
    }
    let e = energy_signal(mel);
    let lo = e.values().iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = e.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min_prominence = min_prominence_ratio * (hi - lo);

    let peaks = find_peaks(e.values(), min_prominence)?;
    let distances = peak_distances(&peaks);
    Ok(GaitFeatures {
        avg_peak_prominence: if peaks.is_empty() {
            0.0
        } else {
            peaks.iter().map(|p| p.prominence).sum::<f64>() / peaks.len() as f64
        },
        rms_residual: rms_residual(&e)?,
        avg_peak_distance: if distances.is_empty() {
            e.len() as f64
        } else {
            distances.iter().sum::<f64>() / distances.len() as f64
        },
        n_peaks: peaks.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio_io::AudioClip;
    use crate::rng::derive_rng;
    use crate::spectro::{melspectrogram_db, SpectroParams};
    use rand::Rng;

    fn energy(values: Vec<f64>) -> EnergySignal {
        EnergySignal::new(values, 0.016).unwrap()
    }

    #[test]
    fn prominence_mean_of_two_peaks() {
        let e = energy(vec![0.0, 3.0, 1.0, 5.0, 0.0]);
        assert_eq!(avg_peak_prominence(&e, 0.0).unwrap(), 3.5);
    }

    #[test]
    fn prominence_zero_for_flat_signal() {
        let e = energy(vec![4.2; 50]);
        assert_eq!(avg_peak_prominence(&e, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn prominence_of_single_isolated_peak() {
        let mut v = vec![0.0; 20];
        v[7] = 6.25;
        assert_eq!(avg_peak_prominence(&energy(v), 0.0).unwrap(), 6.25);
    }

    #[test]
    fn residual_zero_for_constant_nonnegative() {
        assert_eq!(rms_residual(&energy(vec![2.0; 3])).unwrap(), 0.0);
        assert_eq!(rms_residual(&energy(vec![0.0; 5])).unwrap(), 0.0);
    }

    #[test]
    fn residual_two_sample_hand_value() {
        // RMS([3,4]) = sqrt(12.5); r = (3-RMS)^2 + (4-RMS)^2 = 50 - 14*sqrt(12.5).
        let r = rms_residual(&energy(vec![3.0, 4.0])).unwrap();
        assert!((r - (50.0 - 14.0 * 12.5f64.sqrt())).abs() < 1e-12);
        assert!((r - 0.50253).abs() < 1e-4);
    }

    #[test]
    fn residual_nonzero_for_constant_negative() {
        // RMS of [-c,-c] is +c, so each residual is (-2c)^2.
        let c = 1.5;
        let r = rms_residual(&energy(vec![-c, -c])).unwrap();
        assert!((r - 8.0 * c * c).abs() < 1e-12);
    }

    #[test]
    fn residual_of_empty_signal_errors() {
        let e = EnergySignal::new(vec![], 0.016).unwrap();
        assert!(matches!(rms_residual(&e), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn distance_mean_of_consecutive_gaps() {
        let mut v = vec![0.0; 40];
        for i in [10, 20, 32] {
            v[i] = 5.0;
        }
        assert_eq!(avg_peak_distance(&energy(v), 0.0).unwrap(), 11.0);
    }

    #[test]
    fn distance_sentinel_when_few_peaks() {
        assert_eq!(
            avg_peak_distance(&energy(vec![1.0; 188]), 0.0).unwrap(),
            188.0
        );
        let mut one = vec![0.0; 188];
        one[50] = 3.0;
        assert_eq!(avg_peak_distance(&energy(one), 0.0).unwrap(), 188.0);
    }

    #[test]
    fn silence_window_features() {
        let clip = AudioClip::new(vec![0.0; 48_000], 16_000, "silence").unwrap();
        let mel = melspectrogram_db(&clip, &SpectroParams::default()).unwrap();
        let f = extract_features(&mel, DEFAULT_MIN_PROMINENCE_RATIO).unwrap();
        assert_eq!(f.avg_peak_prominence, 0.0);
        assert_eq!(f.n_peaks, 0);
        assert_eq!(f.avg_peak_distance, mel.n_frames() as f64);
        // E is the constant -6400 (64 mel bins at the -100 dB floor); its
        // RMS is +6400, so the residual is n * (2 * 6400)^2, not zero.
        let n = mel.n_frames() as f64;
        assert!((f.rms_residual - n * (2.0 * 6400.0_f64).powi(2)).abs() < 1e-3);
    }

    #[test]
    fn extraction_is_deterministic() {
        let mut rng = derive_rng(31, 0xF00D, 0);
        let samples: Vec<f64> = (0..48_000)
            .map(|_| 0.4 * (rng.random::<f64>() * 2.0 - 1.0))
            .collect();
        let clip = AudioClip::new(samples, 16_000, "det").unwrap();
        let mel = melspectrogram_db(&clip, &SpectroParams::default()).unwrap();
        let a = extract_features(&mel, 0.05).unwrap();
        let b = extract_features(&mel, 0.05).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn gain_leaves_peak_features_unchanged() {
        // Bursty clip so peaks exist; x2 gain shifts E by a constant.
        let mut rng = derive_rng(17, 0xF00D, 1);
        let mut samples = vec![0.0; 48_000];
        for burst in 0..6 {
            let start = 2_000 + burst * 7_800;
            for s in &mut samples[start..start + 900] {
                *s = 0.3 * (rng.random::<f64>() * 2.0 - 1.0);
            }
        }
        let quiet = AudioClip::new(samples.clone(), 16_000, "g1").unwrap();
        let loud = AudioClip::new(samples.iter().map(|s| s * 2.0).collect(), 16_000, "g2").unwrap();
        let params = SpectroParams::default();
        let fq = extract_features(&melspectrogram_db(&quiet, &params).unwrap(), 0.05).unwrap();
        let fl = extract_features(&melspectrogram_db(&loud, &params).unwrap(), 0.05).unwrap();
        assert_eq!(fq.n_peaks, fl.n_peaks);
        assert!(
            (fq.avg_peak_prominence - fl.avg_peak_prominence).abs()
                <= 1e-6 * fq.avg_peak_prominence.abs().max(1e-12)
        );
        assert!(
            (fq.avg_peak_distance - fl.avg_peak_distance).abs()
                <= 1e-6 * fq.avg_peak_distance.abs()
        );
    }

    #[test]
    fn invalid_ratio_rejected() {
        let clip = AudioClip::new(vec![0.0; 2048], 16_000, "x").unwrap();
        let mel = melspectrogram_db(&clip, &SpectroParams::default()).unwrap();
        assert!(matches!(
            extract_features(&mel, -0.1),
            Err(Error::InvalidParams(_))
        ));
        assert!(matches!(
            extract_features(&mel, f64::NAN),
            Err(Error::InvalidParams(_))
        ));
    }
}
