//! Local-maximum detection with topographic prominence.
//!
//! A candidate peak is strictly higher than both neighbors; a plateau
//! (run of equal values above both flanks) yields one peak at its middle
//! index, left-middle on even lengths. Endpoints are never peaks.
//! Prominence extends from the peak toward each side until the first
//! strictly higher sample (or the boundary), takes the minimum per side,
//! and subtracts the higher of the two minima from the peak height.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub index: usize,
    pub height: f64,
    pub prominence: f64,
}

fn check_finite(signal: &[f64]) -> Result<()> {
    if let Some((i, v)) = signal.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "non-finite value {v} at index {i}"
        )));
    }
    Ok(())
}

/// Candidate peak indices per the plateau rule, unfiltered.
fn candidate_indices(signal: &[f64]) -> Vec<usize> {
    let n = signal.len();
    let mut out = Vec::new();
    let mut i = 1;
    while i < n {
        let mut j = i;
        while j + 1 < n && signal[j + 1] == signal[i] {
            j += 1;
        }
        let rises = signal[i - 1] < signal[i];
        let falls = j + 1 < n && signal[j + 1] < signal[i];
        if rises && falls {
            out.push(i + (j - i) / 2);
        }
        i = j + 1;
    }
    out
}

/// Detect peaks with prominence at or above `min_prominence`, sorted by index.
pub fn find_peaks(signal: &[f64], min_prominence: f64) -> Result<Vec<Peak>> {
    if signal.is_empty() {
        return Err(Error::EmptyInput("empty signal".into()));
    }
    check_finite(signal)?;
    if !min_prominence.is_finite() || min_prominence < 0.0 {
        return Err(Error::InvalidParams(format!(
            "min_prominence must be finite and >= 0, got {min_prominence}"
        )));
    }
    let mut peaks = Vec::new();
    for index in candidate_indices(signal) {
        let prominence = prominence_at(signal, index);
        if prominence >= min_prominence {
            peaks.push(Peak {
                index,
                height: signal[index],
                prominence,
            });
        }
    }
    Ok(peaks)
}

fn prominence_at(signal: &[f64], p: usize) -> f64 {
    let h = signal[p];
    let mut left_base = h;
    let mut k = p;
    while k > 0 {
        k -= 1;
        if signal[k] > h {
            break;
        }
        left_base = left_base.min(signal[k]);
    }
    let mut right_base = h;
    k = p;
    while k + 1 < signal.len() {
        k += 1;
        if signal[k] > h {
            break;
        }
        right_base = right_base.min(signal[k]);
    }
    h - left_base.max(right_base)
}

/// Prominence of the candidate peak at `peak_index`.
pub fn prominence(signal: &[f64], peak_index: usize) -> Result<f64> {
    if signal.is_empty() {
        return Err(Error::EmptyInput("empty signal".into()));
    }
    check_finite(signal)?;
    if !candidate_indices(signal).contains(&peak_index) {
        return Err(Error::InvalidInput(format!(
            "index {peak_index} is not a peak"
        )));
    }
    Ok(prominence_at(signal, peak_index))
}

/// Consecutive index differences; empty for fewer than two peaks.
pub fn peak_distances(peaks: &[Peak]) -> Vec<f64> {
    peaks
        .windows(2)
        .map(|w| (w[1].index - w[0].index) as f64)
        .collect()
}

/// Centered moving average with shrinking edge windows. Optional
/// pre-smoothing for peak detection; nothing in the feature pipeline
/// applies it by default.
pub fn moving_average(signal: &[f64], width: usize) -> Result<Vec<f64>> {
    if width == 0 {
        return Err(Error::InvalidParams("width must be >= 1".into()));
    }
    check_finite(signal)?;
    let n = signal.len();
    let half_left = (width - 1) / 2;
    let half_right = width / 2;
    Ok((0..n)
        .map(|i| {
            let lo = i.saturating_sub(half_left);
            let hi = (i + half_right + 1).min(n);
            signal[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect())
}
