//! k-nearest-neighbor scoring over standardized feature vectors.
//!
//! Deliberately a brute-force scan: training sets here are a few hundred
//! points, and the exact all-pairs definition (ties broken by lower
//! example index) is what the tests pin down.

use serde::{Deserialize, Serialize};

use super::tree::N_FEATURES;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub points: Vec<[f64; N_FEATURES]>,
    /// `true` = GoodGait.
    pub labels: Vec<bool>,
}

fn dist_sq(a: &[f64; N_FEATURES], b: &[f64; N_FEATURES]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl KnnModel {
    pub fn fit(points: Vec<[f64; N_FEATURES]>, labels: Vec<bool>, k: usize) -> KnnModel {
        debug_assert_eq!(points.len(), labels.len());
        debug_assert!(k >= 1);
        KnnModel { k, points, labels }
    }

    /// Fraction of GoodGait among the k nearest training points.
    pub fn score(&self, x: &[f64; N_FEATURES]) -> f64 {
        let mut order: Vec<usize> = (0..self.points.len()).collect();
        order.sort_by(|&a, &b| {
            dist_sq(&self.points[a], x)
                .partial_cmp(&dist_sq(&self.points[b], x))
                .expect("distances are finite")
                .then(a.cmp(&b))
        });
        let k = self.k.min(self.points.len());
        let good = order[..k].iter().filter(|&&i| self.labels[i]).count();
        good as f64 / k as f64
    }
}
