//! Confusion matrix and derived precision/recall/F1 metrics.

use serde::Serialize;

use crate::classifier::GaitLabel;

/// Precision, recall, F1 and support for one class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

/// Two-class evaluation summary.
///
/// `confusion[t][p]` counts examples with truth `t` predicted as `p`,
/// with index 0 = BadGait and 1 = GoodGait. Ratios with a zero
/// denominator are reported as 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub confusion: [[usize; 2]; 2],
    pub bad: ClassMetrics,
    pub good: ClassMetrics,
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub weighted_precision: f64,
    pub weighted_recall: f64,
    pub weighted_f1: f64,
}

pub(crate) fn label_index(label: GaitLabel) -> usize {
    match label {
        GaitLabel::BadGait => 0,
        GaitLabel::GoodGait => 1,
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl Metrics {
    pub fn from_confusion(confusion: [[usize; 2]; 2]) -> Metrics {
        let total: usize = confusion.iter().flatten().sum();
        let class = |c: usize| -> ClassMetrics {
            let tp = confusion[c][c];
            let fp = confusion[1 - c][c];
            let fnn = confusion[c][1 - c];
            let precision = ratio(tp, tp + fp);
            let recall = ratio(tp, tp + fnn);
            let f1 = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            };
            ClassMetrics {
                precision,
                recall,
                f1,
                support: confusion[c][0] + confusion[c][1],
            }
        };
        let bad = class(0);
        let good = class(1);
        let wb = ratio(bad.support, total);
        let wg = ratio(good.support, total);
        Metrics {
            confusion,
            bad,
            good,
            accuracy: ratio(confusion[0][0] + confusion[1][1], total),
            macro_precision: (bad.precision + good.precision) / 2.0,
            macro_recall: (bad.recall + good.recall) / 2.0,
            macro_f1: (bad.f1 + good.f1) / 2.0,
            weighted_precision: wb * bad.precision + wg * good.precision,
            weighted_recall: wb * bad.recall + wg * good.recall,
            weighted_f1: wb * bad.f1 + wg * good.f1,
        }
    }

    /// Build from `(truth, predicted)` pairs.
    pub fn from_pairs(pairs: &[(GaitLabel, GaitLabel)]) -> Metrics {
        let mut confusion = [[0usize; 2]; 2];
        for &(truth, predicted) in pairs {
            confusion[label_index(truth)][label_index(predicted)] += 1;
        }
        Metrics::from_confusion(confusion)
    }

    pub fn total(&self) -> usize {
        self.confusion.iter().flatten().sum()
    }

    /// Per-class and averaged metrics as CSV.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("class,precision,recall,f1,support\n");
        out.push_str(&format!(
            "bad,{},{},{},{}\n",
            self.bad.precision, self.bad.recall, self.bad.f1, self.bad.support
        ));
        out.push_str(&format!(
            "good,{},{},{},{}\n",
            self.good.precision, self.good.recall, self.good.f1, self.good.support
        ));
        out.push_str(&format!(
            "macro,{},{},{},{}\n",
            self.macro_precision,
            self.macro_recall,
            self.macro_f1,
            self.total()
        ));
        out.push_str(&format!(
            "weighted,{},{},{},{}\n",
            self.weighted_precision,
            self.weighted_recall,
            self.weighted_f1,
            self.total()
        ));
        out
    }

    /// Plain-text confusion matrix, rows = truth.
    pub fn confusion_text(&self) -> String {
        format!(
            "               predicted\n\
             truth          bad   good\n\
             bad    {:>10} {:>6}\n\
             good   {:>10} {:>6}\n",
            self.confusion[0][0], self.confusion[0][1], self.confusion[1][0], self.confusion[1][1]
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use GaitLabel::{BadGait as Bad, GoodGait as Good};

    #[test]
    fn hand_worked_four_example_batch() {
        let pairs = [(Bad, Bad), (Bad, Good), (Good, Good), (Good, Good)];
        let m = Metrics::from_pairs(&pairs);
        assert_eq!(m.confusion, [[1, 1], [0, 2]]);
        assert_eq!(m.bad.precision, 1.0);
        assert_eq!(m.bad.recall, 0.5);
        assert!((m.bad.f1 - 2.0 / 3.0).abs() < 1e-12);
        assert!((m.good.precision - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(m.good.recall, 1.0);
        assert!((m.good.f1 - 0.8).abs() < 1e-12);
        assert!((m.macro_f1 - 11.0 / 15.0).abs() < 1e-12);
        assert_eq!(m.bad.support, 2);
        assert_eq!(m.good.support, 2);
        assert_eq!(m.accuracy, 0.75);
    }

    #[test]
    fn perfect_predictions() {
        let pairs = [(Bad, Bad), (Bad, Bad), (Good, Good)];
        let m = Metrics::from_pairs(&pairs);
        assert_eq!(m.confusion, [[2, 0], [0, 1]]);
        for v in [
            m.bad.precision,
            m.bad.recall,
            m.bad.f1,
            m.good.precision,
            m.good.recall,
            m.good.f1,
            m.macro_f1,
            m.weighted_f1,
            m.accuracy,
        ] {
            assert_eq!(v, 1.0);
        }
    }

    #[test]
    fn zero_denominators_report_zero() {
        // Everything predicted bad: good precision and recall are 0/0 and 0/n.
        let pairs = [(Bad, Bad), (Good, Bad), (Good, Bad)];
        let m = Metrics::from_pairs(&pairs);
        assert_eq!(m.good.precision, 0.0);
        assert_eq!(m.good.recall, 0.0);
        assert_eq!(m.good.f1, 0.0);
        assert_eq!(m.bad.recall, 1.0);
    }

    #[test]
    fn majority_vote_baseline_on_skewed_composition() {
        // 196 bad / 84 good, everything predicted bad.
        let mut pairs = vec![(Bad, Bad); 196];
        pairs.extend(vec![(Good, Bad); 84]);
        let m = Metrics::from_pairs(&pairs);
        assert_eq!(m.bad.recall, 1.0);
        assert_eq!(m.good.f1, 0.0);
        let p = 196.0 / 280.0;
        let expect_macro = (2.0 * p / (1.0 + p)) / 2.0;
        assert!((m.macro_f1 - expect_macro).abs() < 1e-12);
        assert!(m.macro_f1 < 0.42);
    }

    #[test]
    fn csv_and_text_render() {
        let m = Metrics::from_pairs(&[(Bad, Bad), (Good, Good)]);
        let csv = m.to_csv();
        assert!(csv.starts_with("class,precision,recall,f1,support\n"));
        assert_eq!(csv.lines().count(), 5);
        let text = m.confusion_text();
        assert!(text.contains("predicted"));
        assert!(text.contains("truth"));
    }

    proptest! {
        #[test]
        fn identities_hold_on_random_batches(
            raw in proptest::collection::vec((0u8..2, 0u8..2), 1..200),
        ) {
            let to_label = |v: u8| if v == 0 { Bad } else { Good };
            let pairs: Vec<(GaitLabel, GaitLabel)> =
                raw.iter().map(|&(t, p)| (to_label(t), to_label(p))).collect();
            let m = Metrics::from_pairs(&pairs);

            let c = m.confusion;
            prop_assert_eq!(c[0][0] + c[0][1] + c[1][0] + c[1][1], pairs.len());

            for (idx, cls) in [(0usize, &m.bad), (1usize, &m.good)] {
                let tp = c[idx][idx] as f64;
                let fp = c[1 - idx][idx] as f64;
                let fnn = c[idx][1 - idx] as f64;
                let p = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
                let r = if tp + fnn > 0.0 { tp / (tp + fnn) } else { 0.0 };
                let f1 = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
                prop_assert!((cls.precision - p).abs() < 1e-12);
                prop_assert!((cls.recall - r).abs() < 1e-12);
                prop_assert!((cls.f1 - f1).abs() < 1e-12);
                prop_assert_eq!(cls.support, c[idx][0] + c[idx][1]);
            }
            prop_assert!((m.macro_f1 - (m.bad.f1 + m.good.f1) / 2.0).abs() < 1e-12);
            let n = pairs.len() as f64;
            let expect_wf1 =
                m.bad.f1 * m.bad.support as f64 / n + m.good.f1 * m.good.support as f64 / n;
            prop_assert!((m.weighted_f1 - expect_wf1).abs() < 1e-12);
        }
    }
}
