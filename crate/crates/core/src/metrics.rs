//! One-vs-rest confusion counts, the four per-class measures and their macro averages.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::ClassProbabilities;

pub const DEFAULT_CALIBRATION_BINS: usize = 20;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub n: usize,
    pub per_class: Vec<ClassCounts>,
}

impl ConfusionCounts {
    pub fn k(&self) -> usize {
        self.per_class.len()
    }

    pub fn correct(&self) -> usize {
        self.per_class.iter().map(|c| c.tp).sum()
    }
}

pub fn confusion_counts(pred: &[usize], truth: &[usize], k: usize) -> Result<ConfusionCounts> {
    if pred.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            got: pred.len(),
        });
    }
    let mut per_class = vec![ClassCounts::default(); k];
    for (&p, &t) in pred.iter().zip(truth) {
        if let Some(&bad) = [p, t].iter().find(|&&l| l >= k) {
            return Err(Error::LabelOutOfRange { label: bad + 1, k });
        }
        for (y, c) in per_class.iter_mut().enumerate() {
            match (p == y, t == y) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
    }
    Ok(ConfusionCounts {
        n: pred.len(),
        per_class,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    Accuracy,
    Sensitivity,
    Specificity,
    Ppv,
}

impl Measure {
    pub const ALL: [Measure; 4] = [
        Measure::Accuracy,
        Measure::Sensitivity,
        Measure::Specificity,
        Measure::Ppv,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Measure::Accuracy => "accuracy",
            Measure::Sensitivity => "sensitivity",
            Measure::Specificity => "specificity",
            Measure::Ppv => "ppv",
        }
    }

    /// Value for one class; `None` when the denominator is zero.
    pub fn of(self, c: &ClassCounts) -> Option<f64> {
        let (num, den) = match self {
            Measure::Accuracy => (c.tp + c.tn, c.tp + c.tn + c.fp + c.fn_),
            Measure::Sensitivity => (c.tp, c.tp + c.fn_),
            Measure::Specificity => (c.tn, c.tn + c.fp),
            Measure::Ppv => (c.tp, c.tp + c.fp),
        };
        (den > 0).then(|| num as f64 / den as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureValues {
    pub per_class: Vec<Option<f64>>,
    /// Mean over classes where the measure is defined.
    pub macro_avg: Option<f64>,
    pub undefined_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub accuracy: MeasureValues,
    pub sensitivity: MeasureValues,
    pub specificity: MeasureValues,
    pub ppv: MeasureValues,
}

impl ClassMetrics {
    pub fn get(&self, m: Measure) -> &MeasureValues {
        match m {
            Measure::Accuracy => &self.accuracy,
            Measure::Sensitivity => &self.sensitivity,
            Measure::Specificity => &self.specificity,
            Measure::Ppv => &self.ppv,
        }
    }
}

fn measure_values(m: Measure, cc: &ConfusionCounts) -> MeasureValues {
    let per_class: Vec<Option<f64>> = cc.per_class.iter().map(|c| m.of(c)).collect();
    let defined: Vec<f64> = per_class.iter().flatten().copied().collect();
    MeasureValues {
        macro_avg: (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64),
        undefined_count: per_class.len() - defined.len(),
        per_class,
    }
}

pub fn class_metrics(cc: &ConfusionCounts) -> ClassMetrics {
    ClassMetrics {
        accuracy: measure_values(Measure::Accuracy, cc),
        sensitivity: measure_values(Measure::Sensitivity, cc),
        specificity: measure_values(Measure::Specificity, cc),
        ppv: measure_values(Measure::Ppv, cc),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationBin {
    pub mean_predicted: f64,
    pub observed_fraction: f64,
    pub count: usize,
}

/// Equal-count bins over rows ordered by predicted probability of `class`.
/// Bin edges are moved forward so tied probabilities share a bin.
pub fn calibration_bins(
    probs: &ClassProbabilities,
    truth: &[usize],
    class: usize,
    n_bins: usize,
) -> Result<Vec<CalibrationBin>> {
    if n_bins == 0 {
        return Err(Error::Invalid("n_bins must be at least 1".into()));
    }
    if truth.len() != probs.n() {
        return Err(Error::DimensionMismatch {
            expected: probs.n(),
            got: truth.len(),
        });
    }
    if class >= probs.k() {
        return Err(Error::LabelOutOfRange {
            label: class + 1,
            k: probs.k(),
        });
    }
    let n = probs.n();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| probs.get(a, class).total_cmp(&probs.get(b, class)).then(a.cmp(&b)));

    let mut bins = Vec::new();
    let mut start = 0;
    for j in 1..=n_bins {
        if start >= n {
            break;
        }
        let mut end = ((j * n) as f64 / n_bins as f64).round() as usize;
        end = end.clamp(start, n);
        while end > start && end < n && probs.get(order[end], class) == probs.get(order[end - 1], class) {
            end += 1;
        }
        if j == n_bins {
            end = n;
        }
        if end == start {
            continue;
        }
        let rows = &order[start..end];
        let count = rows.len();
        let mean_predicted = rows.iter().map(|&i| probs.get(i, class)).sum::<f64>() / count as f64;
        let hits = rows.iter().filter(|&&i| truth[i] == class).count();
        bins.push(CalibrationBin {
            mean_predicted,
            observed_fraction: hits as f64 / count as f64,
            count,
        });
        start = end;
    }
    Ok(bins)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictions() {
        let truth = [0, 1, 2, 0, 1, 2, 0, 1, 2, 2];
        let cc = confusion_counts(&truth, &truth, 3).unwrap();
        assert!(cc.per_class.iter().all(|c| c.fp == 0 && c.fn_ == 0));
        let m = class_metrics(&cc);
        for measure in Measure::ALL {
            assert_eq!(m.get(measure).macro_avg, Some(1.0));
        }
    }

    #[test]
    fn hand_tally() {
        let cc = confusion_counts(&[0, 1], &[1, 1], 2).unwrap();
        assert_eq!(
            cc.per_class[0],
            ClassCounts {
                tp: 0,
                tn: 1,
                fp: 1,
                fn_: 0
            }
        );
        assert_eq!(
            cc.per_class[1],
            ClassCounts {
                tp: 1,
                tn: 0,
                fp: 0,
                fn_: 1
            }
        );
    }

    #[test]
    fn out_of_range() {
        assert!(matches!(
            confusion_counts(&[0, 3], &[0, 1], 3),
            Err(Error::LabelOutOfRange { label: 4, k: 3 })
        ));
    }

    #[test]
    fn undefined_ppv_is_excluded_from_macro() {
        // class 3 is never predicted
        let cc = confusion_counts(&[0, 1, 0, 1], &[0, 1, 2, 1], 3).unwrap();
        let m = class_metrics(&cc);
        assert_eq!(m.ppv.per_class[2], None);
        assert_eq!(m.ppv.undefined_count, 1);
        let expect = (0.5 + 1.0) / 2.0;
        assert_eq!(m.ppv.macro_avg, Some(expect));
    }

    #[test]
    fn constant_probabilities_make_one_bin() {
        let rows: Vec<Vec<f64>> = (0..10).map(|_| vec![0.5, 0.5]).collect();
        let p = ClassProbabilities::from_rows(&rows).unwrap();
        let truth: Vec<usize> = (0..10).map(|i| i % 2).collect();
        let bins = calibration_bins(&p, &truth, 0, 20).unwrap();
        assert_eq!(
            bins,
            vec![CalibrationBin {
                mean_predicted: 0.5,
                observed_fraction: 0.5,
                count: 10
            }]
        );
    }

    #[test]
    fn one_hot_probabilities_make_two_bins() {
        let truth = [0, 1, 1, 0, 1];
        let rows: Vec<Vec<f64>> = truth
            .iter()
            .map(|&t| if t == 0 { vec![1.0, 0.0] } else { vec![0.0, 1.0] })
            .collect();
        let p = ClassProbabilities::from_rows(&rows).unwrap();
        let bins = calibration_bins(&p, &truth, 0, 4).unwrap();
        assert_eq!(bins.len(), 2);
        assert_eq!(
            (bins[0].mean_predicted, bins[0].observed_fraction, bins[0].count),
            (0.0, 0.0, 3)
        );
        assert_eq!(
            (bins[1].mean_predicted, bins[1].observed_fraction, bins[1].count),
            (1.0, 1.0, 2)
        );
    }
}
