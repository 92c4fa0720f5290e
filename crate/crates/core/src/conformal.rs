//! Split-conformal set-valued classification with class-specific error levels.
//!
//! The development data are split into a fitting half and a calibration half.
//! For each class `y`, the threshold is the smallest own-class calibration
//! probability `s` such that `#{calibration class-y points with prob <= s}`
//! exceeds `(n_y + 1) * alpha_y - 1`. A label enters an observation's set when
//! its predicted probability reaches the class threshold. On the calibration
//! half this guarantees class coverage of at least `1 - alpha_y`.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngSpec;
use crate::types::{class_counts, ClassProbabilities, LabelSet};

/// Default per-class error level.
pub const DEFAULT_ALPHA: f64 = 0.10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    /// Rows used to fit the probability estimator.
    pub fit: Vec<usize>,
    /// Rows used to calibrate the thresholds.
    pub calibration: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdVector {
    pub thresholds: Vec<f64>,
    pub alpha: Vec<f64>,
    pub calib_counts: Vec<usize>,
}

impl ThresholdVector {
    pub fn k(&self) -> usize {
        self.thresholds.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AmbiguityProfile {
    /// `overall[c]` = number of rows whose set has cardinality `c`, `c = 0..=K`.
    pub overall: Vec<usize>,
    /// `by_class[y][c]` = same, restricted to rows whose true class is `y`.
    pub by_class: Vec<Vec<usize>>,
}

impl AmbiguityProfile {
    /// Share of rows with exactly one label, overall.
    pub fn single_share(&self) -> f64 {
        share(&self.overall, 1)
    }

    pub fn class_single_share(&self, class: usize) -> f64 {
        share(&self.by_class[class], 1)
    }
}

fn share(hist: &[usize], card: usize) -> f64 {
    let total: usize = hist.iter().sum();
    if total == 0 {
        f64::NAN
    } else {
        hist[card] as f64 / total as f64
    }
}

/// Stratified random halving. Odd class counts alternate which half receives
/// the extra row so the half sizes differ by at most one.
pub(crate) fn stratified_halves(labels: &[usize], k: usize, rng: RngSpec) -> (Vec<usize>, Vec<usize>) {
    let mut rng = rng.rng();
    let mut a = Vec::with_capacity(labels.len() / 2 + 1);
    let mut b = Vec::with_capacity(labels.len() / 2 + 1);
    let mut extra_to_a = true;
    for class in 0..k {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        let mut half = idx.len() / 2;
        if idx.len() % 2 == 1 {
            if extra_to_a {
                half += 1;
            }
            extra_to_a = !extra_to_a;
        }
        a.extend_from_slice(&idx[..half]);
        b.extend_from_slice(&idx[half..]);
    }
    a.sort_unstable();
    b.sort_unstable();
    (a, b)
}

/// Splits development rows (given by their labels) into fitting and calibration halves.
pub fn split_development(labels: &[usize], k: usize, rng: RngSpec) -> Result<SplitIndices> {
    if let Some(&y) = labels.iter().find(|&&y| y >= k) {
        return Err(Error::LabelOutOfRange { label: y + 1, k });
    }
    let counts = class_counts(labels, k);
    if let Some(class) = counts.iter().position(|&c| c < 2) {
        return Err(Error::ClassTooSmall {
            class: class + 1,
            have: counts[class],
            need: 2,
        });
    }
    let (fit, calibration) = stratified_halves(labels, k, rng);
    Ok(SplitIndices { fit, calibration })
}

/// Threshold for one class from its own-class calibration probabilities.
pub fn class_threshold(own_probs: &[f64], alpha: f64) -> Option<f64> {
    if own_probs.is_empty() {
        return None;
    }
    let mut sorted = own_probs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len();
    let bound = (m as f64 + 1.0) * alpha - 1.0;
    let mut i = 0;
    while i < m {
        // rank count of sorted[i] includes every tie
        let mut j = i + 1;
        while j < m && sorted[j] == sorted[i] {
            j += 1;
        }
        if j as f64 > bound {
            return Some(sorted[i]);
        }
        i = j;
    }
    // unreachable for alpha < 1: the largest value has count m > bound
    Some(sorted[m - 1])
}

pub fn estimate_thresholds(probs: &ClassProbabilities, labels: &[usize], alpha: &[f64]) -> Result<ThresholdVector> {
    let k = probs.k();
    if alpha.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: alpha.len(),
        });
    }
    if labels.len() != probs.n() {
        return Err(Error::DimensionMismatch {
            expected: probs.n(),
            got: labels.len(),
        });
    }
    if let Some(a) = alpha.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
        return Err(Error::Invalid(format!("alpha {a} outside (0,1)")));
    }
    let mut thresholds = Vec::with_capacity(k);
    let mut calib_counts = Vec::with_capacity(k);
    for (y, &a) in alpha.iter().enumerate() {
        let own: Vec<f64> = labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == y)
            .map(|(i, _)| probs.get(i, y))
            .collect();
        let t = class_threshold(&own, a).ok_or(Error::EmptyCalibrationClass { class: y + 1 })?;
        thresholds.push(t);
        calib_counts.push(own.len());
    }
    Ok(ThresholdVector {
        thresholds,
        alpha: alpha.to_vec(),
        calib_counts,
    })
}

pub fn build_label_sets(probs: &ClassProbabilities, t: &ThresholdVector) -> Result<Vec<LabelSet>> {
    if probs.k() != t.k() {
        return Err(Error::DimensionMismatch {
            expected: t.k(),
            got: probs.k(),
        });
    }
    Ok(probs
        .rows()
        .map(|row| {
            LabelSet::from_classes(
                row.iter()
                    .zip(&t.thresholds)
                    .enumerate()
                    .filter(|(_, (p, t))| p >= t)
                    .map(|(y, _)| y),
            )
        })
        .collect())
}

/// Fraction of true-class-`y` rows whose set contains `y`, per class.
pub fn class_coverage(sets: &[LabelSet], labels: &[usize], k: usize) -> Result<Vec<f64>> {
    if sets.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            got: sets.len(),
        });
    }
    let mut hit = vec![0usize; k];
    let mut total = vec![0usize; k];
    for (s, &y) in sets.iter().zip(labels) {
        if y >= k {
            return Err(Error::LabelOutOfRange { label: y + 1, k });
        }
        total[y] += 1;
        if s.contains(y) {
            hit[y] += 1;
        }
    }
    (0..k)
        .map(|y| {
            if total[y] == 0 {
                Err(Error::EmptyClass { class: y + 1 })
            } else {
                Ok(hit[y] as f64 / total[y] as f64)
            }
        })
        .collect()
}

pub fn ambiguity_profile(sets: &[LabelSet], labels: &[usize], k: usize) -> AmbiguityProfile {
    let mut overall = vec![0; k + 1];
    let mut by_class = vec![vec![0; k + 1]; k];
    for (s, &y) in sets.iter().zip(labels) {
        let c = s.len().min(k);
        overall[c] += 1;
        if y < k {
            by_class[y][c] += 1;
        }
    }
    AmbiguityProfile { overall, by_class }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_point_threshold() {
        assert_eq!(class_threshold(&[0.5, 0.9, 0.2], 0.10), Some(0.2));
    }

    #[test]
    fn nineteen_points_take_second_smallest() {
        let probs: Vec<f64> = (1..=19).map(|i| f64::from(i) / 20.0).collect();
        // bound = 20 * 0.1 - 1 = 1, so the count must reach 2
        assert_eq!(class_threshold(&probs, 0.10), Some(0.10));
    }

    #[test]
    fn tied_minimum_is_the_threshold() {
        assert_eq!(class_threshold(&[0.3, 0.3, 0.3, 0.8], 0.5), Some(0.3));
    }

    #[test]
    fn label_set_examples() {
        let t = |v: [f64; 3]| ThresholdVector {
            thresholds: v.to_vec(),
            alpha: vec![0.1; 3],
            calib_counts: vec![1; 3],
        };
        let probs = ClassProbabilities::from_rows(&[vec![0.5, 0.3, 0.2], vec![0.3, 0.3, 0.4]]).unwrap();
        let zero = build_label_sets(&probs, &t([0.0; 3])).unwrap();
        assert!(zero.iter().all(|s| s.len() == 3));
        let sets = build_label_sets(&probs, &t([0.4, 0.35, 0.1])).unwrap();
        assert_eq!(sets[0], LabelSet::from_classes([0, 2]));
        let sets = build_label_sets(&probs, &t([0.5; 3])).unwrap();
        assert!(sets[1].is_empty());
    }

    #[test]
    fn coverage_of_full_sets_is_one() {
        let sets = vec![LabelSet::full(3); 6];
        let cov = class_coverage(&sets, &[0, 1, 2, 0, 1, 2], 3).unwrap();
        assert_eq!(cov, vec![1.0; 3]);
        assert!(matches!(
            class_coverage(&sets, &[0, 1, 0, 0, 1, 0], 3),
            Err(Error::EmptyClass { class: 3 })
        ));
    }

    #[test]
    fn ambiguity_tally() {
        let sets = [
            LabelSet::empty(),
            LabelSet::singleton(0),
            LabelSet::from_classes([0, 1]),
            LabelSet::full(3),
        ];
        let prof = ambiguity_profile(&sets, &[0, 1, 2, 2], 3);
        assert_eq!(prof.overall, vec![1, 1, 1, 1]);
        assert_eq!(prof.by_class[2], vec![0, 0, 1, 1]);
        let singles = vec![LabelSet::singleton(1); 5];
        assert_eq!(ambiguity_profile(&singles, &[1; 5], 3).overall[1], 5);
    }

    #[test]
    fn split_even_and_odd() {
        let mut labels = vec![0; 370];
        labels.extend(vec![1; 490]);
        labels.extend(vec![2; 140]);
        let s = split_development(&labels, 3, RngSpec::new(5, 0)).unwrap();
        let fit_counts = class_counts(&s.fit.iter().map(|&i| labels[i]).collect::<Vec<_>>(), 3);
        let cal_counts = class_counts(&s.calibration.iter().map(|&i| labels[i]).collect::<Vec<_>>(), 3);
        assert_eq!(fit_counts, vec![185, 245, 70]);
        assert_eq!(cal_counts, vec![185, 245, 70]);

        labels.push(1);
        let s = split_development(&labels, 3, RngSpec::new(5, 0)).unwrap();
        let sizes = [s.fit.len(), s.calibration.len()];
        assert!(sizes == [500, 501] || sizes == [501, 500]);
        assert_eq!(s, split_development(&labels, 3, RngSpec::new(5, 0)).unwrap());
    }

    #[test]
    fn split_rejects_tiny_class() {
        assert!(matches!(
            split_development(&[0, 0, 1, 1, 2], 3, RngSpec::new(1, 0)),
            Err(Error::ClassTooSmall {
                class: 3,
                have: 1,
                need: 2
            })
        ));
    }

    #[test]
    fn empty_calibration_class() {
        let probs = ClassProbabilities::from_rows(&[vec![0.5, 0.5], vec![0.4, 0.6]]).unwrap();
        assert!(matches!(
            estimate_thresholds(&probs, &[0, 0], &[0.1, 0.1]),
            Err(Error::EmptyCalibrationClass { class: 2 })
        ));
    }
}
