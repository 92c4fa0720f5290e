//! Single-label assignment: most probable class, or a uniform draw from a label set.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::types::{ClassProbabilities, LabelSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelerKind {
    NaiveArgmax,
    WeightedSetSampler,
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax_row(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

pub fn argmax_label(probs: &ClassProbabilities) -> Vec<usize> {
    probs.rows().map(argmax_row).collect()
}

/// Uniform draw over the members of `set`, or over all `k` classes when the
/// set is null. Consumes exactly one `random_range` call.
pub fn sample_label<R: Rng + ?Sized>(set: LabelSet, k: usize, rng: &mut R) -> usize {
    let card = set.len();
    if card == 0 {
        return rng.random_range(0..k);
    }
    let pick = rng.random_range(0..card);
    set.iter().nth(pick).expect("pick < cardinality")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngSpec;

    #[test]
    fn argmax_examples() {
        let p = ClassProbabilities::from_rows(&[
            vec![0.2, 0.5, 0.3],
            vec![0.4, 0.4, 0.2],
            vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
        ])
        .unwrap();
        assert_eq!(argmax_label(&p), vec![1, 0, 0]);
    }

    #[test]
    fn singleton_always_returns_member() {
        let mut rng = RngSpec::new(1, 0).rng();
        for _ in 0..1000 {
            assert_eq!(sample_label(LabelSet::singleton(1), 3, &mut rng), 1);
        }
    }

    #[test]
    fn two_member_set_is_fair() {
        let mut rng = RngSpec::new(2, 0).rng();
        let set = LabelSet::from_classes([0, 2]);
        let n = 100_000;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            counts[sample_label(set, 3, &mut rng)] += 1;
        }
        assert_eq!(counts[1], 0);
        assert!((counts[0] as f64 / n as f64 - 0.5).abs() < 0.01);
    }

    #[test]
    fn null_set_covers_all_classes() {
        let mut rng = RngSpec::new(3, 0).rng();
        let n = 100_000;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            counts[sample_label(LabelSet::empty(), 3, &mut rng)] += 1;
        }
        for c in counts {
            assert!((c as f64 / n as f64 - 1.0 / 3.0).abs() < 0.01);
        }
    }
}
