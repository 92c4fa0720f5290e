//! Nonparametric bootstrap over a validation sample with label assignment per resample.
//!
//! Resample `b` draws its indices and labels from the stream `rng.derive(b)`,
//! so results are identical whatever the thread count.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labeling::{sample_label, LabelerKind};
use crate::rng::RngSpec;
use crate::types::{LabelSet, SurvivalData};

pub const DEFAULT_N_BOOT: usize = 500;
pub const DEFAULT_LEVEL: f64 = 0.95;

/// `n` indices drawn uniformly with replacement from `0..n`.
pub fn resample_indices<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// Linear-interpolation quantile of sorted data (`h = (n-1)q`, R type 7).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Equal-tailed empirical percentile interval at confidence `level`.
pub fn percentile_interval(samples: &[f64], level: f64) -> Result<(f64, f64)> {
    if samples.len() < 2 {
        return Err(Error::TooFewSamples {
            have: samples.len(),
            need: 2,
        });
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Invalid(format!("level {level} outside (0,1)")));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    Ok((quantile_sorted(&sorted, tail), quantile_sorted(&sorted, 1.0 - tail)))
}

/// How each resampled row receives its single label.
#[derive(Debug, Clone, Copy)]
pub enum Labeler<'a> {
    /// Fixed most-probable-class labels, one per validation row.
    NaiveArgmax { predicted: &'a [usize] },
    /// Uniform draw from each row's label set (all classes for null sets).
    WeightedSetSampler { sets: &'a [LabelSet] },
}

impl Labeler<'_> {
    pub fn kind(&self) -> LabelerKind {
        match self {
            Labeler::NaiveArgmax { .. } => LabelerKind::NaiveArgmax,
            Labeler::WeightedSetSampler { .. } => LabelerKind::WeightedSetSampler,
        }
    }

    fn len(&self) -> usize {
        match self {
            Labeler::NaiveArgmax { predicted } => predicted.len(),
            Labeler::WeightedSetSampler { sets } => sets.len(),
        }
    }
}

/// Validation sample the bootstrap resamples from.
#[derive(Debug, Clone, Copy)]
pub struct BootstrapInput<'a> {
    pub truth: &'a [usize],
    pub survival: Option<&'a SurvivalData>,
    pub k: usize,
    pub labeler: Labeler<'a>,
}

/// One bootstrap replicate: resampled rows and their assigned labels.
#[derive(Debug, Clone)]
pub struct Resample<'a> {
    pub input: &'a BootstrapInput<'a>,
    pub indices: Vec<usize>,
    pub assigned: Vec<usize>,
}

impl Resample<'_> {
    pub fn truth(&self) -> Vec<usize> {
        self.indices.iter().map(|&i| self.input.truth[i]).collect()
    }

    /// Label set of resampled row `j` (the singleton prediction for argmax labeling).
    pub fn set(&self, j: usize) -> LabelSet {
        let i = self.indices[j];
        match self.input.labeler {
            Labeler::NaiveArgmax { predicted } => LabelSet::singleton(predicted[i]),
            Labeler::WeightedSetSampler { sets } => sets[i],
        }
    }

    pub fn survival(&self) -> Option<SurvivalData> {
        self.input.survival.map(|s| s.select(&self.indices))
    }
}

/// A vector-valued statistic of a resample; `None` marks an undefined component.
pub trait Statistic: Sync {
    fn names(&self) -> Vec<String>;
    fn evaluate(&self, resample: &Resample<'_>) -> Vec<Option<f64>>;
}

/// Adapts a closure into a [`Statistic`].
pub struct FnStatistic<F> {
    names: Vec<String>,
    f: F,
}

impl<F> FnStatistic<F>
where
    F: Fn(&Resample<'_>) -> Vec<Option<f64>> + Sync,
{
    pub fn new(names: Vec<String>, f: F) -> Self {
        Self { names, f }
    }
}

impl<F> Statistic for FnStatistic<F>
where
    F: Fn(&Resample<'_>) -> Vec<Option<f64>> + Sync,
{
    fn names(&self) -> Vec<String> {
        self.names.clone()
    }

    fn evaluate(&self, resample: &Resample<'_>) -> Vec<Option<f64>> {
        (self.f)(resample)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub n_boot: usize,
    pub level: f64,
    pub retain_samples: bool,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            n_boot: DEFAULT_N_BOOT,
            level: DEFAULT_LEVEL,
            retain_samples: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub name: String,
    /// Mean over resamples where the statistic is defined.
    pub mean: Option<f64>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub level: f64,
    pub n_boot: usize,
    pub defined_count: usize,
    pub samples: Option<Vec<Option<f64>>>,
}

impl BootstrapSummary {
    pub fn from_samples(name: String, samples: Vec<Option<f64>>, level: f64, retain: bool) -> Self {
        let defined: Vec<f64> = samples.iter().flatten().copied().collect();
        let mean = (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64);
        let (lower, upper) = match percentile_interval(&defined, level) {
            Ok((lo, hi)) => (Some(lo), Some(hi)),
            Err(_) => (None, None),
        };
        Self {
            name,
            mean,
            lower,
            upper,
            level,
            n_boot: samples.len(),
            defined_count: defined.len(),
            samples: retain.then_some(samples),
        }
    }
}

/// Draws one resample with its labels from `rng`.
pub fn draw_resample<'a, R: Rng + ?Sized>(input: &'a BootstrapInput<'a>, rng: &mut R) -> Resample<'a> {
    let n = input.truth.len();
    let indices = resample_indices(n, rng);
    let assigned = match input.labeler {
        Labeler::NaiveArgmax { predicted } => indices.iter().map(|&i| predicted[i]).collect(),
        Labeler::WeightedSetSampler { sets } => indices.iter().map(|&i| sample_label(sets[i], input.k, rng)).collect(),
    };
    Resample {
        input,
        indices,
        assigned,
    }
}

/// Runs `cfg.n_boot` resamples in parallel and summarizes every statistic component.
pub fn run_bootstrap(
    input: &BootstrapInput<'_>,
    stats: &[&dyn Statistic],
    cfg: &BootstrapConfig,
    rng: RngSpec,
) -> Result<Vec<BootstrapSummary>> {
    if cfg.n_boot < 2 {
        return Err(Error::TooFewSamples {
            have: cfg.n_boot,
            need: 2,
        });
    }
    let n = input.truth.len();
    if n == 0 {
        return Err(Error::Invalid("cannot bootstrap an empty sample".into()));
    }
    if input.labeler.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: input.labeler.len(),
        });
    }
    if let Some(s) = input.survival {
        if s.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: s.len(),
            });
        }
    }

    let names: Vec<String> = stats.iter().flat_map(|s| s.names()).collect();
    let rows: Vec<Vec<Option<f64>>> = (0..cfg.n_boot)
        .into_par_iter()
        .map(|b| {
            let mut r = rng.derive(b as u64).rng();
            let resample = draw_resample(input, &mut r);
            stats.iter().flat_map(|s| s.evaluate(&resample)).collect()
        })
        .collect();

    Ok(names
        .into_iter()
        .enumerate()
        .map(|(j, name)| {
            let column: Vec<Option<f64>> = rows.iter().map(|row| row[j]).collect();
            BootstrapSummary::from_samples(name, column, cfg.level, cfg.retain_samples)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentile_of_one_to_hundred() {
        let s: Vec<f64> = (1..=100).map(f64::from).collect();
        let (lo, hi) = percentile_interval(&s, 0.95).unwrap();
        assert!((lo - 3.475).abs() < 1e-12);
        assert!((hi - 97.525).abs() < 1e-12);
    }

    #[test]
    fn percentile_of_two_points_and_constants() {
        let (lo, hi) = percentile_interval(&[1.0, 0.0], 0.95).unwrap();
        assert!((lo - 0.025).abs() < 1e-15 && (hi - 0.975).abs() < 1e-15);
        assert_eq!(percentile_interval(&[4.0; 7], 0.9).unwrap(), (4.0, 4.0));
        assert!(matches!(
            percentile_interval(&[1.0], 0.95),
            Err(Error::TooFewSamples { .. })
        ));
    }

    #[test]
    fn single_row_resample() {
        let mut rng = RngSpec::new(0, 0).rng();
        for _ in 0..100 {
            assert_eq!(resample_indices(1, &mut rng), vec![0]);
        }
    }

    fn toy_input<'a>(truth: &'a [usize], predicted: &'a [usize]) -> BootstrapInput<'a> {
        BootstrapInput {
            truth,
            survival: None,
            k: 2,
            labeler: Labeler::NaiveArgmax { predicted },
        }
    }

    #[test]
    fn constant_statistic() {
        let truth = [0, 1, 1, 0];
        let input = toy_input(&truth, &truth);
        let seven = FnStatistic::new(vec!["seven".into()], |_r| vec![Some(7.0)]);
        let out = run_bootstrap(
            &input,
            &[&seven],
            &BootstrapConfig {
                n_boot: 50,
                ..Default::default()
            },
            RngSpec::new(1, 0),
        )
        .unwrap();
        assert_eq!(out[0].mean, Some(7.0));
        assert_eq!((out[0].lower, out[0].upper), (Some(7.0), Some(7.0)));
        assert_eq!(out[0].defined_count, 50);
    }

    #[test]
    fn undefined_values_are_excluded_per_statistic() {
        let truth = [0, 1, 1, 0];
        let input = toy_input(&truth, &truth);
        let stat = FnStatistic::new(vec!["half".into(), "always".into()], |r| {
            let first = r.indices[0];
            vec![(first % 2 == 0).then_some(1.0), Some(2.0)]
        });
        let out = run_bootstrap(
            &input,
            &[&stat],
            &BootstrapConfig {
                n_boot: 200,
                ..Default::default()
            },
            RngSpec::new(3, 0),
        )
        .unwrap();
        assert!(out[0].defined_count > 50 && out[0].defined_count < 150);
        assert_eq!(out[0].mean, Some(1.0));
        assert_eq!(out[1].defined_count, 200);
    }

    #[test]
    fn rejects_too_few_resamples() {
        let truth = [0];
        let input = toy_input(&truth, &truth);
        let err = run_bootstrap(
            &input,
            &[],
            &BootstrapConfig {
                n_boot: 1,
                ..Default::default()
            },
            RngSpec::new(0, 0),
        );
        assert!(matches!(err, Err(Error::TooFewSamples { have: 1, need: 2 })));
    }
}
