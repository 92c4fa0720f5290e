//! Synthetic three-class cohort with Weibull survival and administrative censoring.
//!
//! Covariates `X1..X15`:
//!
//! | col | distribution            | kind       |
//! |-----|-------------------------|------------|
//! | X1  | N(75, 5)                | continuous |
//! | X2  | N(45000, 10000)         | continuous |
//! | X3  | N(23, 4)                | continuous |
//! | X4  | N(70, 5)                | continuous |
//! | X5  | N(5, 2)                 | continuous |
//! | X6  | N(0, 1)                 | continuous |
//! | X7  | Bernoulli(0.5)          | binary     |
//! | X8  | Bernoulli(0.25)         | binary     |
//! | X9  | Bernoulli(0.3)          | binary     |
//! | X10 | Bernoulli(0.7)          | binary     |
//! | X11 | Bernoulli(0.6)          | binary     |
//! | X12 | Bernoulli(0.7)          | binary     |
//! | X13 | Bernoulli(0.4)          | binary     |
//! | X14 | Poisson(3), copula      | count      |
//! | X15 | Poisson(3), copula      | count      |
//!
//! `N(m, s)` is read as mean and standard deviation. X14 and X15 come from a
//! bivariate normal with correlation 0.7 pushed through the normal CDF and the
//! Poisson(3) quantile function.
//!
//! Survival: `T = (-ln U * b * exp(-Y * beta))^(1/a)` with `Y` the 1-based
//! class label, observed as `min(T, horizon)`.

use rand::Rng;
use rand_distr::{Distribution, OpenClosed01, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, DiscreteCDF, Normal, Poisson};

use crate::conformal::stratified_halves;
use crate::error::{Error, Result};
use crate::rng::RngSpec;
use crate::types::{ClassProbabilities, ColumnKind, FeatureMatrix, LabeledDataset, SurvivalData};

pub const N_COVARIATES: usize = 15;
pub const N_CLASSES: usize = 3;
pub const COPULA_CORRELATION: f64 = 0.7;
pub const COUNT_MEAN: f64 = 3.0;

const NORMALS: [(f64, f64); 6] = [
    (75.0, 5.0),
    (45000.0, 10000.0),
    (23.0, 4.0),
    (70.0, 5.0),
    (5.0, 2.0),
    (0.0, 1.0),
];
const BERNOULLIS: [f64; 7] = [0.5, 0.25, 0.3, 0.7, 0.6, 0.7, 0.4];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelMode {
    /// Label is the class with the greatest generating probability.
    #[default]
    Argmax,
    /// Label is one categorical draw from the generating probabilities.
    CategoricalDraw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Scenario(u8);

impl TryFrom<u8> for Scenario {
    type Error = Error;

    fn try_from(id: u8) -> Result<Self> {
        Scenario::new(id)
    }
}

impl From<Scenario> for u8 {
    fn from(s: Scenario) -> u8 {
        s.0
    }
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario(1), Scenario(2), Scenario(3)];

    pub fn new(id: u8) -> Result<Self> {
        if (1..=3).contains(&id) {
            Ok(Self(id))
        } else {
            Err(Error::Invalid(format!("scenario must be 1, 2 or 3, got {id}")))
        }
    }

    pub fn id(self) -> u8 {
        self.0
    }

    /// 1-based covariate numbers used for prediction.
    pub fn mask(self) -> &'static [usize] {
        match self.0 {
            1 => &[1, 3, 5, 6, 7, 8, 9, 10, 11, 13],
            2 => &[1, 2, 3, 4, 5, 6, 13],
            _ => &[2, 4, 5, 6, 7, 8, 9, 10, 12, 13, 14, 15],
        }
    }

    /// 0-based column indices of [`Self::mask`].
    pub fn columns(self) -> Vec<usize> {
        self.mask().iter().map(|c| c - 1).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: usize,
    pub scenario: Scenario,
    pub shape: f64,
    pub scale: f64,
    /// Effect of the class label on the log hazard scale, multiplied by the 1-based label.
    pub beta: f64,
    pub horizon: f64,
    pub label_mode: LabelMode,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n: 2000,
            scenario: Scenario(1),
            shape: 1.0,
            scale: 90.0,
            beta: 0.7,
            horizon: 365.0,
            label_mode: LabelMode::default(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.shape > 0.0 && self.scale > 0.0 && self.horizon > 0.0) {
            return Err(Error::Invalid("shape, scale and horizon must be positive".into()));
        }
        if !self.beta.is_finite() {
            return Err(Error::Invalid("beta must be finite".into()));
        }
        if self.n < 4 * N_CLASSES {
            return Err(Error::Invalid(format!("n must be at least {}", 4 * N_CLASSES)));
        }
        Ok(())
    }
}

pub fn covariate_names() -> Vec<String> {
    (1..=N_COVARIATES).map(|j| format!("x{j}")).collect()
}

pub fn covariate_kinds() -> Vec<ColumnKind> {
    let mut kinds = vec![ColumnKind::Continuous; NORMALS.len()];
    kinds.extend([ColumnKind::Binary; BERNOULLIS.len()]);
    kinds.extend([ColumnKind::Count; 2]);
    kinds
}

/// Poisson quantile lookup built from the exact CDF.
struct PoissonQuantile {
    cdf: Vec<f64>,
}

impl PoissonQuantile {
    fn new(mean: f64) -> Self {
        let dist = Poisson::new(mean).expect("positive mean");
        let mut cdf = Vec::new();
        let mut k = 0;
        loop {
            let c = dist.cdf(k);
            cdf.push(c);
            if c >= 1.0 - 1e-16 || k > 1000 {
                break;
            }
            k += 1;
        }
        Self { cdf }
    }

    /// Smallest `k` with `F(k) >= u`.
    fn quantile(&self, u: f64) -> f64 {
        self.cdf.partition_point(|&c| c < u).min(self.cdf.len() - 1) as f64
    }
}

/// Covariate rows are generated one at a time, so the first `m` rows do not depend on `n`.
pub fn generate_covariates(n: usize, rng: RngSpec) -> FeatureMatrix {
    let mut rng = rng.rng();
    let phi = Normal::standard();
    let counts = PoissonQuantile::new(COUNT_MEAN);
    let rho = COPULA_CORRELATION;
    let mut values = Vec::with_capacity(n * N_COVARIATES);
    for _ in 0..n {
        for &(mean, sd) in &NORMALS {
            let z: f64 = StandardNormal.sample(&mut rng);
            values.push(mean + sd * z);
        }
        for &p in &BERNOULLIS {
            values.push(f64::from(u8::from(rng.random::<f64>() < p)));
        }
        let z1: f64 = StandardNormal.sample(&mut rng);
        let e: f64 = StandardNormal.sample(&mut rng);
        let z2 = rho * z1 + (1.0 - rho * rho).sqrt() * e;
        values.push(counts.quantile(phi.cdf(z1)));
        values.push(counts.quantile(phi.cdf(z2)));
    }
    FeatureMatrix::new(n, N_COVARIATES, values, covariate_kinds(), covariate_names())
        .expect("generated covariates satisfy their kinds")
}

/// The two free linear predictors `(X'b1, X'b2)` for one full covariate row.
pub fn generating_predictors(x: &[f64]) -> (f64, f64) {
    let c = |j: usize| x[j - 1];
    let inter = c(7) * c(10);
    let eta1 = 1.8
        * (-8.25 + 0.2 * c(1) + 0.24 * inter - 0.3 * c(3) + 0.21 * c(14).sqrt() - 0.9 * c(9)
            + 0.9 * c(11)
            + 0.1 * c(5).sin());
    let eta2 = 1.8
        * (-1.95 + 0.04 * c(1) + 0.5 * inter - 0.03 * c(3) + 0.032 * c(14).sqrt() - 0.02 * c(9)
            + 0.003 * c(11)
            + 0.31 * c(5).sin());
    (eta1, eta2)
}

fn generating_row(x: &[f64]) -> [f64; 3] {
    let (e1, e2) = generating_predictors(x);
    let m = e1.max(e2).max(0.0);
    let (a, b, c) = ((e1 - m).exp(), (e2 - m).exp(), (-m).exp());
    let d = a + b + c;
    [a / d, b / d, c / d]
}

pub fn class_probabilities(x: &FeatureMatrix) -> Result<ClassProbabilities> {
    if x.cols() != N_COVARIATES {
        return Err(Error::DimensionMismatch {
            expected: N_COVARIATES,
            got: x.cols(),
        });
    }
    let values: Vec<f64> = (0..x.rows()).flat_map(|i| generating_row(x.row(i))).collect();
    ClassProbabilities::new(x.rows(), N_CLASSES, values)
}

pub fn draw_labels<R: Rng + ?Sized>(probs: &ClassProbabilities, mode: LabelMode, rng: &mut R) -> Vec<usize> {
    match mode {
        LabelMode::Argmax => crate::labeling::argmax_label(probs),
        LabelMode::CategoricalDraw => probs
            .rows()
            .map(|row| {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (y, p) in row.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        return y;
                    }
                }
                // u landed in the rounding gap above the cumulative sum
                row.iter().rposition(|&p| p > 0.0).unwrap_or(row.len() - 1)
            })
            .collect(),
    }
}

/// Event time for a uniform draw `u` in `(0, 1]` and 0-based class `label`.
pub fn weibull_time(u: f64, label: usize, cfg: &SimConfig) -> f64 {
    let y = (label + 1) as f64;
    (-u.ln() * cfg.scale * (-y * cfg.beta).exp()).powf(1.0 / cfg.shape)
}

pub fn simulate_survival<R: Rng + ?Sized>(labels: &[usize], cfg: &SimConfig, rng: &mut R) -> SurvivalData {
    let mut time = Vec::with_capacity(labels.len());
    let mut event = Vec::with_capacity(labels.len());
    for &y in labels {
        let u: f64 = OpenClosed01.sample(rng);
        let t = weibull_time(u, y, cfg);
        time.push(t.min(cfg.horizon));
        event.push(t <= cfg.horizon);
    }
    SurvivalData::new(time, event).expect("simulated times are finite and non-negative")
}

/// Full simulated cohort (all 15 covariates, labels, survival).
pub fn generate_dataset(cfg: &SimConfig, rng: RngSpec) -> Result<LabeledDataset> {
    cfg.validate()?;
    let x = generate_covariates(cfg.n, rng.derive(0));
    let probs = class_probabilities(&x)?;
    let labels = draw_labels(&probs, cfg.label_mode, &mut rng.derive(1).rng());
    let survival = simulate_survival(&labels, cfg, &mut rng.derive(2).rng());
    LabeledDataset::new(x, labels, Some(survival))
}

/// Stratified halves `(development, validation)`.
pub fn split_cohorts(labels: &[usize], k: usize, rng: RngSpec) -> (Vec<usize>, Vec<usize>) {
    stratified_halves(labels, k, rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn masks_match_covariate_table() {
        // rows X1..X15, columns scenario 1..3
        let table: [[bool; 3]; 15] = [
            [true, true, false],
            [false, true, true],
            [true, true, false],
            [false, true, true],
            [true, true, true],
            [true, true, true],
            [true, false, true],
            [true, false, true],
            [true, false, true],
            [true, false, true],
            [true, false, false],
            [false, false, true],
            [true, true, true],
            [false, false, true],
            [false, false, true],
        ];
        for (s, scenario) in Scenario::ALL.iter().enumerate() {
            let expected: Vec<usize> = (1..=15).filter(|&c| table[c - 1][s]).collect();
            assert_eq!(scenario.mask(), expected.as_slice());
        }
        assert!(Scenario::new(4).is_err());
    }

    #[test]
    fn symmetric_logits_give_uniform() {
        // choose X so both predictors vanish is awkward; test the softmax directly
        let x = [0.0; 15];
        let (e1, e2) = generating_predictors(&x);
        let p = generating_row(&x);
        let d = 1.0 + e1.exp() + e2.exp();
        assert!((p[0] - e1.exp() / d).abs() < 1e-15);
        assert!((p[2] - 1.0 / d).abs() < 1e-15);
    }

    #[test]
    fn hand_evaluated_probabilities() {
        let mut x = [0.0; 15];
        x[0] = 75.0; // X1
        x[2] = 23.0; // X3
        x[4] = 5.0; // X5
        x[6] = 1.0; // X7
        x[8] = 0.0; // X9
        x[9] = 1.0; // X10
        x[10] = 1.0; // X11
        x[13] = 4.0; // X14
        let s5 = 5.0_f64.sin();
        let e1 = 1.8 * (-8.25 + 15.0 + 0.24 - 6.9 + 0.42 + 0.9 + 0.1 * s5);
        let e2 = 1.8 * (-1.95 + 3.0 + 0.5 - 0.69 + 0.064 + 0.003 + 0.31 * s5);
        let d = 1.0 + e1.exp() + e2.exp();
        let p = generating_row(&x);
        assert!((p[0] - e1.exp() / d).abs() < 1e-12);
        assert!((p[1] - e2.exp() / d).abs() < 1e-12);
        assert!((p[2] - 1.0 / d).abs() < 1e-12);
    }

    #[test]
    fn weibull_plug_in() {
        let cfg = SimConfig {
            beta: 0.0,
            ..SimConfig::default()
        };
        assert!((weibull_time((-1.0_f64).exp(), 0, &cfg) - 90.0).abs() < 1e-12);
    }

    #[test]
    fn label_modes() {
        let p = ClassProbabilities::from_rows(&[vec![1.0, 0.0, 0.0], vec![0.2, 0.5, 0.3]]).unwrap();
        let mut rng = RngSpec::new(1, 1).rng();
        assert_eq!(draw_labels(&p, LabelMode::Argmax, &mut rng), vec![0, 1]);
        for _ in 0..100 {
            assert_eq!(draw_labels(&p, LabelMode::CategoricalDraw, &mut rng)[0], 0);
        }
    }

    #[test]
    fn cohorts_are_even_and_deterministic() {
        let ds = generate_dataset(&SimConfig::default(), RngSpec::new(33, 0)).unwrap();
        let (dev, val) = split_cohorts(&ds.labels, 3, RngSpec::new(33, 1));
        assert_eq!((dev.len(), val.len()), (1000, 1000));
        let dc = crate::types::class_counts(&dev.iter().map(|&i| ds.labels[i]).collect::<Vec<_>>(), 3);
        let vc = crate::types::class_counts(&val.iter().map(|&i| ds.labels[i]).collect::<Vec<_>>(), 3);
        for (a, b) in dc.iter().zip(&vc) {
            assert!(a.abs_diff(*b) <= 1);
        }
        assert_eq!(
            (dev.clone(), val.clone()),
            split_cohorts(&ds.labels, 3, RngSpec::new(33, 1))
        );
    }

    #[test]
    fn config_validation() {
        assert!(SimConfig {
            n: 11,
            ..SimConfig::default()
        }
        .validate()
        .is_err());
        assert!(SimConfig {
            scale: 0.0,
            ..SimConfig::default()
        }
        .validate()
        .is_err());
        assert!(SimConfig::default().validate().is_ok());
    }
}
