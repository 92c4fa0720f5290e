//! Simulation harness: one repetition runs the full weighted-labeling and
//! most-probable-class pipelines on a fresh synthetic cohort; many repetitions
//! run in parallel on independent streams and are aggregated afterwards.
//!
//! Stream layout for repetition `r` under master seed `s`, with
//! `base = RngSpec::new(s, r)`:
//!
//! | derive | use                               |
//! |--------|-----------------------------------|
//! | 0      | cohort generation                 |
//! | 1      | development / validation split    |
//! | 2      | fitting / calibration split       |
//! | 3      | naive bootstrap                   |
//! | 4      | weighted bootstrap                |

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bootstrap::{run_bootstrap, BootstrapConfig, BootstrapInput, Labeler, Resample, Statistic};
use crate::conformal::{
    ambiguity_profile, build_label_sets, class_coverage, estimate_thresholds, split_development, DEFAULT_ALPHA,
};
use crate::error::{Error, Result};
use crate::estimators::{fit_multinomial, predict_proba, OptConfig, Penalty};
use crate::labeling::argmax_label;
use crate::metrics::{class_metrics, confusion_counts, Measure};
use crate::rng::RngSpec;
use crate::simgen::{generate_dataset, split_cohorts, LabelMode, Scenario, SimConfig};
use crate::survival::{repetition_interval, stratified_estimates, survival_bias, DEFAULT_HORIZONS};
use crate::types::{LabelSet, SurvivalData};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Naive,
    NaiveBoot,
    WeightedBoot,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Naive, Method::NaiveBoot, Method::WeightedBoot];

    pub fn name(self) -> &'static str {
        match self {
            Method::Naive => "naive",
            Method::NaiveBoot => "naive_boot",
            Method::WeightedBoot => "weighted_boot",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| {
            Error::Invalid(format!(
                "unknown method `{s}` (expected naive, naive_boot or weighted_boot)"
            ))
        })
    }
}

/// Output table a statistic belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Table {
    Coverage,
    Thresholds,
    Metrics,
    Ambiguity,
    Survival,
}

impl Table {
    pub const ALL: [Table; 5] = [
        Table::Coverage,
        Table::Thresholds,
        Table::Metrics,
        Table::Ambiguity,
        Table::Survival,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Table::Coverage => "coverage",
            Table::Thresholds => "thresholds",
            Table::Metrics => "metrics",
            Table::Ambiguity => "ambiguity",
            Table::Survival => "survival",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub n: usize,
    pub n_boot: usize,
    pub n_reps: usize,
    pub alpha: Vec<f64>,
    pub methods: Vec<Method>,
    pub penalty: Penalty,
    pub seed: u64,
    /// Worker threads; `None` uses the global rayon pool. Not written to reports,
    /// which are identical for any worker count.
    #[serde(skip_serializing)]
    pub threads: Option<usize>,
    pub label_mode: LabelMode,
    pub shape: f64,
    pub scale: f64,
    pub beta: f64,
    pub horizon: f64,
    pub level: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let sim = SimConfig::default();
        Self {
            scenario: sim.scenario,
            n: sim.n,
            n_boot: 200,
            n_reps: 200,
            alpha: vec![DEFAULT_ALPHA; 3],
            methods: Method::ALL.to_vec(),
            penalty: Penalty::None,
            seed: 33,
            threads: None,
            label_mode: sim.label_mode,
            shape: sim.shape,
            scale: sim.scale,
            beta: sim.beta,
            horizon: sim.horizon,
            level: 0.95,
        }
    }
}

impl RunConfig {
    /// 1000 repetitions of 500 resamples.
    pub fn full_scale(mut self) -> Self {
        self.n_reps = 1000;
        self.n_boot = 500;
        self
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            n: self.n,
            scenario: self.scenario,
            shape: self.shape,
            scale: self.scale,
            beta: self.beta,
            horizon: self.horizon,
            label_mode: self.label_mode,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.sim_config().validate()?;
        if self.alpha.len() != 3 || self.alpha.iter().any(|a| !(*a > 0.0 && *a < 1.0)) {
            return Err(Error::Invalid(format!(
                "alpha must be 3 values in (0,1), got {:?}",
                self.alpha
            )));
        }
        let boots = self.methods.iter().any(|m| *m != Method::Naive);
        if boots && self.n_boot < 2 {
            return Err(Error::Invalid("n_boot must be at least 2".into()));
        }
        if self.n_reps < 1 {
            return Err(Error::Invalid("n_reps must be at least 1".into()));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::Invalid("level must lie in (0,1)".into()));
        }
        Ok(())
    }

    pub fn algorithm(&self) -> &'static str {
        match self.penalty {
            Penalty::None => "multinomial",
            Penalty::Ridge { .. } => "multinomial_ridge",
            Penalty::Lasso { .. } => "multinomial_lasso",
            Penalty::ElasticNet { .. } => "multinomial_elastic_net",
        }
    }
}

/// One per-repetition value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub rep: usize,
    pub table: Table,
    pub method: Method,
    /// 1-based class; `None` for overall or macro values.
    pub class: Option<usize>,
    pub statistic: String,
    pub estimate: Option<f64>,
    /// Bootstrap percentile bounds, for bootstrap methods.
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    /// Resamples in which the statistic was defined, for bootstrap methods.
    pub defined_count: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StatKey {
    pub table: Table,
    pub method: Method,
    pub class: Option<usize>,
    pub statistic: String,
}

/// Summary of one statistic across repetitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub key: StatKey,
    pub n_reps: usize,
    /// Repetitions with a defined estimate.
    pub defined_reps: usize,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    /// 2.5% and 97.5% quantiles of the per-repetition estimates.
    pub rep_percentile: Option<(f64, f64)>,
    /// `mean -/+ 0.95 sd` across repetitions.
    pub sd095_interval: Option<(f64, f64)>,
    /// `mean -/+ 1.96 sd` across repetitions.
    pub sd196_interval: Option<(f64, f64)>,
    /// Mean of the per-repetition bootstrap percentile bounds.
    pub mean_boot_lo: Option<f64>,
    pub mean_boot_hi: Option<f64>,
    /// Total resamples with a defined value, summed over repetitions.
    pub boot_defined: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionReport {
    pub schema_version: u32,
    pub config: RunConfig,
    pub algorithm: String,
    pub records: Vec<Record>,
    pub aggregates: Vec<Aggregate>,
}

impl RepetitionReport {
    pub fn aggregate(&self, table: Table, method: Method, class: Option<usize>, statistic: &str) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| {
            a.key.table == table && a.key.method == method && a.key.class == class && a.key.statistic == statistic
        })
    }

    pub fn mean(&self, table: Table, method: Method, class: Option<usize>, statistic: &str) -> Option<f64> {
        self.aggregate(table, method, class, statistic).and_then(|a| a.mean)
    }

    /// Per-repetition estimates of one statistic, in repetition order.
    pub fn series(&self, table: Table, method: Method, class: Option<usize>, statistic: &str) -> Vec<Option<f64>> {
        self.records
            .iter()
            .filter(|r| r.table == table && r.method == method && r.class == class && r.statistic == statistic)
            .map(|r| r.estimate)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Entry {
    table: Table,
    class: Option<usize>,
    statistic: &'static str,
}

const MEASURES: [Measure; 4] = Measure::ALL;
const COUNTS: [&str; 4] = ["tp", "tn", "fp", "fn"];
const SURVIVAL_STATS: [[&str; 3]; 3] = [
    ["s90_pred", "s90_obs", "s90_bias"],
    ["s365_pred", "s365_obs", "s365_bias"],
    ["median_pred", "median_obs", "median_bias"],
];

/// Keys produced by [`evaluate_labels`], in the same order.
fn evaluation_keys(k: usize, with_survival: bool) -> Vec<Entry> {
    let mut keys = Vec::new();
    for y in 0..k {
        keys.push(Entry {
            table: Table::Coverage,
            class: Some(y + 1),
            statistic: "coverage",
        });
    }
    for y in 0..k {
        for m in MEASURES {
            keys.push(Entry {
                table: Table::Metrics,
                class: Some(y + 1),
                statistic: m.name(),
            });
        }
        for c in COUNTS {
            keys.push(Entry {
                table: Table::Metrics,
                class: Some(y + 1),
                statistic: c,
            });
        }
    }
    for m in MEASURES {
        keys.push(Entry {
            table: Table::Metrics,
            class: None,
            statistic: m.name(),
        });
    }
    if with_survival {
        for y in 0..k {
            for group in SURVIVAL_STATS {
                for s in group {
                    keys.push(Entry {
                        table: Table::Survival,
                        class: Some(y + 1),
                        statistic: s,
                    });
                }
            }
        }
    }
    keys
}

/// Coverage, classification and survival statistics for one single-label assignment.
fn evaluate_labels(
    sets: &[LabelSet],
    assigned: &[usize],
    truth: &[usize],
    survival: Option<&SurvivalData>,
    k: usize,
) -> Vec<Option<f64>> {
    let mut out = Vec::new();
    match class_coverage(sets, truth, k) {
        Ok(cov) => out.extend(cov.into_iter().map(Some)),
        // classes absent from this sample
        Err(_) => {
            let mut hit = vec![0usize; k];
            let mut total = vec![0usize; k];
            for (s, &y) in sets.iter().zip(truth) {
                total[y] += 1;
                hit[y] += usize::from(s.contains(y));
            }
            out.extend((0..k).map(|y| (total[y] > 0).then(|| hit[y] as f64 / total[y] as f64)));
        }
    }
    let cc = confusion_counts(assigned, truth, k).expect("labels validated upstream");
    let metrics = class_metrics(&cc);
    for (y, counts) in cc.per_class.iter().enumerate() {
        for m in MEASURES {
            out.push(metrics.get(m).per_class[y]);
        }
        for c in [counts.tp, counts.tn, counts.fp, counts.fn_] {
            out.push(Some(c as f64));
        }
    }
    for m in MEASURES {
        out.push(metrics.get(m).macro_avg);
    }
    if let Some(sd) = survival {
        let pred = stratified_estimates(sd, assigned, k, &DEFAULT_HORIZONS).expect("lengths match");
        let obs = stratified_estimates(sd, truth, k, &DEFAULT_HORIZONS).expect("lengths match");
        let bias = survival_bias(&pred, &obs).expect("same class count");
        for y in 0..k {
            let p = pred[y].as_ref().ok();
            let o = obs[y].as_ref().ok();
            for (h, _) in DEFAULT_HORIZONS.iter().enumerate() {
                out.push(p.and_then(|e| e.at_horizon[h]));
                out.push(o.and_then(|e| e.at_horizon[h]));
                out.push(bias.per_class[y].at_horizon[h]);
            }
            out.push(p.and_then(|e| e.median));
            out.push(o.and_then(|e| e.median));
            out.push(bias.per_class[y].median);
        }
    }
    out
}

struct LabelStatistic {
    keys: Vec<Entry>,
}

impl Statistic for LabelStatistic {
    fn names(&self) -> Vec<String> {
        self.keys
            .iter()
            .map(|e| match e.class {
                Some(c) => format!("{}/{}/{c}", e.table.name(), e.statistic),
                None => format!("{}/{}", e.table.name(), e.statistic),
            })
            .collect()
    }

    fn evaluate(&self, r: &Resample<'_>) -> Vec<Option<f64>> {
        let truth = r.truth();
        let sets: Vec<LabelSet> = (0..r.indices.len()).map(|j| r.set(j)).collect();
        let survival = r.survival();
        evaluate_labels(&sets, &r.assigned, &truth, survival.as_ref(), r.input.k)
    }
}

fn push_point(out: &mut Vec<Record>, rep: usize, method: Method, e: &Entry, value: Option<f64>) {
    out.push(Record {
        rep,
        table: e.table,
        method,
        class: e.class,
        statistic: e.statistic.to_string(),
        estimate: value,
        lo: None,
        hi: None,
        defined_count: None,
    });
}

/// Coverage, metrics and (with survival data) Kaplan-Meier records for one fixed assignment.
pub fn point_records(
    method: Method,
    sets: &[LabelSet],
    assigned: &[usize],
    truth: &[usize],
    survival: Option<&SurvivalData>,
    k: usize,
) -> Result<Vec<Record>> {
    if sets.len() != truth.len() || assigned.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            got: if sets.len() != truth.len() {
                sets.len()
            } else {
                assigned.len()
            },
        });
    }
    if let Some(sd) = survival {
        if sd.len() != truth.len() {
            return Err(Error::DimensionMismatch {
                expected: truth.len(),
                got: sd.len(),
            });
        }
    }
    if let Some(&bad) = truth.iter().chain(assigned).find(|&&y| y >= k) {
        return Err(Error::LabelOutOfRange { label: bad + 1, k });
    }
    let mut out = Vec::new();
    let values = evaluate_labels(sets, assigned, truth, survival, k);
    for (e, v) in evaluation_keys(k, survival.is_some()).iter().zip(values) {
        push_point(&mut out, 0, method, e, v);
    }
    Ok(out)
}

/// Bootstrap summaries of the statistics in [`point_records`]; `estimate` is the bootstrap mean.
pub fn bootstrap_records(
    method: Method,
    input: &BootstrapInput<'_>,
    cfg: &BootstrapConfig,
    rng: RngSpec,
) -> Result<Vec<Record>> {
    let stat = LabelStatistic {
        keys: evaluation_keys(input.k, input.survival.is_some()),
    };
    let summaries = run_bootstrap(input, &[&stat], cfg, rng)?;
    Ok(stat
        .keys
        .iter()
        .zip(summaries)
        .map(|(e, s)| Record {
            rep: 0,
            table: e.table,
            method,
            class: e.class,
            statistic: e.statistic.to_string(),
            estimate: s.mean,
            lo: s.lower,
            hi: s.upper,
            defined_count: Some(s.defined_count),
        })
        .collect())
}

fn rep_bootstrap(
    out: &mut Vec<Record>,
    rep: usize,
    method: Method,
    input: &BootstrapInput<'_>,
    cfg: &RunConfig,
    rng: RngSpec,
) -> Result<()> {
    let bcfg = BootstrapConfig {
        n_boot: cfg.n_boot,
        level: cfg.level,
        retain_samples: false,
    };
    out.extend(
        bootstrap_records(method, input, &bcfg, rng)?
            .into_iter()
            .map(|r| Record { rep, ..r }),
    );
    Ok(())
}

/// Runs one repetition of the simulation study and returns its records.
pub fn run_scenario(cfg: &RunConfig, rep: usize) -> Result<Vec<Record>> {
    let k = 3;
    let base = RngSpec::new(cfg.seed, rep as u64);
    let data = generate_dataset(&cfg.sim_config(), base.derive(0)).map_err(|e| e.context("simulate"))?;
    let (dev_idx, val_idx) = split_cohorts(&data.labels, k, base.derive(1));
    let columns = cfg.scenario.columns();
    let dev = data.select(&dev_idx);
    let val = data.select(&val_idx);
    let dev_x = dev.features.select_columns(&columns);
    let val_x = val.features.select_columns(&columns);
    let survival = val.survival.as_ref();
    let opt = OptConfig::default();
    let mut out = Vec::new();

    let wants = |m: Method| cfg.methods.contains(&m);
    if wants(Method::Naive) || wants(Method::NaiveBoot) {
        let train = crate::types::LabeledDataset::new(dev_x.clone(), dev.labels.clone(), None)?;
        let model =
            fit_multinomial(&train, k, cfg.penalty, &opt).map_err(|e| e.context("fit on development cohort"))?;
        let probs = predict_proba(&model, &val_x)?;
        let predicted = argmax_label(&probs);
        let sets: Vec<LabelSet> = predicted.iter().map(|&y| LabelSet::singleton(y)).collect();
        if wants(Method::Naive) {
            let values = evaluate_labels(&sets, &predicted, &val.labels, survival, k);
            for (e, v) in evaluation_keys(k, survival.is_some()).iter().zip(values) {
                push_point(&mut out, rep, Method::Naive, e, v);
            }
        }
        if wants(Method::NaiveBoot) {
            let input = BootstrapInput {
                truth: &val.labels,
                survival,
                k,
                labeler: Labeler::NaiveArgmax { predicted: &predicted },
            };
            rep_bootstrap(&mut out, rep, Method::NaiveBoot, &input, cfg, base.derive(3))
                .map_err(|e| e.context("naive bootstrap"))?;
        }
    }

    if wants(Method::WeightedBoot) {
        let m = Method::WeightedBoot;
        let split =
            split_development(&dev.labels, k, base.derive(2)).map_err(|e| e.context("split development cohort"))?;
        let fit_labels: Vec<usize> = split.fit.iter().map(|&i| dev.labels[i]).collect();
        let cal_labels: Vec<usize> = split.calibration.iter().map(|&i| dev.labels[i]).collect();
        let train = crate::types::LabeledDataset::new(dev_x.select_rows(&split.fit), fit_labels, None)?;
        let model = fit_multinomial(&train, k, cfg.penalty, &opt).map_err(|e| e.context("fit on fitting half"))?;
        let cal_probs = predict_proba(&model, &dev_x.select_rows(&split.calibration))?;
        let thresholds =
            estimate_thresholds(&cal_probs, &cal_labels, &cfg.alpha).map_err(|e| e.context("thresholds"))?;
        let cal_sets = build_label_sets(&cal_probs, &thresholds)?;
        let cal_cov = class_coverage(&cal_sets, &cal_labels, k)?;

        for (y, &cov) in cal_cov.iter().enumerate() {
            let e = Entry {
                table: Table::Thresholds,
                class: Some(y + 1),
                statistic: "threshold",
            };
            push_point(&mut out, rep, m, &e, Some(thresholds.thresholds[y]));
            let e = Entry {
                table: Table::Thresholds,
                class: Some(y + 1),
                statistic: "calibration_count",
            };
            push_point(&mut out, rep, m, &e, Some(thresholds.calib_counts[y] as f64));
            let e = Entry {
                table: Table::Coverage,
                class: Some(y + 1),
                statistic: "calibration_coverage",
            };
            push_point(&mut out, rep, m, &e, Some(cov));
        }

        let val_probs = predict_proba(&model, &val_x)?;
        let sets = build_label_sets(&val_probs, &thresholds)?;
        let val_cov = class_coverage(&sets, &val.labels, k)?;
        for (y, c) in val_cov.iter().enumerate() {
            let e = Entry {
                table: Table::Coverage,
                class: Some(y + 1),
                statistic: "validation_coverage",
            };
            push_point(&mut out, rep, m, &e, Some(*c));
        }
        let profile = ambiguity_profile(&sets, &val.labels, k);
        const SIZES: [&str; 4] = ["size_0", "size_1", "size_2", "size_3"];
        let share = |hist: &[usize], c: usize| {
            let total: usize = hist.iter().sum();
            (total > 0).then(|| hist[c] as f64 / total as f64)
        };
        for (c, name) in SIZES.iter().enumerate() {
            let e = Entry {
                table: Table::Ambiguity,
                class: None,
                statistic: name,
            };
            push_point(&mut out, rep, m, &e, share(&profile.overall, c));
        }
        for y in 0..k {
            for (c, name) in SIZES.iter().enumerate() {
                let e = Entry {
                    table: Table::Ambiguity,
                    class: Some(y + 1),
                    statistic: name,
                };
                push_point(&mut out, rep, m, &e, share(&profile.by_class[y], c));
            }
        }

        let input = BootstrapInput {
            truth: &val.labels,
            survival,
            k,
            labeler: Labeler::WeightedSetSampler { sets: &sets },
        };
        rep_bootstrap(&mut out, rep, m, &input, cfg, base.derive(4)).map_err(|e| e.context("weighted bootstrap"))?;
    }

    // naive coverage on the validation sample, for symmetry with the weighted method
    if wants(Method::Naive) {
        let cov: Vec<Record> = out
            .iter()
            .filter(|r| r.method == Method::Naive && r.table == Table::Coverage && r.statistic == "coverage")
            .map(|r| Record {
                statistic: "validation_coverage".into(),
                ..r.clone()
            })
            .collect();
        out.extend(cov);
    }
    Ok(out)
}

/// Summarizes per-repetition records. Pure function of `records`.
pub fn aggregate(records: &[Record], n_reps: usize) -> Vec<Aggregate> {
    let mut groups: BTreeMap<StatKey, Vec<&Record>> = BTreeMap::new();
    for r in records {
        let key = StatKey {
            table: r.table,
            method: r.method,
            class: r.class,
            statistic: r.statistic.clone(),
        };
        groups.entry(key).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|(key, rows)| {
            let est: Vec<f64> = rows.iter().filter_map(|r| r.estimate).collect();
            let mean = (!est.is_empty()).then(|| est.iter().sum::<f64>() / est.len() as f64);
            let spread = repetition_interval(&est).ok();
            let rep_percentile = crate::bootstrap::percentile_interval(&est, 0.95).ok();
            let los: Vec<f64> = rows.iter().filter_map(|r| r.lo).collect();
            let his: Vec<f64> = rows.iter().filter_map(|r| r.hi).collect();
            let avg = |v: &[f64]| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
            let boot_defined = rows
                .iter()
                .map(|r| r.defined_count)
                .try_fold(0usize, |acc, d| d.map(|d| acc + d));
            Aggregate {
                n_reps,
                defined_reps: est.len(),
                mean,
                sd: spread.map(|s| s.sd),
                rep_percentile,
                sd095_interval: spread.map(|s| s.narrow),
                sd196_interval: spread.map(|s| s.normal),
                mean_boot_lo: avg(&los),
                mean_boot_hi: avg(&his),
                boot_defined,
                key,
            }
        })
        .collect()
}

/// Runs `cfg.n_reps` repetitions on per-repetition streams and aggregates them.
pub fn run_repetitions(cfg: &RunConfig) -> Result<RepetitionReport> {
    cfg.validate()?;
    let job = || {
        (0..cfg.n_reps)
            .into_par_iter()
            .map(|rep| {
                run_scenario(cfg, rep)
                    .map_err(|e| e.context(format!("repetition {rep} (seed {}, stream {rep})", cfg.seed)))
            })
            .collect::<Result<Vec<_>>>()
    };
    let per_rep = match cfg.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::Invalid(format!("thread pool: {e}")))?
            .install(job)?,
        None => job()?,
    };
    let records: Vec<Record> = per_rep.into_iter().flatten().collect();
    let aggregates = aggregate(&records, cfg.n_reps);
    Ok(RepetitionReport {
        schema_version: SCHEMA_VERSION,
        config: cfg.clone(),
        algorithm: cfg.algorithm().to_string(),
        records,
        aggregates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_match_evaluation_length() {
        let truth = vec![0, 1, 2, 0, 1, 2];
        let sets: Vec<LabelSet> = truth.iter().map(|&y| LabelSet::singleton(y)).collect();
        let sd = SurvivalData::new(vec![5.0, 10.0, 20.0, 30.0, 40.0, 50.0], vec![true; 6]).unwrap();
        assert_eq!(
            evaluate_labels(&sets, &truth, &truth, Some(&sd), 3).len(),
            evaluation_keys(3, true).len()
        );
        assert_eq!(
            evaluate_labels(&sets, &truth, &truth, None, 3).len(),
            evaluation_keys(3, false).len()
        );
    }

    #[test]
    fn method_names_parse() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("bogus".parse::<Method>().is_err());
    }

    #[test]
    fn config_validation() {
        assert!(RunConfig::default().validate().is_ok());
        let bad = RunConfig {
            n_boot: 1,
            ..RunConfig::default()
        };
        assert!(bad.validate().is_err());
        let naive_only = RunConfig {
            n_boot: 1,
            methods: vec![Method::Naive],
            ..RunConfig::default()
        };
        assert!(naive_only.validate().is_ok());
        assert!(RunConfig {
            alpha: vec![0.1, 1.0, 0.1],
            ..RunConfig::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn single_repetition_aggregate_equals_record() {
        let cfg = RunConfig {
            n_reps: 1,
            n_boot: 20,
            ..RunConfig::default()
        };
        let report = run_repetitions(&cfg).unwrap();
        for a in &report.aggregates {
            let s = report.series(a.key.table, a.key.method, a.key.class, &a.key.statistic);
            assert_eq!(s.len(), 1);
            assert_eq!(a.mean, s[0]);
            assert_eq!(a.sd, None);
        }
    }

    #[test]
    fn naive_coverage_equals_sensitivity() {
        let cfg = RunConfig {
            n_reps: 1,
            methods: vec![Method::Naive],
            ..RunConfig::default()
        };
        let recs = run_scenario(&cfg, 0).unwrap();
        for y in 1..=3 {
            let get = |stat: &str, table: Table| {
                recs.iter()
                    .find(|r| r.table == table && r.class == Some(y) && r.statistic == stat)
                    .and_then(|r| r.estimate)
                    .unwrap()
            };
            assert_eq!(get("coverage", Table::Coverage), get("sensitivity", Table::Metrics));
        }
    }
}
