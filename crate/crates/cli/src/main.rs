use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use labelboot::bootstrap::{BootstrapConfig, BootstrapInput, Labeler};
use labelboot::conformal::{ambiguity_profile, build_label_sets, estimate_thresholds, ThresholdVector};
use labelboot::estimators::{fit_multinomial, ingest_probabilities, predict_proba, OptConfig, Penalty};
use labelboot::io;
use labelboot::labeling::argmax_label;
use labelboot::pipeline::{bootstrap_records, point_records, run_repetitions, Method, Record, RunConfig, Table};
use labelboot::report::{emit_report, fmt_opt, write_records};
use labelboot::simgen::{generate_dataset, LabelMode, Scenario, SimConfig};
use labelboot::targets::compare_report;
use labelboot::{LabelSet, LabelSpace, LabeledDataset, RngSpec};

const K: usize = 3;

#[derive(Parser)]
#[command(
    name = "labelboot",
    version,
    about = "Set-valued labeling and weighted bootstrap for classifier-derived outcomes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic cohort.
    Simulate(SimulateArgs),
    /// Fit a multinomial logit on a dataset.
    Fit(FitArgs),
    /// Estimate per-class thresholds from calibration probabilities.
    Thresholds(ThresholdArgs),
    /// Turn probabilities into label sets and most-probable labels.
    Classify(ClassifyArgs),
    /// Coverage and classification metrics for label sets or single labels.
    Evaluate(EvalArgs),
    /// Kaplan-Meier estimates and bias by assigned class.
    Survival(EvalArgs),
    /// Run the repeated simulation study for one scenario.
    Pipeline(PipelineArgs),
    /// Run all three scenarios and compare against reference values.
    ReproduceTables(PipelineArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Argmax,
    CategoricalDraw,
}

impl From<ModeArg> for LabelMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Argmax => LabelMode::Argmax,
            ModeArg::CategoricalDraw => LabelMode::CategoricalDraw,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PenaltyArg {
    None,
    Ridge,
    Lasso,
    ElasticNet,
}

#[derive(Args)]
struct PenaltyOpts {
    #[arg(long, value_enum)]
    penalty: Option<PenaltyArg>,
    /// Penalty strength on standardized features.
    #[arg(long)]
    lambda: Option<f64>,
    /// L1 share for the elastic net.
    #[arg(long)]
    mix: Option<f64>,
}

impl PenaltyOpts {
    fn resolve(&self) -> Result<Option<Penalty>> {
        let lambda = || self.lambda.context("--lambda is required with a penalty");
        Ok(match self.penalty {
            None => None,
            Some(PenaltyArg::None) => Some(Penalty::None),
            Some(PenaltyArg::Ridge) => Some(Penalty::Ridge { lambda: lambda()? }),
            Some(PenaltyArg::Lasso) => Some(Penalty::Lasso { lambda: lambda()? }),
            Some(PenaltyArg::ElasticNet) => Some(Penalty::ElasticNet {
                lambda: lambda()?,
                mix: self.mix.unwrap_or(0.5),
            }),
        })
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value_t = 1)]
    scenario: u8,
    #[arg(long, default_value_t = 2000)]
    n: usize,
    #[arg(long, default_value_t = 33)]
    seed: u64,
    #[arg(long, value_enum, default_value = "argmax")]
    label_mode: ModeArg,
    #[arg(long, default_value_t = 0.7)]
    beta: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    /// Training dataset CSV.
    #[arg(long)]
    data: PathBuf,
    /// Restrict to the scenario's predictor set (datasets with all 15 covariates).
    #[arg(long)]
    scenario: Option<u8>,
    #[command(flatten)]
    penalty: PenaltyOpts,
    /// Dataset CSV to score; writes `probabilities.csv`.
    #[arg(long)]
    predict: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ThresholdArgs {
    /// Calibration probabilities CSV (`p1..pK`).
    #[arg(long)]
    probs: PathBuf,
    /// CSV with a `label` column aligned with `--probs`.
    #[arg(long)]
    labels: PathBuf,
    /// One value for all classes or one per class, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.1")]
    alpha: Vec<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long)]
    probs: PathBuf,
    /// `thresholds.json` from the thresholds command.
    #[arg(long)]
    thresholds: PathBuf,
    /// Optional true labels; adds `ambiguity.json`.
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Dataset or label CSV holding the true labels (and `time,event` for survival).
    #[arg(long)]
    data: PathBuf,
    /// Label sets CSV; evaluated with the weighted bootstrap.
    #[arg(long, conflicts_with = "predicted")]
    sets: Option<PathBuf>,
    /// Single-label CSV; evaluated as is, plus a bootstrap when `--n-boot` is given.
    #[arg(long)]
    predicted: Option<PathBuf>,
    #[arg(long)]
    n_boot: Option<usize>,
    #[arg(long, default_value_t = 33)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PipelineArgs {
    /// TOML file with run settings; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    scenario: Option<u8>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    n_boot: Option<usize>,
    #[arg(long)]
    n_reps: Option<usize>,
    /// One value for all classes or one per class, comma separated.
    #[arg(long, value_delimiter = ',')]
    alpha: Option<Vec<f64>>,
    /// Comma separated subset of naive, naive_boot, weighted_boot; empty for none.
    #[arg(long)]
    methods: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    label_mode: Option<ModeArg>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    workers: Option<usize>,
    #[command(flatten)]
    penalty: PenaltyOpts,
    /// 1000 repetitions of 500 resamples unless set explicitly.
    #[arg(long)]
    full_scale: bool,
    #[arg(long)]
    out: PathBuf,
}

fn expand_alpha(alpha: &[f64]) -> Result<Vec<f64>> {
    match alpha.len() {
        1 => Ok(vec![alpha[0]; K]),
        K => Ok(alpha.to_vec()),
        n => bail!("--alpha takes 1 or {K} values, got {n}"),
    }
}

impl PipelineArgs {
    fn run_config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
            }
            None => RunConfig::default(),
        };
        if self.full_scale {
            cfg = cfg.full_scale();
        }
        if let Some(s) = self.scenario {
            cfg.scenario = Scenario::new(s)?;
        }
        if let Some(v) = self.n {
            cfg.n = v;
        }
        if let Some(v) = self.n_boot {
            cfg.n_boot = v;
        }
        if let Some(v) = self.n_reps {
            cfg.n_reps = v;
        }
        if let Some(a) = &self.alpha {
            cfg.alpha = expand_alpha(a)?;
        }
        if let Some(m) = &self.methods {
            cfg.methods = m
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(str::parse)
                .collect::<Result<_, _>>()?;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.label_mode {
            cfg.label_mode = v.into();
        }
        if let Some(v) = self.beta {
            cfg.beta = v;
        }
        if let Some(v) = self.workers {
            cfg.threads = Some(v);
        }
        if let Some(p) = self.penalty.resolve()? {
            cfg.penalty = p;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)?).with_context(|| format!("writing {}", path.display()))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn space() -> LabelSpace {
    LabelSpace::numbered(K).expect("3 classes")
}

#[derive(Serialize)]
struct SimulateSidecar<'a> {
    config: &'a SimConfig,
    seed: u64,
    scenario_mask: &'static [usize],
}

fn simulate(a: &SimulateArgs) -> Result<()> {
    let cfg = SimConfig {
        n: a.n,
        scenario: Scenario::new(a.scenario)?,
        label_mode: a.label_mode.into(),
        beta: a.beta,
        ..SimConfig::default()
    };
    let ds = generate_dataset(&cfg, RngSpec::new(a.seed, 0))?;
    create_dir(&a.out)?;
    io::write_dataset(&a.out.join("dataset.csv"), &ds)?;
    write_json(
        &a.out.join("simulate.json"),
        &SimulateSidecar {
            config: &cfg,
            seed: a.seed,
            scenario_mask: cfg.scenario.mask(),
        },
    )
}

fn with_columns(ds: LabeledDataset, scenario: Option<u8>) -> Result<LabeledDataset> {
    match scenario {
        None => Ok(ds),
        Some(s) => {
            let cols = Scenario::new(s)?.columns();
            if ds.features.cols() < 15 {
                bail!("--scenario needs all 15 covariates, dataset has {}", ds.features.cols());
            }
            let x = ds.features.select_columns(&cols);
            Ok(LabeledDataset::new(x, ds.labels, ds.survival)?)
        }
    }
}

fn fit(a: &FitArgs) -> Result<()> {
    let ds = with_columns(io::read_dataset(&a.data, &space())?, a.scenario)?;
    let penalty = a.penalty.resolve()?.unwrap_or(Penalty::None);
    let model = fit_multinomial(&ds, K, penalty, &OptConfig::default())?;
    create_dir(&a.out)?;
    write_json(&a.out.join("model.json"), &model)?;
    if let Some(path) = &a.predict {
        let target = with_columns(io::read_dataset(path, &space())?, a.scenario)?;
        let probs = predict_proba(&model, &target.features)?;
        io::write_probabilities(&a.out.join("probabilities.csv"), &probs)?;
    }
    Ok(())
}

fn thresholds(a: &ThresholdArgs) -> Result<()> {
    let probs = ingest_probabilities(&a.probs, &space())?;
    let labels = io::read_labels(&a.labels, &space())?;
    let t = estimate_thresholds(&probs, &labels, &expand_alpha(&a.alpha)?)?;
    create_dir(&a.out)?;
    write_json(&a.out.join("thresholds.json"), &t)
}

fn classify(a: &ClassifyArgs) -> Result<()> {
    let probs = ingest_probabilities(&a.probs, &space())?;
    let t: ThresholdVector = read_json(&a.thresholds)?;
    let sets = build_label_sets(&probs, &t)?;
    create_dir(&a.out)?;
    io::write_label_sets(&a.out.join("label_sets.csv"), &sets)?;
    io::write_labels(&a.out.join("predicted.csv"), &argmax_label(&probs))?;
    if let Some(path) = &a.labels {
        let labels = io::read_labels(path, &space())?;
        if labels.len() != sets.len() {
            bail!("{} labels for {} probability rows", labels.len(), sets.len());
        }
        write_json(&a.out.join("ambiguity.json"), &ambiguity_profile(&sets, &labels, K))?;
    }
    Ok(())
}

fn evaluate(a: &EvalArgs, survival: bool) -> Result<()> {
    let (truth, sd) = if survival {
        let ds = io::read_dataset(&a.data, &space())?;
        let sd = ds
            .survival
            .context("survival needs `time` and `event` columns in --data")?;
        (ds.labels, Some(sd))
    } else {
        (io::read_labels(&a.data, &space())?, None)
    };
    let rng = RngSpec::new(a.seed, 0);
    let boot = |n_boot: usize| BootstrapConfig {
        n_boot,
        ..BootstrapConfig::default()
    };
    let mut records: Vec<Record> = Vec::new();
    match (&a.sets, &a.predicted) {
        (Some(path), None) => {
            let sets = io::read_label_sets(path, &space())?;
            if sets.len() != truth.len() {
                bail!("{} label sets for {} observations", sets.len(), truth.len());
            }
            let input = BootstrapInput {
                truth: &truth,
                survival: sd.as_ref(),
                k: K,
                labeler: Labeler::WeightedSetSampler { sets: &sets },
            };
            records.extend(bootstrap_records(
                Method::WeightedBoot,
                &input,
                &boot(a.n_boot.unwrap_or(500)),
                rng,
            )?);
        }
        (None, Some(path)) => {
            let predicted = io::read_labels(path, &space())?;
            let sets: Vec<LabelSet> = predicted.iter().map(|&y| LabelSet::singleton(y)).collect();
            records.extend(point_records(Method::Naive, &sets, &predicted, &truth, sd.as_ref(), K)?);
            if let Some(n_boot) = a.n_boot {
                let input = BootstrapInput {
                    truth: &truth,
                    survival: sd.as_ref(),
                    k: K,
                    labeler: Labeler::NaiveArgmax { predicted: &predicted },
                };
                records.extend(bootstrap_records(Method::NaiveBoot, &input, &boot(n_boot), rng)?);
            }
        }
        _ => bail!("pass exactly one of --sets or --predicted"),
    }
    let keep = |r: &Record| {
        if survival {
            r.table == Table::Survival
        } else {
            r.table != Table::Survival
        }
    };
    records.retain(keep);
    create_dir(&a.out)?;
    let name = if survival { "survival.csv" } else { "evaluation.csv" };
    write_records(&a.out.join(name), &records)?;
    Ok(())
}

fn pipeline(a: &PipelineArgs) -> Result<()> {
    let cfg = a.run_config()?;
    let report = run_repetitions(&cfg)?;
    emit_report(&a.out, &report)?;
    fs::write(a.out.join("config.toml"), toml::to_string(&cfg)?)?;
    Ok(())
}

fn reproduce_tables(a: &PipelineArgs) -> Result<()> {
    let base = a.run_config()?;
    create_dir(&a.out)?;
    let mut w = String::from("scenario,table,method,class,statistic,reference,lower,upper,observed,within\n");
    for scenario in Scenario::ALL {
        let cfg = RunConfig {
            scenario,
            ..base.clone()
        };
        let report = run_repetitions(&cfg)?;
        let dir = a.out.join(format!("scenario{}", scenario.id()));
        emit_report(&dir, &report)?;
        fs::write(dir.join("config.toml"), toml::to_string(&cfg)?)?;
        for c in compare_report(&report) {
            let t = c.target;
            w.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                t.scenario,
                t.table.name(),
                t.method.name(),
                t.class.map_or_else(|| "all".to_string(), |c| c.to_string()),
                t.statistic,
                t.reference,
                t.lower,
                t.upper,
                fmt_opt(c.observed),
                c.within
            ));
        }
    }
    fs::write(a.out.join("comparison.csv"), w)?;
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Simulate(a) => simulate(&a),
        Command::Fit(a) => fit(&a),
        Command::Thresholds(a) => thresholds(&a),
        Command::Classify(a) => classify(&a),
        Command::Evaluate(a) => evaluate(&a, false),
        Command::Survival(a) => evaluate(&a, true),
        Command::Pipeline(a) => pipeline(&a),
        Command::ReproduceTables(a) => reproduce_tables(&a),
    }
}
