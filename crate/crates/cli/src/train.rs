use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use rand::seq::SliceRandom;
use serde::Serialize;

use negativity::dataset::{load_dataset, to_samples};
use negativity::experiments::{mean, median, rmse, std_dev, Histogram};
use negativity::mlnet::{input_gradient, save_model, train, NetworkModel, NetworkSpec, TrainParams, TrainingSample};
use negativity::Seed;

use crate::config::ConfigFile;
use crate::{Common, Outcome};

pub const KEYS: &[&str] = &[
    "dataset",
    "epochs",
    "batch_size",
    "learning_rate",
    "final_learning_rate",
    "ema_decay",
    "standardize",
    "bins",
    "metrics",
];

/// Training-set size below which the run proceeds with a warning.
const SMALL_DATA: usize = 1000;

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Corpus written by gen-dataset.
    #[arg(long, env = "NEGEST_DATASET")]
    dataset: Option<PathBuf>,
    #[arg(long, env = "NEGEST_EPOCHS")]
    epochs: Option<usize>,
    #[arg(long, env = "NEGEST_BATCH_SIZE")]
    batch_size: Option<usize>,
    #[arg(long, env = "NEGEST_LEARNING_RATE")]
    learning_rate: Option<f64>,
    #[arg(long, env = "NEGEST_FINAL_LEARNING_RATE")]
    final_learning_rate: Option<f64>,
    #[arg(long, env = "NEGEST_EMA_DECAY")]
    ema_decay: Option<f64>,
    /// Standardize the input features (stored in the model).
    #[arg(long, env = "NEGEST_STANDARDIZE", num_args = 0..=1, default_missing_value = "true")]
    standardize: Option<bool>,
    /// Bins of the test-error histogram.
    #[arg(long, env = "NEGEST_BINS")]
    bins: Option<usize>,
    /// Metrics JSON path (default: the model path with `.metrics.json`).
    #[arg(long, env = "NEGEST_METRICS")]
    metrics: Option<PathBuf>,
}

/// Held-out performance of a trained model.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrainMetrics {
    pub m_copies: usize,
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub epochs: usize,
    pub final_train_loss: f64,
    pub final_validation_loss: f64,
    /// Statistics of `E^ML − E` on the test half.
    pub test_error_mean: f64,
    pub test_error_std: f64,
    pub test_rmse: f64,
    /// Median `|∂E/∂μ_m|` over the test half, `m = 2..=M`.
    pub median_sensitivity: Vec<f64>,
    pub histogram_edges: Vec<f64>,
    pub histogram_counts: Vec<u64>,
    pub train_loss: Vec<f64>,
    pub validation_loss: Vec<f64>,
}

/// Seeded 50/50 split into (train, test).
pub fn split_half(samples: Vec<TrainingSample>, seed: Seed) -> (Vec<TrainingSample>, Vec<TrainingSample>) {
    let mut samples = samples;
    samples.shuffle(&mut seed.split_label("holdout").rng());
    let test = samples.split_off(samples.len() / 2);
    (samples, test)
}

/// Test-half statistics of a trained model.
pub fn evaluate(model: &NetworkModel, test: &[TrainingSample], bins: usize) -> Result<(Vec<f64>, Vec<f64>, Histogram)> {
    let mut errors = Vec::with_capacity(test.len());
    let mut sens: Vec<Vec<f64>> = vec![Vec::with_capacity(test.len()); model.spec.max_order() - 1];
    for s in test {
        errors.push(model.forward(&s.features)? - s.label);
        let g = input_gradient(model, &s.features)?;
        for (k, v) in g.gradient[2..].iter().enumerate() {
            sens[k].push(v.abs());
        }
    }
    let hist = Histogram::auto(&errors, bins)?;
    Ok((errors, sens.iter().map(|v| median(v)).collect(), hist))
}

pub fn run(common: &Common, a: TrainArgs, cfg: &ConfigFile) -> Result<Outcome> {
    let dataset: PathBuf = cfg.pick(a.dataset, "dataset")?.context("--dataset is required")?;
    let model_path: PathBuf = cfg.pick(common.model.clone(), "model")?.context("--model (output path) is required")?.into();
    let metrics_path = match cfg.pick(a.metrics, "metrics")? {
        Some(p) => p,
        None => cfg.pick(common.out.clone(), "out")?.unwrap_or_else(|| model_path.with_extension("metrics.json")),
    };
    let order: usize = cfg.get_or(common.m_copies.clone(), "m_copies", "3".into())?.parse().context("m-copies")?;
    let seed = Seed(cfg.get_or(common.seed, "seed", 0)?);
    let d = TrainParams::default();
    let mut params = TrainParams {
        epochs: cfg.get_or(a.epochs, "epochs", d.epochs)?,
        batch_size: cfg.get_or(a.batch_size, "batch_size", d.batch_size)?,
        learning_rate: cfg.get_or(a.learning_rate, "learning_rate", d.learning_rate)?,
        final_learning_rate: cfg.get_or(a.final_learning_rate, "final_learning_rate", d.final_learning_rate)?,
        ema_decay: cfg.get_or(a.ema_decay, "ema_decay", d.ema_decay)?,
        standardize: cfg.get_or(a.standardize, "standardize", false)?,
        seed: seed.split_label("train"),
        ..d
    };
    let bins = cfg.get_or(a.bins, "bins", 50)?;

    let rows = load_dataset(&dataset).with_context(|| format!("reading dataset {}", dataset.display()))?;
    if rows.len() < 2 {
        bail!("dataset {} has {} rows; at least 2 are needed for a train/test split", dataset.display(), rows.len());
    }
    let available = rows[0].max_order();
    if order > available {
        bail!("dataset stores moments up to M = {available}, but M = {order} was requested");
    }
    let (train_set, test_set) = split_half(to_samples(&rows, order)?, seed);
    if train_set.len() < SMALL_DATA {
        log::warn!("small dataset: training on {} samples (fewer than {SMALL_DATA})", train_set.len());
        params.min_samples = 1;
    }
    let spec = NetworkSpec::reference(order)?;
    log::info!("training M = {order} network ({} parameters) on {} samples", spec.parameter_count(), train_set.len());
    let (model, history) = train(&train_set, &spec, &params)?;
    save_model(&model, &model_path).with_context(|| format!("writing {}", model_path.display()))?;

    let (errors, median_sensitivity, hist) = evaluate(&model, &test_set, bins)?;
    let zeros = vec![0.0; errors.len()];
    let metrics = TrainMetrics {
        m_copies: order,
        seed: seed.0,
        n_train: train_set.len(),
        n_test: test_set.len(),
        epochs: params.epochs,
        final_train_loss: model.meta.final_train_loss,
        final_validation_loss: model.meta.final_validation_loss,
        test_error_mean: mean(&errors),
        test_error_std: std_dev(&errors),
        test_rmse: rmse(&errors, &zeros),
        median_sensitivity,
        histogram_edges: hist.edges,
        histogram_counts: hist.counts,
        train_loss: history.train_loss,
        validation_loss: history.validation_loss,
    };
    std::fs::write(&metrics_path, serde_json::to_string_pretty(&metrics)?)
        .with_context(|| format!("writing {}", metrics_path.display()))?;
    log::info!(
        "test error std {:.4} (mean {:+.4}) over {} held-out samples; model {}, metrics {}",
        metrics.test_error_std,
        metrics.test_error_mean,
        metrics.n_test,
        model_path.display(),
        metrics_path.display()
    );
    println!("test_error_std {:.6}", metrics.test_error_std);
    Ok(Outcome::Passed)
}
