//! Experiment configuration and the evaluation protocols: subject-independent
//! cross-validation (optionally with half the training subjects) and blur
//! sweeps.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{reduce_training_folds, subject_folds, Dataset, FoldPlan};
use crate::dense::DenseLayerSpec;
use crate::error::{Error, Result};
use crate::feature_map::ActivationKind;
use crate::network::{Network, NetworkSpec};
use crate::pyramidal::{BiasScheme, PyramidalLayerSpec};
use crate::serialize::save_model;
use crate::trainer::{evaluate, train, TrainConfig, TrainHistory};

/// Blur sizes used when none are given: 3 to 15 in steps of 3.
pub const DEFAULT_BLUR_SIZES: [usize; 5] = [3, 6, 9, 12, 15];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PyramidalConfig {
    pub sublayers: usize,
    pub field: usize,
    #[serde(default)]
    pub overlap: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub activation: Option<ActivationKind>,
    #[serde(default)]
    pub bias: BiasScheme,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DenseConfig {
    pub units: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub activation: Option<ActivationKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub input_height: usize,
    pub input_width: usize,
    pub classes: usize,
    pub pyramidal: Vec<PyramidalConfig>,
    #[serde(default)]
    pub dense: Vec<DenseConfig>,
}

/// One JSON document describing an experiment.
///
/// Layers without an explicit activation use `train.activation`, except
/// the final dense layer, which defaults to identity so that it emits raw
/// logits for the softmax head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub network: NetworkConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises") + "\n"
    }

    /// Loads and validates a config file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg = Self::from_json(&text).map_err(|source| Error::Json { path: path.to_path_buf(), source })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        self.network_spec().validate()?;
        Ok(())
    }

    pub fn network_spec(&self) -> NetworkSpec {
        let n = &self.network;
        let hidden = self.train.activation;
        let pyramidal = n
            .pyramidal
            .iter()
            .map(|p| PyramidalLayerSpec {
                sublayers: p.sublayers,
                field: p.field,
                overlap: p.overlap,
                activation: p.activation.unwrap_or(hidden),
                bias: p.bias,
            })
            .collect();
        let last = n.dense.len().saturating_sub(1);
        let dense = n
            .dense
            .iter()
            .enumerate()
            .map(|(i, d)| {
                let default = if i == last { ActivationKind::Identity } else { hidden };
                DenseLayerSpec::new(d.units, d.activation.unwrap_or(default))
            })
            .collect();
        NetworkSpec { input_height: n.input_height, input_width: n.input_width, classes: n.classes, pyramidal, dense }
    }

    /// Builds a config from an explicit spec, pinning every activation.
    pub fn from_spec(spec: &NetworkSpec, train: TrainConfig) -> Self {
        ExperimentConfig {
            network: NetworkConfig {
                input_height: spec.input_height,
                input_width: spec.input_width,
                classes: spec.classes,
                pyramidal: spec
                    .pyramidal
                    .iter()
                    .map(|p| PyramidalConfig {
                        sublayers: p.sublayers,
                        field: p.field,
                        overlap: p.overlap,
                        activation: Some(p.activation),
                        bias: p.bias,
                    })
                    .collect(),
                dense: spec.dense.iter().map(|d| DenseConfig { units: d.units, activation: Some(d.activation) }).collect(),
            },
            train,
            index: None,
            output_dir: None,
        }
    }
}

/// Mean and sample standard deviation (`n − 1` denominator; 0 for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Accuracies as percentages with the standard deviation in parentheses,
/// e.g. `58.07 (1.55)`.
pub fn format_mean_std(accuracies: &[f64]) -> String {
    let (mean, std) = mean_std(accuracies);
    format!("{:.2} ({:.2})", 100.0 * mean, 100.0 * std)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub trial: usize,
    pub seed: u64,
    pub test_fold: usize,
    pub validation_fold: usize,
    pub train_folds: Vec<usize>,
    pub train_acc: f64,
    pub val_acc: f64,
    pub test_acc: f64,
    pub history: TrainHistory,
}

#[derive(Debug, Clone)]
pub struct CvOutcome {
    pub plan: FoldPlan,
    pub trials: Vec<TrialResult>,
    pub models: Vec<Network>,
}

impl CvOutcome {
    pub fn test_accuracies(&self) -> Vec<f64> {
        self.trials.iter().map(|t| t.test_acc).collect()
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from("trial,test_acc\n");
        for t in &self.trials {
            writeln!(out, "{},{}", t.trial, t.test_acc).unwrap();
        }
        out
    }
}

#[derive(Debug, Clone, Default)]
pub struct CvOptions {
    pub half_subjects: bool,
    /// Run only these trials; all folds when `None`.
    pub trials: Option<Vec<usize>>,
    pub n_folds: Option<usize>,
}

pub fn model_file_name(trial: usize) -> String {
    format!("trial_{trial:02}.hpnn")
}

/// Trains and evaluates one trial per fold. Trial `t` tests on fold `t`,
/// validates on fold `t + 1`, trains on the rest (or on 4 of them with
/// `half_subjects`) and uses seed `cfg.train.seed + t`.
pub fn run_cv(cfg: &ExperimentConfig, data: &Dataset, opts: &CvOptions) -> Result<CvOutcome> {
    cfg.validate()?;
    let spec = cfg.network_spec();
    if data.index.classes() != spec.classes {
        return Err(Error::InvalidConfig(format!(
            "index declares {} classes but the network has {}",
            data.index.classes(),
            spec.classes
        )));
    }
    let n_folds = opts.n_folds.unwrap_or(crate::data::folds::DEFAULT_FOLDS);
    let plan = subject_folds(&data.index, n_folds)?;
    let trials: Vec<usize> = opts.trials.clone().unwrap_or_else(|| (0..n_folds).collect());
    let mut results = Vec::with_capacity(trials.len());
    let mut models = Vec::with_capacity(trials.len());
    for t in trials {
        let roles = plan.trial(t);
        let seed = cfg.train.seed.wrapping_add(t as u64);
        let train_folds =
            if opts.half_subjects { reduce_training_folds(&roles.train, seed)? } else { roles.train.clone() };
        let train_set = data.samples(&data.records_in_folds(&plan, &train_folds), None)?;
        let val_set = data.samples(&data.records_in_folds(&plan, &[roles.validation]), None)?;
        let test_set = data.samples(&data.records_in_folds(&plan, &[roles.test]), None)?;
        let train_cfg = TrainConfig { seed, ..cfg.train.clone() };
        let (net, history) = train(&spec, &train_set, &val_set, &train_cfg)?;
        let result = TrialResult {
            trial: t,
            seed,
            test_fold: roles.test,
            validation_fold: roles.validation,
            train_folds,
            train_acc: evaluate(&net, &train_set)?.accuracy,
            val_acc: history.best().map_or(f64::NAN, |b| b.val_acc),
            test_acc: evaluate(&net, &test_set)?.accuracy,
            history,
        };
        results.push(result);
        models.push(net);
    }
    Ok(CvOutcome { plan, trials: results, models })
}

/// Writes `fold_plan.csv`, `summary.csv`, `config.json` and per-trial
/// models and histories into `dir`.
pub fn write_cv_outputs(cfg: &ExperimentConfig, outcome: &CvOutcome, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write = |name: &str, contents: &[u8]| {
        let path = dir.join(name);
        std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))
    };
    write("fold_plan.csv", outcome.plan.to_csv().as_bytes())?;
    write("summary.csv", outcome.summary_csv().as_bytes())?;
    write("config.json", cfg.to_json().as_bytes())?;
    for (t, net) in outcome.trials.iter().zip(&outcome.models) {
        save_model(net, dir.join(model_file_name(t.trial)))?;
        write(&format!("trial_{:02}_history.csv", t.trial), t.history.to_csv().as_bytes())?;
    }
    Ok(())
}

/// A trained model and the record positions it should be tested on.
#[derive(Debug, Clone)]
pub struct SweepTarget {
    pub model: Network,
    pub positions: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlurRow {
    pub filter_size: usize,
    pub accuracies: Vec<f64>,
    pub mean_acc: f64,
    pub std_acc: f64,
}

/// Accuracy of every target on box-blurred test images, per filter size.
/// Blur is applied after resizing to the network input.
pub fn blur_sweep(data: &Dataset, targets: &[SweepTarget], sizes: &[usize]) -> Result<Vec<BlurRow>> {
    if targets.is_empty() {
        return Err(Error::EmptyDataset);
    }
    sizes
        .iter()
        .map(|&size| {
            let accuracies = targets
                .iter()
                .map(|t| {
                    let set = data.samples(&t.positions, Some(size))?;
                    Ok(evaluate(&t.model, &set)?.accuracy)
                })
                .collect::<Result<Vec<_>>>()?;
            let (mean_acc, std_acc) = mean_std(&accuracies);
            Ok(BlurRow { filter_size: size, accuracies, mean_acc, std_acc })
        })
        .collect()
}

pub fn blur_csv(rows: &[BlurRow]) -> String {
    let mut out = String::from("filter_size,mean_acc,std_acc\n");
    for r in rows {
        writeln!(out, "{},{},{}", r.filter_size, r.mean_acc, r.std_acc).unwrap();
    }
    out
}
