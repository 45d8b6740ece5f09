//! Mini-batch SGD with momentum, early stopping on validation accuracy,
//! evaluation metrics and the finite-difference gradient checker.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feature_map::{argmax, ActivationKind, FeatureMap};
use crate::network::{init_params, network_backward, network_forward, GradientSet, Network, NetworkParams, NetworkSpec};
use crate::precise::reference_loss;
use crate::rng::SplitMix64;

/// A preprocessed input and its class index.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub input: FeatureMap,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without a validation-accuracy improvement before stopping.
    pub patience: usize,
    pub seed: u64,
    /// Hidden-layer activation used where a layer does not name its own.
    pub activation: ActivationKind,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            momentum: 0.9,
            batch_size: 16,
            max_epochs: 300,
            patience: 30,
            seed: 0,
            activation: ActivationKind::HyperbolicTangent,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad("momentum must be in [0, 1)");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if self.patience == 0 {
            return bad("patience must be at least 1");
        }
        Ok(())
    }
}

/// `v ← momentum·v − lr·g; θ ← θ + v`, per scalar.
pub fn sgd_step(
    params: &mut NetworkParams,
    grads: &GradientSet,
    velocity: &mut NetworkParams,
    learning_rate: f64,
    momentum: f64,
) -> Result<()> {
    if !params.congruent(grads) || !params.congruent(velocity) {
        return Err(Error::ShapeMismatch("parameters, gradients and velocity are not congruent".into()));
    }
    for ((theta, g), v) in params.tensors_mut().into_iter().zip(grads.tensors()).zip(velocity.tensors_mut()) {
        for ((t, &gi), vi) in theta.iter_mut().zip(g).zip(v.iter_mut()) {
            *vi = momentum * *vi - learning_rate * gi;
            *t += *vi;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean loss over the epoch's training samples, measured as they were seen.
    pub train_loss: f64,
    /// Accuracy over the epoch's training samples, measured as they were seen.
    pub train_acc: f64,
    pub val_acc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    /// 1-based epoch whose parameters were returned (earliest best
    /// validation accuracy).
    pub best_epoch: usize,
}

impl TrainHistory {
    pub fn best(&self) -> Option<&EpochRecord> {
        self.epochs.iter().find(|e| e.epoch == self.best_epoch)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,train_acc,val_acc\n");
        for e in &self.epochs {
            writeln!(out, "{},{},{},{}", e.epoch, e.train_loss, e.train_acc, e.val_acc).unwrap();
        }
        out
    }
}

fn check_labels(set: &[Sample], classes: usize) -> Result<()> {
    if set.is_empty() {
        return Err(Error::EmptyDataset);
    }
    match set.iter().find(|s| s.label >= classes) {
        Some(s) => Err(Error::LabelOutOfRange { label: s.label, classes }),
        None => Ok(()),
    }
}

/// Loss and gradient averaged over a batch of samples.
pub fn batch_gradient(net: &Network, batch: &[&Sample]) -> Result<(f64, usize, GradientSet)> {
    let mut total = net.params.zeros_like();
    let mut loss = 0.0;
    let mut correct = 0;
    for sample in batch {
        let pass = network_forward(net, &sample.input)?;
        if pass.probs.argmax() == sample.label {
            correct += 1;
        }
        let (l, g) = network_backward(net, &pass, sample.label)?;
        loss += l;
        total.add_scaled(&g, 1.0)?;
    }
    total.scale(1.0 / batch.len() as f64);
    Ok((loss, correct, total))
}

/// Trains a freshly initialised network and returns the parameters from the
/// epoch with the best validation accuracy.
///
/// Initialisation uses `cfg.seed`; epoch shuffling uses a generator derived
/// from the same seed. Training stops after `max_epochs` or after
/// `patience` epochs without a strict improvement.
pub fn train(spec: &NetworkSpec, train_set: &[Sample], val_set: &[Sample], cfg: &TrainConfig) -> Result<(Network, TrainHistory)> {
    let net = init_params(spec, cfg.seed)?;
    train_from(net, train_set, val_set, cfg)
}

pub fn train_from(
    mut net: Network,
    train_set: &[Sample],
    val_set: &[Sample],
    cfg: &TrainConfig,
) -> Result<(Network, TrainHistory)> {
    cfg.validate()?;
    net.spec.validate()?;
    check_labels(train_set, net.spec.classes)?;
    check_labels(val_set, net.spec.classes)?;

    let mut shuffler = SplitMix64::derived(cfg.seed, 1);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut velocity = net.params.zeros_like();
    let mut best = net.clone();
    let mut best_acc = f64::NEG_INFINITY;
    let mut history = TrainHistory { epochs: Vec::new(), best_epoch: 0 };
    let mut stale = 0;

    for epoch in 1..=cfg.max_epochs {
        shuffler.shuffle(&mut order);
        let mut loss_sum = 0.0;
        let mut correct = 0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<&Sample> = chunk.iter().map(|&i| &train_set[i]).collect();
            let (loss, hits, grads) = batch_gradient(&net, &batch)?;
            loss_sum += loss;
            correct += hits;
            sgd_step(&mut net.params, &grads, &mut velocity, cfg.learning_rate, cfg.momentum)?;
        }
        let val_acc = evaluate(&net, val_set)?.accuracy;
        let n = train_set.len() as f64;
        history.epochs.push(EpochRecord { epoch, train_loss: loss_sum / n, train_acc: correct as f64 / n, val_acc });
        if val_acc > best_acc {
            best_acc = val_acc;
            best = net.clone();
            history.best_epoch = epoch;
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                break;
            }
        }
    }
    if history.epochs.is_empty() {
        // max_epochs == 0: the initial parameters are the only snapshot.
        return Ok((net, history));
    }
    Ok((best, history))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// Recognition rate: fraction of correctly classified samples.
    pub accuracy: f64,
    /// `confusion[true][predicted]`
    pub confusion: Vec<Vec<usize>>,
    /// Recall per true class; 0 for classes with no samples.
    pub recall: Vec<f64>,
    pub predictions: Vec<usize>,
}

impl EvalReport {
    pub fn from_predictions(labels: &[usize], predictions: Vec<usize>, classes: usize) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut confusion = vec![vec![0usize; classes]; classes];
        for (&t, &p) in labels.iter().zip(&predictions) {
            if t >= classes {
                return Err(Error::LabelOutOfRange { label: t, classes });
            }
            confusion[t][p] += 1;
        }
        let correct: usize = (0..classes).map(|c| confusion[c][c]).sum();
        let recall = confusion
            .iter()
            .enumerate()
            .map(|(c, row)| {
                let n: usize = row.iter().sum();
                if n == 0 {
                    0.0
                } else {
                    row[c] as f64 / n as f64
                }
            })
            .collect();
        Ok(EvalReport { accuracy: correct as f64 / labels.len() as f64, confusion, recall, predictions })
    }

    pub fn to_text(&self, class_names: &[String]) -> String {
        let mut out = String::new();
        let total: usize = self.confusion.iter().flatten().sum();
        writeln!(out, "samples: {total}").unwrap();
        writeln!(out, "accuracy: {:.2}%", 100.0 * self.accuracy).unwrap();
        writeln!(out, "per-class recall:").unwrap();
        for (c, r) in self.recall.iter().enumerate() {
            let name = class_names.get(c).map(String::as_str).unwrap_or("?");
            writeln!(out, "  {name}: {:.2}%", 100.0 * r).unwrap();
        }
        writeln!(out, "confusion (rows = true, columns = predicted):").unwrap();
        for row in &self.confusion {
            let cells: Vec<String> = row.iter().map(|n| format!("{n:>5}")).collect();
            writeln!(out, "  {}", cells.join("")).unwrap();
        }
        out
    }

    /// `metric,value` rows with full precision, followed by the confusion
    /// matrix as `true,predicted,count` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,value\n");
        writeln!(out, "accuracy,{}", self.accuracy).unwrap();
        for (c, r) in self.recall.iter().enumerate() {
            writeln!(out, "recall_{c},{r}").unwrap();
        }
        out.push_str("true,predicted,count\n");
        for (t, row) in self.confusion.iter().enumerate() {
            for (p, n) in row.iter().enumerate() {
                writeln!(out, "{t},{p},{n}").unwrap();
            }
        }
        out
    }
}

/// Argmax predictions (ties to the lowest class) and the resulting report.
pub fn evaluate(net: &Network, set: &[Sample]) -> Result<EvalReport> {
    check_labels(set, net.spec.classes)?;
    let predictions = set
        .iter()
        .map(|s| network_forward(net, &s.input).map(|p| argmax(&p.logits)))
        .collect::<Result<Vec<_>>>()?;
    let labels: Vec<usize> = set.iter().map(|s| s.label).collect();
    EvalReport::from_predictions(&labels, predictions, net.spec.classes)
}

pub const GRADIENT_CHECK_LIMIT: usize = 50_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientCheckReport {
    pub max_relative_error: f64,
    /// `(tensor index, element index)` of the worst parameter, tensors in
    /// declaration order.
    pub worst: (usize, usize),
    pub checked: usize,
}

/// Maximum relative error between backprop and central differences over
/// every parameter, with `max(|a|, |b|, 1e-8)` as the denominator.
pub fn gradient_check(net: &Network, sample: &Sample, h: f64) -> Result<f64> {
    let pass = network_forward(net, &sample.input)?;
    let (_, analytic) = network_backward(net, &pass, sample.label)?;
    Ok(compare_gradients(net, sample, h, &analytic)?.max_relative_error)
}

/// Compares a supplied gradient against central differences of the loss.
///
/// Losses are evaluated in double-double arithmetic by
/// [`reference_loss`], so the differences are not limited by `f64`
/// roundoff in the loss itself.
pub fn compare_gradients(net: &Network, sample: &Sample, h: f64, analytic: &GradientSet) -> Result<GradientCheckReport> {
    if h.is_nan() || h <= 0.0 {
        return Err(Error::InvalidConfig(format!("finite-difference step must be positive, got {h}")));
    }
    let count = net.param_count();
    if count > GRADIENT_CHECK_LIMIT {
        return Err(Error::TooManyParameters { count, limit: GRADIENT_CHECK_LIMIT });
    }
    if !net.params.congruent(analytic) {
        return Err(Error::ShapeMismatch("analytic gradient is not congruent with the network".into()));
    }
    network_forward(net, &sample.input)?;
    if sample.label >= net.spec.classes {
        return Err(Error::TargetOutOfRange { target: sample.label, classes: net.spec.classes });
    }
    let input = sample.input.values();
    let analytic = analytic.tensors();
    let mut report = GradientCheckReport { max_relative_error: 0.0, worst: (0, 0), checked: 0 };
    let mut flat = 0usize;
    for (t, grad) in analytic.iter().enumerate() {
        for (e, &a) in grad.iter().enumerate() {
            let plus = reference_loss(net, input, sample.label, Some((flat + e, h)));
            let minus = reference_loss(net, input, sample.label, Some((flat + e, -h)));
            let numeric = (plus - minus).to_f64() / (2.0 * h);
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
            if rel.is_nan() || rel > report.max_relative_error {
                report.max_relative_error = rel;
                report.worst = (t, e);
            }
            report.checked += 1;
        }
        flat += grad.len();
    }
    Ok(report)
}
