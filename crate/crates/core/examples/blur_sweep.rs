//! Trains one model and measures its accuracy on unseen subjects as the
//! test images are blurred with growing mean filters.
//!
//!     cargo run --release --example blur_sweep

use hpnn::data::{render_synthetic, subject_folds, Dataset, SynthConfig};
use hpnn::experiment::{blur_sweep, SweepTarget, DEFAULT_BLUR_SIZES};
use hpnn::{train, ActivationKind, DenseLayerSpec, NetworkSpec, PyramidalLayerSpec, TrainConfig};

fn main() -> hpnn::Result<()> {
    let corpus = SynthConfig { classes: 4, subjects: 40, per_subject: 6, size: 48, seed: 3 };
    let (index, images) = render_synthetic(&corpus)?;
    let dir = std::env::temp_dir().join("hpnn-blur-sweep");
    hpnn::data::generate_synthetic(&corpus, &dir)?;
    let data = Dataset::load(dir.join("index.csv"), 32, 32)?;
    assert_eq!(data.len(), images.len());

    let plan = subject_folds(&index, 10)?;
    let roles = plan.trial(0);
    let train_set = data.samples(&data.records_in_folds(&plan, &roles.train), None)?;
    let val_set = data.samples(&data.records_in_folds(&plan, &[roles.validation]), None)?;
    let t = ActivationKind::HyperbolicTangent;
    let spec = NetworkSpec {
        input_height: 32,
        input_width: 32,
        classes: 4,
        pyramidal: vec![PyramidalLayerSpec::new(2, 4, 0, t), PyramidalLayerSpec::new(4, 2, 0, t)],
        dense: vec![DenseLayerSpec::new(16, t), DenseLayerSpec::new(4, ActivationKind::Identity)],
    };
    let cfg = TrainConfig { max_epochs: 60, patience: 15, ..TrainConfig::default() };
    let (model, history) = train(&spec, &train_set, &val_set, &cfg)?;
    println!("trained {} epochs (best {})", history.epochs.len(), history.best_epoch);

    let target = SweepTarget { model, positions: data.records_in_folds(&plan, &[roles.test]) };
    let mut sizes = vec![1];
    sizes.extend(DEFAULT_BLUR_SIZES);
    for row in blur_sweep(&data, &[target], &sizes)? {
        println!("filter {:>2}: {:6.2}%", row.filter_size, 100.0 * row.mean_acc);
    }
    Ok(())
}
