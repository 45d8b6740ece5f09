//! Subject-independent 10-fold cross-validation on a generated corpus,
//! comparing an HPNN with its single-sub-layer counterpart.
//!
//!     cargo run --release --example synthetic_cross_validation

use hpnn::data::{generate_synthetic, Dataset, SynthConfig};
use hpnn::experiment::{format_mean_std, run_cv, CvOptions, ExperimentConfig};
use hpnn::{ActivationKind, DenseLayerSpec, NetworkSpec, PyramidalLayerSpec, TrainConfig};

fn spec(sublayers: [usize; 3]) -> NetworkSpec {
    let t = ActivationKind::HyperbolicTangent;
    NetworkSpec {
        input_height: 32,
        input_width: 32,
        classes: 4,
        pyramidal: vec![
            PyramidalLayerSpec::new(sublayers[0], 4, 0, t),
            PyramidalLayerSpec::new(sublayers[1], 2, 0, t),
            PyramidalLayerSpec::new(sublayers[2], 4, 0, t),
        ],
        dense: vec![DenseLayerSpec::new(16, t), DenseLayerSpec::new(4, ActivationKind::Identity)],
    }
}

fn main() -> hpnn::Result<()> {
    let dir = std::env::temp_dir().join("hpnn-synthetic-cv");
    let corpus = SynthConfig { classes: 4, subjects: 40, per_subject: 6, size: 32, seed: 0 };
    generate_synthetic(&corpus, &dir)?;
    let data = Dataset::load(dir.join("index.csv"), 32, 32)?;
    println!("{} images of {} subjects in {}", data.len(), data.index.subject_counts().len(), dir.display());

    let train = TrainConfig { max_epochs: 60, patience: 15, ..TrainConfig::default() };
    for (name, sub) in [("HPNN S=(2,4,4)", [2, 4, 4]), ("PyraNet S=(1,1,1)", [1, 1, 1])] {
        let cfg = ExperimentConfig::from_spec(&spec(sub), train.clone());
        let outcome = run_cv(&cfg, &data, &CvOptions::default())?;
        for t in &outcome.trials {
            println!(
                "  {name} trial {}: test fold {}, {} epochs, test {:.2}%",
                t.trial,
                t.test_fold,
                t.history.epochs.len(),
                100.0 * t.test_acc
            );
        }
        println!("{name}: {}", format_mean_std(&outcome.test_accuracies()));
    }
    Ok(())
}
