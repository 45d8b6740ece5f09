//! Backpropagation against central differences on a few seeded networks.
//!
//!     cargo run --release --example gradient_check

use hpnn::cli::gradcheck_sample;
use hpnn::trainer::compare_gradients;
use hpnn::{init_params, network_backward, network_forward, ActivationKind, DenseLayerSpec, NetworkSpec, PyramidalLayerSpec};

fn main() -> hpnn::Result<()> {
    let t = ActivationKind::HyperbolicTangent;
    let spec = NetworkSpec {
        input_height: 13,
        input_width: 13,
        classes: 4,
        pyramidal: vec![PyramidalLayerSpec::new(2, 3, 1, t), PyramidalLayerSpec::new(3, 2, 0, t)],
        dense: vec![DenseLayerSpec::new(10, t), DenseLayerSpec::new(4, ActivationKind::Identity)],
    };
    let names = ["pyramidal1.w", "pyramidal1.b", "pyramidal2.w", "pyramidal2.b", "dense1.w", "dense1.b", "dense2.w", "dense2.b"];
    for seed in 0..5 {
        let net = init_params(&spec, seed)?;
        let sample = gradcheck_sample(&net, seed);
        let pass = network_forward(&net, &sample.input)?;
        let (loss, grads) = network_backward(&net, &pass, sample.label)?;
        let report = compare_gradients(&net, &sample, 1e-5, &grads)?;
        println!(
            "seed {seed}: loss {loss:.6}, {} parameters, max relative error {:.2e} at {}[{}]",
            report.checked, report.max_relative_error, names[report.worst.0], report.worst.1
        );
    }
    Ok(())
}
