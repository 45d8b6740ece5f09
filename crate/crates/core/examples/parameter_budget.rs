//! Parameter budget of a 96×96 HPNN with 4, 8 and 8 sub-layers and dense
//! layers of 40 and 8 units, searched over every field size / overlap per
//! layer and both bias schemes.
//!
//! The receptive fields of the published architecture are unknown, so this
//! lists the geometries whose totals land closest to a target count.
//!
//!     cargo run --release --example parameter_budget -- [TARGET]

use hpnn::{count_params, ActivationKind, BiasScheme, DenseLayerSpec, NetworkSpec, PyramidalLayerSpec};

fn fields(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (2..=n.min(12)).flat_map(move |r| (0..r).map(move |o| (r, o))).filter(move |&(r, o)| (n - o) % (r - o) == 0)
}

fn main() {
    let target: usize = std::env::args().nth(1).map(|s| s.parse().expect("target count")).unwrap_or(113_520);
    let t = ActivationKind::HyperbolicTangent;
    let mut found = Vec::new();
    for bias in [BiasScheme::PerNeuron, BiasScheme::PerSublayer] {
        for (r1, o1) in fields(96) {
            let h1 = (96 - o1) / (r1 - o1);
            for (r2, o2) in fields(h1) {
                let h2 = (h1 - o2) / (r2 - o2);
                for (r3, o3) in fields(h2) {
                    let spec = NetworkSpec {
                        input_height: 96,
                        input_width: 96,
                        classes: 8,
                        pyramidal: vec![
                            PyramidalLayerSpec::new(4, r1, o1, t).with_bias(bias),
                            PyramidalLayerSpec::new(8, r2, o2, t).with_bias(bias),
                            PyramidalLayerSpec::new(8, r3, o3, t).with_bias(bias),
                        ],
                        dense: vec![DenseLayerSpec::new(40, t), DenseLayerSpec::new(8, ActivationKind::Identity)],
                    };
                    let total = count_params(&spec).expect("valid geometry").total;
                    found.push((total.abs_diff(target), total, spec));
                }
            }
        }
    }
    found.sort_by_key(|f| (f.0, f.1));
    println!("{} geometries; closest to {target}:", found.len());
    println!("{:>9} {:>7}  bias          layers (r, o) -> grid", "total", "diff");
    for (diff, total, spec) in found.iter().take(10) {
        let shapes = spec.shapes().expect("valid");
        let layers: Vec<String> = spec
            .pyramidal
            .iter()
            .zip(&shapes.pyramidal_outputs)
            .map(|(p, out)| format!("({},{})->{}", p.field, p.overlap, out.1))
            .collect();
        println!("{total:>9} {diff:>7}  {:<12}  {}", format!("{:?}", spec.pyramidal[0].bias), layers.join("  "));
    }

    let best = &found[0].2;
    println!("\nper-layer breakdown of the closest geometry:");
    for layer in count_params(best).expect("valid").layers {
        println!("  {:<11} {:>7} weights {:>6} biases", layer.name, layer.weights, layer.biases);
    }
}
