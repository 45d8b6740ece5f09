//! A single pyramidal layer by hand: output geometry, weight sharing over
//! overlapping fields, and the backward pass.
//!
//!     cargo run --release --example pyramidal_layer

use hpnn::pyramidal::{covering_outputs, field_span, pyramidal_forward, weight_gradients};
use hpnn::{output_grid_shape, ActivationKind, FeatureMap, PyramidalLayerSpec, PyramidalParams};

fn main() -> hpnn::Result<()> {
    let (r, o) = (3, 1);
    for n in [7, 9, 12] {
        match output_grid_shape(n, r, o) {
            Ok(out) => println!("{n} inputs, r={r}, o={o} -> {out} outputs"),
            Err(e) => println!("{n} inputs, r={r}, o={o} -> {e}"),
        }
    }
    for u in 0..3 {
        println!("output {u} reads inputs {:?}", field_span(u, r, o));
    }
    for i in 0..7 {
        println!("input {i} feeds outputs {:?}", covering_outputs(i, r, o, 3));
    }

    // Two sub-layers over a 7×7 input: each sub-layer owns one weight per
    // input pixel, shared by every output whose field covers that pixel.
    let spec = PyramidalLayerSpec::new(2, r, o, ActivationKind::Identity);
    let mut params = PyramidalParams::zeros(&spec, (1, 7, 7))?;
    println!("weights: {} (2 sub-layers x 49 inputs), biases: {}", params.weights.len(), params.biases.len());
    for i in 0..7 {
        for j in 0..7 {
            let idx = params.weight_index(0, 0, i, j);
            params.weights[idx] = 1.0;
            let idx = params.weight_index(1, 0, i, j);
            params.weights[idx] = if i == 3 { 1.0 } else { 0.0 };
        }
    }
    let input = FeatureMap::filled(1, 7, 7, 1.0);
    let cache = pyramidal_forward(&input, &spec, &params)?;
    for s in 0..2 {
        println!("sub-layer {s} output: {:?}", cache.output.sublayer(s));
    }

    // An error of 1 on the centre output of sub-layer 0 reaches the 9 inputs
    // of its field; the pixels on field borders are shared with neighbours.
    let mut delta = FeatureMap::zeros(2, 3, 3);
    delta.set(0, 1, 1, 1.0);
    let grads = weight_gradients(&delta, &cache, &spec, &params)?;
    for i in 0..7 {
        let row: Vec<f64> = (0..7).map(|j| grads.weight(0, 0, i, j)).collect();
        println!("  dE/dw row {i}: {row:?}");
    }
    Ok(())
}
