//! Helpers shared by the integration tests.
#![allow(dead_code)]

use hpnn::data::{DatasetIndex, GrayImage, SynthConfig};
use hpnn::pyramidal::{BiasScheme, PyramidalLayerSpec, PyramidalParams};
use hpnn::pyramidal::pyramidal_forward;
use hpnn::{init_params, network_forward, ActivationKind, DenseLayerSpec, FeatureMap, Network, NetworkSpec, NetworkParams, SplitMix64};

pub const TANH: ActivationKind = ActivationKind::HyperbolicTangent;

pub fn random_map(rng: &mut SplitMix64, shape: (usize, usize, usize)) -> FeatureMap {
    let (k, h, w) = shape;
    FeatureMap::from_vec(k, h, w, (0..k * h * w).map(|_| rng.uniform(-1.0, 1.0)).collect()).unwrap()
}

pub fn random_pyramidal_params(
    rng: &mut SplitMix64,
    spec: &PyramidalLayerSpec,
    input_shape: (usize, usize, usize),
) -> PyramidalParams {
    let mut p = PyramidalParams::zeros(spec, input_shape).unwrap();
    p.weights.iter_mut().for_each(|w| *w = rng.uniform(-1.0, 1.0));
    p.biases.iter_mut().for_each(|b| *b = rng.uniform(-0.5, 0.5));
    p
}

/// Direct transcription of the layer definition: every output neuron sums
/// `w[s][k][i][j] · y[k][i][j]` over its own field, then adds its bias.
pub fn naive_forward(input: &FeatureMap, spec: &PyramidalLayerSpec, p: &PyramidalParams) -> FeatureMap {
    let (kk, h, w) = input.shape();
    let g = spec.field - spec.overlap;
    let oh = (h - spec.overlap) / g;
    let ow = (w - spec.overlap) / g;
    let mut out = FeatureMap::zeros(spec.sublayers, oh, ow);
    for s in 0..spec.sublayers {
        for u in 0..oh {
            for v in 0..ow {
                let mut acc = match spec.bias {
                    BiasScheme::PerNeuron => p.biases[(s * oh + u) * ow + v],
                    BiasScheme::PerSublayer => p.biases[s],
                };
                for k in 0..kk {
                    for i in u * g..u * g + spec.field {
                        for j in v * g..v * g + spec.field {
                            acc += p.weights[((s * kk + k) * h + i) * w + j] * input.get(k, i, j);
                        }
                    }
                }
                out.set(s, u, v, spec.activation.apply(acc));
            }
        }
    }
    out
}

/// Every `(r, o)` with `0 ≤ o < r ≤ n` that tiles a side of length `n`
/// exactly.
pub fn valid_fields(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for r in 1..=n {
        for o in 0..r {
            if (n - o) % (r - o) == 0 {
                out.push((r, o));
            }
        }
    }
    out
}

/// The network used for gradient checks: 13×13 input, pyramidal S=2
/// (r=3, o=1) then S=3 (r=2, o=0), dense 10 and 4, tanh hidden units.
pub fn gradcheck_spec() -> NetworkSpec {
    NetworkSpec {
        input_height: 13,
        input_width: 13,
        classes: 4,
        pyramidal: vec![PyramidalLayerSpec::new(2, 3, 1, TANH), PyramidalLayerSpec::new(3, 2, 0, TANH)],
        dense: vec![DenseLayerSpec::new(10, TANH), DenseLayerSpec::new(4, ActivationKind::Identity)],
    }
}

/// A random valid network spec with at most three pyramidal layers.
pub fn random_spec(rng: &mut SplitMix64) -> NetworkSpec {
    let acts = ActivationKind::ALL;
    loop {
        let side = 4 + rng.below(13);
        let (mut h, mut w) = (side, 4 + rng.below(13));
        let (input_height, input_width) = (h, w);
        let mut pyramidal = Vec::new();
        for _ in 0..1 + rng.below(3) {
            let common: Vec<(usize, usize)> =
                valid_fields(h).into_iter().filter(|f| valid_fields(w).contains(f) && f.0 > 1).collect();
            if common.is_empty() {
                break;
            }
            let (r, o) = common[rng.below(common.len())];
            let bias = if rng.below(2) == 0 { BiasScheme::PerNeuron } else { BiasScheme::PerSublayer };
            let act = acts[rng.below(acts.len())];
            pyramidal.push(PyramidalLayerSpec::new(1 + rng.below(4), r, o, act).with_bias(bias));
            h = (h - o) / (r - o);
            w = (w - o) / (r - o);
        }
        if pyramidal.is_empty() {
            continue;
        }
        let classes = 2 + rng.below(5);
        let mut dense = Vec::new();
        if rng.below(2) == 0 {
            dense.push(DenseLayerSpec::new(1 + rng.below(12), TANH));
        }
        dense.push(DenseLayerSpec::new(classes, ActivationKind::Identity));
        return NetworkSpec { input_height, input_width, classes, pyramidal, dense };
    }
}

pub fn random_gray(rng: &mut SplitMix64, h: usize, w: usize) -> GrayImage {
    GrayImage::new(h, w, (0..h * w).map(|_| rng.below(256) as f64).collect()).unwrap()
}

/// The desk-scale synthetic corpus used by the learnability checks.
pub fn desk_corpus() -> SynthConfig {
    SynthConfig { classes: 4, subjects: 40, per_subject: 6, size: 32, seed: 0 }
}

pub fn count_lines_with_label(index_csv: &str, label: &str) -> usize {
    index_csv.lines().skip(1).filter(|l| l.rsplit(',').next() == Some(label)).count()
}

pub fn class_names(index: &DatasetIndex) -> Vec<String> {
    index.class_names.clone()
}

/// Runs the optimised layer against the nested-loop oracle over every
/// geometry with H, W in 4..=8, K, S in 1..=3 and every valid (r, o).
/// Returns the number of geometries and the largest absolute difference.
pub fn forward_sweep() -> (usize, f64) {
    let mut rng = SplitMix64::new(11);
    let mut cases = 0;
    let mut worst: f64 = 0.0;
    for h in 4..=8 {
        for w in 4..=8 {
            let fields: Vec<_> = valid_fields(h).into_iter().filter(|f| valid_fields(w).contains(f)).collect();
            for &(r, o) in &fields {
                for k in 1..=3 {
                    for s in 1..=3 {
                        let act = ActivationKind::ALL[cases % 4];
                        let bias = if cases % 2 == 0 { BiasScheme::PerNeuron } else { BiasScheme::PerSublayer };
                        let spec = PyramidalLayerSpec::new(s, r, o, act).with_bias(bias);
                        let params = random_pyramidal_params(&mut rng, &spec, (k, h, w));
                        let input = random_map(&mut rng, (k, h, w));
                        let fast = pyramidal_forward(&input, &spec, &params).unwrap().output;
                        let slow = naive_forward(&input, &spec, &params);
                        assert_eq!(fast.shape(), slow.shape());
                        for (a, b) in fast.values().iter().zip(slow.values()) {
                            worst = worst.max((a - b).abs());
                        }
                        cases += 1;
                    }
                }
            }
        }
    }
    (cases, worst)
}

pub fn pyranet_spec() -> NetworkSpec {
    let t = ActivationKind::HyperbolicTangent;
    NetworkSpec {
        input_height: 12,
        input_width: 12,
        classes: 3,
        pyramidal: vec![PyramidalLayerSpec::new(1, 4, 2, t), PyramidalLayerSpec::new(1, 3, 1, t)],
        dense: vec![DenseLayerSpec::new(3, ActivationKind::Identity)],
    }
}

pub fn pyranet_input() -> FeatureMap {
    let mut rng = SplitMix64::new(77);
    random_map(&mut rng, (1, 12, 12))
}

pub const PYRANET_SEED: u64 = 2024;

/// Second pyramidal layer outputs (2×2), logits (3) and probabilities (3)
/// of the S=1 network for [`pyranet_input`], as `f64` bit patterns.
pub const PYRANET_GOLDEN: [u64; 10] = [
    0xbfb6b87ee5ae5aeb,
    0xbfed448fcc0f8060,
    0x3feaeb6ecf99cb1a,
    0xbfd38cb89e7e877b,
    0xbff3abc9d77d692a,
    0x3fbfebc4213da6d4,
    0x3fdb1b16cd367e0e,
    0x3fb95b5fe8e2498a,
    0x3fd88deac7682dc8,
    0x3fe08d9e9f2f9feb,
];

pub fn pyranet_outputs() -> Vec<f64> {
    let net = init_params(&pyranet_spec(), PYRANET_SEED).unwrap();
    let pass = network_forward(&net, &pyranet_input()).unwrap();
    pass.pyramidal[1].output.values().iter().chain(&pass.logits).chain(pass.probs.probs()).copied().collect()
}

/// Single-weight-per-input reference: with one sub-layer, neuron `(u, v)`
/// computes `f(b(u, v) + Σ w(i, j) · y(i, j))` over its field, where
/// `w(i, j)` is the one weight leaving input `(i, j)`.
pub fn pyranet_reference(net: &Network, image: &FeatureMap) -> Vec<f64> {
    let mut y: Vec<Vec<f64>> = (0..image.height()).map(|i| (0..image.width()).map(|j| image.get(0, i, j)).collect()).collect();
    for (layer, p) in net.spec.pyramidal.iter().zip(&net.params.pyramidal) {
        assert_eq!(layer.sublayers, 1);
        let (h, w) = (y.len(), y[0].len());
        let g = layer.field - layer.overlap;
        let (oh, ow) = ((h - layer.overlap) / g, (w - layer.overlap) / g);
        let weight = |i: usize, j: usize| p.weights[i * w + j];
        y = (0..oh)
            .map(|u| {
                (0..ow)
                    .map(|v| {
                        let mut z = p.biases[if p.biases.len() == 1 { 0 } else { u * ow + v }];
                        for i in u * g..u * g + layer.field {
                            for j in v * g..v * g + layer.field {
                                z += weight(i, j) * y[i][j];
                            }
                        }
                        layer.activation.apply(z)
                    })
                    .collect()
            })
            .collect();
    }
    let mut flat: Vec<f64> = y.concat();
    let mut out = flat.clone();
    for (layer, p) in net.spec.dense.iter().zip(&net.params.dense) {
        flat = (0..p.units)
            .map(|u| layer.activation.apply(p.biases[u] + (0..p.fan_in).map(|x| p.weights[u * p.fan_in + x] * flat[x]).sum::<f64>()))
            .collect();
    }
    out.extend(&flat);
    let m = flat.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = flat.iter().map(|v| (v - m).exp()).sum();
    out.extend(flat.iter().map(|v| (v - m).exp() / z));
    out
}

/// Parameter count obtained by allocating every tensor and measuring it.
pub fn allocated_params(spec: &NetworkSpec) -> usize {
    NetworkParams::zeros(spec).unwrap().tensors().iter().map(|t| t.len()).sum()
}

/// Input 6×6, pyramidal S=2 (r=2, o=0), dense 4, dense 2.
pub fn hand_count_spec() -> NetworkSpec {
    NetworkSpec {
        input_height: 6,
        input_width: 6,
        classes: 2,
        pyramidal: vec![PyramidalLayerSpec::new(2, 2, 0, TANH)],
        dense: vec![DenseLayerSpec::new(4, TANH), DenseLayerSpec::new(2, ActivationKind::Identity)],
    }
}

/// Window mean over an explicitly edge-padded copy of the image, with the
/// window of `(r, c)` starting at `r − size/2`.
pub fn padded_mean_oracle(img: &GrayImage, size: usize) -> Vec<f64> {
    let (h, w) = (img.height(), img.width());
    let pad = size;
    let (ph, pw) = (h + 2 * pad, w + 2 * pad);
    let mut padded = vec![0.0; ph * pw];
    for pr in 0..ph {
        for pc in 0..pw {
            let r = (pr as isize - pad as isize).clamp(0, h as isize - 1) as usize;
            let c = (pc as isize - pad as isize).clamp(0, w as isize - 1) as usize;
            padded[pr * pw + pc] = img.get(r, c);
        }
    }
    let mut out = Vec::with_capacity(h * w);
    for r in 0..h {
        for c in 0..w {
            let (r0, c0) = (r + pad - size / 2, c + pad - size / 2);
            let mut sum = 0.0;
            for i in r0..r0 + size {
                for j in c0..c0 + size {
                    sum += padded[i * pw + j];
                }
            }
            out.push(sum / (size * size) as f64);
        }
    }
    out
}

/// Compares `mean_filter` with [`padded_mean_oracle`] on 100 random
/// integer-valued images and every odd size the guard allows. Returns the
/// number of (image, size) pairs checked and how many differed.
pub fn mean_filter_oracle_sweep() -> (usize, usize) {
    let mut rng = SplitMix64::new(100);
    let (mut checked, mut differing) = (0, 0);
    for _ in 0..100 {
        let (h, w) = (3 + rng.below(14), 3 + rng.below(14));
        let img = random_gray(&mut rng, h, w);
        for size in (1..=2 * h.min(w)).step_by(2) {
            let got = hpnn::data::mean_filter(&img, size).unwrap();
            if got.pixels() != padded_mean_oracle(&img, size).as_slice() {
                differing += 1;
            }
            checked += 1;
        }
    }
    (checked, differing)
}
