//! Network assembly: a stack of pyramidal layers, then dense layers, then a
//! softmax head.
//!
//! The last pyramidal output is flattened sub-layer-major, then row-major
//! before entering the first dense layer. If there are no dense layers the
//! flattened pyramid is used as the logits directly.

use serde::{Deserialize, Serialize};

use crate::dense::{dense_backward, dense_forward, DenseCache, DenseLayerSpec, DenseParams};
use crate::error::{Error, Result};
use crate::feature_map::{softmax, softmax_xent, ClassDistribution, FeatureMap};
use crate::pyramidal::{
    layer_backward, pyramidal_forward, LayerCache, PyramidalLayerSpec, PyramidalParams,
};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub input_height: usize,
    pub input_width: usize,
    pub classes: usize,
    pub pyramidal: Vec<PyramidalLayerSpec>,
    pub dense: Vec<DenseLayerSpec>,
}

/// Shapes of every layer, derived from a [`NetworkSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkShapes {
    /// Input shape `(K, H, W)` of each pyramidal layer.
    pub pyramidal_inputs: Vec<(usize, usize, usize)>,
    /// Output shape of each pyramidal layer.
    pub pyramidal_outputs: Vec<(usize, usize, usize)>,
    /// `(units, fan_in)` of each dense layer.
    pub dense: Vec<(usize, usize)>,
    pub logits: usize,
}

impl NetworkSpec {
    /// Chains the layer geometry from the input through every layer. Does
    /// not check the classifier head; see [`NetworkSpec::validate`].
    pub fn shapes(&self) -> Result<NetworkShapes> {
        if self.input_height == 0 || self.input_width == 0 {
            return Err(Error::GeometryMismatch("input size must be positive".into()));
        }
        let mut shape = (1, self.input_height, self.input_width);
        let mut pyramidal_inputs = Vec::with_capacity(self.pyramidal.len());
        let mut pyramidal_outputs = Vec::with_capacity(self.pyramidal.len());
        for (l, spec) in self.pyramidal.iter().enumerate() {
            let (h, w) = spec.output_dims(shape.1, shape.2).map_err(|e| match e {
                Error::GeometryMismatch(m) => Error::GeometryMismatch(format!("pyramidal layer {}: {m}", l + 1)),
                other => other,
            })?;
            pyramidal_inputs.push(shape);
            shape = (spec.sublayers, h, w);
            pyramidal_outputs.push(shape);
        }
        let mut width = shape.0 * shape.1 * shape.2;
        let mut dense = Vec::with_capacity(self.dense.len());
        for (l, spec) in self.dense.iter().enumerate() {
            if spec.units == 0 {
                return Err(Error::GeometryMismatch(format!("dense layer {} has no units", l + 1)));
            }
            dense.push((spec.units, width));
            width = spec.units;
        }
        Ok(NetworkShapes { pyramidal_inputs, pyramidal_outputs, dense, logits: width })
    }

    /// Full validation: geometry plus a head of exactly `classes ≥ 2` logits.
    pub fn validate(&self) -> Result<NetworkShapes> {
        let shapes = self.shapes()?;
        if self.classes < 2 {
            return Err(Error::GeometryMismatch(format!("need at least 2 classes, got {}", self.classes)));
        }
        if shapes.logits != self.classes {
            return Err(Error::GeometryMismatch(format!(
                "network produces {} logits but {} classes are declared",
                shapes.logits, self.classes
            )));
        }
        Ok(shapes)
    }
}

/// All trainable parameters. The same structure holds gradients
/// ([`GradientSet`]) and momentum buffers.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    pub pyramidal: Vec<PyramidalParams>,
    pub dense: Vec<DenseParams>,
}

pub type GradientSet = NetworkParams;

impl NetworkParams {
    pub fn zeros(spec: &NetworkSpec) -> Result<Self> {
        let shapes = spec.shapes()?;
        let pyramidal = spec
            .pyramidal
            .iter()
            .zip(&shapes.pyramidal_inputs)
            .map(|(s, &shape)| PyramidalParams::zeros(s, shape))
            .collect::<Result<_>>()?;
        let dense = shapes.dense.iter().map(|&(units, fan_in)| DenseParams::zeros(units, fan_in)).collect();
        Ok(NetworkParams { pyramidal, dense })
    }

    pub fn zeros_like(&self) -> Self {
        NetworkParams {
            pyramidal: self.pyramidal.iter().map(PyramidalParams::zeros_like).collect(),
            dense: self.dense.iter().map(DenseParams::zeros_like).collect(),
        }
    }

    /// Every tensor in declaration order: for each pyramidal layer its
    /// weights then biases, then the same for each dense layer.
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::with_capacity(2 * (self.pyramidal.len() + self.dense.len()));
        for p in &self.pyramidal {
            out.push(&p.weights);
            out.push(&p.biases);
        }
        for d in &self.dense {
            out.push(&d.weights);
            out.push(&d.biases);
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::with_capacity(2 * (self.pyramidal.len() + self.dense.len()));
        for p in &mut self.pyramidal {
            out.push(&mut p.weights);
            out.push(&mut p.biases);
        }
        for d in &mut self.dense {
            out.push(&mut d.weights);
            out.push(&mut d.biases);
        }
        out
    }

    pub fn len(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// True when both sets have the same layer structure and tensor sizes.
    pub fn congruent(&self, other: &NetworkParams) -> bool {
        let a = self.tensors();
        let b = other.tensors();
        a.len() == b.len() && a.iter().zip(&b).all(|(x, y)| x.len() == y.len())
            && self.pyramidal.iter().zip(&other.pyramidal).all(|(p, q)| {
                p.input_shape == q.input_shape && p.output_shape == q.output_shape
            })
    }

    /// `self += scale · other`
    pub fn add_scaled(&mut self, other: &NetworkParams, scale: f64) -> Result<()> {
        if !self.congruent(other) {
            return Err(Error::ShapeMismatch("parameter sets are not congruent".into()));
        }
        for (dst, src) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (d, &s) in dst.iter_mut().zip(src) {
                *d += scale * s;
            }
        }
        Ok(())
    }

    pub fn scale(&mut self, factor: f64) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|v| *v *= factor);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub spec: NetworkSpec,
    pub params: NetworkParams,
}

impl Network {
    /// A zero-initialised network.
    pub fn zeros(spec: NetworkSpec) -> Result<Self> {
        spec.validate()?;
        let params = NetworkParams::zeros(&spec)?;
        Ok(Network { spec, params })
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    /// Loss for one sample, without keeping caches.
    pub fn loss(&self, image: &FeatureMap, target: usize) -> Result<f64> {
        let pass = network_forward(self, image)?;
        Ok(softmax_xent(&pass.logits, target)?.loss)
    }

    pub fn predict(&self, image: &FeatureMap) -> Result<usize> {
        Ok(network_forward(self, image)?.probs.argmax())
    }
}

/// Everything the backward pass needs from a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    pub pyramidal: Vec<LayerCache>,
    pub dense: Vec<DenseCache>,
    pub logits: Vec<f64>,
    pub probs: ClassDistribution,
}

pub fn network_forward(net: &Network, image: &FeatureMap) -> Result<ForwardPass> {
    let spec = &net.spec;
    if image.shape() != (1, spec.input_height, spec.input_width) {
        return Err(Error::ShapeMismatch(format!(
            "image {:?} does not match network input (1, {}, {})",
            image.shape(),
            spec.input_height,
            spec.input_width
        )));
    }
    if net.params.pyramidal.len() != spec.pyramidal.len() || net.params.dense.len() != spec.dense.len() {
        return Err(Error::ShapeMismatch("parameter layers do not match the network spec".into()));
    }
    let mut pyramidal = Vec::with_capacity(spec.pyramidal.len());
    let mut current = image.clone();
    for (layer, params) in spec.pyramidal.iter().zip(&net.params.pyramidal) {
        let cache = pyramidal_forward(&current, layer, params)?;
        current = cache.output.clone();
        pyramidal.push(cache);
    }
    let mut dense = Vec::with_capacity(spec.dense.len());
    let mut flat = current.into_values();
    for (layer, params) in spec.dense.iter().zip(&net.params.dense) {
        let cache = dense_forward(&flat, params, layer.activation)?;
        flat = cache.output.clone();
        dense.push(cache);
    }
    let probs = softmax(&flat);
    Ok(ForwardPass { pyramidal, dense, logits: flat, probs })
}

/// Loss and gradients for one sample, chaining the softmax cross-entropy
/// gradient back through every dense and pyramidal layer.
pub fn network_backward(net: &Network, pass: &ForwardPass, target: usize) -> Result<(f64, GradientSet)> {
    let spec = &net.spec;
    let head = softmax_xent(&pass.logits, target)?;
    let mut dense_grads = Vec::with_capacity(spec.dense.len());
    // ∂E/∂(output of the current layer)
    let mut upstream = head.grad;
    for ((layer, params), cache) in spec.dense.iter().zip(&net.params.dense).zip(&pass.dense).rev() {
        let delta: Vec<f64> = upstream
            .iter()
            .zip(&cache.pre_activation)
            .map(|(&g, &x)| g * layer.activation.derivative(x))
            .collect();
        let (input_grad, grads) = dense_backward(&delta, cache, params)?;
        dense_grads.push(grads);
        upstream = input_grad;
    }
    dense_grads.reverse();

    let mut pyramidal_grads = Vec::with_capacity(spec.pyramidal.len());
    if let Some(last) = pass.pyramidal.last() {
        let (s, h, w) = last.output.shape();
        let last_spec = spec.pyramidal.last().expect("caches match layers");
        let mut delta = FeatureMap::from_vec(s, h, w, upstream)?;
        for (d, &x) in delta.values_mut().iter_mut().zip(last.pre_activation.values()) {
            *d *= last_spec.activation.derivative(x);
        }
        for l in (0..spec.pyramidal.len()).rev() {
            let (grads, input_grad) =
                layer_backward(&delta, &pass.pyramidal[l], &spec.pyramidal[l], &net.params.pyramidal[l], l > 0)?;
            pyramidal_grads.push(grads);
            if let Some(mut g) = input_grad {
                let prev_pre = &pass.pyramidal[l - 1].pre_activation;
                let prev_kind = spec.pyramidal[l - 1].activation;
                for (d, &x) in g.values_mut().iter_mut().zip(prev_pre.values()) {
                    *d *= prev_kind.derivative(x);
                }
                delta = g;
            }
        }
        pyramidal_grads.reverse();
    }
    Ok((head.loss, NetworkParams { pyramidal: pyramidal_grads, dense: dense_grads }))
}

/// Uniform Glorot initialisation, fully determined by `seed`.
///
/// Weights are drawn from `[−a, a]` with `a = sqrt(6 / (fan_in + fan_out))`.
/// For a pyramidal layer `fan_in = r²·K` (inputs per output neuron) and
/// `fan_out = S · r² · H_out·W_out / (H_in·W_in)`, the mean number of output
/// neurons each input neuron feeds. Dense layers use their input and unit
/// counts. Biases start at zero. Tensors are filled in declaration order
/// from one [`SplitMix64`] stream.
pub fn init_params(spec: &NetworkSpec, seed: u64) -> Result<Network> {
    let mut net = Network::zeros(spec.clone())?;
    let mut rng = SplitMix64::new(seed);
    for (layer, params) in spec.pyramidal.iter().zip(&mut net.params.pyramidal) {
        let (k, h, w) = params.input_shape;
        let (s, oh, ow) = params.output_shape;
        let r2 = (layer.field * layer.field) as f64;
        let fan_in = r2 * k as f64;
        let fan_out = s as f64 * r2 * (oh * ow) as f64 / (h * w) as f64;
        let a = (6.0 / (fan_in + fan_out)).sqrt();
        params.weights.iter_mut().for_each(|v| *v = rng.uniform(-a, a));
    }
    for params in &mut net.params.dense {
        let a = (6.0 / (params.fan_in + params.units) as f64).sqrt();
        params.weights.iter_mut().for_each(|v| *v = rng.uniform(-a, a));
    }
    Ok(net)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerParamCount {
    pub name: String,
    pub weights: usize,
    pub biases: usize,
}

impl LayerParamCount {
    pub fn total(&self) -> usize {
        self.weights + self.biases
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamCount {
    pub layers: Vec<LayerParamCount>,
    pub total: usize,
}

/// Trainable parameters per layer, from the geometry alone.
///
/// A pyramidal layer has `S·K·H_in·W_in` weights plus its biases; a dense
/// layer has `units·fan_in + units`.
pub fn count_params(spec: &NetworkSpec) -> Result<ParamCount> {
    let shapes = spec.shapes()?;
    let mut layers = Vec::new();
    for (l, (layer, (&(k, h, w), &(s, oh, ow)))) in
        spec.pyramidal.iter().zip(shapes.pyramidal_inputs.iter().zip(&shapes.pyramidal_outputs)).enumerate()
    {
        layers.push(LayerParamCount {
            name: format!("pyramidal{}", l + 1),
            weights: s * k * h * w,
            biases: layer.bias.count(s, oh, ow),
        });
    }
    for (l, &(units, fan_in)) in shapes.dense.iter().enumerate() {
        layers.push(LayerParamCount { name: format!("dense{}", l + 1), weights: units * fan_in, biases: units });
    }
    let total = layers.iter().map(LayerParamCount::total).sum();
    Ok(ParamCount { layers, total })
}
