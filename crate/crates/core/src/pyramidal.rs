//! Sub-layered pyramidal layers.
//!
//! A layer with field size `r` and overlap `o` places output neuron `u` over
//! input rows `u·g ..= u·g + r − 1` where `g = r − o` is the stride (columns
//! likewise). Every output sub-layer sees every input sub-layer. The weight
//! tensor has one entry per input neuron per output sub-layer,
//! `w[s][k][i][j]`, shared by all output neurons of sub-layer `s` whose field
//! contains `(i, j)`.
//!
//! No padding is ever applied: a geometry where the fields do not tile the
//! input exactly is rejected with [`Error::GeometryMismatch`].

use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feature_map::{ActivationKind, FeatureMap};

/// Output size along one axis, or `GeometryMismatch` if the fields do not
/// tile `in_dim` exactly.
pub fn output_grid_shape(in_dim: usize, field: usize, overlap: usize) -> Result<usize> {
    if field == 0 || field > in_dim {
        return Err(Error::GeometryMismatch(format!(
            "receptive field {field} does not fit an input of size {in_dim}"
        )));
    }
    if overlap >= field {
        return Err(Error::GeometryMismatch(format!(
            "overlap {overlap} must be smaller than the receptive field {field}"
        )));
    }
    let stride = field - overlap;
    if (in_dim - overlap) % stride != 0 {
        return Err(Error::GeometryMismatch(format!(
            "input size {in_dim} is not tiled by field {field} with overlap {overlap} \
             ({} mod {stride} != 0)",
            in_dim - overlap
        )));
    }
    Ok((in_dim - overlap) / stride)
}

/// Input indices covered by output neuron `u`: `i_min(u) ..= i_max(u)`.
#[inline]
pub fn field_span(u: usize, field: usize, overlap: usize) -> RangeInclusive<usize> {
    let start = u * (field - overlap);
    start..=start + field - 1
}

/// Output neurons whose field covers input index `i`: `u_min(i) ..= u_max(i)`.
///
/// The range is empty when no output covers `i`, which cannot happen for a
/// geometry accepted by [`output_grid_shape`].
#[inline]
pub fn covering_outputs(i: usize, field: usize, overlap: usize, out_dim: usize) -> RangeInclusive<usize> {
    let stride = field - overlap;
    let lo = if i + 1 < field { 0 } else { (i + 1 - field).div_ceil(stride) };
    let hi = (i / stride).min(out_dim.saturating_sub(1));
    lo..=hi
}

/// How biases are attached to a pyramidal layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BiasScheme {
    /// One bias per output neuron `(s, u, v)`.
    #[default]
    PerNeuron,
    /// One scalar bias per output sub-layer.
    PerSublayer,
}

impl BiasScheme {
    pub fn code(self) -> u32 {
        match self {
            BiasScheme::PerNeuron => 0,
            BiasScheme::PerSublayer => 1,
        }
    }

    pub fn from_code(code: u32) -> Option<Self> {
        match code {
            0 => Some(BiasScheme::PerNeuron),
            1 => Some(BiasScheme::PerSublayer),
            _ => None,
        }
    }

    pub fn count(self, sublayers: usize, out_h: usize, out_w: usize) -> usize {
        match self {
            BiasScheme::PerNeuron => sublayers * out_h * out_w,
            BiasScheme::PerSublayer => sublayers,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PyramidalLayerSpec {
    pub sublayers: usize,
    pub field: usize,
    pub overlap: usize,
    pub activation: ActivationKind,
    #[serde(default)]
    pub bias: BiasScheme,
}

impl PyramidalLayerSpec {
    pub fn new(sublayers: usize, field: usize, overlap: usize, activation: ActivationKind) -> Self {
        PyramidalLayerSpec { sublayers, field, overlap, activation, bias: BiasScheme::PerNeuron }
    }

    pub fn with_bias(mut self, bias: BiasScheme) -> Self {
        self.bias = bias;
        self
    }

    pub fn stride(&self) -> usize {
        self.field - self.overlap
    }

    /// Output `(height, width)` for an input of `in_h × in_w`.
    pub fn output_dims(&self, in_h: usize, in_w: usize) -> Result<(usize, usize)> {
        if self.sublayers == 0 {
            return Err(Error::GeometryMismatch("a pyramidal layer needs at least one sub-layer".into()));
        }
        Ok((
            output_grid_shape(in_h, self.field, self.overlap)?,
            output_grid_shape(in_w, self.field, self.overlap)?,
        ))
    }
}

/// Weights `w[s][k][i][j]` and biases of one pyramidal layer.
///
/// Also used as the gradient container for the same layer.
#[derive(Debug, Clone, PartialEq)]
pub struct PyramidalParams {
    /// `(K, H_in, W_in)`
    pub input_shape: (usize, usize, usize),
    /// `(S, H_out, W_out)`
    pub output_shape: (usize, usize, usize),
    pub bias_scheme: BiasScheme,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl PyramidalParams {
    pub fn zeros(spec: &PyramidalLayerSpec, input_shape: (usize, usize, usize)) -> Result<Self> {
        let (k, h, w) = input_shape;
        let (oh, ow) = spec.output_dims(h, w)?;
        let s = spec.sublayers;
        Ok(PyramidalParams {
            input_shape,
            output_shape: (s, oh, ow),
            bias_scheme: spec.bias,
            weights: vec![0.0; s * k * h * w],
            biases: vec![0.0; spec.bias.count(s, oh, ow)],
        })
    }

    pub fn zeros_like(&self) -> Self {
        PyramidalParams {
            weights: vec![0.0; self.weights.len()],
            biases: vec![0.0; self.biases.len()],
            ..self.clone()
        }
    }

    #[inline]
    pub fn weight_index(&self, s: usize, k: usize, i: usize, j: usize) -> usize {
        let (kk, h, w) = self.input_shape;
        ((s * kk + k) * h + i) * w + j
    }

    #[inline]
    pub fn weight(&self, s: usize, k: usize, i: usize, j: usize) -> f64 {
        self.weights[self.weight_index(s, k, i, j)]
    }

    #[inline]
    pub fn bias_index(&self, s: usize, u: usize, v: usize) -> usize {
        match self.bias_scheme {
            BiasScheme::PerNeuron => {
                let (_, oh, ow) = self.output_shape;
                (s * oh + u) * ow + v
            }
            BiasScheme::PerSublayer => s,
        }
    }

    #[inline]
    pub fn bias(&self, s: usize, u: usize, v: usize) -> f64 {
        self.biases[self.bias_index(s, u, v)]
    }

    fn check(&self, spec: &PyramidalLayerSpec, input_shape: (usize, usize, usize)) -> Result<()> {
        let expected = PyramidalParams::zeros(spec, input_shape)?;
        if self.input_shape != expected.input_shape
            || self.output_shape != expected.output_shape
            || self.bias_scheme != expected.bias_scheme
            || self.weights.len() != expected.weights.len()
            || self.biases.len() != expected.biases.len()
        {
            return Err(Error::ShapeMismatch(format!(
                "pyramidal params {:?}->{:?} do not match input {:?} with layer {:?}",
                self.input_shape, self.output_shape, input_shape, spec
            )));
        }
        Ok(())
    }
}

/// Values kept from the forward pass of one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerCache {
    pub input: FeatureMap,
    pub pre_activation: FeatureMap,
    pub output: FeatureMap,
}

fn check_delta(delta_out: &FeatureMap, params: &PyramidalParams) -> Result<()> {
    if delta_out.shape() != params.output_shape {
        return Err(Error::ShapeMismatch(format!(
            "sensitivity map {:?} does not match layer output {:?}",
            delta_out.shape(),
            params.output_shape
        )));
    }
    Ok(())
}

pub fn pyramidal_forward(
    input: &FeatureMap,
    spec: &PyramidalLayerSpec,
    params: &PyramidalParams,
) -> Result<LayerCache> {
    params.check(spec, input.shape())?;
    let (kk, h, w) = input.shape();
    let (ss, oh, ow) = params.output_shape;
    let (r, o) = (spec.field, spec.overlap);

    // Per output sub-layer, the weighted input summed over input sub-layers.
    // Each output neuron then adds up its own field of this plane.
    let mut plane = vec![0.0; h * w];
    let mut pre = FeatureMap::zeros(ss, oh, ow);
    for s in 0..ss {
        plane.fill(0.0);
        for k in 0..kk {
            let x = input.sublayer(k);
            let base = params.weight_index(s, k, 0, 0);
            let wk = &params.weights[base..base + h * w];
            for ((p, &wv), &xv) in plane.iter_mut().zip(wk).zip(x) {
                *p += wv * xv;
            }
        }
        for u in 0..oh {
            let rows = field_span(u, r, o);
            for v in 0..ow {
                let cols = field_span(v, r, o);
                let mut acc = 0.0;
                for i in rows.clone() {
                    let row = &plane[i * w..(i + 1) * w];
                    acc += row[cols.clone()].iter().sum::<f64>();
                }
                pre.set(s, u, v, params.bias(s, u, v) + acc);
            }
        }
    }
    let output = pre.map(|x| spec.activation.apply(x));
    Ok(LayerCache { input: input.clone(), pre_activation: pre, output })
}

/// `C[s][i][j] = Σ δ_out(s, u, v)` over every output neuron `(u, v)` whose
/// field covers `(i, j)`.
fn coverage_sums(delta_out: &FeatureMap, spec: &PyramidalLayerSpec, in_h: usize, in_w: usize) -> FeatureMap {
    let (ss, oh, ow) = delta_out.shape();
    let (r, o) = (spec.field, spec.overlap);
    let row_cover: Vec<_> = (0..in_h).map(|i| covering_outputs(i, r, o, oh)).collect();
    let col_cover: Vec<_> = (0..in_w).map(|j| covering_outputs(j, r, o, ow)).collect();
    let mut sums = FeatureMap::zeros(ss, in_h, in_w);
    for s in 0..ss {
        let d = delta_out.sublayer(s);
        for (i, us) in row_cover.iter().enumerate() {
            for (j, vs) in col_cover.iter().enumerate() {
                let mut acc = 0.0;
                for u in us.clone() {
                    for v in vs.clone() {
                        acc += d[u * ow + v];
                    }
                }
                sums.set(s, i, j, acc);
            }
        }
    }
    sums
}

/// `∂E/∂y_in(k,i,j) = Σ_s w[s][k][i][j] · C[s][i][j]`: the error arriving at
/// each input neuron before the upstream derivative is applied.
fn input_gradient_from_sums(sums: &FeatureMap, params: &PyramidalParams) -> FeatureMap {
    let (kk, h, w) = params.input_shape;
    let ss = params.output_shape.0;
    let mut grad = FeatureMap::zeros(kk, h, w);
    for k in 0..kk {
        let g = &mut grad.values_mut()[k * h * w..(k + 1) * h * w];
        for s in 0..ss {
            let base = params.weight_index(s, k, 0, 0);
            let wk = &params.weights[base..base + h * w];
            for ((gv, &wv), &cv) in g.iter_mut().zip(wk).zip(sums.sublayer(s)) {
                *gv += wv * cv;
            }
        }
    }
    grad
}

/// Gradient of the loss with respect to this layer's input activations.
pub fn input_gradient(
    delta_out: &FeatureMap,
    spec: &PyramidalLayerSpec,
    params: &PyramidalParams,
) -> Result<FeatureMap> {
    check_delta(delta_out, params)?;
    let (_, h, w) = params.input_shape;
    let sums = coverage_sums(delta_out, spec, h, w);
    Ok(input_gradient_from_sums(&sums, params))
}

/// Error sensitivities of the previous layer:
/// `δ_in(k,i,j) = f'(x_prev(k,i,j)) · Σ_s w[s][k][i][j] · Σ_{(u,v) covering (i,j)} δ_out(s,u,v)`.
///
/// `upstream_pre` is the pre-activation of the layer feeding this one and
/// `upstream_activation` its nonlinearity.
pub fn backprop_sensitivity(
    delta_out: &FeatureMap,
    upstream_pre: &FeatureMap,
    upstream_activation: ActivationKind,
    spec: &PyramidalLayerSpec,
    params: &PyramidalParams,
) -> Result<FeatureMap> {
    if upstream_pre.shape() != params.input_shape {
        return Err(Error::ShapeMismatch(format!(
            "upstream pre-activation {:?} does not match layer input {:?}",
            upstream_pre.shape(),
            params.input_shape
        )));
    }
    let mut grad = input_gradient(delta_out, spec, params)?;
    for (g, &x) in grad.values_mut().iter_mut().zip(upstream_pre.values()) {
        *g *= upstream_activation.derivative(x);
    }
    Ok(grad)
}

/// `∂E/∂w[s][k][i][j] = y_in(k,i,j) · C[s][i][j]`; bias gradients are the
/// output sensitivities (summed per sub-layer for [`BiasScheme::PerSublayer`]).
pub fn weight_gradients(
    delta_out: &FeatureMap,
    cache: &LayerCache,
    spec: &PyramidalLayerSpec,
    params: &PyramidalParams,
) -> Result<PyramidalParams> {
    check_delta(delta_out, params)?;
    params.check(spec, cache.input.shape())?;
    let (_, h, w) = params.input_shape;
    let sums = coverage_sums(delta_out, spec, h, w);
    Ok(gradients_from_sums(delta_out, &sums, &cache.input, params))
}

fn gradients_from_sums(
    delta_out: &FeatureMap,
    sums: &FeatureMap,
    input: &FeatureMap,
    params: &PyramidalParams,
) -> PyramidalParams {
    let (kk, h, w) = params.input_shape;
    let (ss, oh, ow) = params.output_shape;
    let mut grads = params.zeros_like();
    for s in 0..ss {
        for k in 0..kk {
            let base = params.weight_index(s, k, 0, 0);
            let gw = &mut grads.weights[base..base + h * w];
            for ((g, &x), &c) in gw.iter_mut().zip(input.sublayer(k)).zip(sums.sublayer(s)) {
                *g = x * c;
            }
        }
        for u in 0..oh {
            for v in 0..ow {
                let idx = grads.bias_index(s, u, v);
                grads.biases[idx] += delta_out.get(s, u, v);
            }
        }
    }
    grads
}

/// Weight gradients and `∂E/∂y_in` in one pass over the coverage sums.
pub(crate) fn layer_backward(
    delta_out: &FeatureMap,
    cache: &LayerCache,
    spec: &PyramidalLayerSpec,
    params: &PyramidalParams,
    want_input_grad: bool,
) -> Result<(PyramidalParams, Option<FeatureMap>)> {
    check_delta(delta_out, params)?;
    let (_, h, w) = params.input_shape;
    let sums = coverage_sums(delta_out, spec, h, w);
    let grads = gradients_from_sums(delta_out, &sums, &cache.input, params);
    let input_grad = want_input_grad.then(|| input_gradient_from_sums(&sums, params));
    Ok((grads, input_grad))
}
