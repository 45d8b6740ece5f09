//! Fully connected layers used for classification on top of the pyramid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feature_map::ActivationKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DenseLayerSpec {
    pub units: usize,
    pub activation: ActivationKind,
}

impl DenseLayerSpec {
    pub fn new(units: usize, activation: ActivationKind) -> Self {
        DenseLayerSpec { units, activation }
    }
}

/// Row-major `weights[unit][input]` plus one bias per unit.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseParams {
    pub units: usize,
    pub fan_in: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl DenseParams {
    pub fn zeros(units: usize, fan_in: usize) -> Self {
        DenseParams { units, fan_in, weights: vec![0.0; units * fan_in], biases: vec![0.0; units] }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.units, self.fan_in)
    }

    pub fn row(&self, unit: usize) -> &[f64] {
        &self.weights[unit * self.fan_in..(unit + 1) * self.fan_in]
    }

    fn check(&self) -> Result<()> {
        if self.weights.len() != self.units * self.fan_in || self.biases.len() != self.units {
            return Err(Error::ShapeMismatch(format!(
                "dense params hold {} weights and {} biases for {} units x {} inputs",
                self.weights.len(),
                self.biases.len(),
                self.units,
                self.fan_in
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseCache {
    pub input: Vec<f64>,
    pub pre_activation: Vec<f64>,
    pub output: Vec<f64>,
}

pub fn dense_forward(input: &[f64], params: &DenseParams, activation: ActivationKind) -> Result<DenseCache> {
    params.check()?;
    if input.len() != params.fan_in {
        return Err(Error::ShapeMismatch(format!(
            "dense layer expects {} inputs, got {}",
            params.fan_in,
            input.len()
        )));
    }
    let pre: Vec<f64> = (0..params.units)
        .map(|u| params.biases[u] + params.row(u).iter().zip(input).map(|(w, x)| w * x).sum::<f64>())
        .collect();
    let output = pre.iter().map(|&x| activation.apply(x)).collect();
    Ok(DenseCache { input: input.to_vec(), pre_activation: pre, output })
}

/// Backward pass given `delta_out = ∂E/∂pre`. Returns `∂E/∂input` (the
/// caller applies the upstream derivative) and the parameter gradients.
pub fn dense_backward(delta_out: &[f64], cache: &DenseCache, params: &DenseParams) -> Result<(Vec<f64>, DenseParams)> {
    params.check()?;
    if delta_out.len() != params.units || cache.input.len() != params.fan_in {
        return Err(Error::ShapeMismatch(format!(
            "dense backward got {} sensitivities and {} cached inputs for {} units x {} inputs",
            delta_out.len(),
            cache.input.len(),
            params.units,
            params.fan_in
        )));
    }
    let mut grads = params.zeros_like();
    let mut input_grad = vec![0.0; params.fan_in];
    for (u, &d) in delta_out.iter().enumerate() {
        let row = params.row(u);
        let grow = &mut grads.weights[u * params.fan_in..(u + 1) * params.fan_in];
        for ((g, &x), (ig, &w)) in grow.iter_mut().zip(&cache.input).zip(input_grad.iter_mut().zip(row)) {
            *g = d * x;
            *ig += d * w;
        }
        grads.biases[u] = d;
    }
    Ok((input_grad, grads))
}
