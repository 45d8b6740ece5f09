//! Feature maps, pointwise activations and the softmax cross-entropy head.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Activations of one layer: `sublayers` grids of `height × width` values.
///
/// Storage is sub-layer major, then row-major within a sub-layer. The same
/// order is used when a map is flattened for a dense layer.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    sublayers: usize,
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl FeatureMap {
    pub fn zeros(sublayers: usize, height: usize, width: usize) -> Self {
        assert!(sublayers >= 1 && height >= 1 && width >= 1, "empty feature map");
        FeatureMap { sublayers, height, width, values: vec![0.0; sublayers * height * width] }
    }

    pub fn filled(sublayers: usize, height: usize, width: usize, value: f64) -> Self {
        let mut map = Self::zeros(sublayers, height, width);
        map.values.fill(value);
        map
    }

    pub fn from_vec(sublayers: usize, height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if sublayers == 0 || height == 0 || width == 0 {
            return Err(Error::ShapeMismatch(format!(
                "feature map dimensions must be positive, got {sublayers}x{height}x{width}"
            )));
        }
        if values.len() != sublayers * height * width {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {sublayers}x{height}x{width} feature map",
                values.len()
            )));
        }
        Ok(FeatureMap { sublayers, height, width, values })
    }

    pub fn sublayers(&self) -> usize {
        self.sublayers
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// `(sublayers, height, width)`
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.sublayers, self.height, self.width)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn index(&self, s: usize, row: usize, col: usize) -> usize {
        debug_assert!(s < self.sublayers && row < self.height && col < self.width);
        (s * self.height + row) * self.width + col
    }

    #[inline]
    pub fn get(&self, s: usize, row: usize, col: usize) -> f64 {
        self.values[self.index(s, row, col)]
    }

    #[inline]
    pub fn set(&mut self, s: usize, row: usize, col: usize, value: f64) {
        let idx = self.index(s, row, col);
        self.values[idx] = value;
    }

    pub fn sublayer(&self, s: usize) -> &[f64] {
        let n = self.height * self.width;
        &self.values[s * n..(s + 1) * n]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> FeatureMap {
        FeatureMap {
            sublayers: self.sublayers,
            height: self.height,
            width: self.width,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// The nonlinearity `f` of a layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum ActivationKind {
    #[default]
    #[serde(rename = "tanh", alias = "hyperbolic_tangent")]
    HyperbolicTangent,
    #[serde(rename = "logistic", alias = "sigmoid")]
    Logistic,
    #[serde(rename = "relu", alias = "rectifier")]
    Rectifier,
    #[serde(rename = "identity", alias = "linear")]
    Identity,
}

impl ActivationKind {
    pub const ALL: [ActivationKind; 4] = [
        ActivationKind::HyperbolicTangent,
        ActivationKind::Logistic,
        ActivationKind::Rectifier,
        ActivationKind::Identity,
    ];

    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            ActivationKind::HyperbolicTangent => x.tanh(),
            ActivationKind::Logistic => logistic(x),
            ActivationKind::Rectifier => x.max(0.0),
            ActivationKind::Identity => x,
        }
    }

    /// `f'(x)`. The rectifier's subgradient at exactly 0 is taken to be 0.
    #[inline]
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            ActivationKind::HyperbolicTangent => {
                let t = x.tanh();
                1.0 - t * t
            }
            ActivationKind::Logistic => {
                let s = logistic(x);
                s * (1.0 - s)
            }
            ActivationKind::Rectifier => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            ActivationKind::Identity => 1.0,
        }
    }

    /// Stable numeric code used by the model container.
    pub fn code(self) -> u32 {
        match self {
            ActivationKind::HyperbolicTangent => 0,
            ActivationKind::Logistic => 1,
            ActivationKind::Rectifier => 2,
            ActivationKind::Identity => 3,
        }
    }

    pub fn from_code(code: u32) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.code() == code)
    }

    pub fn name(self) -> &'static str {
        match self {
            ActivationKind::HyperbolicTangent => "tanh",
            ActivationKind::Logistic => "logistic",
            ActivationKind::Rectifier => "relu",
            ActivationKind::Identity => "identity",
        }
    }
}

#[inline]
fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn apply_activation(pre: &FeatureMap, kind: ActivationKind) -> FeatureMap {
    pre.map(|x| kind.apply(x))
}

pub fn activation_derivative(pre: &FeatureMap, kind: ActivationKind) -> FeatureMap {
    pre.map(|x| kind.derivative(x))
}

/// A probability vector over classes.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassDistribution(Vec<f64>);

impl ClassDistribution {
    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn classes(&self) -> usize {
        self.0.len()
    }

    /// Index of the largest probability; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        argmax(&self.0)
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Max-subtracted softmax.
pub fn softmax(logits: &[f64]) -> ClassDistribution {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    ClassDistribution(exps.into_iter().map(|e| e / total).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxXent {
    pub loss: f64,
    pub probs: ClassDistribution,
    /// `probs − onehot(target)`
    pub grad: Vec<f64>,
}

const LOG_FLOOR: f64 = 1e-300;

pub fn softmax_xent(logits: &[f64], target: usize) -> Result<SoftmaxXent> {
    if logits.len() < 2 {
        return Err(Error::ShapeMismatch(format!(
            "softmax head needs at least 2 classes, got {}",
            logits.len()
        )));
    }
    if target >= logits.len() {
        return Err(Error::TargetOutOfRange { target, classes: logits.len() });
    }
    let probs = softmax(logits);
    let loss = -probs.0[target].max(LOG_FLOOR).ln();
    let mut grad = probs.0.clone();
    grad[target] -= 1.0;
    Ok(SoftmaxXent { loss, probs, grad })
}
