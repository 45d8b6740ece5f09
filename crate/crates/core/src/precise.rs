//! Double-double reference evaluation of the loss.
//!
//! Central differences of an `f64` loss bottom out around `1e-11` absolute
//! (a few ulps of the loss divided by `2h`), which swamps gradient
//! components smaller than about `1e-5`. The gradient checker therefore
//! evaluates `E(θ ± h)` here, in roughly 106-bit arithmetic, with a
//! straightforward nested-loop forward pass that shares no code with
//! [`crate::network::network_forward`].

use std::cmp::Ordering;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::feature_map::ActivationKind;
use crate::network::Network;

/// An unevaluated sum `hi + lo` with `|lo| ≤ ulp(hi)/2`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

const LN2: Dd = Dd { hi: std::f64::consts::LN_2, lo: 2.319_046_813_846_299_6e-17 };

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    pub fn new(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    fn scale_pow2(self, k: i32) -> Self {
        let f = 2f64.powi(k);
        Dd { hi: self.hi * f, lo: self.lo * f }
    }

    /// `e^x − 1`, accurate near zero.
    pub fn exp_m1(self) -> Self {
        if self.hi.abs() > 0.5 {
            return self.exp() - Dd::ONE;
        }
        const HALVINGS: i32 = 10;
        let r = self.scale_pow2(-HALVINGS);
        // Taylor series of e^r − 1, |r| < 5e-4.
        let mut term = r;
        let mut sum = r;
        for n in 2..=12 {
            term = term * r / Dd::new(n as f64);
            sum = sum + term;
        }
        // e^{2r} − 1 = s·(s + 2)
        for _ in 0..HALVINGS {
            sum = sum * (sum + Dd::new(2.0));
        }
        sum
    }

    pub fn exp(self) -> Self {
        if self.hi > 709.0 {
            return Dd::new(f64::INFINITY);
        }
        if self.hi < -745.0 {
            return Dd::ZERO;
        }
        let k = (self.hi / LN2.hi).round();
        let r = self - LN2 * Dd::new(k);
        (r.exp_m1() + Dd::ONE).scale_pow2(k as i32)
    }

    pub fn ln(self) -> Self {
        assert!(self.hi > 0.0, "ln of non-positive value");
        // Newton on exp(y) = x: y ← y + x·e^{−y} − 1
        let mut y = Dd::new(self.hi.ln());
        for _ in 0..2 {
            y = y + self * (-y).exp() - Dd::ONE;
        }
        y
    }

    pub fn tanh(self) -> Self {
        if self.hi.abs() > 40.0 {
            return Dd::new(self.hi.signum());
        }
        // tanh x = (e^{2x} − 1) / (e^{2x} + 1)
        let m = (self + self).exp_m1();
        m / (m + Dd::new(2.0))
    }

    pub fn activate(self, kind: ActivationKind) -> Self {
        match kind {
            ActivationKind::HyperbolicTangent => self.tanh(),
            ActivationKind::Logistic => Dd::ONE / (Dd::ONE + (-self).exp()),
            ActivationKind::Rectifier => {
                if self.hi > 0.0 {
                    self
                } else {
                    Dd::ZERO
                }
            }
            ActivationKind::Identity => self,
        }
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, b: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, b: Dd) -> Dd {
        self + (-b)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, b: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, b: Dd) -> Dd {
        let q1 = self.hi / b.hi;
        let r = self - b * Dd::new(q1);
        let q2 = r.hi / b.hi;
        let r = r - b * Dd::new(q2);
        let q3 = r.hi / b.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo } + Dd::new(q3)
    }
}

impl PartialOrd for Dd {
    fn partial_cmp(&self, other: &Dd) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi) {
            Some(Ordering::Equal) => self.lo.partial_cmp(&other.lo),
            ord => ord,
        }
    }
}

/// Cross-entropy loss of `net` on one input, with parameter number
/// `perturb.0` (flat index over all tensors in declaration order) shifted
/// by exactly `perturb.1`.
pub fn reference_loss(net: &Network, input: &[f64], target: usize, perturb: Option<(usize, f64)>) -> Dd {
    let mut flat_offset = 0usize;
    let param = |value: f64, offset: usize| -> Dd {
        match perturb {
            Some((idx, h)) if idx == offset => Dd::new(value) + Dd::new(h),
            _ => Dd::new(value),
        }
    };

    let spec = &net.spec;
    let (mut k_in, mut h_in, mut w_in) = (1usize, spec.input_height, spec.input_width);
    let mut act: Vec<Dd> = input.iter().map(|&x| Dd::new(x)).collect();

    for (layer, p) in spec.pyramidal.iter().zip(&net.params.pyramidal) {
        let stride = layer.field - layer.overlap;
        let h_out = (h_in - layer.overlap) / stride;
        let w_out = (w_in - layer.overlap) / stride;
        let s_out = layer.sublayers;
        let w_base = flat_offset;
        let b_base = w_base + p.weights.len();
        let mut next = vec![Dd::ZERO; s_out * h_out * w_out];
        for s in 0..s_out {
            for u in 0..h_out {
                for v in 0..w_out {
                    let b_idx = p.bias_index(s, u, v);
                    let mut acc = param(p.biases[b_idx], b_base + b_idx);
                    for k in 0..k_in {
                        for i in u * stride..u * stride + layer.field {
                            for j in v * stride..v * stride + layer.field {
                                let w_idx = ((s * k_in + k) * h_in + i) * w_in + j;
                                acc = acc + param(p.weights[w_idx], w_base + w_idx) * act[(k * h_in + i) * w_in + j];
                            }
                        }
                    }
                    next[(s * h_out + u) * w_out + v] = acc.activate(layer.activation);
                }
            }
        }
        flat_offset = b_base + p.biases.len();
        act = next;
        (k_in, h_in, w_in) = (s_out, h_out, w_out);
    }

    for (layer, p) in spec.dense.iter().zip(&net.params.dense) {
        let w_base = flat_offset;
        let b_base = w_base + p.weights.len();
        let next = (0..p.units)
            .map(|u| {
                let mut acc = param(p.biases[u], b_base + u);
                for (x, a) in act.iter().enumerate() {
                    let w_idx = u * p.fan_in + x;
                    acc = acc + param(p.weights[w_idx], w_base + w_idx) * *a;
                }
                acc.activate(layer.activation)
            })
            .collect();
        flat_offset = b_base + p.biases.len();
        act = next;
    }

    // E = log Σ e^{z} − z_target, with the max subtracted first.
    let max = act.iter().copied().fold(Dd::new(f64::NEG_INFINITY), |m, z| if z > m { z } else { m });
    let mut total = Dd::ZERO;
    for &z in &act {
        total = total + (z - max).exp();
    }
    max + total.ln() - act[target]
}
