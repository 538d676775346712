//! The answer policy: a two-layer tanh MLP over feature vectors producing a
//! distribution over the four answer slots.

use super::graph::{Graph, Gradients, NodeId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub const N_ANSWERS: usize = 4;

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("invalid distribution: {0}")]
    Domain(String),
}

/// Flat parameter block for the MLP, laid out as
/// `[w1 (hidden x input, row-major), b1 (hidden), w2 (4 x hidden), b2 (4)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    pub input_dim: usize,
    pub hidden: usize,
    data: Vec<f64>,
}

impl PolicyParams {
    pub fn n_params(input_dim: usize, hidden: usize) -> usize {
        hidden * input_dim + hidden + N_ANSWERS * hidden + N_ANSWERS
    }

    pub fn zeros(input_dim: usize, hidden: usize) -> PolicyParams {
        PolicyParams { input_dim, hidden, data: vec![0.0; Self::n_params(input_dim, hidden)] }
    }

    /// Symmetric uniform init scaled by each layer's fan-in.
    pub fn init(input_dim: usize, hidden: usize, seed: u64) -> PolicyParams {
        let mut p = PolicyParams::zeros(input_dim, hidden);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bound1 = 1.0 / (input_dim as f64).sqrt();
        let bound2 = 1.0 / (hidden as f64).sqrt();
        let split = hidden * input_dim + hidden;
        for (i, v) in p.data.iter_mut().enumerate() {
            let bound = if i < split { bound1 } else { bound2 };
            *v = (rng.random::<f64>() * 2.0 - 1.0) * bound;
        }
        p
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn from_vec(input_dim: usize, hidden: usize, data: Vec<f64>) -> Result<PolicyParams, PolicyError> {
        if data.len() != Self::n_params(input_dim, hidden) {
            return Err(PolicyError::Shape(format!(
                "parameter block has {} values, expected {}",
                data.len(),
                Self::n_params(input_dim, hidden)
            )));
        }
        Ok(PolicyParams { input_dim, hidden, data })
    }

    fn ranges(&self) -> [std::ops::Range<usize>; 4] {
        let (i, h) = (self.input_dim, self.hidden);
        let w1 = 0..h * i;
        let b1 = w1.end..w1.end + h;
        let w2 = b1.end..b1.end + N_ANSWERS * h;
        let b2 = w2.end..w2.end + N_ANSWERS;
        [w1, b1, w2, b2]
    }

    pub fn w1(&self) -> &[f64] {
        &self.data[self.ranges()[0].clone()]
    }

    pub fn b1(&self) -> &[f64] {
        &self.data[self.ranges()[1].clone()]
    }

    pub fn w2(&self) -> &[f64] {
        &self.data[self.ranges()[2].clone()]
    }

    pub fn b2(&self) -> &[f64] {
        &self.data[self.ranges()[3].clone()]
    }
}

/// A temperature-scaled softmax over the four answer slots, summing to one.
/// Logit-built distributions have strictly positive probabilities;
/// probability-built ones (stubs) may put exact zeros on some slots, whose
/// logprobs are then `-inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnswerDistribution {
    pub probs: [f64; N_ANSWERS],
    pub logprobs: [f64; N_ANSWERS],
    pub temperature: f64,
}

impl AnswerDistribution {
    pub fn from_logits(logits: [f64; N_ANSWERS], temperature: f64) -> Result<AnswerDistribution, PolicyError> {
        if !(temperature.is_finite() && temperature > 0.0) {
            return Err(PolicyError::Domain(format!("temperature {temperature} must be positive")));
        }
        if logits.iter().any(|v| !v.is_finite()) {
            return Err(PolicyError::NonFinite("logits".to_string()));
        }
        let scaled = logits.map(|z| z / temperature);
        let m = scaled.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + scaled.iter().map(|z| (z - m).exp()).sum::<f64>().ln();
        let logprobs = scaled.map(|z| z - lse);
        let probs = logprobs.map(f64::exp);
        if probs.iter().any(|&p| p <= 0.0) {
            return Err(PolicyError::NonFinite("probability underflow".to_string()));
        }
        Ok(AnswerDistribution { probs, logprobs, temperature })
    }

    /// For stubs and tests: a distribution given directly as probabilities.
    /// Exact zeros are allowed (point masses); their logprobs are `-inf`.
    pub fn from_probs(probs: [f64; N_ANSWERS], temperature: f64) -> Result<AnswerDistribution, PolicyError> {
        let total: f64 = probs.iter().sum();
        if probs.iter().any(|&p| !(p.is_finite() && p >= 0.0)) {
            return Err(PolicyError::Domain("probabilities must be non-negative".to_string()));
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(PolicyError::Domain(format!("probabilities sum to {total}")));
        }
        Ok(AnswerDistribution { probs, logprobs: probs.map(f64::ln), temperature })
    }

    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for i in 1..N_ANSWERS {
            if self.probs[i] > self.probs[best] {
                best = i;
            }
        }
        best
    }

    /// Inverse-CDF sampling from a uniform draw in [0, 1). If rounding in
    /// the partial sums leaves `u` past the last boundary, the draw falls to
    /// the last slot with positive probability rather than an impossible one.
    pub fn sample_at(&self, u: f64) -> usize {
        let mut cum = 0.0;
        for (i, &p) in self.probs.iter().enumerate() {
            cum += p;
            if u < cum {
                return i;
            }
        }
        (0..N_ANSWERS).rev().find(|&i| self.probs[i] > 0.0).unwrap_or(N_ANSWERS - 1)
    }

    pub fn sample(&self, rng: &mut impl Rng) -> usize {
        self.sample_at(rng.random::<f64>())
    }
}

fn affine(w: &[f64], x: &[f64], b: &[f64], out: &mut [f64]) {
    let cols = x.len();
    for (i, o) in out.iter_mut().enumerate() {
        let row = &w[i * cols..(i + 1) * cols];
        *o = b[i] + row.iter().zip(x).map(|(a, v)| a * v).sum::<f64>();
    }
}

/// Evaluates the policy without building a tape.
pub fn forward(params: &PolicyParams, features: &[f64], temperature: f64) -> Result<AnswerDistribution, PolicyError> {
    if features.len() != params.input_dim {
        return Err(PolicyError::Shape(format!(
            "feature vector has {} values, expected {}",
            features.len(),
            params.input_dim
        )));
    }
    let mut hidden = vec![0.0; params.hidden];
    affine(params.w1(), features, params.b1(), &mut hidden);
    for h in hidden.iter_mut() {
        *h = h.tanh();
    }
    let mut logits = [0.0; N_ANSWERS];
    affine(params.w2(), &hidden, params.b2(), &mut logits);
    AnswerDistribution::from_logits(logits, temperature)
}

/// Parameter leaves of a tape, one per layer block.
#[derive(Debug, Clone, Copy)]
pub struct ParamLeaves {
    pub w1: NodeId,
    pub b1: NodeId,
    pub w2: NodeId,
    pub b2: NodeId,
    pub input_dim: usize,
    pub hidden: usize,
}

impl ParamLeaves {
    pub fn insert(g: &mut Graph, params: &PolicyParams) -> ParamLeaves {
        ParamLeaves {
            w1: g.leaf(params.w1().to_vec()),
            b1: g.leaf(params.b1().to_vec()),
            w2: g.leaf(params.w2().to_vec()),
            b2: g.leaf(params.b2().to_vec()),
            input_dim: params.input_dim,
            hidden: params.hidden,
        }
    }

    /// Flat gradient in the same layout as [`PolicyParams::as_slice`].
    pub fn flat_grad(&self, grads: &Gradients) -> Vec<f64> {
        let mut out = Vec::with_capacity(
            grads.of(self.w1).len() + grads.of(self.b1).len() + grads.of(self.w2).len() + grads.of(self.b2).len(),
        );
        out.extend_from_slice(grads.of(self.w1));
        out.extend_from_slice(grads.of(self.b1));
        out.extend_from_slice(grads.of(self.w2));
        out.extend_from_slice(grads.of(self.b2));
        out
    }
}

/// Builds the policy on the tape and returns the logprob vector node for the
/// given features at the given temperature.
pub fn logprob_node(g: &mut Graph, leaves: &ParamLeaves, features: &[f64], temperature: f64) -> NodeId {
    assert_eq!(features.len(), leaves.input_dim, "feature dim");
    let x = g.constant(features.to_vec());
    let z1 = g.matvec(leaves.w1, x, leaves.hidden, leaves.input_dim);
    let z1 = g.add(z1, leaves.b1);
    let h = g.tanh(z1);
    let z2 = g.matvec(leaves.w2, h, N_ANSWERS, leaves.hidden);
    let z2 = g.add(z2, leaves.b2);
    let scaled = g.scale(z2, 1.0 / temperature);
    g.log_softmax(scaled)
}
