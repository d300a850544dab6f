//! Hard Concrete head gates.
//!
//! A gate with logit `alpha` on the stretch interval `(l, r)` is sampled as
//!
//! ```text
//! g = sigmoid(log u − log(1 − u) + alpha),   u ~ U(0, 1)
//! z = min(1, max(0, g·(r − l) + l))
//! ```
//!
//! and its L0 surrogate is `sigmoid(alpha − log(−l/r))`, which is the
//! probability that `z > 0`.

use headlab_tensor::{sigmoid, Graph, Tensor, Var};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

pub const DEFAULT_L: f64 = -0.1;
pub const DEFAULT_R: f64 = 1.1;
pub const DEFAULT_ALPHA_INIT: f64 = 2.0;

/// Stretch interval and initial logit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GateConfig {
    pub l: f64,
    pub r: f64,
    pub alpha_init: f64,
}

impl Default for GateConfig {
    fn default() -> Self {
        GateConfig {
            l: DEFAULT_L,
            r: DEFAULT_R,
            alpha_init: DEFAULT_ALPHA_INIT,
        }
    }
}

impl GateConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.l < 0.0 && self.r > 1.0) {
            return Err(LabError::Gate(format!(
                "need l < 0 < 1 < r, got ({}, {})",
                self.l, self.r
            )));
        }
        if !self.alpha_init.is_finite() {
            return Err(LabError::Gate("alpha_init must be finite".into()));
        }
        Ok(())
    }
}

/// Per-head logits on a `layers × heads` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateParams {
    pub layers: usize,
    pub heads: usize,
    pub alpha: Vec<f64>,
    pub l: f64,
    pub r: f64,
}

/// One exported gate record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateRecord {
    pub layer: usize,
    pub head: usize,
    pub alpha: f64,
    pub l: f64,
    pub r: f64,
}

impl GateParams {
    pub fn new(layers: usize, heads: usize, config: GateConfig) -> Result<Self> {
        config.validate()?;
        Ok(GateParams {
            layers,
            heads,
            alpha: vec![config.alpha_init; layers * heads],
            l: config.l,
            r: config.r,
        })
    }

    pub fn from_alpha(layers: usize, heads: usize, alpha: Vec<f64>, l: f64, r: f64) -> Result<Self> {
        if alpha.len() != layers * heads {
            return Err(LabError::Gate(format!(
                "{} logits for a {layers}×{heads} grid",
                alpha.len()
            )));
        }
        if alpha.iter().any(|a| !a.is_finite()) {
            return Err(LabError::Gate("non-finite gate logit".into()));
        }
        GateConfig { l, r, alpha_init: 0.0 }.validate()?;
        Ok(GateParams {
            layers,
            heads,
            alpha,
            l,
            r,
        })
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn index(&self, layer: usize, head: usize) -> usize {
        layer * self.heads + head
    }

    pub fn expected(&self) -> Vec<f64> {
        self.alpha.iter().map(|&a| expected_gate(a, self.l, self.r)).collect()
    }

    pub fn eval(&self) -> Vec<f64> {
        self.alpha.iter().map(|&a| eval_gate(a, self.l, self.r)).collect()
    }

    pub fn records(&self) -> Vec<GateRecord> {
        (0..self.layers)
            .flat_map(|layer| (0..self.heads).map(move |head| (layer, head)))
            .map(|(layer, head)| GateRecord {
                layer,
                head,
                alpha: self.alpha[self.index(layer, head)],
                l: self.l,
                r: self.r,
            })
            .collect()
    }
}

/// One stretched-and-clamped Hard Concrete draw.
pub fn sample_gate(alpha: f64, u: f64, l: f64, r: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(LabError::Gate(format!(
            "uniform sample {u} must lie strictly inside (0, 1)"
        )));
    }
    let g = sigmoid(u.ln() - (1.0 - u).ln() + alpha);
    Ok((g * (r - l) + l).clamp(0.0, 1.0))
}

/// `sigmoid(alpha − log(−l/r))`.
pub fn expected_gate(alpha: f64, l: f64, r: f64) -> f64 {
    sigmoid(alpha - (-l / r).ln())
}

/// Deterministic test-time gate: the `u = 0.5` draw.
pub fn eval_gate(alpha: f64, l: f64, r: f64) -> f64 {
    (sigmoid(alpha) * (r - l) + l).clamp(0.0, 1.0)
}

/// Sum of expected gates over every head.
pub fn l0_penalty(gates: &GateParams) -> f64 {
    gates.expected().iter().sum()
}

/// Uniform draws for one batch, strictly inside `(0, 1)`.
pub fn draw_uniforms<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| loop {
            let u: f64 = rng.random();
            if u > 0.0 && u < 1.0 {
                break u;
            }
        })
        .collect()
}

/// Differentiable gate draws on the graph: `alpha` is a `1 × ℓ` row.
pub fn sample_gates_graph(g: &mut Graph, alpha: Var, uniforms: &[f64], l: f64, r: f64) -> Result<Var> {
    if uniforms.iter().any(|&u| !(u > 0.0 && u < 1.0)) {
        return Err(LabError::Gate("uniform samples must lie strictly inside (0, 1)".into()));
    }
    let noise = Tensor::row(uniforms.iter().map(|&u| u.ln() - (1.0 - u).ln()).collect())?;
    let noise = g.constant(noise);
    let logits = g.add(alpha, noise)?;
    let s = g.sigmoid(logits);
    let stretched = g.scale(s, r - l);
    let shifted = g.add_scalar(stretched, l);
    Ok(g.clamp(shifted, 0.0, 1.0))
}

/// Differentiable `Σ_j sigmoid(alpha_j − log(−l/r))`.
pub fn l0_penalty_graph(g: &mut Graph, alpha: Var, l: f64, r: f64) -> Var {
    let shifted = g.add_scalar(alpha, -(-l / r).ln());
    let p = g.sigmoid(shifted);
    g.sum(p)
}
