//! Pre-norm transformer encoder whose attention heads are scaled by gates.
//!
//! Two forward paths share one parameter store: [`Encoder::forward`] records
//! onto an autodiff [`Graph`] for training, and [`EvalEncoder`] runs a
//! prepared, graph-free pass that skips heads whose gate is exactly zero.

mod eval;
mod snapshot;

use headlab_tensor::{Graph, ParamId, ParamStore, Tensor, Var};
use rand::Rng;
use serde::{Deserialize, Serialize};

pub use eval::{gated_attention, EvalEncoder};
pub use snapshot::{
    decode_snapshots, encode_snapshots, read_snapshots, write_snapshots, AttentionSnapshot, SnapshotRecord,
};

use crate::corpus::{SubtokenMap, BOS, EOS, MASK};
use crate::error::{LabError, Result};

pub const LN_EPS: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EncoderConfig {
    pub layers: usize,
    pub heads: usize,
    pub d_model: usize,
    pub ffn: usize,
    pub dropout: f64,
    /// Probability of replacing a subtoken with `[MASK]` during training.
    pub word_dropout: f64,
    pub max_len: usize,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            layers: 4,
            heads: 8,
            d_model: 128,
            ffn: 256,
            dropout: 0.1,
            word_dropout: 0.2,
            max_len: 64,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 || self.heads == 0 || self.d_model == 0 || self.ffn == 0 || self.max_len < 3 {
            return Err(LabError::Encoder(format!("degenerate config {self:?}")));
        }
        if !self.d_model.is_multiple_of(self.heads) {
            return Err(LabError::Encoder(format!(
                "d_model {} not divisible by {} heads",
                self.d_model, self.heads
            )));
        }
        for (name, rate) in [("dropout", self.dropout), ("word_dropout", self.word_dropout)] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(LabError::Encoder(format!("{name} {rate} outside [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn d_k(&self) -> usize {
        self.d_model / self.heads
    }

    pub fn total_heads(&self) -> usize {
        self.layers * self.heads
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct LayerIds {
    pub ln1_g: ParamId,
    pub ln1_b: ParamId,
    pub wq: ParamId,
    pub bq: ParamId,
    pub wk: ParamId,
    pub bk: ParamId,
    pub wv: ParamId,
    pub bv: ParamId,
    pub wo: ParamId,
    pub bo: ParamId,
    pub ln2_g: ParamId,
    pub ln2_b: ParamId,
    pub w1: ParamId,
    pub b1: ParamId,
    pub w2: ParamId,
    pub b2: ParamId,
}

/// Parameter handles for the encoder inside a shared [`ParamStore`].
#[derive(Debug, Clone)]
pub struct Encoder {
    pub config: EncoderConfig,
    pub(crate) tok_emb: ParamId,
    pub(crate) pos_emb: ParamId,
    pub(crate) layers: Vec<LayerIds>,
    pub(crate) lnf_g: ParamId,
    pub(crate) lnf_b: ParamId,
    /// `1 × (layers·heads)` gate logits, row-major by layer.
    pub gate_alpha: ParamId,
}

pub(crate) fn uniform<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, bound: f64) -> Tensor {
    let data = (0..rows * cols).map(|_| rng.random_range(-bound..bound)).collect();
    Tensor::matrix(rows, cols, data).expect("non-empty")
}

pub(crate) fn xavier<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Tensor {
    uniform(rng, rows, cols, (6.0 / (rows + cols) as f64).sqrt())
}

impl Encoder {
    /// Registers freshly initialized encoder parameters under `encoder.*`.
    pub fn init<R: Rng + ?Sized>(
        store: &mut ParamStore,
        config: EncoderConfig,
        vocab_size: usize,
        alpha_init: f64,
        rng: &mut R,
    ) -> Result<Self> {
        config.validate()?;
        let d = config.d_model;
        let tok_emb = store.add("encoder.tok_emb", uniform(rng, vocab_size, d, 0.5))?;
        let pos_emb = store.add("encoder.pos_emb", uniform(rng, config.max_len, d, 0.5))?;
        let ones = || Tensor::full(&[1, d], 1.0);
        let zeros = |n: usize| Tensor::zeros(&[1, n]);
        let mut layers = Vec::with_capacity(config.layers);
        for l in 0..config.layers {
            let p = |name: &str| format!("encoder.l{l}.{name}");
            layers.push(LayerIds {
                ln1_g: store.add(p("ln1.g"), ones())?,
                ln1_b: store.add(p("ln1.b"), zeros(d))?,
                wq: store.add(p("wq"), xavier(rng, d, d))?,
                bq: store.add(p("bq"), zeros(d))?,
                wk: store.add(p("wk"), xavier(rng, d, d))?,
                bk: store.add(p("bk"), zeros(d))?,
                wv: store.add(p("wv"), xavier(rng, d, d))?,
                bv: store.add(p("bv"), zeros(d))?,
                wo: store.add(p("wo"), xavier(rng, d, d))?,
                bo: store.add(p("bo"), zeros(d))?,
                ln2_g: store.add(p("ln2.g"), ones())?,
                ln2_b: store.add(p("ln2.b"), zeros(d))?,
                w1: store.add(p("w1"), xavier(rng, d, config.ffn))?,
                b1: store.add(p("b1"), zeros(config.ffn))?,
                w2: store.add(p("w2"), xavier(rng, config.ffn, d))?,
                b2: store.add(p("b2"), zeros(d))?,
            });
        }
        let lnf_g = store.add("encoder.ln_f.g", ones())?;
        let lnf_b = store.add("encoder.ln_f.b", zeros(d))?;
        let gate_alpha = store.add("gates.alpha", Tensor::full(&[1, config.total_heads()], alpha_init))?;
        Ok(Encoder {
            config,
            tok_emb,
            pos_emb,
            layers,
            lnf_g,
            lnf_b,
            gate_alpha,
        })
    }

    /// Re-binds handles to an existing store (e.g. a loaded checkpoint).
    pub fn bind(store: &ParamStore, config: EncoderConfig) -> Result<Self> {
        config.validate()?;
        let layers = (0..config.layers)
            .map(|l| {
                let p = |name: &str| store.id(&format!("encoder.l{l}.{name}"));
                Ok(LayerIds {
                    ln1_g: p("ln1.g")?,
                    ln1_b: p("ln1.b")?,
                    wq: p("wq")?,
                    bq: p("bq")?,
                    wk: p("wk")?,
                    bk: p("bk")?,
                    wv: p("wv")?,
                    bv: p("bv")?,
                    wo: p("wo")?,
                    bo: p("bo")?,
                    ln2_g: p("ln2.g")?,
                    ln2_b: p("ln2.b")?,
                    w1: p("w1")?,
                    b1: p("b1")?,
                    w2: p("w2")?,
                    b2: p("b2")?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let enc = Encoder {
            config,
            tok_emb: store.id("encoder.tok_emb")?,
            pos_emb: store.id("encoder.pos_emb")?,
            layers,
            lnf_g: store.id("encoder.ln_f.g")?,
            lnf_b: store.id("encoder.ln_f.b")?,
            gate_alpha: store.id("gates.alpha")?,
        };
        if store.get(enc.gate_alpha).len() != config.total_heads() {
            return Err(LabError::Encoder("gate logits do not match the head grid".into()));
        }
        Ok(enc)
    }

    /// Whether a parameter belongs to the encoder body (not the gates).
    pub fn owns(&self, store: &ParamStore, id: ParamId) -> bool {
        store.name(id).starts_with("encoder.")
    }

    pub fn gate_alpha<'a>(&self, store: &'a ParamStore) -> &'a [f64] {
        store.get(self.gate_alpha).data()
    }

    pub fn check_input(&self, ids: &[usize]) -> Result<()> {
        if ids.len() > self.config.max_len {
            return Err(LabError::Encoder(format!(
                "sequence of {} subtokens exceeds max length {}",
                ids.len(),
                self.config.max_len
            )));
        }
        if ids.len() < 2 || ids[0] != BOS || ids[ids.len() - 1] != EOS {
            return Err(LabError::Encoder(
                "input must start with [BOS] and end with [EOS]".into(),
            ));
        }
        Ok(())
    }

    /// Records one forward pass for a single sequence.
    ///
    /// `gates` is a `1 × (layers·heads)` node of gate values or `None` for
    /// fully open heads. `dropout` enables hidden dropout with its rng.
    pub fn forward<R: Rng + ?Sized>(
        &self,
        g: &mut Graph,
        store: &ParamStore,
        ids: &[usize],
        gates: Option<Var>,
        mut dropout: Option<&mut R>,
    ) -> Result<Var> {
        self.check_input(ids)?;
        let cfg = self.config;
        let n = ids.len();
        let dk = cfg.d_k();
        let tok = g.param(store, self.tok_emb);
        let pos = g.param(store, self.pos_emb);
        let te = g.gather_rows(tok, ids)?;
        let positions: Vec<usize> = (0..n).collect();
        let pe = g.gather_rows(pos, &positions)?;
        let mut x = g.add(te, pe)?;
        let scale = 1.0 / (dk as f64).sqrt();

        for (li, lp) in self.layers.iter().enumerate() {
            let h = layer_norm(g, store, x, lp.ln1_g, lp.ln1_b)?;
            let q = linear(g, store, h, lp.wq, lp.bq)?;
            let k = linear(g, store, h, lp.wk, lp.bk)?;
            let v = linear(g, store, h, lp.wv, lp.bv)?;
            let mut heads = Vec::with_capacity(cfg.heads);
            for hi in 0..cfg.heads {
                let (s, e) = (hi * dk, (hi + 1) * dk);
                let qh = g.slice_cols(q, s, e)?;
                let kh = g.slice_cols(k, s, e)?;
                let vh = g.slice_cols(v, s, e)?;
                let scores = g.matmul_t(qh, kh)?;
                let scores = g.scale(scores, scale);
                let attn = g.softmax_rows(scores)?;
                let mut out = g.matmul(attn, vh)?;
                if let Some(z) = gates {
                    let j = li * cfg.heads + hi;
                    let zj = g.slice_cols(z, j, j + 1)?;
                    out = g.scale_by(out, zj)?;
                }
                heads.push(out);
            }
            let cat = g.concat_cols(&heads)?;
            let mut attn_out = linear(g, store, cat, lp.wo, lp.bo)?;
            if let Some(rng) = dropout.as_deref_mut() {
                attn_out = apply_dropout(g, attn_out, cfg.dropout, rng)?;
            }
            x = g.add(x, attn_out)?;

            let h2 = layer_norm(g, store, x, lp.ln2_g, lp.ln2_b)?;
            let f = linear(g, store, h2, lp.w1, lp.b1)?;
            let f = g.gelu(f);
            let mut f = linear(g, store, f, lp.w2, lp.b2)?;
            if let Some(rng) = dropout.as_deref_mut() {
                f = apply_dropout(g, f, cfg.dropout, rng)?;
            }
            x = g.add(x, f)?;
        }
        layer_norm(g, store, x, self.lnf_g, self.lnf_b)
    }
}

fn linear(g: &mut Graph, store: &ParamStore, x: Var, w: ParamId, b: ParamId) -> Result<Var> {
    let w = g.param(store, w);
    let b = g.param(store, b);
    let y = g.matmul(x, w)?;
    Ok(g.add_row(y, b)?)
}

fn layer_norm(g: &mut Graph, store: &ParamStore, x: Var, gain: ParamId, bias: ParamId) -> Result<Var> {
    let n = g.layer_norm_rows(x, LN_EPS)?;
    let gain = g.param(store, gain);
    let bias = g.param(store, bias);
    let y = g.mul_row(n, gain)?;
    Ok(g.add_row(y, bias)?)
}

/// Inverted dropout: survivors are scaled by `1 / (1 − rate)`.
pub fn apply_dropout<R: Rng + ?Sized>(g: &mut Graph, x: Var, rate: f64, rng: &mut R) -> Result<Var> {
    if rate <= 0.0 {
        return Ok(x);
    }
    let shape = g.value(x).shape().to_vec();
    let keep = 1.0 - rate;
    let mask: Vec<f64> = (0..g.value(x).len())
        .map(|_| {
            if keep > 0.0 && rng.random::<f64>() < keep {
                1.0 / keep
            } else {
                0.0
            }
        })
        .collect();
    Ok(g.mul_const(x, Tensor::new(shape, mask)?)?)
}

/// Replaces each non-sentinel subtoken by `[MASK]` with probability `rate`.
pub fn word_dropout<R: Rng + ?Sized>(ids: &[usize], rate: f64, rng: &mut R) -> Vec<usize> {
    let last = ids.len().saturating_sub(1);
    ids.iter()
        .enumerate()
        .map(|(i, &id)| {
            let sentinel = i == 0 || i == last || id == BOS || id == EOS;
            if !sentinel && rate > 0.0 && rng.random::<f64>() < rate {
                MASK
            } else {
                id
            }
        })
        .collect()
}

/// Per-word mean of subtoken states, plus the `[BOS]` row as the root vector.
pub fn word_embed(g: &mut Graph, hidden: Var, map: &SubtokenMap) -> Result<(Var, Var)> {
    let n = g.value(hidden).rows();
    if map.len != n {
        return Err(LabError::Encoder(format!(
            "map covers {} subtokens, hidden has {n}",
            map.len
        )));
    }
    if let Some(&(s, e)) = map.ranges.iter().find(|&&(s, e)| s >= e || e > n) {
        return Err(LabError::Encoder(format!(
            "empty or out-of-range subtoken range ({s}, {e})"
        )));
    }
    let words = g.mean_row_groups(hidden, &map.ranges)?;
    let root = g.slice_rows(hidden, 0, 1)?;
    Ok((words, root))
}

/// Graph-free counterpart of [`word_embed`].
pub fn word_embed_tensor(hidden: &Tensor, map: &SubtokenMap) -> Result<(Tensor, Tensor)> {
    let mut g = Graph::new();
    let h = g.constant(hidden.clone());
    let (w, r) = word_embed(&mut g, h, map)?;
    Ok((g.value(w).clone(), g.value(r).clone()))
}
