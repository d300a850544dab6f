use headlab_tensor::{gelu, softmax_rows, ParamStore, Tensor};

use super::{AttentionSnapshot, Encoder, EncoderConfig, LN_EPS};
use crate::error::{LabError, Result};

/// `z · softmax(QKᵀ/√d_k) V`, returned with the pre-gating attention matrix.
pub fn gated_attention(q: &Tensor, k: &Tensor, v: &Tensor, z: f64) -> Result<(Tensor, Tensor)> {
    if q.cols() != k.cols() || k.rows() != v.rows() || !q.is_matrix() || !k.is_matrix() || !v.is_matrix() {
        return Err(LabError::Encoder(format!(
            "attention shapes Q{:?} K{:?} V{:?} are inconsistent",
            q.shape(),
            k.shape(),
            v.shape()
        )));
    }
    if !(0.0..=1.0).contains(&z) {
        return Err(LabError::Encoder(format!("gate value {z} outside [0, 1]")));
    }
    let scale = 1.0 / (q.cols() as f64).sqrt();
    let attn = softmax_rows(&q.matmul_t(k)?.scale(scale))?;
    let out = attn.matmul(v)?.scale(z);
    Ok((out, attn))
}

#[derive(Debug, Clone)]
struct EvalHead {
    wq: Tensor,
    bq: Vec<f64>,
    wk: Tensor,
    bk: Vec<f64>,
    wv: Tensor,
    bv: Vec<f64>,
    wo: Tensor,
}

#[derive(Debug, Clone)]
struct EvalLayer {
    ln1_g: Vec<f64>,
    ln1_b: Vec<f64>,
    heads: Vec<EvalHead>,
    bo: Vec<f64>,
    ln2_g: Vec<f64>,
    ln2_b: Vec<f64>,
    w1: Tensor,
    b1: Vec<f64>,
    w2: Tensor,
    b2: Vec<f64>,
}

/// Graph-free encoder with per-head weights split out so that heads with
/// a zero gate can be skipped entirely.
#[derive(Debug, Clone)]
pub struct EvalEncoder {
    pub config: EncoderConfig,
    tok_emb: Tensor,
    pos_emb: Tensor,
    layers: Vec<EvalLayer>,
    lnf_g: Vec<f64>,
    lnf_b: Vec<f64>,
    gates: Vec<f64>,
}

fn add_bias(x: &mut Tensor, b: &[f64]) {
    let n = b.len();
    for row in x.data_mut().chunks_mut(n) {
        for (o, &v) in row.iter_mut().zip(b) {
            *o += v;
        }
    }
}

fn layer_norm(x: &Tensor, gain: &[f64], bias: &[f64]) -> Tensor {
    let n = x.cols();
    let mut out = x.clone();
    for row in out.data_mut().chunks_mut(n) {
        let mean = row.iter().sum::<f64>() / n as f64;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        let inv = 1.0 / (var + LN_EPS).sqrt();
        for (j, v) in row.iter_mut().enumerate() {
            *v = (*v - mean) * inv * gain[j] + bias[j];
        }
    }
    out
}

impl EvalEncoder {
    /// Prepares weights for `gates` (one value in `[0, 1]` per head).
    pub fn new(store: &ParamStore, enc: &Encoder, gates: Vec<f64>) -> Result<Self> {
        let cfg = enc.config;
        if gates.len() != cfg.total_heads() {
            return Err(LabError::Encoder(format!(
                "{} gate values for {} heads",
                gates.len(),
                cfg.total_heads()
            )));
        }
        let dk = cfg.d_k();
        let row = |id| store.get(id).data().to_vec();
        let mut layers = Vec::with_capacity(cfg.layers);
        for lp in &enc.layers {
            let (wq, wk, wv, wo) = (store.get(lp.wq), store.get(lp.wk), store.get(lp.wv), store.get(lp.wo));
            let (bq, bk, bv) = (store.get(lp.bq), store.get(lp.bk), store.get(lp.bv));
            let mut heads = Vec::with_capacity(cfg.heads);
            for h in 0..cfg.heads {
                let (s, e) = (h * dk, (h + 1) * dk);
                heads.push(EvalHead {
                    wq: wq.slice_cols(s, e)?,
                    bq: bq.data()[s..e].to_vec(),
                    wk: wk.slice_cols(s, e)?,
                    bk: bk.data()[s..e].to_vec(),
                    wv: wv.slice_cols(s, e)?,
                    bv: bv.data()[s..e].to_vec(),
                    wo: wo.slice_rows(s, e)?,
                });
            }
            layers.push(EvalLayer {
                ln1_g: row(lp.ln1_g),
                ln1_b: row(lp.ln1_b),
                heads,
                bo: row(lp.bo),
                ln2_g: row(lp.ln2_g),
                ln2_b: row(lp.ln2_b),
                w1: store.get(lp.w1).clone(),
                b1: row(lp.b1),
                w2: store.get(lp.w2).clone(),
                b2: row(lp.b2),
            });
        }
        Ok(EvalEncoder {
            config: cfg,
            tok_emb: store.get(enc.tok_emb).clone(),
            pos_emb: store.get(enc.pos_emb).clone(),
            layers,
            lnf_g: row(enc.lnf_g),
            lnf_b: row(enc.lnf_b),
            gates,
        })
    }

    pub fn gates(&self) -> &[f64] {
        &self.gates
    }

    /// Last-layer hidden states, optionally with every head's attention.
    ///
    /// With `skip_pruned`, heads whose gate is exactly zero are not computed;
    /// the result is bitwise identical to computing them and scaling by 0.
    /// Captured snapshots always include every head.
    pub fn encode(
        &self,
        ids: &[usize],
        skip_pruned: bool,
        capture: bool,
    ) -> Result<(Tensor, Option<AttentionSnapshot>)> {
        let cfg = self.config;
        if ids.len() > cfg.max_len {
            return Err(LabError::Encoder(format!(
                "sequence of {} subtokens exceeds max length {}",
                ids.len(),
                cfg.max_len
            )));
        }
        if ids.is_empty() {
            return Err(LabError::Encoder("empty input".into()));
        }
        let n = ids.len();
        let d = cfg.d_model;
        let mut x = Tensor::zeros(&[n, d]);
        for (i, &id) in ids.iter().enumerate() {
            if id >= self.tok_emb.rows() {
                return Err(LabError::Encoder(format!("subtoken id {id} outside vocabulary")));
            }
            let row = &mut x.data_mut()[i * d..(i + 1) * d];
            for ((o, &t), &p) in row
                .iter_mut()
                .zip(self.tok_emb.row_slice(id))
                .zip(self.pos_emb.row_slice(i))
            {
                *o = t + p;
            }
        }
        let mut snap = capture.then(|| AttentionSnapshot::empty(cfg.layers, cfg.heads, n, cfg.d_k()));

        for (li, layer) in self.layers.iter().enumerate() {
            let h = layer_norm(&x, &layer.ln1_g, &layer.ln1_b);
            let mut attn_out = Tensor::zeros(&[n, d]);
            for (hi, head) in layer.heads.iter().enumerate() {
                let j = li * cfg.heads + hi;
                let z = self.gates[j];
                if skip_pruned && z == 0.0 && !capture {
                    continue;
                }
                let mut q = h.matmul(&head.wq)?;
                add_bias(&mut q, &head.bq);
                let mut k = h.matmul(&head.wk)?;
                add_bias(&mut k, &head.bk);
                let mut v = h.matmul(&head.wv)?;
                add_bias(&mut v, &head.bv);
                let (out, attn) = gated_attention(&q, &k, &v, z)?;
                if let Some(s) = snap.as_mut() {
                    s.attention[j] = attn;
                    s.values[j] = v;
                }
                if skip_pruned && z == 0.0 {
                    continue;
                }
                attn_out.add_assign(&out.matmul(&head.wo)?)?;
            }
            add_bias(&mut attn_out, &layer.bo);
            x.add_assign(&attn_out)?;

            let h2 = layer_norm(&x, &layer.ln2_g, &layer.ln2_b);
            let mut f = h2.matmul(&layer.w1)?;
            add_bias(&mut f, &layer.b1);
            let f = f.map(gelu);
            let mut f = f.matmul(&layer.w2)?;
            add_bias(&mut f, &layer.b2);
            x.add_assign(&f)?;
        }
        Ok((layer_norm(&x, &self.lnf_g, &self.lnf_b), snap))
    }
}
