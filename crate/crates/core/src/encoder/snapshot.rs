//! Attention snapshot records.
//!
//! File layout: the 8-byte magic `HLSNAP01`, then zero or more records. A
//! record is a little-endian `u32` manifest length, the manifest as JSON,
//! then for every `(layer, head)` in row-major order the attention matrix
//! (`seq_len²` values) followed by the value matrix (`seq_len · d_k` values),
//! all little-endian `f64`.

use std::fs;
use std::path::Path;

use headlab_tensor::Tensor;
use serde::{Deserialize, Serialize};

use crate::corpus::SubtokenMap;
use crate::error::{LabError, Result};

pub const SNAPSHOT_MAGIC: &[u8; 8] = b"HLSNAP01";
const ROW_TOL: f64 = 1e-9;

/// Pre-gating attention and value matrices for every head of one sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionSnapshot {
    pub layers: usize,
    pub heads: usize,
    pub seq_len: usize,
    pub d_k: usize,
    /// Indexed by `layer · heads + head`.
    pub attention: Vec<Tensor>,
    pub values: Vec<Tensor>,
}

impl AttentionSnapshot {
    pub(crate) fn empty(layers: usize, heads: usize, seq_len: usize, d_k: usize) -> Self {
        let n = layers * heads;
        AttentionSnapshot {
            layers,
            heads,
            seq_len,
            d_k,
            attention: vec![Tensor::zeros(&[seq_len, seq_len]); n],
            values: vec![Tensor::zeros(&[seq_len, d_k]); n],
        }
    }

    pub fn attention(&self, layer: usize, head: usize) -> &Tensor {
        &self.attention[layer * self.heads + head]
    }

    pub fn values(&self, layer: usize, head: usize) -> &Tensor {
        &self.values[layer * self.heads + head]
    }

    /// Shapes agree with the header and every attention row sums to 1.
    pub fn validate(&self) -> Result<()> {
        let n = self.layers * self.heads;
        if self.attention.len() != n || self.values.len() != n {
            return Err(LabError::Snapshot(format!("expected {n} heads of matrices")));
        }
        for (j, (a, v)) in self.attention.iter().zip(&self.values).enumerate() {
            if a.shape() != [self.seq_len, self.seq_len] || v.shape() != [self.seq_len, self.d_k] {
                return Err(LabError::Snapshot(format!("head {j} has inconsistent shapes")));
            }
            if a.data().iter().chain(v.data()).any(|x| !x.is_finite()) {
                return Err(LabError::Snapshot(format!("head {j} holds non-finite values")));
            }
            for r in 0..self.seq_len {
                let s: f64 = a.row_slice(r).iter().sum();
                if (s - 1.0).abs() > ROW_TOL || a.row_slice(r).iter().any(|&x| x < 0.0) {
                    return Err(LabError::Snapshot(format!(
                        "head {j} row {r} is not a distribution (sum {s})"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// One sentence's snapshot together with its word ↔ subtoken map.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotRecord {
    /// Index of the sentence in the probed corpus.
    pub sentence: usize,
    pub map: SubtokenMap,
    pub snapshot: AttentionSnapshot,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    sentence: usize,
    layers: usize,
    heads: usize,
    seq_len: usize,
    d_k: usize,
    map: SubtokenMap,
}

fn push_f64s(out: &mut Vec<u8>, xs: &[f64]) {
    for x in xs {
        out.extend_from_slice(&x.to_le_bytes());
    }
}

pub fn encode_snapshots(records: &[SnapshotRecord]) -> Result<Vec<u8>> {
    let mut out = SNAPSHOT_MAGIC.to_vec();
    for r in records {
        let s = &r.snapshot;
        s.validate()?;
        let manifest = serde_json::to_vec(&Manifest {
            sentence: r.sentence,
            layers: s.layers,
            heads: s.heads,
            seq_len: s.seq_len,
            d_k: s.d_k,
            map: r.map.clone(),
        })?;
        let len = u32::try_from(manifest.len()).map_err(|_| LabError::Snapshot("manifest too large".into()))?;
        out.extend_from_slice(&len.to_le_bytes());
        out.extend_from_slice(&manifest);
        for (a, v) in s.attention.iter().zip(&s.values) {
            push_f64s(&mut out, a.data());
            push_f64s(&mut out, v.data());
        }
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| LabError::Snapshot(format!("truncated record at byte {}", self.pos)))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn f64s(&mut self, count: usize) -> Result<Vec<f64>> {
        let n = count
            .checked_mul(8)
            .ok_or_else(|| LabError::Snapshot("matrix size overflows".into()))?;
        Ok(self
            .take(n)?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }
}

/// Parses a snapshot file; every record is validated.
pub fn decode_snapshots(bytes: &[u8]) -> Result<Vec<SnapshotRecord>> {
    if bytes.len() < SNAPSHOT_MAGIC.len() || &bytes[..SNAPSHOT_MAGIC.len()] != SNAPSHOT_MAGIC {
        return Err(LabError::Snapshot("missing HLSNAP01 magic".into()));
    }
    let mut rd = Reader {
        bytes,
        pos: SNAPSHOT_MAGIC.len(),
    };
    let mut out = Vec::new();
    while rd.pos < bytes.len() {
        let len = u32::from_le_bytes(rd.take(4)?.try_into().expect("4 bytes")) as usize;
        let m: Manifest =
            serde_json::from_slice(rd.take(len)?).map_err(|e| LabError::Snapshot(format!("bad manifest: {e}")))?;
        m.map.validate().map_err(|e| LabError::Snapshot(e.to_string()))?;
        if m.map.len != m.seq_len {
            return Err(LabError::Snapshot(format!(
                "map covers {} subtokens, record has {}",
                m.map.len, m.seq_len
            )));
        }
        let heads = m
            .layers
            .checked_mul(m.heads)
            .ok_or_else(|| LabError::Snapshot("head count overflows".into()))?;
        let a_len = m.seq_len.checked_mul(m.seq_len);
        let v_len = m.seq_len.checked_mul(m.d_k);
        let (a_len, v_len) = a_len
            .zip(v_len)
            .ok_or_else(|| LabError::Snapshot("matrix size overflows".into()))?;
        let per_head = a_len
            .checked_add(v_len)
            .and_then(|x| x.checked_mul(8))
            .ok_or_else(|| LabError::Snapshot("matrix size overflows".into()))?;
        if heads == 0 || per_head.checked_mul(heads).is_none_or(|t| t > bytes.len() - rd.pos) {
            return Err(LabError::Snapshot(format!(
                "record for sentence {} is truncated",
                m.sentence
            )));
        }
        let mut attention = Vec::with_capacity(heads);
        let mut values = Vec::with_capacity(heads);
        for _ in 0..heads {
            attention.push(Tensor::matrix(m.seq_len, m.seq_len, rd.f64s(a_len)?)?);
            values.push(Tensor::matrix(m.seq_len, m.d_k, rd.f64s(v_len)?)?);
        }
        let snapshot = AttentionSnapshot {
            layers: m.layers,
            heads: m.heads,
            seq_len: m.seq_len,
            d_k: m.d_k,
            attention,
            values,
        };
        snapshot.validate()?;
        out.push(SnapshotRecord {
            sentence: m.sentence,
            map: m.map,
            snapshot,
        });
    }
    Ok(out)
}

pub fn write_snapshots(path: &Path, records: &[SnapshotRecord]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, encode_snapshots(records)?)?;
    Ok(())
}

pub fn read_snapshots(path: &Path) -> Result<Vec<SnapshotRecord>> {
    decode_snapshots(&fs::read(path)?)
}
