use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, TensorError};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ParamId(pub usize);

/// Named trainable tensors in insertion order.
///
/// Insertion order is the canonical order for optimizer updates and for the
/// checkpoint blob, so a store built the same way always serializes to the
/// same bytes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamStore {
    names: Vec<String>,
    values: Vec<Tensor>,
    index: BTreeMap<String, usize>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, value: Tensor) -> Result<ParamId> {
        let name = name.into();
        if self.index.contains_key(&name) {
            return Err(TensorError::DuplicateParam(name));
        }
        let id = self.values.len();
        self.index.insert(name.clone(), id);
        self.names.push(name);
        self.values.push(value);
        Ok(ParamId(id))
    }

    pub fn id(&self, name: &str) -> Result<ParamId> {
        self.index
            .get(name)
            .map(|&i| ParamId(i))
            .ok_or_else(|| TensorError::UnknownParam(name.to_string()))
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.values[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.values[id.0]
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.values.len()).map(ParamId)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &str, &Tensor)> {
        self.names
            .iter()
            .zip(&self.values)
            .enumerate()
            .map(|(i, (n, v))| (ParamId(i), n.as_str(), v))
    }

    pub fn num_scalars(&self) -> usize {
        self.values.iter().map(Tensor::len).sum()
    }

    /// Zero tensors with the shape of every parameter.
    pub fn zeros_like(&self) -> Vec<Tensor> {
        self.values.iter().map(|t| Tensor::zeros(t.shape())).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamEntry {
    pub name: String,
    pub shape: Vec<usize>,
}

/// JSON manifest that accompanies the little-endian f64 blob.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub format: String,
    pub seed: u64,
    pub step: u64,
    pub params: Vec<ParamEntry>,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub extra: serde_json::Value,
}

pub const CHECKPOINT_FORMAT: &str = "headlab-checkpoint-v1";

impl ParamStore {
    pub fn manifest(&self, seed: u64, step: u64, extra: serde_json::Value) -> CheckpointManifest {
        CheckpointManifest {
            format: CHECKPOINT_FORMAT.to_string(),
            seed,
            step,
            params: self
                .iter()
                .map(|(_, name, t)| ParamEntry {
                    name: name.to_string(),
                    shape: t.shape().to_vec(),
                })
                .collect(),
            extra,
        }
    }

    pub fn to_blob(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.num_scalars() * 8);
        for v in &self.values {
            for x in v.data() {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out
    }

    /// Writes `<stem>.json` and `<stem>.bin` next to each other.
    pub fn save(&self, dir: &Path, stem: &str, seed: u64, step: u64, extra: serde_json::Value) -> Result<()> {
        fs::create_dir_all(dir)?;
        let manifest = self.manifest(seed, step, extra);
        let mut json = serde_json::to_vec_pretty(&manifest)?;
        json.push(b'\n');
        fs::write(dir.join(format!("{stem}.json")), json)?;
        fs::write(dir.join(format!("{stem}.bin")), self.to_blob())?;
        Ok(())
    }

    pub fn load(dir: &Path, stem: &str) -> Result<(ParamStore, CheckpointManifest)> {
        let json = fs::read(dir.join(format!("{stem}.json")))?;
        let blob = fs::read(dir.join(format!("{stem}.bin")))?;
        decode_checkpoint(&json, &blob)
    }
}

/// Parses a manifest + blob pair into a parameter store.
pub fn decode_checkpoint(manifest: &[u8], blob: &[u8]) -> Result<(ParamStore, CheckpointManifest)> {
    let manifest: CheckpointManifest = serde_json::from_slice(manifest)?;
    if manifest.format != CHECKPOINT_FORMAT {
        return Err(TensorError::Checkpoint(format!(
            "unsupported format `{}`",
            manifest.format
        )));
    }
    if !blob.len().is_multiple_of(8) {
        return Err(TensorError::Checkpoint(format!(
            "blob length {} is not a multiple of 8",
            blob.len()
        )));
    }
    let mut store = ParamStore::new();
    let mut offset = 0usize;
    for entry in &manifest.params {
        let len = entry
            .shape
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| TensorError::Checkpoint(format!("shape overflow in `{}`", entry.name)))?;
        let bytes = len
            .checked_mul(8)
            .and_then(|b| b.checked_add(offset))
            .filter(|&end| end <= blob.len())
            .ok_or_else(|| TensorError::Checkpoint(format!("blob too short for `{}`", entry.name)))?;
        let data = blob[offset..bytes]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        offset = bytes;
        store.add(entry.name.clone(), Tensor::new(entry.shape.clone(), data)?)?;
    }
    if offset != blob.len() {
        return Err(TensorError::Checkpoint(format!(
            "{} trailing bytes in blob",
            blob.len() - offset
        )));
    }
    Ok((store, manifest))
}
