use headlab_tensor::Tensor;
use serde::{Deserialize, Serialize};

use crate::corpus::{Arc, Frame, SubtokenMap};
use crate::error::{LabError, Result};
use crate::heads::argmax;

/// How subtoken attention collapses onto words.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Merge {
    /// Mean over a word's query rows, sum over its key columns.
    #[default]
    MeanSum,
    /// Mean on both sides.
    PureMean,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProbeOptions {
    pub merge: Merge,
    /// Keep the `[BOS]` position as unit 0 standing for the root, so arcs
    /// attached to the root can be probed.
    pub keep_bos: bool,
}

impl ProbeOptions {
    /// Index of word `i` in a merged matrix.
    pub fn offset(&self) -> usize {
        usize::from(self.keep_bos)
    }
}

/// Collapses a subtoken attention matrix to words, dropping sentinels
/// (except `[BOS]` when kept). Rows are renormalized over the kept columns;
/// a row with no mass left becomes uniform.
pub fn merge_attention(a: &Tensor, map: &SubtokenMap, opts: ProbeOptions) -> Result<Tensor> {
    map.validate()?;
    if a.shape() != [map.len, map.len] {
        return Err(LabError::Probe(format!(
            "attention of shape {:?} does not match a {}-subtoken map",
            a.shape(),
            map.len
        )));
    }
    let mut units: Vec<(usize, usize)> = Vec::with_capacity(map.words() + 1);
    if opts.keep_bos {
        units.push((map.bos(), map.bos() + 1));
    }
    units.extend_from_slice(&map.ranges);
    let k = units.len();
    let mut out = Tensor::zeros(&[k, k]);
    for (i, &(rb, re)) in units.iter().enumerate() {
        let row = out.row_slice_mut(i);
        for (j, &(cb, ce)) in units.iter().enumerate() {
            let mut acc = 0.0;
            for r in rb..re {
                acc += a.row_slice(r)[cb..ce].iter().sum::<f64>();
            }
            acc /= (re - rb) as f64;
            if opts.merge == Merge::PureMean {
                acc /= (ce - cb) as f64;
            }
            row[j] = acc;
        }
        let total: f64 = row.iter().sum();
        if total > 0.0 {
            row.iter_mut().for_each(|x| *x /= total);
        } else {
            row.fill(1.0 / k as f64);
        }
    }
    Ok(out)
}

/// Most-attended unit per row, ties to the lowest index.
pub fn row_argmax(m: &Tensor) -> Vec<usize> {
    (0..m.rows()).map(|r| argmax(m.row_slice(r))).collect()
}

/// Per gold arc `(h, d)`: its relation and whether `g_h = d` or `g_d = h`.
/// Arcs to the root count only when `g` includes the root as unit 0.
pub fn dep_hits<'a>(g: &[usize], arcs: &'a [Arc], keep_bos: bool) -> Vec<(&'a str, bool)> {
    let off = usize::from(keep_bos);
    arcs.iter()
        .enumerate()
        .filter_map(|(d, arc)| {
            let h = match arc.head_index() {
                Some(h) => h + off,
                None if keep_bos => 0,
                None => return None,
            };
            let d = d + off;
            Some((arc.rel.as_str(), g[h] == d || g[d] == h))
        })
        .collect()
}

/// Fraction of probed arcs recovered; `None` when no arc is probed.
pub fn dep_probe(g: &[usize], arcs: &[Arc], keep_bos: bool) -> Option<f64> {
    ratio(&dep_hits(g, arcs, keep_bos))
}

/// Per (predicate, argument): its role and whether the predicate attends
/// into the span or some span word attends to the predicate.
pub fn srl_hits<'a>(g: &[usize], frames: &'a [Frame], keep_bos: bool) -> Vec<(&'a str, bool)> {
    let off = usize::from(keep_bos);
    let mut out = Vec::new();
    for f in frames {
        let p = f.predicate + off;
        for arg in &f.args {
            let (b, e) = (arg.begin + off, arg.end + off);
            let hit = (b..=e).contains(&g[p]) || (b..=e).any(|t| g[t] == p);
            out.push((arg.label.as_str(), hit));
        }
    }
    out
}

pub fn srl_probe(g: &[usize], frames: &[Frame], keep_bos: bool) -> Option<f64> {
    ratio(&srl_hits(g, frames, keep_bos))
}

fn ratio(hits: &[(&str, bool)]) -> Option<f64> {
    (!hits.is_empty()).then(|| hits.iter().filter(|h| h.1).count() as f64 / hits.len() as f64)
}
