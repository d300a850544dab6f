use std::collections::BTreeMap;

use headlab_tensor::Tensor;
use serde::{Deserialize, Serialize};

use crate::corpus::{Span, SubtokenMap};
use crate::error::{LabError, Result};

/// `H = A·V` at subtoken level, then one row per word: the mean of its
/// subtoken rows.
pub fn attended_values(a: &Tensor, v: &Tensor, map: &SubtokenMap) -> Result<Tensor> {
    map.validate()?;
    if a.shape() != [map.len, map.len] || v.rows() != map.len || !v.is_matrix() {
        return Err(LabError::Probe(format!(
            "attention {:?} and values {:?} do not fit a {}-subtoken map",
            a.shape(),
            v.shape(),
            map.len
        )));
    }
    let h = a.matmul(v)?;
    let d = v.cols();
    let mut out = Tensor::zeros(&[map.words(), d]);
    for (w, &(b, e)) in map.ranges.iter().enumerate() {
        let row = out.row_slice_mut(w);
        for r in b..e {
            for (o, x) in row.iter_mut().zip(h.row_slice(r)) {
                *o += x;
            }
        }
        row.iter_mut().for_each(|x| *x /= (e - b) as f64);
    }
    Ok(out)
}

/// Mean of word rows `begin..=end`.
pub fn span_vector(h: &Tensor, span: &Span) -> Result<Vec<f64>> {
    if span.begin > span.end || span.end >= h.rows() {
        return Err(LabError::Probe(format!(
            "span ({}, {}) outside a {}-word sentence",
            span.begin,
            span.end,
            h.rows()
        )));
    }
    let mut v = vec![0.0; h.cols()];
    for r in span.begin..=span.end {
        for (o, x) in v.iter_mut().zip(h.row_slice(r)) {
            *o += x;
        }
    }
    let w = span.width() as f64;
    v.iter_mut().for_each(|x| *x /= w);
    Ok(v)
}

/// Per-label sums and counts; centroids are `sum / count`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LabelCentroids {
    pub sums: BTreeMap<String, Vec<f64>>,
    pub counts: BTreeMap<String, usize>,
}

impl LabelCentroids {
    pub fn add(&mut self, label: &str, v: &[f64]) -> Result<()> {
        let sum = self.sums.entry(label.to_string()).or_insert_with(|| vec![0.0; v.len()]);
        if sum.len() != v.len() {
            return Err(LabError::Probe(format!(
                "vector of {} dims for a {}-dim centroid",
                v.len(),
                sum.len()
            )));
        }
        for (s, x) in sum.iter_mut().zip(v) {
            *s += x;
        }
        *self.counts.entry(label.to_string()).or_insert(0) += 1;
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.sums.is_empty()
    }

    pub fn centroid(&self, label: &str) -> Option<Vec<f64>> {
        let n = *self.counts.get(label)? as f64;
        Some(self.sums[label].iter().map(|s| s / n).collect())
    }

    /// Labels in id order with their centroids.
    pub fn centroids(&self) -> Vec<(&str, Vec<f64>)> {
        self.sums
            .keys()
            .map(|l| (l.as_str(), self.centroid(l).expect("count exists")))
            .collect()
    }
}

/// Accumulates `mean(H_b..H_e)` per gold span label.
pub fn pseudo_cluster<'a>(items: impl IntoIterator<Item = (&'a str, &'a [f64])>) -> Result<LabelCentroids> {
    let mut c = LabelCentroids::default();
    for (label, v) in items {
        c.add(label, v)?;
    }
    Ok(c)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Cosine similarity; 0 when either side has zero norm.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / (na * nb)
}

/// Label of the most cosine-similar centroid, ties to the label that sorts
/// first. `None` for a zero-norm vector or no centroids.
pub fn av_probe<'a>(centroids: &'a [(&'a str, Vec<f64>)], v: &[f64]) -> Option<(&'a str, f64)> {
    if norm(v) == 0.0 {
        return None;
    }
    let mut best: Option<(&str, f64)> = None;
    for (label, c) in centroids {
        let s = cosine(c, v);
        if best.is_none_or(|b| s > b.1) {
            best = Some((label, s));
        }
    }
    best
}

/// Constituents directly above the part-of-speech layer: spans that
/// strictly contain no other gold span. Unary chains over one extent are
/// all kept since spans alone cannot order them.
pub fn height3(spans: &[Span]) -> Vec<Span> {
    spans
        .iter()
        .filter(|s| {
            !spans
                .iter()
                .any(|o| s.begin <= o.begin && o.end <= s.end && (o.begin, o.end) != (s.begin, s.end))
        })
        .cloned()
        .collect()
}
