//! Parameter-free probes over every attention head.
//!
//! DEP and SRL use attention probes on the word-level row argmax `g`. POS,
//! NER and CON use attended-value probes: span vectors from `H = A·V` are
//! labelled by their nearest per-label centroid under cosine similarity,
//! with centroids accumulated over the same corpus.

mod attention;
mod values;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use attention::{dep_hits, dep_probe, merge_attention, row_argmax, srl_hits, srl_probe, Merge, ProbeOptions};
pub use values::{attended_values, av_probe, cosine, height3, pseudo_cluster, span_vector, LabelCentroids};

use crate::corpus::{Sentence, Span};
use crate::encoder::SnapshotRecord;
use crate::error::{LabError, Result};
use crate::model::Model;
use crate::task::Task;

/// Snapshots of every encodable sentence, computed with all heads.
pub fn capture_snapshots(model: &Model, corpus: &[Sentence]) -> Result<Vec<SnapshotRecord>> {
    let ev = model.eval_encoder()?;
    corpus
        .par_iter()
        .enumerate()
        .filter(|(_, s)| model.fits(s))
        .map(|(i, s)| {
            let (ids, map) = model.subtokens(s)?;
            let (_, snap) = ev.encode(&ids, false, true)?;
            Ok(SnapshotRecord {
                sentence: i,
                map,
                snapshot: snap.expect("capture requested"),
            })
        })
        .collect()
}

/// Snapshots from one trained model.
#[derive(Debug, Clone)]
pub struct ProbeRun {
    pub name: String,
    pub records: Vec<SnapshotRecord>,
}

/// Spans probed by the attended-value method for `task`.
pub fn probe_spans(task: Task, s: &Sentence) -> Vec<Span> {
    let g = &s.gold;
    match task {
        Task::Pos => g
            .pos
            .iter()
            .flatten()
            .enumerate()
            .map(|(i, t)| Span::new(i, i, t.clone()))
            .collect(),
        Task::Ner => g.ner.clone().unwrap_or_default(),
        Task::Con => height3(g.con.as_deref().unwrap_or_default()),
        Task::Dep | Task::Srl => Vec::new(),
    }
}

/// Every gold label the corpus holds for `task`, with its item count.
pub fn label_frequencies(task: Task, corpus: &[Sentence]) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for s in corpus {
        let labels: Vec<String> = match task {
            Task::Dep => s.gold.dep.iter().flatten().map(|a| a.rel.clone()).collect(),
            Task::Srl => s
                .gold
                .srl
                .iter()
                .flatten()
                .flat_map(|f| f.args.iter().map(|a| a.label.clone()))
                .collect(),
            _ => probe_spans(task, s).into_iter().map(|sp| sp.label).collect(),
        };
        for l in labels {
            *out.entry(l).or_insert(0) += 1;
        }
    }
    out
}

/// Per-label (correct, total) for one head over one run.
type Tally = BTreeMap<String, (usize, usize)>;

fn tally(out: &mut Tally, label: &str, hit: bool) {
    let e = out.entry(label.to_string()).or_insert((0, 0));
    e.0 += usize::from(hit);
    e.1 += 1;
}

fn sentence_for<'a>(corpus: &'a [Sentence], rec: &SnapshotRecord) -> Result<&'a Sentence> {
    let s = corpus
        .get(rec.sentence)
        .ok_or_else(|| LabError::Probe(format!("snapshot names sentence {} beyond the corpus", rec.sentence)))?;
    if rec.map.words() != s.len() {
        return Err(LabError::Probe(format!(
            "snapshot of sentence {} covers {} words, corpus has {}",
            rec.sentence,
            rec.map.words(),
            s.len()
        )));
    }
    Ok(s)
}

/// Attention-probe tallies for head `j`.
fn attention_tally(
    task: Task,
    corpus: &[Sentence],
    records: &[SnapshotRecord],
    j: usize,
    opts: ProbeOptions,
) -> Result<Tally> {
    let mut out = Tally::new();
    for rec in records {
        let s = sentence_for(corpus, rec)?;
        let m = merge_attention(&rec.snapshot.attention[j], &rec.map, opts)?;
        let g = row_argmax(&m);
        let hits = match task {
            Task::Dep => dep_hits(&g, s.gold.dep.as_deref().unwrap_or_default(), opts.keep_bos),
            _ => srl_hits(&g, s.gold.srl.as_deref().unwrap_or_default(), opts.keep_bos),
        };
        for (l, h) in hits {
            tally(&mut out, l, h);
        }
    }
    Ok(out)
}

/// Attended-value tallies for head `j`, plus the count of zero-norm spans.
fn value_tally(task: Task, corpus: &[Sentence], records: &[SnapshotRecord], j: usize) -> Result<(Tally, usize)> {
    let mut items: Vec<(String, Vec<f64>)> = Vec::new();
    for rec in records {
        let s = sentence_for(corpus, rec)?;
        let h = attended_values(&rec.snapshot.attention[j], &rec.snapshot.values[j], &rec.map)?;
        for sp in probe_spans(task, s) {
            let v = span_vector(&h, &sp)?;
            items.push((sp.label, v));
        }
    }
    let c = pseudo_cluster(items.iter().map(|(l, v)| (l.as_str(), v.as_slice())))?;
    let cents = c.centroids();
    let mut out = Tally::new();
    let mut zero = 0;
    for (l, v) in &items {
        match av_probe(&cents, v) {
            Some((pred, _)) => tally(&mut out, l, pred == l),
            None => zero += 1,
        }
    }
    Ok((out, zero))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelScore {
    pub label: String,
    /// Gold items scored per head.
    pub support: usize,
    /// `[run][layer · heads + head]`.
    pub accuracy: Vec<Vec<f64>>,
    /// Best head per run (ties to the lowest index) and its accuracy.
    pub best_heads: Vec<(usize, f64)>,
    /// Mean over runs of the per-run best accuracy.
    pub selected: f64,
    /// Mean over runs of the best accuracy within each layer.
    pub layer_max: Vec<f64>,
    pub best_layer: usize,
}

impl LabelScore {
    fn build(label: String, support: usize, accuracy: Vec<Vec<f64>>, layers: usize, heads: usize) -> Self {
        let best_heads: Vec<(usize, f64)> = accuracy
            .iter()
            .map(|acc| {
                let j = crate::heads::argmax(acc);
                (j, acc[j])
            })
            .collect();
        let runs = accuracy.len() as f64;
        let selected = best_heads.iter().map(|b| b.1).sum::<f64>() / runs;
        let layer_max: Vec<f64> = (0..layers)
            .map(|l| {
                accuracy
                    .iter()
                    .map(|acc| acc[l * heads..(l + 1) * heads].iter().copied().fold(f64::MIN, f64::max))
                    .sum::<f64>()
                    / runs
            })
            .collect();
        let best_layer = crate::heads::argmax(&layer_max);
        LabelScore {
            label,
            support,
            accuracy,
            best_heads,
            selected,
            layer_max,
            best_layer,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub task: Task,
    pub options: ProbeOptions,
    pub runs: Vec<String>,
    pub layers: usize,
    pub heads: usize,
    /// Most frequent label first.
    pub labels: Vec<LabelScore>,
    /// Every scored item pooled, under the label `*`.
    pub overall: LabelScore,
    /// Gold labels with nothing to score.
    pub omitted: Vec<String>,
    /// Zero-norm span vectors skipped, summed over runs and heads.
    pub zero_norm: usize,
}

/// Probes every head of every run and selects per label.
pub fn probe_all(corpus: &[Sentence], runs: &[ProbeRun], task: Task, opts: ProbeOptions) -> Result<ProbeReport> {
    let first = runs
        .iter()
        .flat_map(|r| r.records.first())
        .next()
        .ok_or_else(|| LabError::Probe("no snapshots to probe".into()))?;
    let (layers, heads) = (first.snapshot.layers, first.snapshot.heads);
    for r in runs {
        if r.records.is_empty() {
            return Err(LabError::Probe(format!("run {} has no snapshots", r.name)));
        }
        if let Some(bad) = r
            .records
            .iter()
            .find(|x| (x.snapshot.layers, x.snapshot.heads) != (layers, heads))
        {
            return Err(LabError::Probe(format!(
                "run {} sentence {} has {}x{} heads, expected {layers}x{heads}",
                r.name, bad.sentence, bad.snapshot.layers, bad.snapshot.heads
            )));
        }
    }
    let n = layers * heads;
    let mut per_run: Vec<Vec<Tally>> = Vec::with_capacity(runs.len());
    let mut zero_norm = 0;
    for r in runs {
        let tallies: Vec<(Tally, usize)> = (0..n)
            .into_par_iter()
            .map(|j| match task {
                Task::Dep | Task::Srl => Ok((attention_tally(task, corpus, &r.records, j, opts)?, 0)),
                _ => value_tally(task, corpus, &r.records, j),
            })
            .collect::<Result<_>>()?;
        zero_norm += tallies.iter().map(|t| t.1).sum::<usize>();
        per_run.push(tallies.into_iter().map(|t| t.0).collect());
    }

    let freq = label_frequencies(task, corpus);
    let mut scored: BTreeMap<&str, usize> = BTreeMap::new();
    for t in per_run.iter().flatten() {
        for (l, &(_, total)) in t {
            let e = scored.entry(l.as_str()).or_insert(0);
            *e = (*e).max(total);
        }
    }
    let acc = |label: Option<&str>| -> Vec<Vec<f64>> {
        per_run
            .iter()
            .map(|heads| {
                heads
                    .iter()
                    .map(|t| {
                        let (c, n) = match label {
                            Some(l) => t.get(l).copied().unwrap_or((0, 0)),
                            None => t.values().fold((0, 0), |a, b| (a.0 + b.0, a.1 + b.1)),
                        };
                        if n == 0 {
                            0.0
                        } else {
                            c as f64 / n as f64
                        }
                    })
                    .collect()
            })
            .collect()
    };
    let mut order: Vec<(&str, usize)> = scored.iter().map(|(l, &s)| (*l, s)).collect();
    order.sort_by(|a, b| freq.get(b.0).cmp(&freq.get(a.0)).then(a.0.cmp(b.0)));
    let labels: Vec<LabelScore> = order
        .iter()
        .map(|&(l, s)| LabelScore::build(l.to_string(), s, acc(Some(l)), layers, heads))
        .collect();
    let total = scored.values().sum();
    let overall = LabelScore::build("*".into(), total, acc(None), layers, heads);
    let omitted = freq
        .keys()
        .filter(|l| !scored.contains_key(l.as_str()))
        .cloned()
        .collect();
    Ok(ProbeReport {
        task,
        options: opts,
        runs: runs.iter().map(|r| r.name.clone()).collect(),
        layers,
        heads,
        labels,
        overall,
        omitted,
        zero_norm,
    })
}

impl ProbeReport {
    pub fn label(&self, label: &str) -> Option<&LabelScore> {
        self.labels.iter().find(|l| l.label == label)
    }

    /// `task,label,support,run,head_layer,head_index,accuracy,selected_score`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("task,label,support,run,head_layer,head_index,accuracy,selected_score\n");
        for ls in self.labels.iter().chain(std::iter::once(&self.overall)) {
            for (r, acc) in ls.accuracy.iter().enumerate() {
                for (j, a) in acc.iter().enumerate() {
                    let _ = writeln!(
                        s,
                        "{},{},{},{},{},{},{},{}",
                        self.task.name(),
                        csv_field(&ls.label),
                        ls.support,
                        csv_field(&self.runs[r]),
                        j / self.heads,
                        j % self.heads,
                        a,
                        ls.selected
                    );
                }
            }
        }
        s
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffRow {
    pub label: String,
    pub frequency: usize,
    pub baseline: f64,
    /// `score(model) − score(baseline)` per model; `None` when the model
    /// lacks the label.
    pub diffs: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffReport {
    pub models: Vec<String>,
    pub rows: Vec<DiffRow>,
    /// `(model, label)` pairs whose label the baseline lacks.
    pub not_comparable: Vec<(String, String)>,
}

/// Signed differences against a baseline, most frequent label first.
pub fn diff_report(
    models: &[(String, ProbeReport)],
    baseline: &ProbeReport,
    frequencies: &BTreeMap<String, usize>,
) -> DiffReport {
    let mut rows: Vec<DiffRow> = baseline
        .labels
        .iter()
        .map(|b| DiffRow {
            label: b.label.clone(),
            frequency: frequencies.get(&b.label).copied().unwrap_or(0),
            baseline: b.selected,
            diffs: models
                .iter()
                .map(|(_, m)| m.label(&b.label).map(|x| x.selected - b.selected))
                .collect(),
        })
        .collect();
    rows.sort_by(|a, b| b.frequency.cmp(&a.frequency).then_with(|| a.label.cmp(&b.label)));
    let not_comparable = models
        .iter()
        .flat_map(|(name, m)| {
            m.labels
                .iter()
                .filter(|l| baseline.label(&l.label).is_none())
                .map(move |l| (name.clone(), l.label.clone()))
        })
        .collect();
    DiffReport {
        models: models.iter().map(|m| m.0.clone()).collect(),
        rows,
        not_comparable,
    }
}

impl DiffReport {
    pub fn to_csv(&self) -> String {
        let mut s = format!(
            "label,frequency,baseline,{}\n",
            self.models.iter().map(|m| csv_field(m)).collect::<Vec<_>>().join(",")
        );
        for r in &self.rows {
            let d: Vec<String> = r
                .diffs
                .iter()
                .map(|d| d.map_or(String::new(), |x| x.to_string()))
                .collect();
            let _ = writeln!(
                s,
                "{},{},{},{}",
                csv_field(&r.label),
                r.frequency,
                r.baseline,
                d.join(",")
            );
        }
        s
    }
}
