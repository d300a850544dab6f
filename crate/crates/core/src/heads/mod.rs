//! Task decoders: a linear tagger for POS, a biaffine arc scorer for DEP,
//! biaffine span labelers for NER and CON, and a span-pair ranker for SRL.
//! All of them read word vectors produced by `encoder::word_embed`.

mod decode;
mod metrics;

use std::collections::BTreeSet;

use headlab_tensor::{Graph, ParamId, ParamStore, Tensor, Var};
use rand::RngCore;
use serde::{Deserialize, Serialize};

pub use decode::{argmax, greedy_spans, span_candidates, top_k, SpanConflict};
pub use metrics::{evaluate, headline, score_sentence, Counts, TaskScore};

use crate::corpus::{Annotations, Arc, Frame, Sentence, Span};
use crate::encoder::{uniform, xavier};
use crate::error::{LabError, Result};
use crate::task::Task;

/// Reserved label index 0 of every span and role classifier.
pub const NONE: &str = "NONE";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HeadConfig {
    /// Width of the biaffine projections.
    pub proj_dim: usize,
    /// Longest NER / CON candidate span in words.
    pub span_max_width: usize,
    pub srl_max_width: usize,
    pub width_dim: usize,
    pub predicate_ratio: f64,
    pub argument_ratio: f64,
}

impl Default for HeadConfig {
    fn default() -> Self {
        HeadConfig {
            proj_dim: 64,
            span_max_width: 8,
            srl_max_width: 30,
            width_dim: 20,
            predicate_ratio: 0.4,
            argument_ratio: 0.8,
        }
    }
}

impl HeadConfig {
    pub fn validate(&self) -> Result<()> {
        if self.proj_dim == 0 || self.span_max_width == 0 || self.srl_max_width == 0 || self.width_dim == 0 {
            return Err(LabError::Head(format!("degenerate head config {self:?}")));
        }
        for r in [self.predicate_ratio, self.argument_ratio] {
            if !(r > 0.0 && r <= 1.0) {
                return Err(LabError::Head(format!("pruning ratio {r} outside (0, 1]")));
            }
        }
        Ok(())
    }
}

/// Ordered label inventory of one task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LabelSet {
    labels: Vec<String>,
}

impl LabelSet {
    pub fn new(labels: Vec<String>) -> Result<Self> {
        let unique: BTreeSet<&String> = labels.iter().collect();
        if unique.len() != labels.len() {
            return Err(LabError::Head("duplicate label in inventory".into()));
        }
        if labels.iter().any(|l| l == NONE) {
            return Err(LabError::Head(format!("`{NONE}` is reserved")));
        }
        Ok(LabelSet { labels })
    }

    /// Sorted labels found in the gold annotations of `task`.
    pub fn from_corpus(task: Task, sentences: &[Sentence]) -> Result<Self> {
        let mut set = BTreeSet::new();
        for s in sentences {
            let g = &s.gold;
            match task {
                Task::Pos => set.extend(g.pos.iter().flatten().cloned()),
                Task::Ner => set.extend(g.ner.iter().flatten().map(|s| s.label.clone())),
                Task::Dep => set.extend(g.dep.iter().flatten().map(|a| a.rel.clone())),
                Task::Con => set.extend(g.con.iter().flatten().map(|s| s.label.clone())),
                Task::Srl => set.extend(
                    g.srl
                        .iter()
                        .flatten()
                        .flat_map(|f| f.args.iter().map(|a| a.label.clone())),
                ),
            }
        }
        if set.is_empty() {
            return Err(LabError::Head(format!("corpus has no {task} labels")));
        }
        LabelSet::new(set.into_iter().collect())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| LabError::Head(format!("label `{label}` not in inventory")))
    }
}

#[derive(Clone, Copy)]
enum Fill {
    Xavier,
    Zeros,
    Uniform(f64),
}

/// Either registers fresh parameters or looks up existing ones by name.
enum Setup<'a> {
    Init(&'a mut ParamStore, &'a mut dyn RngCore),
    Bind(&'a ParamStore),
}

impl Setup<'_> {
    fn param(&mut self, name: &str, rows: usize, cols: usize, fill: Fill) -> Result<ParamId> {
        match self {
            Setup::Init(store, rng) => {
                let t = match fill {
                    Fill::Xavier => xavier(&mut **rng, rows, cols),
                    Fill::Zeros => Tensor::zeros(&[rows, cols]),
                    Fill::Uniform(b) => uniform(&mut **rng, rows, cols, b),
                };
                Ok(store.add(name, t)?)
            }
            Setup::Bind(store) => {
                let id = store.id(name)?;
                if store.get(id).shape() != [rows, cols] {
                    return Err(LabError::Head(format!(
                        "parameter {name} has shape {:?}, expected [{rows}, {cols}]",
                        store.get(id).shape()
                    )));
                }
                Ok(id)
            }
        }
    }
}

fn linear(g: &mut Graph, store: &ParamStore, x: Var, w: ParamId, b: ParamId) -> Result<Var> {
    let w = g.param(store, w);
    let b = g.param(store, b);
    let y = g.matmul(x, w)?;
    Ok(g.add_row(y, b)?)
}

/// `score_k(i, j) = lᵢᵀ U_k rⱼ + u_kᵀ[lᵢ; rⱼ] + b_k` over projected vectors.
#[derive(Debug, Clone)]
pub struct Biaffine {
    wl: ParamId,
    bl: ParamId,
    wr: ParamId,
    br: ParamId,
    /// `a × (a·k)`: the k bilinear maps side by side.
    u: ParamId,
    ul: ParamId,
    ur: ParamId,
    b: ParamId,
    dim: usize,
    outputs: usize,
}

/// Bilinear matrices per output plus the additive left / right terms.
struct BiaffineParts {
    bilinear: Vec<Var>,
    left: Var,
    right: Var,
}

impl Biaffine {
    fn setup(s: &mut Setup, prefix: &str, d: usize, a: usize, k: usize) -> Result<Self> {
        Ok(Biaffine {
            wl: s.param(&format!("{prefix}.wl"), d, a, Fill::Xavier)?,
            bl: s.param(&format!("{prefix}.bl"), 1, a, Fill::Zeros)?,
            wr: s.param(&format!("{prefix}.wr"), d, a, Fill::Xavier)?,
            br: s.param(&format!("{prefix}.br"), 1, a, Fill::Zeros)?,
            u: s.param(&format!("{prefix}.u"), a, a * k, Fill::Uniform(0.1))?,
            ul: s.param(&format!("{prefix}.ul"), a, k, Fill::Zeros)?,
            ur: s.param(&format!("{prefix}.ur"), a, k, Fill::Zeros)?,
            b: s.param(&format!("{prefix}.b"), 1, k, Fill::Zeros)?,
            dim: a,
            outputs: k,
        })
    }

    fn parts(&self, g: &mut Graph, store: &ParamStore, left: Var, right: Var) -> Result<BiaffineParts> {
        let pl = linear(g, store, left, self.wl, self.bl)?;
        let pr = linear(g, store, right, self.wr, self.br)?;
        let u = g.param(store, self.u);
        let lu = g.matmul(pl, u)?;
        let mut bilinear = Vec::with_capacity(self.outputs);
        for k in 0..self.outputs {
            let part = g.slice_cols(lu, k * self.dim, (k + 1) * self.dim)?;
            bilinear.push(g.matmul_t(part, pr)?);
        }
        let left = linear(g, store, pl, self.ul, self.b)?;
        let ur = g.param(store, self.ur);
        let right = g.matmul(pr, ur)?;
        Ok(BiaffineParts { bilinear, left, right })
    }
}

#[derive(Debug, Clone)]
struct PosHead {
    w: ParamId,
    b: ParamId,
}

#[derive(Debug, Clone)]
struct DepHead {
    arc: Biaffine,
    rel_w: ParamId,
    rel_b: ParamId,
}

#[derive(Debug, Clone)]
struct SpanHead {
    scorer: Biaffine,
    max_width: usize,
    conflict: SpanConflict,
}

#[derive(Debug, Clone)]
struct SrlHead {
    pred_w: ParamId,
    pred_b: ParamId,
    arg_w: ParamId,
    arg_b: ParamId,
    width_emb: ParamId,
    role_w: ParamId,
    role_b: ParamId,
    max_width: usize,
    predicate_ratio: f64,
    argument_ratio: f64,
}

#[derive(Debug, Clone)]
enum HeadKind {
    Pos(PosHead),
    Dep(DepHead),
    Span(SpanHead),
    Srl(SrlHead),
}

/// One task decoder bound to parameters named `head.<task>.*`.
#[derive(Debug, Clone)]
pub struct TaskHead {
    pub task: Task,
    pub labels: LabelSet,
    kind: HeadKind,
}

impl TaskHead {
    pub fn init(
        store: &mut ParamStore,
        task: Task,
        labels: LabelSet,
        d: usize,
        config: &HeadConfig,
        rng: &mut dyn RngCore,
    ) -> Result<Self> {
        Self::setup(&mut Setup::Init(store, rng), task, labels, d, config)
    }

    pub fn bind(store: &ParamStore, task: Task, labels: LabelSet, d: usize, config: &HeadConfig) -> Result<Self> {
        Self::setup(&mut Setup::Bind(store), task, labels, d, config)
    }

    fn setup(s: &mut Setup, task: Task, labels: LabelSet, d: usize, cfg: &HeadConfig) -> Result<Self> {
        cfg.validate()?;
        if labels.is_empty() {
            return Err(LabError::Head(format!("{task} head needs at least one label")));
        }
        let p = |name: &str| format!("head.{}.{name}", task.name());
        let k = labels.len();
        let kind = match task {
            Task::Pos => HeadKind::Pos(PosHead {
                w: s.param(&p("w"), d, k, Fill::Xavier)?,
                b: s.param(&p("b"), 1, k, Fill::Zeros)?,
            }),
            Task::Dep => HeadKind::Dep(DepHead {
                arc: Biaffine::setup(s, &p("arc"), d, cfg.proj_dim, 1)?,
                rel_w: s.param(&p("rel.w"), 2 * d, k, Fill::Xavier)?,
                rel_b: s.param(&p("rel.b"), 1, k, Fill::Zeros)?,
            }),
            Task::Ner | Task::Con => HeadKind::Span(SpanHead {
                scorer: Biaffine::setup(s, &p("span"), d, cfg.proj_dim, k + 1)?,
                max_width: cfg.span_max_width,
                conflict: if task == Task::Ner {
                    SpanConflict::Overlap
                } else {
                    SpanConflict::Cross
                },
            }),
            Task::Srl => HeadKind::Srl(SrlHead {
                pred_w: s.param(&p("pred.w"), d, 1, Fill::Xavier)?,
                pred_b: s.param(&p("pred.b"), 1, 1, Fill::Zeros)?,
                arg_w: s.param(&p("arg.w"), d + cfg.width_dim, 1, Fill::Xavier)?,
                arg_b: s.param(&p("arg.b"), 1, 1, Fill::Zeros)?,
                width_emb: s.param(&p("width"), cfg.srl_max_width, cfg.width_dim, Fill::Uniform(0.5))?,
                role_w: s.param(&p("role.w"), 2 * d + cfg.width_dim, k + 1, Fill::Xavier)?,
                role_b: s.param(&p("role.b"), 1, k + 1, Fill::Zeros)?,
                max_width: cfg.srl_max_width,
                predicate_ratio: cfg.predicate_ratio,
                argument_ratio: cfg.argument_ratio,
            }),
        };
        Ok(TaskHead { task, labels, kind })
    }

    /// Whether a parameter belongs to this head.
    pub fn owns(&self, store: &ParamStore, id: ParamId) -> bool {
        store.name(id).starts_with(&format!("head.{}.", self.task.name()))
    }

    /// Per-sentence training loss, averaged over the scored units.
    pub fn loss(&self, g: &mut Graph, store: &ParamStore, words: Var, root: Var, gold: &Sentence) -> Result<Var> {
        let n = g.value(words).rows();
        if n != gold.len() || n == 0 {
            return Err(LabError::Head(format!("{} word vectors for {} tokens", n, gold.len())));
        }
        let missing = || LabError::Head(format!("sentence lacks gold {}", self.task));
        match &self.kind {
            HeadKind::Pos(h) => {
                let tags = gold.gold.pos.as_ref().ok_or_else(missing)?;
                let targets = tags.iter().map(|t| self.labels.index(t)).collect::<Result<Vec<_>>>()?;
                let logits = linear(g, store, words, h.w, h.b)?;
                let ce = g.cross_entropy_rows(logits, &targets)?;
                Ok(g.scale(ce, 1.0 / n as f64))
            }
            HeadKind::Dep(h) => {
                let arcs = gold.gold.dep.as_ref().ok_or_else(missing)?;
                let heads: Vec<usize> = arcs.iter().map(|a| a.head_index().map_or(0, |x| x + 1)).collect();
                let rels = arcs
                    .iter()
                    .map(|a| self.labels.index(&a.rel))
                    .collect::<Result<Vec<_>>>()?;
                let (scores, cands) = h.arc_scores(g, store, words, root)?;
                let arc_ce = g.cross_entropy_rows(scores, &heads)?;
                let rel_logits = h.rel_logits(g, store, words, cands, &heads)?;
                let rel_ce = g.cross_entropy_rows(rel_logits, &rels)?;
                let total = g.add(arc_ce, rel_ce)?;
                Ok(g.scale(total, 1.0 / n as f64))
            }
            HeadKind::Span(h) => {
                let spans = match self.task {
                    Task::Ner => gold.gold.ner.as_ref(),
                    _ => gold.gold.con.as_ref(),
                }
                .ok_or_else(missing)?;
                let cands = span_candidates(n, h.max_width);
                let mut targets = vec![0; cands.len()];
                for s in spans {
                    if let Some(i) = cands.iter().position(|&c| c == (s.begin, s.end)) {
                        targets[i] = self.labels.index(&s.label)? + 1;
                    }
                }
                let logits = h.logits(g, store, words, &cands)?;
                let ce = g.cross_entropy_rows(logits, &targets)?;
                Ok(g.scale(ce, 1.0 / cands.len() as f64))
            }
            HeadKind::Srl(h) => {
                let frames = gold.gold.srl.as_ref().ok_or_else(missing)?;
                h.loss(g, store, words, frames, &self.labels)
            }
        }
    }

    /// Greedy decode into this task's annotation field.
    pub fn predict(&self, store: &ParamStore, words: &Tensor, root: &Tensor) -> Result<Annotations> {
        let n = words.rows();
        let mut g = Graph::new();
        let wv = g.constant(words.clone());
        let rv = g.constant(root.clone());
        let mut out = Annotations::default();
        match &self.kind {
            HeadKind::Pos(h) => {
                let logits = linear(&mut g, store, wv, h.w, h.b)?;
                let l = g.value(logits);
                out.pos = Some(
                    (0..n)
                        .map(|i| self.labels.get(argmax(l.row_slice(i))).to_string())
                        .collect(),
                );
            }
            HeadKind::Dep(h) => {
                let (scores, cands) = h.arc_scores(&mut g, store, wv, rv)?;
                let s = g.value(scores).clone();
                let heads: Vec<usize> = (0..n)
                    .map(|i| {
                        let mut row = s.row_slice(i).to_vec();
                        row[i + 1] = f64::NEG_INFINITY;
                        argmax(&row)
                    })
                    .collect();
                let rel_logits = h.rel_logits(&mut g, store, wv, cands, &heads)?;
                let r = g.value(rel_logits);
                out.dep = Some(
                    heads
                        .iter()
                        .enumerate()
                        .map(|(i, &c)| Arc::new(c as i64 - 1, self.labels.get(argmax(r.row_slice(i)))))
                        .collect(),
                );
            }
            HeadKind::Span(h) => {
                let cands = span_candidates(n, h.max_width);
                let logits = h.logits(&mut g, store, wv, &cands)?;
                let spans = decode_labeled(g.value(logits), &cands, &self.labels, h.conflict);
                match self.task {
                    Task::Ner => out.ner = Some(spans),
                    _ => out.con = Some(spans),
                }
            }
            HeadKind::Srl(h) => out.srl = Some(h.predict(&mut g, store, wv, &self.labels)?),
        }
        Ok(out)
    }
}

/// Keeps spans whose best label is not NONE, scored by that label's logit.
fn decode_labeled(logits: &Tensor, cands: &[(usize, usize)], labels: &LabelSet, conflict: SpanConflict) -> Vec<Span> {
    let picked = cands
        .iter()
        .enumerate()
        .filter_map(|(i, &(b, e))| {
            let row = logits.row_slice(i);
            let k = argmax(row);
            (k != 0).then(|| (Span::new(b, e, labels.get(k - 1)), row[k]))
        })
        .collect();
    greedy_spans(picked, conflict)
}

impl DepHead {
    /// Dependent × `[root] ++ words` arc scores and the candidate matrix.
    fn arc_scores(&self, g: &mut Graph, store: &ParamStore, words: Var, root: Var) -> Result<(Var, Var)> {
        let cands = g.concat_rows(&[root, words])?;
        let p = self.arc.parts(g, store, words, cands)?;
        let s = g.add_col(p.bilinear[0], p.left)?;
        let right = g.transpose(p.right)?;
        Ok((g.add_row(s, right)?, cands))
    }

    fn rel_logits(&self, g: &mut Graph, store: &ParamStore, words: Var, cands: Var, heads: &[usize]) -> Result<Var> {
        let hv = g.gather_rows(cands, heads)?;
        let x = g.concat_cols(&[words, hv])?;
        linear(g, store, x, self.rel_w, self.rel_b)
    }
}

impl SpanHead {
    /// Candidate-span × (NONE + labels) logits.
    fn logits(&self, g: &mut Graph, store: &ParamStore, words: Var, cands: &[(usize, usize)]) -> Result<Var> {
        let p = self.scorer.parts(g, store, words, words)?;
        let cols = p
            .bilinear
            .iter()
            .map(|&m| g.gather_entries(m, cands))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let bil = g.concat_cols(&cols)?;
        let starts: Vec<usize> = cands.iter().map(|c| c.0).collect();
        let ends: Vec<usize> = cands.iter().map(|c| c.1).collect();
        let l = g.gather_rows(p.left, &starts)?;
        let r = g.gather_rows(p.right, &ends)?;
        let s = g.add(bil, l)?;
        Ok(g.add(s, r)?)
    }
}

/// Row of the width embedding used for a span of `width` words.
pub fn width_index(width: usize, max_width: usize) -> usize {
    width.clamp(1, max_width) - 1
}

fn ratio_count(ratio: f64, n: usize) -> usize {
    ((ratio * n as f64).ceil() as usize).clamp(1, n.max(1))
}

struct SrlScores {
    cands: Vec<(usize, usize)>,
    pred: Var,
    arg: Var,
    span_mean: Var,
    widths: Var,
}

impl SrlHead {
    fn scores(&self, g: &mut Graph, store: &ParamStore, words: Var) -> Result<SrlScores> {
        let n = g.value(words).rows();
        let cands = span_candidates(n, self.max_width);
        let pred = linear(g, store, words, self.pred_w, self.pred_b)?;
        let groups: Vec<(usize, usize)> = cands.iter().map(|&(b, e)| (b, e + 1)).collect();
        let span_mean = g.mean_row_groups(words, &groups)?;
        let table = g.param(store, self.width_emb);
        let widx: Vec<usize> = cands
            .iter()
            .map(|&(b, e)| width_index(e - b + 1, self.max_width))
            .collect();
        let widths = g.gather_rows(table, &widx)?;
        let feats = g.concat_cols(&[span_mean, widths])?;
        let arg = linear(g, store, feats, self.arg_w, self.arg_b)?;
        Ok(SrlScores {
            cands,
            pred,
            arg,
            span_mean,
            widths,
        })
    }

    /// Role logits for every (predicate, candidate-span index) pair.
    fn role_logits(
        &self,
        g: &mut Graph,
        store: &ParamStore,
        words: Var,
        sc: &SrlScores,
        pairs: &[(usize, usize)],
    ) -> Result<Var> {
        let preds: Vec<usize> = pairs.iter().map(|p| p.0).collect();
        let spans: Vec<usize> = pairs.iter().map(|p| p.1).collect();
        let pv = g.gather_rows(words, &preds)?;
        let sv = g.gather_rows(sc.span_mean, &spans)?;
        let wv = g.gather_rows(sc.widths, &spans)?;
        let x = g.concat_cols(&[pv, sv, wv])?;
        linear(g, store, x, self.role_w, self.role_b)
    }

    fn pruned(&self, g: &Graph, sc: &SrlScores, n: usize) -> (Vec<usize>, Vec<usize>) {
        let preds = top_k(g.value(sc.pred).data(), ratio_count(self.predicate_ratio, n));
        let args = top_k(g.value(sc.arg).data(), ratio_count(self.argument_ratio, n));
        (preds, args)
    }

    /// Predicate BCE + argument-span BCE + role cross-entropy over pruned
    /// pairs. Gold predicates and spans always join the candidate pool.
    fn loss(&self, g: &mut Graph, store: &ParamStore, words: Var, frames: &[Frame], labels: &LabelSet) -> Result<Var> {
        let n = g.value(words).rows();
        let sc = self.scores(g, store, words)?;
        let mut is_pred = vec![0.0; n];
        let mut is_arg = vec![0.0; sc.cands.len()];
        let mut gold_roles = Vec::new();
        for f in frames {
            is_pred[f.predicate] = 1.0;
            for a in &f.args {
                if let Some(i) = sc.cands.iter().position(|&c| c == (a.begin, a.end)) {
                    is_arg[i] = 1.0;
                    gold_roles.push((f.predicate, i, labels.index(&a.label)? + 1));
                }
            }
        }
        let (mut preds, mut args) = self.pruned(g, &sc, n);
        preds.extend((0..n).filter(|&i| is_pred[i] > 0.0));
        args.extend((0..sc.cands.len()).filter(|&i| is_arg[i] > 0.0));
        preds.sort_unstable();
        preds.dedup();
        args.sort_unstable();
        args.dedup();
        let pairs: Vec<(usize, usize)> = preds.iter().flat_map(|&p| args.iter().map(move |&a| (p, a))).collect();
        let targets: Vec<usize> = pairs
            .iter()
            .map(|&(p, a)| gold_roles.iter().find(|r| r.0 == p && r.1 == a).map_or(0, |r| r.2))
            .collect();

        let pred_bce = g.bce_with_logits(sc.pred, &is_pred)?;
        let pred_bce = g.scale(pred_bce, 1.0 / n as f64);
        let arg_bce = g.bce_with_logits(sc.arg, &is_arg)?;
        let arg_bce = g.scale(arg_bce, 1.0 / sc.cands.len() as f64);
        let roles = self.role_logits(g, store, words, &sc, &pairs)?;
        let role_ce = g.cross_entropy_rows(roles, &targets)?;
        let role_ce = g.scale(role_ce, 1.0 / pairs.len() as f64);
        let s = g.add(pred_bce, arg_bce)?;
        Ok(g.add(s, role_ce)?)
    }

    fn predict(&self, g: &mut Graph, store: &ParamStore, words: Var, labels: &LabelSet) -> Result<Vec<Frame>> {
        let n = g.value(words).rows();
        let sc = self.scores(g, store, words)?;
        let (preds, args) = self.pruned(g, &sc, n);
        let pred_scores = g.value(sc.pred).data().to_vec();
        let mut preds: Vec<usize> = preds.into_iter().filter(|&p| pred_scores[p] > 0.0).collect();
        preds.sort_unstable();
        if preds.is_empty() {
            return Ok(Vec::new());
        }
        let pairs: Vec<(usize, usize)> = preds.iter().flat_map(|&p| args.iter().map(move |&a| (p, a))).collect();
        let roles = self.role_logits(g, store, words, &sc, &pairs)?;
        let r = g.value(roles);
        let mut frames = Vec::with_capacity(preds.len());
        for &p in &preds {
            let picked = pairs
                .iter()
                .enumerate()
                .filter(|(_, pair)| pair.0 == p)
                .filter_map(|(i, &(_, a))| {
                    let row = r.row_slice(i);
                    let k = argmax(row);
                    let (b, e) = sc.cands[a];
                    (k != 0).then(|| (Span::new(b, e, labels.get(k - 1)), row[k]))
                })
                .collect();
            frames.push(Frame {
                predicate: p,
                args: greedy_spans(picked, SpanConflict::Overlap),
            });
        }
        Ok(frames)
    }
}
