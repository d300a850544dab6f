//! Random probe instances and brute-force oracles shared by integration
//! tests. Attention rows are multiples of 1/8 and values are small integers
//! so that every intermediate quantity is exact or computed in the same
//! order as the library, and agreement can be asserted bit for bit.

#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::{BTreeMap, BTreeSet};

use headlab::corpus::{Arc, Frame, Sentence, Span, SubtokenMap};
use headlab::encoder::{AttentionSnapshot, SnapshotRecord};
use headlab::probes::{Merge, ProbeOptions, ProbeRun};
use headlab::Task;
use headlab_tensor::Tensor;
use rand::Rng;

pub struct Instance {
    pub corpus: Vec<Sentence>,
    pub runs: Vec<ProbeRun>,
    pub layers: usize,
    pub heads: usize,
}

fn random_span<R: Rng>(rng: &mut R, n: usize) -> (usize, usize) {
    let b = rng.random_range(0..n);
    let e = rng.random_range(b..n);
    (b, e)
}

pub fn random_sentence<R: Rng>(rng: &mut R, max_words: usize) -> Sentence {
    let n = rng.random_range(1..=max_words);
    let mut s = Sentence::new((0..n).map(|i| format!("w{i}")).collect());
    let tags = ["A", "B", "C"];
    s.gold.pos = Some((0..n).map(|_| tags[rng.random_range(0..3)].to_string()).collect());
    s.gold.dep = Some(
        (0..n)
            .map(|d| {
                let mut h = rng.random_range(-1..n as i64);
                if h == d as i64 {
                    h = -1;
                }
                let rel = if h < 0 {
                    "root"
                } else {
                    ["x", "y"][rng.random_range(0..2)]
                };
                Arc::new(h, rel)
            })
            .collect(),
    );
    let mut ner = Vec::new();
    let mut i = 0;
    while i < n {
        if rng.random_bool(0.4) {
            let e = rng.random_range(i..n.min(i + 3));
            ner.push(Span::new(i, e, ["P", "Q"][rng.random_range(0..2)]));
            i = e + 1;
        } else {
            i += 1;
        }
    }
    s.gold.ner = Some(ner);
    let mut con: Vec<Span> = (0..rng.random_range(0..4))
        .map(|_| {
            let (b, e) = random_span(rng, n);
            Span::new(b, e, ["NP", "VP"][rng.random_range(0..2)])
        })
        .collect();
    con.sort();
    con.dedup_by(|a, b| (a.begin, a.end) == (b.begin, b.end));
    s.gold.con = Some(con);
    let frames = (0..rng.random_range(0..3))
        .map(|_| Frame {
            predicate: rng.random_range(0..n),
            args: (0..rng.random_range(1..3))
                .map(|_| {
                    let (b, e) = random_span(rng, n);
                    Span::new(b, e, ["ARG0", "ARG1"][rng.random_range(0..2)])
                })
                .collect(),
        })
        .collect();
    s.gold.srl = Some(frames);
    s
}

/// Rows of eighths, so sums and word merges are exact.
fn dyadic_attention<R: Rng>(rng: &mut R, len: usize) -> Tensor {
    let mut t = Tensor::zeros(&[len, len]);
    for r in 0..len {
        for _ in 0..8 {
            let c = rng.random_range(0..len);
            let v = t.get(r, c);
            t.set(r, c, v + 0.125);
        }
    }
    t
}

pub fn random_instance<R: Rng>(rng: &mut R, max_words: usize, max_heads: usize) -> Instance {
    let total = rng.random_range(1..=max_heads);
    let (layers, heads) = if total % 2 == 0 && rng.random_bool(0.5) {
        (2, total / 2)
    } else {
        (1, total)
    };
    let corpus: Vec<Sentence> = (0..rng.random_range(1..=4))
        .map(|_| random_sentence(rng, max_words))
        .collect();
    let d_k = rng.random_range(1..=3);
    let runs = (0..rng.random_range(1..=3))
        .map(|r| {
            let records = corpus
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    let mut ranges = Vec::new();
                    let mut pos = 1;
                    for _ in 0..s.len() {
                        let w = rng.random_range(1..=2);
                        ranges.push((pos, pos + w));
                        pos += w;
                    }
                    let len = pos + 1;
                    SnapshotRecord {
                        sentence: i,
                        map: SubtokenMap { ranges, len },
                        snapshot: AttentionSnapshot {
                            layers,
                            heads,
                            seq_len: len,
                            d_k,
                            attention: (0..total).map(|_| dyadic_attention(rng, len)).collect(),
                            values: (0..total)
                                .map(|_| {
                                    let data = (0..len * d_k).map(|_| rng.random_range(-3..=3) as f64).collect();
                                    Tensor::new(vec![len, d_k], data).unwrap()
                                })
                                .collect(),
                        },
                    }
                })
                .collect();
            ProbeRun {
                name: format!("run{r}"),
                records,
            }
        })
        .collect();
    Instance {
        corpus,
        runs,
        layers,
        heads,
    }
}

/// Word-level attention via explicit pooling matrices `P·A·Q`.
pub fn oracle_merge(a: &Tensor, map: &SubtokenMap, opts: ProbeOptions) -> Vec<Vec<f64>> {
    let mut units: Vec<Vec<usize>> = Vec::new();
    if opts.keep_bos {
        units.push(vec![0]);
    }
    for &(b, e) in &map.ranges {
        units.push((b..e).collect());
    }
    let k = units.len();
    let len = map.len;
    let mut p = vec![vec![0.0; len]; k];
    let mut q = vec![vec![0.0; k]; len];
    for (u, members) in units.iter().enumerate() {
        for &m in members {
            p[u][m] = 1.0 / members.len() as f64;
            q[m][u] = match opts.merge {
                Merge::MeanSum => 1.0,
                Merge::PureMean => 1.0 / members.len() as f64,
            };
        }
    }
    let mut out = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in 0..k {
            for r in 0..len {
                for c in 0..len {
                    out[i][j] += p[i][r] * a.get(r, c) * q[c][j];
                }
            }
        }
        let s: f64 = out[i].iter().sum();
        for x in out[i].iter_mut() {
            *x = if s > 0.0 { *x / s } else { 1.0 / k as f64 };
        }
    }
    out
}

pub fn oracle_argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in row.iter().enumerate() {
        if x > row[best] {
            best = i;
        }
    }
    best
}

/// `(label, hit)` per probed DEP arc, by direct evaluation of the formula.
pub fn oracle_dep(g: &[usize], s: &Sentence, keep_bos: bool) -> Vec<(String, bool)> {
    let off = usize::from(keep_bos);
    let mut out = Vec::new();
    for (d, arc) in s.gold.dep.iter().flatten().enumerate() {
        let h = if arc.head < 0 {
            if !keep_bos {
                continue;
            }
            0
        } else {
            arc.head as usize + off
        };
        let dd = d + off;
        out.push((arc.rel.clone(), g[h] == dd || g[dd] == h));
    }
    out
}

pub fn oracle_srl(g: &[usize], s: &Sentence, keep_bos: bool) -> Vec<(String, bool)> {
    let off = usize::from(keep_bos);
    let mut out = Vec::new();
    for f in s.gold.srl.iter().flatten() {
        let p = f.predicate + off;
        for a in &f.args {
            let t: BTreeSet<usize> = (a.begin + off..=a.end + off).collect();
            let hit = t.contains(&g[p]) || t.iter().any(|&x| g[x] == p);
            out.push((a.label.clone(), hit));
        }
    }
    out
}

fn oracle_spans(task: Task, s: &Sentence) -> Vec<Span> {
    match task {
        Task::Pos => s
            .gold
            .pos
            .iter()
            .flatten()
            .enumerate()
            .map(|(i, t)| Span::new(i, i, t.clone()))
            .collect(),
        Task::Ner => s.gold.ner.clone().unwrap_or_default(),
        Task::Con => {
            let all = s.gold.con.clone().unwrap_or_default();
            all.iter()
                .filter(|x| {
                    !all.iter()
                        .any(|y| x.begin <= y.begin && y.end <= x.end && y.width() < x.width())
                })
                .cloned()
                .collect()
        }
        _ => unreachable!(),
    }
}

/// Word-level attended values: `A·V` row by row, then subtoken means.
fn oracle_h(a: &Tensor, v: &Tensor, map: &SubtokenMap) -> Vec<Vec<f64>> {
    let d = v.cols();
    let mut h = vec![vec![0.0; d]; map.len];
    for r in 0..map.len {
        for k in 0..map.len {
            for c in 0..d {
                h[r][c] += a.get(r, k) * v.get(k, c);
            }
        }
    }
    map.ranges
        .iter()
        .map(|&(b, e)| {
            let mut w = vec![0.0; d];
            for row in &h[b..e] {
                for c in 0..d {
                    w[c] += row[c];
                }
            }
            w.iter().map(|x| x / (e - b) as f64).collect()
        })
        .collect()
}

fn oracle_cos(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// `(label, hit)` per span with a nonzero vector, centroids from all spans.
pub fn oracle_av(task: Task, corpus: &[Sentence], run: &ProbeRun, j: usize) -> Vec<(String, bool)> {
    let mut items: Vec<(String, Vec<f64>)> = Vec::new();
    for rec in &run.records {
        let s = &corpus[rec.sentence];
        let h = oracle_h(&rec.snapshot.attention[j], &rec.snapshot.values[j], &rec.map);
        for sp in oracle_spans(task, s) {
            let mut v = vec![0.0; h[0].len()];
            for row in &h[sp.begin..=sp.end] {
                for (o, x) in v.iter_mut().zip(row) {
                    *o += x;
                }
            }
            let w = (sp.end - sp.begin + 1) as f64;
            items.push((sp.label.clone(), v.iter().map(|x| x / w).collect()));
        }
    }
    let mut groups: BTreeMap<String, Vec<&Vec<f64>>> = BTreeMap::new();
    for (l, v) in &items {
        groups.entry(l.clone()).or_default().push(v);
    }
    let cents: Vec<(String, Vec<f64>)> = groups
        .iter()
        .map(|(l, vs)| {
            let mut c = vec![0.0; vs[0].len()];
            for v in vs {
                for (o, x) in c.iter_mut().zip(v.iter()) {
                    *o += x;
                }
            }
            (l.clone(), c.iter().map(|x| x / vs.len() as f64).collect())
        })
        .collect();
    let mut out = Vec::new();
    for (l, v) in &items {
        if v.iter().all(|x| *x == 0.0) {
            continue;
        }
        let sims: Vec<f64> = cents.iter().map(|(_, c)| oracle_cos(c, v)).collect();
        let best = oracle_argmax(&sims);
        out.push((l.clone(), cents[best].0 == *l));
    }
    out
}

/// Per label: `[run][head]` accuracies, computed by looping over heads,
/// labels and sentences.
pub fn oracle_accuracies(inst: &Instance, task: Task, opts: ProbeOptions) -> BTreeMap<String, Vec<Vec<f64>>> {
    let n = inst.layers * inst.heads;
    let mut hits: Vec<Vec<Vec<(String, bool)>>> = Vec::new();
    for run in &inst.runs {
        let mut per_head = Vec::new();
        for j in 0..n {
            let h = match task {
                Task::Dep | Task::Srl => {
                    let mut all = Vec::new();
                    for rec in &run.records {
                        let s = &inst.corpus[rec.sentence];
                        let m = oracle_merge(&rec.snapshot.attention[j], &rec.map, opts);
                        let g: Vec<usize> = m.iter().map(|r| oracle_argmax(r)).collect();
                        all.extend(if task == Task::Dep {
                            oracle_dep(&g, s, opts.keep_bos)
                        } else {
                            oracle_srl(&g, s, opts.keep_bos)
                        });
                    }
                    all
                }
                _ => oracle_av(task, &inst.corpus, run, j),
            };
            per_head.push(h);
        }
        hits.push(per_head);
    }
    let labels: BTreeSet<String> = hits.iter().flatten().flatten().map(|h| h.0.clone()).collect();
    labels
        .into_iter()
        .map(|l| {
            let acc = hits
                .iter()
                .map(|run| {
                    run.iter()
                        .map(|h| {
                            let mine: Vec<bool> = h.iter().filter(|x| x.0 == l).map(|x| x.1).collect();
                            if mine.is_empty() {
                                0.0
                            } else {
                                mine.iter().filter(|&&b| b).count() as f64 / mine.len() as f64
                            }
                        })
                        .collect()
                })
                .collect();
            (l, acc)
        })
        .collect()
}

/// Mean over runs of the best head per run.
pub fn oracle_selected(acc: &[Vec<f64>]) -> f64 {
    acc.iter()
        .map(|r| r.iter().copied().fold(f64::MIN, f64::max))
        .sum::<f64>()
        / acc.len() as f64
}
