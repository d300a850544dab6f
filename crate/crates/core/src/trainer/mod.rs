//! Single- and multi-task training with static or dynamic head pruning.

mod grid;
mod sampler;
mod throughput;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use headlab_tensor::{AdamConfig, AdamState, Graph, ParamStore, Var};
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use grid::{grid_configs, grid_plans, mean_std, run_grid, GridCell, GridConfigRun, GridReport, GridRun, Setting};
pub use sampler::{sample_task, LossBalancer, TaskSampler, BALANCE_WINDOW, SAMPLING_EXPONENT};
pub use throughput::{throughput, Throughput};

use crate::corpus::{Sentence, Vocab, VocabConfig};
use crate::encoder::EncoderConfig;
use crate::error::{LabError, Result};
use crate::gates::{draw_uniforms, l0_penalty_graph, sample_gates_graph, GateConfig};
use crate::heads::{HeadConfig, LabelSet};
use crate::model::{Model, ModelSpec};
use crate::rng::{substream, Stream};
use crate::task::Task;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "stl")]
    Stl,
    #[serde(rename = "mtl-pair")]
    MtlPair,
    /// Every listed task at once.
    #[serde(rename = "mtl-5", alias = "mtl-all")]
    MtlAll,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pruning {
    None,
    Sp,
    Dp,
}

/// Everything that determines a training run except the corpus and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainPlan {
    pub tasks: Vec<Task>,
    pub mode: Mode,
    pub pruning: Pruning,
    /// Weight of the mean expected gate `Σ_j E[z_j] / ℓ` in the objective.
    pub lambda: f64,
    pub epochs: usize,
    /// Second-stage epochs of static pruning.
    pub gate_epochs: usize,
    /// Static pruning also updates encoder weights in its second stage.
    pub sp_train_encoder: bool,
    /// Linear warm-up length in optimizer steps.
    pub warmup: usize,
    pub batch_size: usize,
    /// Batches per epoch; defaults to one pass over the pooled training sets.
    pub steps_per_epoch: Option<usize>,
    pub seeds: Vec<u64>,
    pub encoder_lr: f64,
    pub decoder_lr: f64,
    pub gate_lr: f64,
    pub dev_fraction: f64,
    pub split_seed: u64,
    pub encoder: EncoderConfig,
    pub heads: HeadConfig,
    pub gates: GateConfig,
    pub vocab: VocabConfig,
}

impl Default for TrainPlan {
    fn default() -> Self {
        TrainPlan {
            tasks: vec![Task::Pos],
            mode: Mode::Stl,
            pruning: Pruning::None,
            lambda: 0.0,
            epochs: 30,
            gate_epochs: 10,
            sp_train_encoder: false,
            warmup: 10,
            batch_size: 32,
            steps_per_epoch: None,
            seeds: vec![1, 2, 3],
            encoder_lr: 5e-5,
            decoder_lr: 1e-3,
            gate_lr: 0.05,
            dev_fraction: 0.1,
            split_seed: 0,
            encoder: EncoderConfig::default(),
            heads: HeadConfig::default(),
            gates: GateConfig::default(),
            vocab: VocabConfig::default(),
        }
    }
}

impl TrainPlan {
    /// Settings for training the toy encoder from scratch on one core.
    pub fn desk() -> Self {
        TrainPlan {
            epochs: 6,
            gate_epochs: 3,
            warmup: 20,
            batch_size: 16,
            encoder_lr: 1e-3,
            decoder_lr: 1e-3,
            gate_lr: 0.05,
            ..TrainPlan::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(LabError::Train(m));
        if self.tasks.is_empty() {
            return bad("plan lists no tasks".into());
        }
        let mut seen = self.tasks.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.tasks.len() {
            return bad("plan lists a task twice".into());
        }
        match (self.mode, self.tasks.len()) {
            (Mode::Stl, 1) | (Mode::MtlPair, 2) => {}
            (Mode::MtlAll, n) if n >= 2 => {}
            (m, n) => return bad(format!("mode {m:?} does not fit {n} task(s)")),
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda {} must be finite and non-negative", self.lambda));
        }
        if self.epochs == 0 || self.batch_size == 0 || self.seeds.is_empty() {
            return bad("epochs, batch_size and seeds must be non-empty".into());
        }
        if self.pruning == Pruning::Sp && self.gate_epochs == 0 {
            return bad("static pruning needs gate_epochs > 0".into());
        }
        for lr in [self.encoder_lr, self.decoder_lr, self.gate_lr] {
            if !(lr > 0.0 && lr.is_finite()) {
                return bad(format!("learning rate {lr} must be positive"));
            }
        }
        if !(0.0..1.0).contains(&self.dev_fraction) {
            return bad(format!("dev_fraction {} outside [0, 1)", self.dev_fraction));
        }
        self.encoder.validate()?;
        self.heads.validate()?;
        self.gates.validate()?;
        Ok(())
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn config_hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("plan serializes");
        Sha256::digest(bytes).iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    /// Short run label, e.g. `pos+dep-dp`.
    pub fn label(&self) -> String {
        let tasks: Vec<&str> = self.tasks.iter().map(|t| t.name()).collect();
        let p = match self.pruning {
            Pruning::None => "",
            Pruning::Sp => "-sp",
            Pruning::Dp => "-dp",
        };
        format!("{}{p}", tasks.join("+"))
    }
}

/// Deterministic train / dev split of the corpus.
pub fn split_corpus(corpus: &[Sentence], dev_fraction: f64, split_seed: u64) -> (Vec<Sentence>, Vec<Sentence>) {
    let mut idx: Vec<usize> = (0..corpus.len()).collect();
    idx.shuffle(&mut substream(split_seed, Stream::Data));
    let mut n_dev = (dev_fraction * corpus.len() as f64).round() as usize;
    if dev_fraction > 0.0 && n_dev == 0 && corpus.len() >= 2 {
        n_dev = 1;
    }
    let (dev, train) = idx.split_at(n_dev.min(corpus.len()));
    let mut dev = dev.to_vec();
    let mut train = train.to_vec();
    dev.sort_unstable();
    train.sort_unstable();
    (
        train.into_iter().map(|i| corpus[i].clone()).collect(),
        dev.into_iter().map(|i| corpus[i].clone()).collect(),
    )
}

/// Expected gate values of one trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilizationGrid {
    pub run: String,
    pub tasks: Vec<Task>,
    pub layers: usize,
    pub heads: usize,
    /// Row-major by layer.
    pub values: Vec<f64>,
}

impl UtilizationGrid {
    pub fn from_model(model: &Model, run: impl Into<String>) -> Self {
        UtilizationGrid {
            run: run.into(),
            tasks: model.tasks(),
            layers: model.spec.encoder.layers,
            heads: model.spec.encoder.heads,
            values: model.utilization(),
        }
    }

    pub fn get(&self, layer: usize, head: usize) -> f64 {
        self.values[layer * self.heads + head]
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.len() != self.layers * self.heads || self.values.is_empty() {
            return Err(LabError::Analysis(format!(
                "grid {} holds {} values for {}x{} heads",
                self.run,
                self.values.len(),
                self.layers,
                self.heads
            )));
        }
        if let Some(v) = self.values.iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
            return Err(LabError::Analysis(format!(
                "grid {} has utilization {v} outside (0, 1)",
                self.run
            )));
        }
        Ok(())
    }

    pub fn task_label(&self) -> String {
        self.tasks.iter().map(|t| t.name()).collect::<Vec<_>>().join("+")
    }

    /// `layer,head,run,task,expected_z` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("layer,head,run,task,expected_z\n");
        let task = self.task_label();
        for l in 0..self.layers {
            for h in 0..self.heads {
                let _ = writeln!(out, "{l},{h},{},{task},{}", self.run, self.get(l, h));
            }
        }
        out
    }

    pub fn read_csv(text: &str) -> Result<Vec<UtilizationGrid>> {
        let mut grids: Vec<UtilizationGrid> = Vec::new();
        let mut cells: BTreeMap<(String, String), BTreeMap<(usize, usize), f64>> = BTreeMap::new();
        for (i, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            let err = || LabError::Analysis(format!("utilization csv line {}: malformed row `{line}`", i + 1));
            if cols.len() != 5 {
                return Err(err());
            }
            let l: usize = cols[0].parse().map_err(|_| err())?;
            let h: usize = cols[1].parse().map_err(|_| err())?;
            let z: f64 = cols[4].parse().map_err(|_| err())?;
            cells
                .entry((cols[2].to_string(), cols[3].to_string()))
                .or_default()
                .insert((l, h), z);
        }
        for ((run, task), m) in cells {
            // Indices beyond the cell count cannot form a full grid; checking
            // first keeps the products below from overflowing.
            let layers = m.keys().map(|k| k.0).max().map_or(0, |x| x.saturating_add(1));
            let heads = m.keys().map(|k| k.1).max().map_or(0, |x| x.saturating_add(1));
            if layers > m.len() || heads > m.len() || m.len() != layers * heads {
                return Err(LabError::Analysis(format!(
                    "utilization csv for run {run} is not a full grid"
                )));
            }
            let tasks = task
                .split('+')
                .map(|t| t.parse())
                .collect::<std::result::Result<Vec<Task>, _>>()?;
            grids.push(UtilizationGrid {
                run,
                tasks,
                layers,
                heads,
                values: m.into_values().collect(),
            });
        }
        Ok(grids)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// `train` for the main stage, `gates` for the second static-pruning stage.
    pub stage: String,
    pub steps: usize,
    pub mean_loss: f64,
    pub l0: f64,
    pub dev: BTreeMap<Task, f64>,
    pub selection: f64,
    pub heads_kept: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub plan: TrainPlan,
    pub seed: u64,
    pub model: Model,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub dev: BTreeMap<Task, f64>,
    pub heads_kept: f64,
    pub utilization: UtilizationGrid,
    /// Sentences dropped for exceeding the encoder length.
    pub skipped: usize,
    pub train_sentences: usize,
    pub dev_sentences: usize,
}

/// Final per-run summary written as `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub label: String,
    pub tasks: Vec<Task>,
    pub mode: Mode,
    pub pruning: Pruning,
    pub seed: u64,
    pub lambda: f64,
    pub best_epoch: usize,
    pub dev: BTreeMap<Task, f64>,
    pub heads_kept: f64,
    pub l0: f64,
    pub skipped: usize,
    pub train_sentences: usize,
    pub dev_sentences: usize,
    pub config_hash: String,
}

impl RunOutcome {
    pub fn report(&self) -> RunReport {
        RunReport {
            label: self.plan.label(),
            tasks: self.plan.tasks.clone(),
            mode: self.plan.mode,
            pruning: self.plan.pruning,
            seed: self.seed,
            lambda: self.plan.lambda,
            best_epoch: self.best_epoch,
            dev: self.dev.clone(),
            heads_kept: self.heads_kept,
            l0: self.model.utilization().iter().sum(),
            skipped: self.skipped,
            train_sentences: self.train_sentences,
            dev_sentences: self.dev_sentences,
            config_hash: self.plan.config_hash(),
        }
    }

    /// Checkpoint, plan, utilization CSV, per-epoch metrics and final report.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let plan = TrainPlan {
            seeds: vec![self.seed],
            ..self.plan.clone()
        };
        fs::write(dir.join("plan.json"), serde_json::to_string_pretty(&plan)?)?;
        self.model
            .save(dir, self.seed, self.history.iter().map(|h| h.steps as u64).sum())?;
        fs::write(dir.join("utilization.csv"), self.utilization.to_csv())?;
        let mut metrics = String::new();
        for r in &self.history {
            metrics.push_str(&serde_json::to_string(r)?);
            metrics.push('\n');
        }
        fs::write(dir.join("metrics.jsonl"), metrics)?;
        fs::write(dir.join("report.json"), serde_json::to_string_pretty(&self.report())?)?;
        Ok(())
    }
}

struct Prepared {
    train: Vec<Sentence>,
    dev: Vec<Sentence>,
    by_task: BTreeMap<Task, Vec<usize>>,
    spec: ModelSpec,
    skipped: usize,
}

fn prepare(plan: &TrainPlan, corpus: &[Sentence]) -> Result<Prepared> {
    let (train, dev) = split_corpus(corpus, plan.dev_fraction, plan.split_seed);
    let vocab = Vocab::build(&train, plan.vocab)?;
    let mut labels = BTreeMap::new();
    for &t in &plan.tasks {
        labels.insert(t, LabelSet::from_corpus(t, &train)?);
    }
    let spec = ModelSpec {
        encoder: plan.encoder,
        heads: plan.heads,
        gates: plan.gates,
        vocab,
        labels,
        gated: plan.pruning == Pruning::Dp,
    };
    let probe = Model::init(spec.clone(), 0)?;
    let fits = |s: &Sentence| probe.fits(s) && label_known(&spec, s, &plan.tasks);
    let before = train.len() + dev.len();
    let train: Vec<Sentence> = train.into_iter().filter(|s| fits(s)).collect();
    let dev: Vec<Sentence> = dev.into_iter().filter(|s| fits(s)).collect();
    let skipped = before - train.len() - dev.len();
    let mut by_task = BTreeMap::new();
    for &t in &plan.tasks {
        let idx: Vec<usize> = (0..train.len()).filter(|&i| t.annotated(&train[i])).collect();
        if idx.is_empty() {
            return Err(LabError::Train(format!("corpus has no usable {t} training sentences")));
        }
        by_task.insert(t, idx);
    }
    Ok(Prepared {
        train,
        dev,
        by_task,
        spec,
        skipped,
    })
}

/// Dev sentences may carry labels never seen in training; those are skipped.
fn label_known(spec: &ModelSpec, s: &Sentence, tasks: &[Task]) -> bool {
    tasks.iter().all(|t| {
        let ls = &spec.labels[t];
        let ok = |l: &str| ls.index(l).is_ok();
        let g = &s.gold;
        match t {
            Task::Pos => g.pos.iter().flatten().all(|x| ok(x)),
            Task::Ner => g.ner.iter().flatten().all(|x| ok(&x.label)),
            Task::Dep => g.dep.iter().flatten().all(|x| ok(&x.rel)),
            Task::Con => g.con.iter().flatten().all(|x| ok(&x.label)),
            Task::Srl => g.srl.iter().flatten().flat_map(|f| &f.args).all(|x| ok(&x.label)),
        }
    })
}

/// What one optimization stage updates.
#[derive(Debug, Clone, Copy)]
struct StageSpec {
    sample_gates: bool,
    train_encoder: bool,
    train_heads: bool,
    train_alpha: bool,
}

struct Loop<'a> {
    plan: &'a TrainPlan,
    data: &'a Prepared,
    cursors: BTreeMap<Task, (Vec<usize>, usize)>,
    data_rng: ChaCha8Rng,
    dropout_rng: ChaCha8Rng,
    gate_rng: ChaCha8Rng,
    sampler_rng: ChaCha8Rng,
    sampler: TaskSampler,
    balancer: LossBalancer,
    step: usize,
}

impl<'a> Loop<'a> {
    fn new(plan: &'a TrainPlan, data: &'a Prepared, seed: u64) -> Result<Self> {
        let sizes: Vec<(Task, usize)> = data.by_task.iter().map(|(&t, v)| (t, v.len())).collect();
        Ok(Loop {
            plan,
            data,
            cursors: BTreeMap::new(),
            data_rng: substream(seed, Stream::Data),
            dropout_rng: substream(seed, Stream::Dropout),
            gate_rng: substream(seed, Stream::Gates),
            sampler_rng: substream(seed, Stream::Sampler),
            sampler: TaskSampler::new(&sizes)?,
            balancer: LossBalancer::new(),
            step: 0,
        })
    }

    fn steps_per_epoch(&self) -> usize {
        self.plan.steps_per_epoch.unwrap_or_else(|| {
            let pooled: usize = self.data.by_task.values().map(Vec::len).sum();
            pooled.div_ceil(self.plan.batch_size)
        })
    }

    fn next_batch(&mut self, task: Task) -> Vec<usize> {
        let pool = &self.data.by_task[&task];
        let bs = self.plan.batch_size.min(pool.len());
        let rng = &mut self.data_rng;
        let (order, pos) = self.cursors.entry(task).or_insert_with(|| (Vec::new(), 0));
        let mut out = Vec::with_capacity(bs);
        while out.len() < bs {
            if *pos >= order.len() {
                *order = pool.clone();
                order.shuffle(rng);
                *pos = 0;
            }
            out.push(order[*pos]);
            *pos += 1;
        }
        out
    }

    fn lr_scale(&self) -> f64 {
        if self.plan.warmup == 0 {
            1.0
        } else {
            ((self.step + 1) as f64 / self.plan.warmup as f64).min(1.0)
        }
    }

    /// One optimizer step on a batch of `task`; returns the raw batch loss.
    fn step(&mut self, model: &mut Model, adam: &mut AdamState, task: Task, stage: StageSpec) -> Result<f64> {
        let batch = self.next_batch(task);
        let cfg = model.spec.gates;
        let mut g = Graph::new();
        let alpha = g.param(&model.store, model.encoder.gate_alpha);
        let gates = if stage.sample_gates {
            let u = draw_uniforms(&mut self.gate_rng, model.spec.encoder.total_heads());
            Some(sample_gates_graph(&mut g, alpha, &u, cfg.l, cfg.r)?)
        } else {
            None
        };
        let mut losses: Vec<Var> = Vec::with_capacity(batch.len());
        for &i in &batch {
            let s = &self.data.train[i];
            losses.push(model.sentence_loss(&mut g, s, task, gates, Some(&mut self.dropout_rng))?);
        }
        let stacked = g.concat_rows(&losses)?;
        let mean = g.mean(stacked);
        let raw = g.value(mean).item();
        let weight = self
            .balancer
            .weight(task, raw)
            .map_err(|e| LabError::Train(format!("step {}: {e}; aborting run", self.step)))?;
        self.balancer.push(task, raw);
        let mut total = g.scale(mean, weight);
        if stage.sample_gates {
            let pen = l0_penalty_graph(&mut g, alpha, cfg.l, cfg.r);
            let pen = g.scale(pen, self.plan.lambda / model.spec.encoder.total_heads() as f64);
            total = g.add(total, pen)?;
        }
        if !g.value(total).item().is_finite() {
            return Err(LabError::Train(format!(
                "non-finite objective at step {} ({task})",
                self.step
            )));
        }
        let grads = g.grad(total, &model.store)?;
        let scale = self.lr_scale();
        let lrs = learning_rates(model, task, stage, self.plan, scale);
        adam.step(&mut model.store, &grads, |id| lrs[id.0])?;
        self.step += 1;
        Ok(raw)
    }

    fn sample(&mut self) -> Task {
        self.sampler.sample(&mut self.sampler_rng)
    }
}

fn learning_rates(model: &Model, task: Task, stage: StageSpec, plan: &TrainPlan, scale: f64) -> Vec<Option<f64>> {
    let head = &model.heads[&task];
    model
        .store
        .ids()
        .map(|id| {
            let name = model.store.name(id);
            if id == model.encoder.gate_alpha {
                stage.train_alpha.then_some(plan.gate_lr * scale)
            } else if name.starts_with("encoder.") {
                stage.train_encoder.then_some(plan.encoder_lr * scale)
            } else if head.owns(&model.store, id) {
                stage.train_heads.then_some(plan.decoder_lr * scale)
            } else {
                None
            }
        })
        .collect()
}

fn dev_scores(model: &Model, dev: &[Sentence], tasks: &[Task]) -> Result<(BTreeMap<Task, f64>, f64)> {
    let mut out = BTreeMap::new();
    for &t in tasks {
        let score = if dev.iter().any(|s| t.annotated(s)) {
            model.evaluate(dev, t)?.score
        } else {
            0.0
        };
        out.insert(t, score);
    }
    let sel = out.values().sum::<f64>() / out.len() as f64;
    Ok((out, sel))
}

fn run_epochs(
    lp: &mut Loop,
    model: &mut Model,
    stage: StageSpec,
    epochs: usize,
    name: &str,
    history: &mut Vec<EpochRecord>,
    select: bool,
) -> Result<Option<(usize, ParamStore)>> {
    let mut adam = AdamState::new(&model.store, AdamConfig::default());
    let tasks = lp.plan.tasks.clone();
    let steps = lp.steps_per_epoch();
    let mut best: Option<(f64, usize, ParamStore)> = None;
    for epoch in 1..=epochs {
        let mut total = 0.0;
        for _ in 0..steps {
            let t = if tasks.len() == 1 { tasks[0] } else { lp.sample() };
            total += lp.step(model, &mut adam, t, stage)?;
        }
        let (dev, selection) = dev_scores(model, &lp.data.dev, &tasks)?;
        history.push(EpochRecord {
            epoch: history.len() + 1,
            stage: name.to_string(),
            steps,
            mean_loss: total / steps as f64,
            l0: model.utilization().iter().sum(),
            dev,
            selection,
            heads_kept: model.heads_kept(),
        });
        if select && best.as_ref().is_none_or(|b| selection >= b.0) {
            best = Some((selection, epoch, model.store.clone()));
        }
    }
    Ok(best.map(|(_, e, s)| (e, s)))
}

/// Trains one run of `plan` with `seed`.
pub fn train_run(plan: &TrainPlan, corpus: &[Sentence], seed: u64) -> Result<RunOutcome> {
    plan.validate()?;
    let data = prepare(plan, corpus)?;
    let mut model = Model::init(data.spec.clone(), seed)?;
    let mut lp = Loop::new(plan, &data, seed)?;
    let mut history = Vec::new();
    let main = StageSpec {
        sample_gates: plan.pruning == Pruning::Dp,
        train_encoder: true,
        train_heads: true,
        train_alpha: plan.pruning == Pruning::Dp,
    };
    let (mut best_epoch, best) =
        run_epochs(&mut lp, &mut model, main, plan.epochs, "train", &mut history, true)?.expect("at least one epoch");
    model.store = best;

    if plan.pruning == Pruning::Sp {
        model.spec.gated = true;
        let gates_only = StageSpec {
            sample_gates: true,
            train_encoder: plan.sp_train_encoder,
            train_heads: false,
            train_alpha: true,
        };
        run_epochs(
            &mut lp,
            &mut model,
            gates_only,
            plan.gate_epochs,
            "gates",
            &mut history,
            false,
        )?;
        best_epoch = history.len();
    }

    let (dev, _) = dev_scores(&model, &data.dev, &plan.tasks)?;
    let utilization = UtilizationGrid::from_model(&model, format!("{}-s{seed}", plan.label()));
    Ok(RunOutcome {
        plan: plan.clone(),
        seed,
        heads_kept: model.heads_kept(),
        model,
        history,
        best_epoch,
        dev,
        utilization,
        skipped: data.skipped,
        train_sentences: data.train.len(),
        dev_sentences: data.dev.len(),
    })
}

/// Trains every seed of the plan, in order.
pub fn train(plan: &TrainPlan, corpus: &[Sentence]) -> Result<Vec<RunOutcome>> {
    plan.seeds.iter().map(|&s| train_run(plan, corpus, s)).collect()
}
