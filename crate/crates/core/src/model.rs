//! Encoder, gates and task heads bundled over one parameter store.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use headlab_tensor::{Graph, ParamStore, Var};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Annotations, Sentence, Vocab};
use crate::encoder::{word_dropout, word_embed, word_embed_tensor, Encoder, EncoderConfig, EvalEncoder};
use crate::error::{LabError, Result};
use crate::gates::{GateConfig, GateParams};
use crate::heads::{evaluate, HeadConfig, LabelSet, TaskHead, TaskScore};
use crate::rng::{substream, Stream};
use crate::task::Task;

pub const MODEL_FILE: &str = "model.json";
pub const WEIGHTS_STEM: &str = "weights";

/// Everything except the weights needed to rebuild a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub encoder: EncoderConfig,
    pub heads: HeadConfig,
    pub gates: GateConfig,
    pub vocab: Vocab,
    pub labels: BTreeMap<Task, LabelSet>,
    /// Eval uses learned gates; otherwise every head is fully open.
    pub gated: bool,
}

#[derive(Debug, Clone)]
pub struct Model {
    pub spec: ModelSpec,
    pub store: ParamStore,
    pub encoder: Encoder,
    pub heads: BTreeMap<Task, TaskHead>,
}

impl Model {
    /// Fresh weights drawn from the run's init substream.
    pub fn init(spec: ModelSpec, seed: u64) -> Result<Self> {
        spec.gates.validate()?;
        if spec.labels.is_empty() {
            return Err(LabError::Train("model needs at least one task".into()));
        }
        let mut rng = substream(seed, Stream::Init);
        let mut store = ParamStore::new();
        let encoder = Encoder::init(
            &mut store,
            spec.encoder,
            spec.vocab.len(),
            spec.gates.alpha_init,
            &mut rng,
        )?;
        let mut heads = BTreeMap::new();
        for (&task, labels) in &spec.labels {
            let h = TaskHead::init(
                &mut store,
                task,
                labels.clone(),
                spec.encoder.d_model,
                &spec.heads,
                &mut rng,
            )?;
            heads.insert(task, h);
        }
        Ok(Model {
            spec,
            store,
            encoder,
            heads,
        })
    }

    pub fn bind(spec: ModelSpec, store: ParamStore) -> Result<Self> {
        let encoder = Encoder::bind(&store, spec.encoder)?;
        if store.get(encoder.gate_alpha).data().len() != spec.encoder.total_heads() {
            return Err(LabError::Train("gate logits do not match encoder".into()));
        }
        let mut heads = BTreeMap::new();
        for (&task, labels) in &spec.labels {
            let h = TaskHead::bind(&store, task, labels.clone(), spec.encoder.d_model, &spec.heads)?;
            heads.insert(task, h);
        }
        Ok(Model {
            spec,
            store,
            encoder,
            heads,
        })
    }

    pub fn tasks(&self) -> Vec<Task> {
        self.heads.keys().copied().collect()
    }

    pub fn head(&self, task: Task) -> Result<&TaskHead> {
        self.heads
            .get(&task)
            .ok_or_else(|| LabError::Train(format!("model has no {task} head")))
    }

    pub fn gate_params(&self) -> GateParams {
        let c = &self.spec.encoder;
        GateParams::from_alpha(
            c.layers,
            c.heads,
            self.encoder.gate_alpha(&self.store).to_vec(),
            self.spec.gates.l,
            self.spec.gates.r,
        )
        .expect("alpha length checked at bind")
    }

    /// Gate values used at inference.
    pub fn eval_gates(&self) -> Vec<f64> {
        if self.spec.gated {
            self.gate_params().eval()
        } else {
            vec![1.0; self.spec.encoder.total_heads()]
        }
    }

    /// Expected gate value per head, row-major by layer.
    pub fn utilization(&self) -> Vec<f64> {
        self.gate_params().expected()
    }

    /// Percentage of heads whose eval gate is positive.
    pub fn heads_kept(&self) -> f64 {
        let e = self.gate_params().eval();
        100.0 * e.iter().filter(|&&z| z > 0.0).count() as f64 / e.len() as f64
    }

    pub fn eval_encoder(&self) -> Result<EvalEncoder> {
        EvalEncoder::new(&self.store, &self.encoder, self.eval_gates())
    }

    /// Subtoken ids with sentinels; errors if the sentence is too long.
    pub fn subtokens(&self, s: &Sentence) -> Result<(Vec<usize>, crate::corpus::SubtokenMap)> {
        let (ids, map) = self.spec.vocab.encode(&s.tokens);
        self.encoder.check_input(&ids)?;
        Ok((ids, map))
    }

    pub fn fits(&self, s: &Sentence) -> bool {
        !s.is_empty() && self.subtokens(s).is_ok()
    }

    /// Decodes `tasks` for one sentence with the prepared encoder.
    pub fn predict_with(
        &self,
        ev: &EvalEncoder,
        s: &Sentence,
        tasks: &[Task],
        skip_pruned: bool,
    ) -> Result<Annotations> {
        let (ids, map) = self.subtokens(s)?;
        let (hidden, _) = ev.encode(&ids, skip_pruned, false)?;
        let (words, root) = word_embed_tensor(&hidden, &map)?;
        let mut out = Annotations::default();
        for &t in tasks {
            let a = self.head(t)?.predict(&self.store, &words, &root)?;
            merge(&mut out, a);
        }
        Ok(out)
    }

    /// Predictions for every sentence, computed in parallel, in input order.
    pub fn predict_all(&self, sentences: &[Sentence], tasks: &[Task]) -> Result<Vec<Annotations>> {
        let ev = self.eval_encoder()?;
        sentences
            .par_iter()
            .map(|s| self.predict_with(&ev, s, tasks, true))
            .collect()
    }

    pub fn evaluate(&self, sentences: &[Sentence], task: Task) -> Result<TaskScore> {
        let subset: Vec<Sentence> = sentences.iter().filter(|s| task.annotated(s)).cloned().collect();
        let preds = self.predict_all(&subset, &[task])?;
        evaluate(task, subset.iter().map(|s| &s.gold).zip(preds.iter()))
    }

    /// Records one sentence's task loss. `gates` is the sampled `1 × ℓ`
    /// gate row or `None` for open heads; `rng` enables word and hidden
    /// dropout.
    pub fn sentence_loss<R: Rng + ?Sized>(
        &self,
        g: &mut Graph,
        s: &Sentence,
        task: Task,
        gates: Option<Var>,
        rng: Option<&mut R>,
    ) -> Result<Var> {
        let (mut ids, map) = self.subtokens(s)?;
        let hidden = match rng {
            Some(rng) => {
                ids = word_dropout(&ids, self.spec.encoder.word_dropout, &mut *rng);
                self.encoder.forward(g, &self.store, &ids, gates, Some(rng))?
            }
            None => self.encoder.forward::<R>(g, &self.store, &ids, gates, None)?,
        };
        let (words, root) = word_embed(g, hidden, &map)?;
        self.head(task)?.loss(g, &self.store, words, root, s)
    }

    pub fn save(&self, dir: &Path, seed: u64, step: u64) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(MODEL_FILE), serde_json::to_string_pretty(&self.spec)?)?;
        let extra = serde_json::json!({ "gates": self.gate_params().records() });
        self.store.save(dir, WEIGHTS_STEM, seed, step, extra)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let spec: ModelSpec = serde_json::from_str(&fs::read_to_string(dir.join(MODEL_FILE))?)?;
        let (store, _) = ParamStore::load(dir, WEIGHTS_STEM)?;
        Model::bind(spec, store)
    }
}

fn merge(into: &mut Annotations, from: Annotations) {
    into.pos = into.pos.take().or(from.pos);
    into.ner = into.ner.take().or(from.ner);
    into.dep = into.dep.take().or(from.dep);
    into.con = into.con.take().or(from.con);
    into.srl = into.srl.take().or(from.srl);
}
