use std::collections::{BTreeMap, VecDeque};

use rand::Rng;

use crate::error::{LabError, Result};
use crate::task::Task;

pub const SAMPLING_EXPONENT: f64 = 0.8;
pub const BALANCE_WINDOW: usize = 5;

/// Draws tasks with probability proportional to `|D_t|^0.8`.
#[derive(Debug, Clone)]
pub struct TaskSampler {
    tasks: Vec<Task>,
    probs: Vec<f64>,
}

impl TaskSampler {
    pub fn new(sizes: &[(Task, usize)]) -> Result<Self> {
        if sizes.is_empty() {
            return Err(LabError::Train("cannot sample from an empty task set".into()));
        }
        if let Some((t, _)) = sizes.iter().find(|(_, n)| *n == 0) {
            return Err(LabError::Train(format!("{t} has no training sentences")));
        }
        let w: Vec<f64> = sizes.iter().map(|&(_, n)| (n as f64).powf(SAMPLING_EXPONENT)).collect();
        let total: f64 = w.iter().sum();
        Ok(TaskSampler {
            tasks: sizes.iter().map(|s| s.0).collect(),
            probs: w.iter().map(|x| x / total).collect(),
        })
    }

    pub fn tasks(&self) -> &[Task] {
        &self.tasks
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Task {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (t, p) in self.tasks.iter().zip(&self.probs) {
            acc += p;
            if u < acc {
                return *t;
            }
        }
        *self.tasks.last().expect("non-empty")
    }
}

pub fn sample_task<R: Rng + ?Sized>(sizes: &[(Task, usize)], rng: &mut R) -> Result<Task> {
    Ok(TaskSampler::new(sizes)?.sample(rng))
}

/// Running averages of the last few raw losses per task.
#[derive(Debug, Clone, Default)]
pub struct LossBalancer {
    buffers: BTreeMap<Task, VecDeque<f64>>,
}

impl LossBalancer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn average(&self, task: Task) -> Option<f64> {
        self.buffers
            .get(&task)
            .filter(|b| !b.is_empty())
            .map(|b| b.iter().sum::<f64>() / b.len() as f64)
    }

    /// `Σ_i L̄_i / L̄_t` without recording anything. A task seen for the
    /// first time uses `loss` as its own average.
    pub fn weight(&self, task: Task, loss: f64) -> Result<f64> {
        if !loss.is_finite() || loss < 0.0 {
            return Err(LabError::Train(format!(
                "{task} loss {loss} is not a finite non-negative value"
            )));
        }
        let own = self.average(task).unwrap_or(loss);
        let others: f64 = self
            .buffers
            .keys()
            .filter(|&&t| t != task)
            .filter_map(|&t| self.average(t))
            .sum();
        if own <= 0.0 {
            return Ok(1.0);
        }
        Ok((others + own) / own)
    }

    pub fn push(&mut self, task: Task, loss: f64) {
        let b = self.buffers.entry(task).or_default();
        if b.len() == BALANCE_WINDOW {
            b.pop_front();
        }
        b.push_back(loss);
    }

    /// Returns `L'_t` and then records `L_t`.
    pub fn balance(&mut self, task: Task, loss: f64) -> Result<f64> {
        let w = self.weight(task, loss)?;
        self.push(task, loss);
        Ok(w * loss)
    }
}
