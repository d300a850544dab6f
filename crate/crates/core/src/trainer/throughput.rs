use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::corpus::Sentence;
use crate::error::{LabError, Result};
use crate::model::Model;

/// Eval-mode sentences per second over repeated trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Throughput {
    pub trials: Vec<f64>,
    pub median: f64,
}

impl Throughput {
    /// Coefficient of variation of the trial rates.
    pub fn cv(&self) -> f64 {
        let n = self.trials.len() as f64;
        let mean = self.trials.iter().sum::<f64>() / n;
        let var = self.trials.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        var.sqrt() / mean
    }
}

/// Encodes and decodes every task of `model` on one thread, skipping heads
/// whose eval gate is 0. Each trial repeats whole passes over `sentences`
/// until at least `min_time` has elapsed.
pub fn throughput(model: &Model, sentences: &[Sentence], trials: usize, min_time: Duration) -> Result<Throughput> {
    let usable: Vec<&Sentence> = sentences.iter().filter(|s| model.fits(s)).collect();
    if usable.is_empty() {
        return Err(LabError::Train(
            "throughput needs at least one encodable sentence".into(),
        ));
    }
    if trials == 0 {
        return Err(LabError::Train("throughput needs at least one trial".into()));
    }
    let ev = model.eval_encoder()?;
    let tasks = model.tasks();
    // Warm caches once so the first trial is not an outlier.
    for s in &usable {
        model.predict_with(&ev, s, &tasks, true)?;
    }
    let mut rates = Vec::with_capacity(trials);
    for _ in 0..trials {
        let start = Instant::now();
        let mut done = 0usize;
        loop {
            for s in &usable {
                std::hint::black_box(model.predict_with(&ev, s, &tasks, true)?);
            }
            done += usable.len();
            if start.elapsed() >= min_time {
                break;
            }
        }
        rates.push(done as f64 / start.elapsed().as_secs_f64());
    }
    let mut sorted = rates.clone();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len();
    let median = if m % 2 == 1 {
        sorted[m / 2]
    } else {
        0.5 * (sorted[m / 2 - 1] + sorted[m / 2])
    };
    Ok(Throughput { trials: rates, median })
}
