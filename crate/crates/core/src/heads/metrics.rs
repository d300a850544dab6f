use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::corpus::{Annotations, Span};
use crate::error::{LabError, Result};
use crate::task::Task;

/// Matched / predicted / gold tallies for one task.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub correct: usize,
    pub predicted: usize,
    pub gold: usize,
}

impl Counts {
    pub fn add(&mut self, o: Counts) {
        self.correct += o.correct;
        self.predicted += o.predicted;
        self.gold += o.gold;
    }

    /// `2c / (p + g)`, or 1 when there is nothing to find and nothing found.
    pub fn f1(&self) -> f64 {
        let denom = self.predicted + self.gold;
        if denom == 0 {
            1.0
        } else {
            2.0 * self.correct as f64 / denom as f64
        }
    }

    pub fn accuracy(&self) -> f64 {
        if self.gold == 0 {
            0.0
        } else {
            self.correct as f64 / self.gold as f64
        }
    }
}

/// Headline metric: POS accuracy, DEP labeled attachment, span F1 otherwise.
pub fn headline(task: Task, c: &Counts) -> f64 {
    match task {
        Task::Pos | Task::Dep => c.accuracy(),
        Task::Ner | Task::Con | Task::Srl => c.f1(),
    }
}

fn missing(task: Task) -> LabError {
    LabError::Head(format!("{task} annotation missing for scoring"))
}

fn span_counts(gold: &[Span], pred: &[Span]) -> Counts {
    let g: BTreeSet<&Span> = gold.iter().collect();
    let p: BTreeSet<&Span> = pred.iter().collect();
    Counts {
        correct: g.intersection(&p).count(),
        predicted: p.len(),
        gold: g.len(),
    }
}

pub fn score_sentence(task: Task, gold: &Annotations, pred: &Annotations) -> Result<Counts> {
    match task {
        Task::Pos => {
            let (g, p) = (
                gold.pos.as_ref().ok_or_else(|| missing(task))?,
                pred.pos.as_ref().ok_or_else(|| missing(task))?,
            );
            Ok(Counts {
                correct: g.iter().zip(p).filter(|(a, b)| a == b).count(),
                predicted: p.len(),
                gold: g.len(),
            })
        }
        Task::Dep => {
            let (g, p) = (
                gold.dep.as_ref().ok_or_else(|| missing(task))?,
                pred.dep.as_ref().ok_or_else(|| missing(task))?,
            );
            Ok(Counts {
                correct: g.iter().zip(p).filter(|(a, b)| a == b).count(),
                predicted: p.len(),
                gold: g.len(),
            })
        }
        Task::Ner => Ok(span_counts(
            gold.ner.as_ref().ok_or_else(|| missing(task))?,
            pred.ner.as_ref().ok_or_else(|| missing(task))?,
        )),
        Task::Con => Ok(span_counts(
            gold.con.as_ref().ok_or_else(|| missing(task))?,
            pred.con.as_ref().ok_or_else(|| missing(task))?,
        )),
        Task::Srl => {
            let tuples = |a: &Annotations| -> Result<BTreeSet<(usize, Span)>> {
                let frames = a.srl.as_ref().ok_or_else(|| missing(task))?;
                Ok(frames
                    .iter()
                    .flat_map(|f| f.args.iter().map(move |s| (f.predicate, s.clone())))
                    .collect())
            };
            let (g, p) = (tuples(gold)?, tuples(pred)?);
            Ok(Counts {
                correct: g.intersection(&p).count(),
                predicted: p.len(),
                gold: g.len(),
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskScore {
    pub task: Task,
    pub counts: Counts,
    pub score: f64,
}

pub fn evaluate<'a>(
    task: Task,
    pairs: impl IntoIterator<Item = (&'a Annotations, &'a Annotations)>,
) -> Result<TaskScore> {
    let mut counts = Counts::default();
    for (g, p) in pairs {
        counts.add(score_sentence(task, g, p)?);
    }
    Ok(TaskScore {
        task,
        counts,
        score: headline(task, &counts),
    })
}
