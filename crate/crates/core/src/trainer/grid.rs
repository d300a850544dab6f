use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{train_run, Mode, RunReport, TrainPlan};
use crate::corpus::Sentence;
use crate::error::{LabError, Result};
use crate::task::Task;

/// One cell of the experiment matrix, trained once per seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Setting {
    pub tasks: Vec<Task>,
    pub mode: Mode,
}

impl Setting {
    pub fn label(&self) -> String {
        match self.mode {
            Mode::MtlAll => "mtl-all".to_string(),
            _ => self.tasks.iter().map(|t| t.name()).collect::<Vec<_>>().join("+"),
        }
    }
}

/// STL for every task, MTL for every unordered pair, and one MTL run over
/// all tasks when there are more than two.
pub fn grid_configs(tasks: &[Task]) -> Result<Vec<Setting>> {
    let mut tasks = tasks.to_vec();
    tasks.sort();
    tasks.dedup();
    if tasks.is_empty() {
        return Err(LabError::Train("grid needs at least one task".into()));
    }
    let mut out: Vec<Setting> = tasks
        .iter()
        .map(|&t| Setting {
            tasks: vec![t],
            mode: Mode::Stl,
        })
        .collect();
    for (i, &a) in tasks.iter().enumerate() {
        for &b in &tasks[i + 1..] {
            out.push(Setting {
                tasks: vec![a, b],
                mode: Mode::MtlPair,
            });
        }
    }
    if tasks.len() > 2 {
        out.push(Setting {
            tasks: tasks.clone(),
            mode: Mode::MtlAll,
        });
    }
    Ok(out)
}

/// Headline dev score of one finished run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRun {
    pub setting: String,
    pub tasks: Vec<Task>,
    pub mode: Mode,
    pub seed: u64,
    pub dev: BTreeMap<Task, f64>,
    pub heads_kept: f64,
    pub dir: String,
}

impl GridRun {
    pub fn from_report(r: &RunReport, dir: impl Into<String>) -> Self {
        let setting = Setting {
            tasks: r.tasks.clone(),
            mode: r.mode,
        };
        GridRun {
            setting: setting.label(),
            tasks: r.tasks.clone(),
            mode: r.mode,
            seed: r.seed,
            dev: r.dev.clone(),
            heads_kept: r.heads_kept,
            dir: dir.into(),
        }
    }
}

/// Every plan the grid trained, each paired with its seed.
pub struct GridConfigRun {
    pub plan: TrainPlan,
    pub seed: u64,
    pub dir: String,
}

/// Expands the matrix into one plan per (setting, seed).
pub fn grid_plans(base: &TrainPlan, tasks: &[Task]) -> Result<Vec<GridConfigRun>> {
    let mut out = Vec::new();
    for s in grid_configs(tasks)? {
        for &seed in &base.seeds {
            let plan = TrainPlan {
                tasks: s.tasks.clone(),
                mode: s.mode,
                seeds: vec![seed],
                ..base.clone()
            };
            plan.validate()?;
            out.push(GridConfigRun {
                plan,
                seed,
                dir: format!("{}/seed-{seed}", s.label()),
            });
        }
    }
    Ok(out)
}

/// Trains the whole matrix, independent runs in parallel. Each run is
/// written under `out/<setting>/seed-<s>` when `out` is given.
pub fn run_grid(base: &TrainPlan, tasks: &[Task], corpus: &[Sentence], out: Option<&Path>) -> Result<GridReport> {
    let jobs = grid_plans(base, tasks)?;
    let runs: Vec<GridRun> = jobs
        .par_iter()
        .map(|job| {
            let o = train_run(&job.plan, corpus, job.seed)?;
            if let Some(root) = out {
                o.write(&root.join(&job.dir))?;
            }
            log::info!("grid run {} finished", job.dir);
            Ok(GridRun::from_report(&o.report(), job.dir.clone()))
        })
        .collect::<Result<_>>()?;
    let mut tasks = tasks.to_vec();
    tasks.sort();
    tasks.dedup();
    Ok(GridReport { tasks, runs })
}

fn collect_reports(root: &Path, dir: &Path, out: &mut Vec<GridRun>) -> Result<()> {
    let report = dir.join("report.json");
    if report.is_file() {
        let r: RunReport = serde_json::from_str(&std::fs::read_to_string(&report)?)?;
        let rel = dir
            .strip_prefix(root)
            .unwrap_or(dir)
            .to_string_lossy()
            .replace('\\', "/");
        out.push(GridRun::from_report(&r, rel));
    }
    let mut entries: Vec<_> = std::fs::read_dir(dir)?.collect::<std::io::Result<_>>()?;
    entries.sort_by_key(|e| e.file_name());
    for e in entries {
        if e.file_type()?.is_dir() {
            collect_reports(root, &e.path(), out)?;
        }
    }
    Ok(())
}

/// Sample mean and standard deviation (`n − 1` denominator; 0 for one value).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    /// Task being evaluated.
    pub row: Task,
    /// Partner task, or `None` for the all-task column.
    pub partner: Option<Task>,
    pub mean: f64,
    pub std: f64,
    pub n: usize,
    /// Single-task cell.
    pub diagonal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub tasks: Vec<Task>,
    pub runs: Vec<GridRun>,
}

impl GridReport {
    /// Collects every `report.json` below `root`.
    pub fn from_dir(root: &Path) -> Result<Self> {
        let mut found = Vec::new();
        collect_reports(root, root, &mut found)?;
        if found.is_empty() {
            return Err(LabError::Train(format!("no run reports under {}", root.display())));
        }
        found.sort_by(|a: &GridRun, b| a.dir.cmp(&b.dir));
        let mut tasks: Vec<Task> = found.iter().flat_map(|r| r.tasks.iter().copied()).collect();
        tasks.sort();
        tasks.dedup();
        Ok(GridReport { tasks, runs: found })
    }

    fn scores(&self, row: Task, partner: Option<Task>) -> Vec<f64> {
        self.runs
            .iter()
            .filter(|r| match partner {
                Some(p) if p == row => r.mode == Mode::Stl && r.tasks == [row],
                Some(p) => {
                    r.mode != Mode::MtlAll && r.tasks.len() == 2 && r.tasks.contains(&row) && r.tasks.contains(&p)
                }
                None => r.mode == Mode::MtlAll,
            })
            .filter_map(|r| r.dev.get(&row).copied())
            .collect()
    }

    pub fn has_all_column(&self) -> bool {
        self.tasks.len() > 2
    }

    /// Row-major cells: per evaluated task, one per partner, then the
    /// all-task column when present. Scores are percentages.
    pub fn cells(&self) -> Vec<GridCell> {
        let mut out = Vec::new();
        for &row in &self.tasks {
            let mut cols: Vec<Option<Task>> = self.tasks.iter().map(|&t| Some(t)).collect();
            if self.has_all_column() {
                cols.push(None);
            }
            for partner in cols {
                let xs: Vec<f64> = self.scores(row, partner).iter().map(|x| 100.0 * x).collect();
                let (mean, std) = if xs.is_empty() {
                    (f64::NAN, f64::NAN)
                } else {
                    mean_std(&xs)
                };
                out.push(GridCell {
                    row,
                    partner,
                    mean,
                    std,
                    n: xs.len(),
                    diagonal: partner == Some(row),
                });
            }
        }
        out
    }

    fn columns(&self) -> Vec<String> {
        let mut c: Vec<String> = self.tasks.iter().map(|t| t.to_string()).collect();
        if self.has_all_column() {
            c.push(format!("MTL-{}", self.tasks.len()));
        }
        c
    }

    /// Markdown table; the single-task diagonal is bold.
    pub fn to_markdown(&self) -> String {
        let cols = self.columns();
        let mut s = format!("| Task | {} |\n|---|{}\n", cols.join(" | "), "---|".repeat(cols.len()));
        let cells = self.cells();
        for (i, row) in self.tasks.iter().enumerate() {
            let _ = write!(s, "| {row} |");
            for c in &cells[i * cols.len()..(i + 1) * cols.len()] {
                let v = if c.n == 0 {
                    "n/a".to_string()
                } else {
                    format!("{:.2} ± {:.2}", c.mean, c.std)
                };
                if c.diagonal {
                    let _ = write!(s, " **{v}** |");
                } else {
                    let _ = write!(s, " {v} |");
                }
            }
            s.push('\n');
        }
        s
    }

    /// `task,partner,mean,std,n,diagonal` rows; the all-task column uses
    /// partner `all`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("task,partner,mean,std,n,diagonal\n");
        for c in self.cells() {
            let p = c.partner.map_or("all".to_string(), |p| p.name().to_string());
            let _ = writeln!(s, "{},{p},{},{},{},{}", c.row.name(), c.mean, c.std, c.n, c.diagonal);
        }
        s
    }
}
