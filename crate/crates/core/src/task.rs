use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::Sentence;
use crate::error::LabError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Pos,
    Ner,
    Dep,
    Con,
    Srl,
}

impl Task {
    pub const ALL: [Task; 5] = [Task::Pos, Task::Ner, Task::Dep, Task::Con, Task::Srl];

    pub fn name(self) -> &'static str {
        match self {
            Task::Pos => "pos",
            Task::Ner => "ner",
            Task::Dep => "dep",
            Task::Con => "con",
            Task::Srl => "srl",
        }
    }

    /// Whether the sentence carries gold annotation for this task.
    pub fn annotated(self, s: &Sentence) -> bool {
        let g = &s.gold;
        match self {
            Task::Pos => g.pos.is_some(),
            Task::Ner => g.ner.is_some(),
            Task::Dep => g.dep.is_some(),
            Task::Con => g.con.is_some(),
            Task::Srl => g.srl.is_some(),
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name().to_uppercase())
    }
}

impl FromStr for Task {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "pos" => Ok(Task::Pos),
            "ner" => Ok(Task::Ner),
            "dep" => Ok(Task::Dep),
            "con" => Ok(Task::Con),
            "srl" => Ok(Task::Srl),
            other => Err(LabError::Train(format!("unknown task `{other}`"))),
        }
    }
}

/// Parses a comma-separated task list such as `pos,dep`.
pub fn parse_tasks(list: &str) -> Result<Vec<Task>, LabError> {
    let mut out: Vec<Task> = Vec::new();
    for part in list.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let t: Task = part.parse()?;
        if !out.contains(&t) {
            out.push(t);
        }
    }
    if out.is_empty() {
        return Err(LabError::Train("empty task list".into()));
    }
    Ok(out)
}
