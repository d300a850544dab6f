use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::sentence::{Arc, Sentence};
use crate::error::{LabError, Result};

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> LabError {
    LabError::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

pub fn read_jsonl(path: &Path) -> Result<Vec<Sentence>> {
    let text = fs::read_to_string(path)?;
    parse_jsonl(&text, path)
}

/// One JSON object per non-blank line; every sentence is validated.
pub fn parse_jsonl(text: &str, origin: &Path) -> Result<Vec<Sentence>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let s: Sentence = serde_json::from_str(line).map_err(|e| parse_err(origin, i + 1, e.to_string()))?;
        s.validate().map_err(|e| parse_err(origin, i + 1, e.to_string()))?;
        out.push(s);
    }
    Ok(out)
}

pub fn to_jsonl(sentences: &[Sentence]) -> Result<String> {
    let mut out = String::new();
    for s in sentences {
        out.push_str(&serde_json::to_string(s)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn write_jsonl(path: &Path, sentences: &[Sentence]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut f = fs::File::create(path)?;
    f.write_all(to_jsonl(sentences)?.as_bytes())?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TagColumn {
    #[default]
    Upos,
    Xpos,
}

pub fn read_conllu(path: &Path, tags: TagColumn) -> Result<Vec<Sentence>> {
    let text = fs::read_to_string(path)?;
    parse_conllu(&text, path, tags)
}

/// CoNLL-U blocks to sentences carrying POS and DEP only.
///
/// Comment lines, multiword token ranges (`3-4`) and empty nodes (`5.1`) are
/// skipped. Heads are converted to 0-based with `-1` for the root.
pub fn parse_conllu(text: &str, origin: &Path, tags: TagColumn) -> Result<Vec<Sentence>> {
    let mut out = Vec::new();
    let mut rows: Vec<(usize, Vec<&str>)> = Vec::new();
    let origin: PathBuf = origin.to_path_buf();
    let flush = |rows: &mut Vec<(usize, Vec<&str>)>, out: &mut Vec<Sentence>| -> Result<()> {
        if rows.is_empty() {
            return Ok(());
        }
        let first_line = rows[0].0;
        let mut tokens = Vec::with_capacity(rows.len());
        let mut pos = Vec::with_capacity(rows.len());
        let mut dep = Vec::with_capacity(rows.len());
        for (line, cols) in rows.iter() {
            let head: i64 = cols[6]
                .parse()
                .map_err(|_| parse_err(&origin, *line, format!("non-integer head `{}`", cols[6])))?;
            tokens.push(cols[1].to_string());
            pos.push(
                match tags {
                    TagColumn::Upos => cols[3],
                    TagColumn::Xpos => cols[4],
                }
                .to_string(),
            );
            dep.push(Arc::new(head - 1, cols[7]));
        }
        let mut s = Sentence::new(tokens);
        s.gold.pos = Some(pos);
        s.gold.dep = Some(dep);
        s.validate()
            .map_err(|e| parse_err(&origin, first_line, e.to_string()))?;
        out.push(s);
        rows.clear();
        Ok(())
    };
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            flush(&mut rows, &mut out)?;
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(parse_err(
                &origin,
                lineno,
                format!("expected 10 columns, found {}", cols.len()),
            ));
        }
        if cols[0].contains('-') || cols[0].contains('.') {
            continue;
        }
        rows.push((lineno, cols));
    }
    flush(&mut rows, &mut out)?;
    Ok(out)
}
