use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Inclusive word span `[begin, end]` with a label.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "(usize, usize, String)", into = "(usize, usize, String)")]
pub struct Span {
    pub begin: usize,
    pub end: usize,
    pub label: String,
}

impl Span {
    pub fn new(begin: usize, end: usize, label: impl Into<String>) -> Self {
        Span {
            begin,
            end,
            label: label.into(),
        }
    }

    pub fn width(&self) -> usize {
        self.end - self.begin + 1
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.begin <= other.end && other.begin <= self.end
    }

    /// Partial overlap without nesting.
    pub fn crosses(&self, other: &Span) -> bool {
        (self.begin < other.begin && other.begin <= self.end && self.end < other.end)
            || (other.begin < self.begin && self.begin <= other.end && other.end < self.end)
    }

    pub fn contains(&self, i: usize) -> bool {
        self.begin <= i && i <= self.end
    }
}

impl From<(usize, usize, String)> for Span {
    fn from((begin, end, label): (usize, usize, String)) -> Self {
        Span { begin, end, label }
    }
}

impl From<Span> for (usize, usize, String) {
    fn from(s: Span) -> Self {
        (s.begin, s.end, s.label)
    }
}

/// Dependency attachment; `head == -1` marks the root.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "(i64, String)", into = "(i64, String)")]
pub struct Arc {
    pub head: i64,
    pub rel: String,
}

impl Arc {
    pub fn new(head: i64, rel: impl Into<String>) -> Self {
        Arc { head, rel: rel.into() }
    }

    pub fn head_index(&self) -> Option<usize> {
        usize::try_from(self.head).ok()
    }
}

impl From<(i64, String)> for Arc {
    fn from((head, rel): (i64, String)) -> Self {
        Arc { head, rel }
    }
}

impl From<Arc> for (i64, String) {
    fn from(a: Arc) -> Self {
        (a.head, a.rel)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Frame {
    pub predicate: usize,
    pub args: Vec<Span>,
}

/// Annotations for the five tasks; `None` means untagged for that task.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotations {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pos: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ner: Option<Vec<Span>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dep: Option<Vec<Arc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub con: Option<Vec<Span>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub srl: Option<Vec<Frame>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub tokens: Vec<String>,
    #[serde(flatten)]
    pub gold: Annotations,
    /// System output written next to the gold annotations.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<Annotations>,
}

impl Sentence {
    pub fn new(tokens: Vec<String>) -> Self {
        Sentence {
            tokens,
            gold: Annotations::default(),
            system: None,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.tokens.len();
        if n == 0 {
            return Err(invalid("sentence has no tokens"));
        }
        if let Some(t) = self.tokens.iter().position(|t| t.is_empty()) {
            return Err(invalid(format!("token {t} is empty")));
        }
        self.gold.validate(n)?;
        if let Some(sys) = &self.system {
            sys.validate(n)?;
        }
        Ok(())
    }
}

fn invalid(msg: impl Into<String>) -> LabError {
    LabError::InvalidSentence(msg.into())
}

fn check_span(s: &Span, n: usize, what: &str) -> Result<()> {
    if s.begin > s.end {
        return Err(invalid(format!("{what} span ({}, {}) has begin > end", s.begin, s.end)));
    }
    if s.end >= n {
        return Err(invalid(format!(
            "{what} span end out of bounds: ({}, {}) in {n}-token sentence",
            s.begin, s.end
        )));
    }
    Ok(())
}

impl Annotations {
    pub fn validate(&self, n: usize) -> Result<()> {
        if let Some(pos) = &self.pos {
            if pos.len() != n {
                return Err(invalid(format!("{} POS tags for {n} tokens", pos.len())));
            }
        }
        if let Some(ner) = &self.ner {
            for s in ner {
                check_span(s, n, "NER")?;
            }
            let mut sorted: Vec<&Span> = ner.iter().collect();
            sorted.sort();
            if sorted.windows(2).any(|w| w[0].overlaps(w[1])) {
                return Err(invalid("overlapping NER spans"));
            }
        }
        if let Some(dep) = &self.dep {
            validate_tree(dep, n)?;
        }
        if let Some(con) = &self.con {
            for s in con {
                check_span(s, n, "CON")?;
            }
        }
        if let Some(srl) = &self.srl {
            for f in srl {
                if f.predicate >= n {
                    return Err(invalid(format!("SRL predicate {} out of bounds", f.predicate)));
                }
                for a in &f.args {
                    check_span(a, n, "SRL argument")?;
                }
            }
        }
        Ok(())
    }
}

/// Single root, heads in range, no cycles.
pub fn validate_tree(dep: &[Arc], n: usize) -> Result<()> {
    if dep.len() != n {
        return Err(invalid(format!("{} dependency arcs for {n} tokens", dep.len())));
    }
    for (i, a) in dep.iter().enumerate() {
        if a.head < -1 || a.head >= n as i64 {
            return Err(invalid(format!(
                "dependency head {} of token {i} out of bounds",
                a.head
            )));
        }
    }
    let roots = dep.iter().filter(|a| a.head == -1).count();
    if roots != 1 {
        return Err(invalid(format!(
            "no root / cycle: expected exactly one root, found {roots}"
        )));
    }
    for start in 0..n {
        let mut cur = start;
        let mut steps = 0;
        while let Some(h) = dep[cur].head_index() {
            cur = h;
            steps += 1;
            if steps > n {
                return Err(invalid(format!(
                    "no root / cycle: token {start} never reaches the root"
                )));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("w{i}")).collect()
    }

    #[test]
    fn spans_serialize_as_triples() {
        let s = Span::new(0, 2, "PER");
        assert_eq!(serde_json::to_string(&s).unwrap(), r#"[0,2,"PER"]"#);
        let a: Arc = serde_json::from_str(r#"[-1,"root"]"#).unwrap();
        assert_eq!(a.head_index(), None);
    }

    #[test]
    fn crossing_versus_nesting() {
        let a = Span::new(0, 3, "X");
        assert!(a.crosses(&Span::new(2, 5, "X")));
        assert!(!a.crosses(&Span::new(1, 2, "X")));
        assert!(!a.crosses(&Span::new(4, 5, "X")));
        assert!(a.overlaps(&Span::new(3, 4, "X")));
    }

    #[test]
    fn tree_validation() {
        assert!(validate_tree(&[Arc::new(-1, "root")], 1).is_ok());
        let cyc = [Arc::new(1, "r"), Arc::new(0, "r")];
        let e = validate_tree(&cyc, 2).unwrap_err().to_string();
        assert!(e.contains("no root / cycle"), "{e}");
        let cyc3 = [Arc::new(-1, "root"), Arc::new(2, "r"), Arc::new(1, "r")];
        assert!(validate_tree(&cyc3, 3).unwrap_err().to_string().contains("cycle"));
        let two_roots = [Arc::new(-1, "root"), Arc::new(-1, "root")];
        assert!(validate_tree(&two_roots, 2).is_err());
        assert!(validate_tree(&[Arc::new(0, "self")], 1).is_err());
    }

    #[test]
    fn ner_bounds_and_overlap() {
        let mut s = Sentence::new(toks(2));
        s.gold.ner = Some(vec![Span::new(0, 2, "P")]);
        assert!(s.validate().unwrap_err().to_string().contains("span end out of bounds"));
        s.gold.ner = Some(vec![Span::new(0, 1, "P"), Span::new(1, 1, "Q")]);
        assert!(s.validate().unwrap_err().to_string().contains("overlapping"));
        s.gold.ner = Some(vec![Span::new(0, 0, "P"), Span::new(1, 1, "Q")]);
        assert!(s.validate().is_ok());
    }
}
