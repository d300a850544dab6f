use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::sentence::Sentence;
use crate::error::{LabError, Result};

pub const BOS: usize = 0;
pub const EOS: usize = 1;
pub const MASK: usize = 2;
pub const UNK: usize = 3;
const RESERVED: [&str; 4] = ["[BOS]", "[EOS]", "[MASK]", "[UNK]"];

/// Subtoken inventory with dense ids; ids 0..4 are the sentinels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocab {
    pieces: Vec<String>,
    index: HashMap<String, usize>,
}

impl From<Vec<String>> for Vocab {
    fn from(pieces: Vec<String>) -> Self {
        let mut v = Vocab::empty();
        for p in pieces.into_iter().skip(RESERVED.len()) {
            v.insert(&p);
        }
        v
    }
}

impl From<Vocab> for Vec<String> {
    fn from(v: Vocab) -> Self {
        v.pieces
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct VocabConfig {
    /// Words up to this many characters enter the vocabulary whole.
    pub max_whole_len: usize,
    /// Longer words are cut into pieces of this many characters.
    pub piece_len: usize,
}

impl Default for VocabConfig {
    fn default() -> Self {
        VocabConfig {
            max_whole_len: 6,
            piece_len: 4,
        }
    }
}

impl Vocab {
    pub fn empty() -> Self {
        let mut v = Vocab {
            pieces: Vec::new(),
            index: HashMap::new(),
        };
        for r in RESERVED {
            v.insert(r);
        }
        v
    }

    pub fn from_pieces<S: AsRef<str>>(pieces: &[S]) -> Self {
        let mut v = Vocab::empty();
        for p in pieces {
            v.insert(p.as_ref());
        }
        v
    }

    /// Deterministic vocabulary over a corpus: short words whole, long words
    /// as fixed-width chunks with `##` continuation pieces.
    pub fn build(sentences: &[Sentence], config: VocabConfig) -> Result<Self> {
        if config.piece_len == 0 {
            return Err(LabError::Encoder("piece_len must be at least 1".into()));
        }
        let mut words: BTreeMap<&str, ()> = BTreeMap::new();
        for s in sentences {
            for t in &s.tokens {
                words.insert(t, ());
            }
        }
        let mut v = Vocab::empty();
        for w in words.keys() {
            let chars: Vec<char> = w.chars().collect();
            if chars.len() <= config.max_whole_len {
                v.insert(w);
                continue;
            }
            for (k, chunk) in chars.chunks(config.piece_len).enumerate() {
                let piece: String = chunk.iter().collect();
                if k == 0 {
                    v.insert(&piece);
                } else {
                    v.insert(&format!("##{piece}"));
                }
            }
        }
        Ok(v)
    }

    fn insert(&mut self, piece: &str) -> usize {
        if let Some(&id) = self.index.get(piece) {
            return id;
        }
        let id = self.pieces.len();
        self.pieces.push(piece.to_string());
        self.index.insert(piece.to_string(), id);
        id
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn id(&self, piece: &str) -> Option<usize> {
        self.index.get(piece).copied()
    }

    pub fn piece(&self, id: usize) -> Option<&str> {
        self.pieces.get(id).map(String::as_str)
    }

    /// Greedy longest-match-first subtokenization.
    ///
    /// Continuation pieces carry a `##` prefix. If any position cannot be
    /// matched the whole word becomes `[UNK]`.
    pub fn subtokenize(&self, word: &str) -> Vec<usize> {
        let chars: Vec<char> = word.chars().collect();
        if chars.is_empty() {
            return vec![UNK];
        }
        let mut out = Vec::new();
        let mut start = 0;
        let mut buf = String::new();
        while start < chars.len() {
            let mut found = None;
            for end in (start + 1..=chars.len()).rev() {
                buf.clear();
                if start > 0 {
                    buf.push_str("##");
                }
                buf.extend(&chars[start..end]);
                if let Some(id) = self.id(&buf) {
                    if id >= RESERVED.len() {
                        found = Some((id, end));
                        break;
                    }
                }
            }
            match found {
                Some((id, end)) => {
                    out.push(id);
                    start = end;
                }
                None => return vec![UNK],
            }
        }
        out
    }

    /// `[BOS] pieces… [EOS]` plus the word → subtoken map.
    pub fn encode(&self, tokens: &[String]) -> (Vec<usize>, SubtokenMap) {
        let mut ids = vec![BOS];
        let mut ranges = Vec::with_capacity(tokens.len());
        for t in tokens {
            let start = ids.len();
            ids.extend(self.subtokenize(t));
            ranges.push((start, ids.len()));
        }
        ids.push(EOS);
        let len = ids.len();
        (ids, SubtokenMap { ranges, len })
    }
}

/// Half-open subtoken ranges per word over a `[BOS] … [EOS]` sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubtokenMap {
    pub ranges: Vec<(usize, usize)>,
    /// Total sequence length including both sentinels.
    pub len: usize,
}

impl SubtokenMap {
    /// One subtoken per word.
    pub fn identity(words: usize) -> Self {
        SubtokenMap {
            ranges: (1..=words).map(|i| (i, i + 1)).collect(),
            len: words + 2,
        }
    }

    pub fn words(&self) -> usize {
        self.ranges.len()
    }

    pub fn bos(&self) -> usize {
        0
    }

    pub fn eos(&self) -> usize {
        self.len - 1
    }

    /// Ranges ordered, disjoint, non-empty and tiling `1..len-1`.
    pub fn validate(&self) -> Result<()> {
        if self.len < 2 {
            return Err(LabError::Encoder(format!(
                "subtoken map length {} lacks sentinels",
                self.len
            )));
        }
        let mut expect = 1;
        for &(s, e) in &self.ranges {
            if s != expect || e <= s {
                return Err(LabError::Encoder(format!(
                    "subtoken range ({s}, {e}) is not contiguous"
                )));
            }
            expect = e;
        }
        if expect != self.len - 1 {
            return Err(LabError::Encoder(format!(
                "subtoken ranges end at {expect}, expected {}",
                self.len - 1
            )));
        }
        Ok(())
    }
}
