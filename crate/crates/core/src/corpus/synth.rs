//! Template-grammar corpus generator.
//!
//! Every sentence follows `SUBJ VERB [OBJ] [PP] [ADV] .`, where each noun
//! phrase is either a named entity or `[DET] [ADJ] NOUN`. Because the
//! generator knows the structure it emits, the five annotation layers are
//! consistent by construction:
//!
//! | layer | labels |
//! |-------|--------|
//! | POS   | `DET ADJ NOUN PROPN VERB ADP ADV PUNCT` |
//! | NER   | the keys of `entities` in the config |
//! | DEP   | `root nsubj obj obl case det amod flat advmod punct` |
//! | CON   | `NP` (base noun phrases), `ADVP`, `VP` (bare intransitive verb) |
//! | SRL   | `ARG0 ARG1 ARGM-MNR` plus the roles given for prepositions |

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::sentence::{Arc, Frame, Sentence, Span};
use crate::error::{LabError, Result};

pub const POS_TAGS: [&str; 8] = ["DET", "ADJ", "NOUN", "PROPN", "VERB", "ADP", "ADV", "PUNCT"];
pub const DEP_RELS: [&str; 10] = [
    "root", "nsubj", "obj", "obl", "case", "det", "amod", "flat", "advmod", "punct",
];
pub const CON_LABELS: [&str; 3] = ["NP", "ADVP", "VP"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotProbabilities {
    /// Subject is a named entity.
    pub subject_entity: f64,
    /// Object is a named entity.
    pub object_entity: f64,
    /// Prepositional object is a named entity.
    pub pp_entity: f64,
    pub determiner: f64,
    pub adjective: f64,
    pub transitive: f64,
    pub pp: f64,
    pub adverb: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preposition {
    pub word: String,
    /// SRL role of the prepositional phrase.
    pub role: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lexicon {
    pub determiners: Vec<String>,
    pub adjectives: Vec<String>,
    pub nouns: Vec<String>,
    pub transitive_verbs: Vec<String>,
    pub intransitive_verbs: Vec<String>,
    pub prepositions: Vec<Preposition>,
    pub adverbs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrammarConfig {
    pub probabilities: SlotProbabilities,
    pub lexicon: Lexicon,
    /// Entity type → names, each name a list of words.
    pub entities: BTreeMap<String, Vec<Vec<String>>>,
}

fn words(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

impl Default for GrammarConfig {
    fn default() -> Self {
        let name = |parts: &[&str]| words(parts);
        let mut entities = BTreeMap::new();
        entities.insert(
            "PER".to_string(),
            vec![
                name(&["John", "Smith"]),
                name(&["Mary"]),
                name(&["Alexander", "Hamilton"]),
                name(&["Priya", "Raman"]),
                name(&["Chen"]),
                name(&["Fatima", "Okafor"]),
            ],
        );
        entities.insert(
            "LOC".to_string(),
            vec![
                name(&["Paris"]),
                name(&["New", "York"]),
                name(&["Kathmandu"]),
                name(&["Rio", "de", "Janeiro"]),
                name(&["Lagos"]),
            ],
        );
        entities.insert(
            "ORG".to_string(),
            vec![
                name(&["Acme", "Corporation"]),
                name(&["Globex"]),
                name(&["United", "Nations"]),
                name(&["Initech", "Systems"]),
            ],
        );
        GrammarConfig {
            probabilities: SlotProbabilities {
                subject_entity: 0.35,
                object_entity: 0.25,
                pp_entity: 0.4,
                determiner: 0.8,
                adjective: 0.4,
                transitive: 0.7,
                pp: 0.5,
                adverb: 0.3,
            },
            lexicon: Lexicon {
                determiners: words(&["the", "a", "every", "this"]),
                adjectives: words(&["green", "enormous", "quiet", "reliable", "ancient", "curious", "bright"]),
                nouns: words(&[
                    "dog",
                    "committee",
                    "engineer",
                    "river",
                    "telescope",
                    "garden",
                    "manuscript",
                    "teacher",
                    "bicycle",
                    "harbor",
                    "village",
                    "algorithm",
                ]),
                transitive_verbs: words(&[
                    "saw",
                    "visited",
                    "admired",
                    "repaired",
                    "funded",
                    "described",
                    "followed",
                ]),
                intransitive_verbs: words(&["slept", "arrived", "laughed", "disappeared", "waited"]),
                prepositions: vec![
                    Preposition {
                        word: "in".into(),
                        role: "ARGM-LOC".into(),
                    },
                    Preposition {
                        word: "near".into(),
                        role: "ARGM-LOC".into(),
                    },
                    Preposition {
                        word: "to".into(),
                        role: "ARG2".into(),
                    },
                    Preposition {
                        word: "with".into(),
                        role: "ARGM-COM".into(),
                    },
                ],
                adverbs: words(&["quickly", "yesterday", "carefully", "again"]),
            },
            entities,
        }
    }
}

impl GrammarConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let g: GrammarConfig = serde_json::from_str(text).map_err(|e| LabError::Grammar(e.to_string()))?;
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.probabilities;
        for (name, v) in [
            ("subject_entity", p.subject_entity),
            ("object_entity", p.object_entity),
            ("pp_entity", p.pp_entity),
            ("determiner", p.determiner),
            ("adjective", p.adjective),
            ("transitive", p.transitive),
            ("pp", p.pp),
            ("adverb", p.adverb),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(LabError::Grammar(format!("probability `{name}` = {v} outside [0, 1]")));
            }
        }
        let lx = &self.lexicon;
        for (name, list) in [
            ("determiners", &lx.determiners),
            ("adjectives", &lx.adjectives),
            ("nouns", &lx.nouns),
            ("transitive_verbs", &lx.transitive_verbs),
            ("intransitive_verbs", &lx.intransitive_verbs),
            ("adverbs", &lx.adverbs),
        ] {
            if list.is_empty() {
                return Err(LabError::Grammar(format!("lexicon `{name}` is empty")));
            }
            check_words(name, list)?;
        }
        if lx.prepositions.is_empty() {
            return Err(LabError::Grammar("lexicon `prepositions` is empty".into()));
        }
        for prep in &lx.prepositions {
            check_words("prepositions", std::slice::from_ref(&prep.word))?;
            if prep.role.is_empty() {
                return Err(LabError::Grammar(format!("preposition `{}` has no role", prep.word)));
            }
        }
        let needs_entities = p.subject_entity > 0.0 || p.object_entity > 0.0 || p.pp_entity > 0.0;
        if needs_entities && self.entities.values().all(Vec::is_empty) {
            return Err(LabError::Grammar(
                "entity probabilities are positive but `entities` is empty".into(),
            ));
        }
        for (ty, names) in &self.entities {
            if ty.is_empty() {
                return Err(LabError::Grammar("empty entity type".into()));
            }
            for n in names {
                if n.is_empty() {
                    return Err(LabError::Grammar(format!("empty name under `{ty}`")));
                }
                check_words(ty, n)?;
            }
        }
        Ok(())
    }

    /// Label inventories this grammar emits, per task.
    pub fn inventory(&self) -> BTreeMap<&'static str, Vec<String>> {
        let mut inv = BTreeMap::new();
        inv.insert("pos", words(&POS_TAGS));
        inv.insert("ner", self.entity_types().into_iter().map(str::to_string).collect());
        inv.insert("dep", words(&DEP_RELS));
        inv.insert("con", words(&CON_LABELS));
        let mut roles = vec!["ARG0".to_string(), "ARG1".to_string(), "ARGM-MNR".to_string()];
        for p in &self.lexicon.prepositions {
            if !roles.contains(&p.role) {
                roles.push(p.role.clone());
            }
        }
        inv.insert("srl", roles);
        inv
    }

    fn entity_types(&self) -> Vec<&str> {
        self.entities
            .iter()
            .filter(|(_, v)| !v.is_empty())
            .map(|(k, _)| k.as_str())
            .collect()
    }
}

fn check_words(list: &str, ws: &[String]) -> Result<()> {
    for w in ws {
        if w.is_empty() || w.chars().any(char::is_whitespace) {
            return Err(LabError::Grammar(format!("`{list}` contains invalid word {w:?}")));
        }
    }
    Ok(())
}

struct Builder {
    tokens: Vec<String>,
    pos: Vec<String>,
    dep: Vec<Arc>,
    ner: Vec<Span>,
    con: Vec<Span>,
}

impl Builder {
    fn push(&mut self, word: &str, tag: &str) -> usize {
        self.tokens.push(word.to_string());
        self.pos.push(tag.to_string());
        self.dep.push(Arc::new(-1, "root"));
        self.tokens.len() - 1
    }

    fn attach(&mut self, dependent: usize, head: usize, rel: &str) {
        self.dep[dependent] = Arc::new(head as i64, rel);
    }
}

fn pick<'a, T>(rng: &mut ChaCha8Rng, items: &'a [T]) -> &'a T {
    &items[rng.random_range(0..items.len())]
}

/// Returns (begin, end, head) of the noun phrase.
fn noun_phrase(b: &mut Builder, g: &GrammarConfig, rng: &mut ChaCha8Rng, entity_p: f64) -> (usize, usize, usize) {
    let p = &g.probabilities;
    let types = g.entity_types();
    if !types.is_empty() && rng.random_bool(entity_p) {
        let ty = *pick(rng, &types);
        let name = pick(rng, &g.entities[ty]).clone();
        let begin = b.tokens.len();
        for w in &name {
            b.push(w, "PROPN");
        }
        let end = b.tokens.len() - 1;
        for i in begin..end {
            b.attach(i, end, "flat");
        }
        b.ner.push(Span::new(begin, end, ty));
        b.con.push(Span::new(begin, end, "NP"));
        return (begin, end, end);
    }
    let begin = b.tokens.len();
    let det = rng
        .random_bool(p.determiner)
        .then(|| b.push(pick(rng, &g.lexicon.determiners), "DET"));
    let adj = rng
        .random_bool(p.adjective)
        .then(|| b.push(pick(rng, &g.lexicon.adjectives), "ADJ"));
    let noun = b.push(pick(rng, &g.lexicon.nouns), "NOUN");
    if let Some(d) = det {
        b.attach(d, noun, "det");
    }
    if let Some(a) = adj {
        b.attach(a, noun, "amod");
    }
    b.con.push(Span::new(begin, noun, "NP"));
    (begin, noun, noun)
}

fn sentence(g: &GrammarConfig, rng: &mut ChaCha8Rng) -> Sentence {
    let p = &g.probabilities;
    let mut b = Builder {
        tokens: Vec::new(),
        pos: Vec::new(),
        dep: Vec::new(),
        ner: Vec::new(),
        con: Vec::new(),
    };
    let mut args = Vec::new();
    let (sb, se, sh) = noun_phrase(&mut b, g, rng, p.subject_entity);
    let transitive = rng.random_bool(p.transitive);
    let verb_word = if transitive {
        pick(rng, &g.lexicon.transitive_verbs)
    } else {
        pick(rng, &g.lexicon.intransitive_verbs)
    };
    let verb = b.push(verb_word, "VERB");
    b.attach(sh, verb, "nsubj");
    args.push(Span::new(sb, se, "ARG0"));
    let mut bare = true;
    if transitive {
        let (ob, oe, oh) = noun_phrase(&mut b, g, rng, p.object_entity);
        b.attach(oh, verb, "obj");
        args.push(Span::new(ob, oe, "ARG1"));
        bare = false;
    }
    if rng.random_bool(p.pp) {
        let prep = pick(rng, &g.lexicon.prepositions).clone();
        let adp = b.push(&prep.word, "ADP");
        let (_, pe, ph) = noun_phrase(&mut b, g, rng, p.pp_entity);
        b.attach(adp, ph, "case");
        b.attach(ph, verb, "obl");
        args.push(Span::new(adp, pe, prep.role));
        bare = false;
    }
    if rng.random_bool(p.adverb) {
        let adv = b.push(pick(rng, &g.lexicon.adverbs), "ADV");
        b.attach(adv, verb, "advmod");
        b.con.push(Span::new(adv, adv, "ADVP"));
        args.push(Span::new(adv, adv, "ARGM-MNR"));
        bare = false;
    }
    if bare {
        b.con.push(Span::new(verb, verb, "VP"));
    }
    let punct = b.push(".", "PUNCT");
    b.attach(punct, verb, "punct");
    b.con.sort();

    let mut s = Sentence::new(b.tokens);
    s.gold.pos = Some(b.pos);
    s.gold.ner = Some(b.ner);
    s.gold.dep = Some(b.dep);
    s.gold.con = Some(b.con);
    s.gold.srl = Some(vec![Frame { predicate: verb, args }]);
    s
}

/// `count` sentences from the grammar, fully determined by `seed`.
pub fn synth_generate(grammar: &GrammarConfig, count: usize, seed: u64) -> Result<Vec<Sentence>> {
    grammar.validate()?;
    if count == 0 {
        return Err(LabError::Grammar("count must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count).map(|_| sentence(grammar, &mut rng)).collect())
}
