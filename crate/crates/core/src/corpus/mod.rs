//! Sentences, file formats, subtokenization and the synthetic corpus.

mod io;
mod sentence;
mod synth;
mod vocab;

pub use io::{parse_conllu, parse_jsonl, read_conllu, read_jsonl, to_jsonl, write_jsonl, TagColumn};
pub use sentence::{validate_tree, Annotations, Arc, Frame, Sentence, Span};
pub use synth::{
    synth_generate, GrammarConfig, Lexicon, Preposition, SlotProbabilities, CON_LABELS, DEP_RELS, POS_TAGS,
};
pub use vocab::{SubtokenMap, Vocab, VocabConfig, BOS, EOS, MASK, UNK};
