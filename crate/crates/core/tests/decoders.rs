//! Every decoder with a fuzz target, driven by the checked-in seeds and by
//! mutations of them. None may panic; accepted input must be well formed.

use std::fs;
use std::path::{Path, PathBuf};

use headlab::corpus::{parse_conllu, parse_jsonl, synth_generate, to_jsonl, GrammarConfig, TagColumn};
use headlab::encoder::decode_snapshots;
use headlab::task::parse_tasks;
use headlab::trainer::{TrainPlan, UtilizationGrid};
use headlab_tensor::decode_checkpoint;
use proptest::prelude::*;

fn seeds(target: &str) -> Vec<Vec<u8>> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target);
    let mut files: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    assert!(!files.is_empty(), "no seeds for {target}");
    files.iter().map(|f| fs::read(f).unwrap()).collect()
}

fn jsonl(data: &[u8]) {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(s) = parse_jsonl(text, Path::new("t")) {
        assert_eq!(parse_jsonl(&to_jsonl(&s).unwrap(), Path::new("t")).unwrap(), s);
    }
}

fn conllu(data: &[u8]) {
    let Ok(text) = std::str::from_utf8(data) else { return };
    for tags in [TagColumn::Upos, TagColumn::Xpos] {
        if let Ok(s) = parse_conllu(text, Path::new("t"), tags) {
            s.iter().for_each(|x| x.validate().unwrap());
        }
    }
}

fn grammar(data: &[u8]) {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(g) = GrammarConfig::from_json(text) {
        if let Ok(c) = synth_generate(&g, 2, 0) {
            c.iter().for_each(|x| x.validate().unwrap());
        }
    }
}

fn plan(data: &[u8]) {
    if let Ok(p) = serde_json::from_slice::<TrainPlan>(data) {
        let _ = p.validate();
        let _ = p.label();
        let _ = p.config_hash();
    }
}

fn snapshot(data: &[u8]) {
    let _ = decode_snapshots(data);
}

fn checkpoint(data: &[u8]) {
    let Some((len, rest)) = data.split_first_chunk::<4>() else {
        return;
    };
    let len = u32::from_le_bytes(*len) as usize;
    if len <= rest.len() {
        let (m, b) = rest.split_at(len);
        let _ = decode_checkpoint(m, b);
    }
}

fn utilization(data: &[u8]) {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(grids) = UtilizationGrid::read_csv(text) {
        for g in &grids {
            let _ = g.get(0, 0);
            let _ = g.to_csv();
        }
    }
}

fn tasks(data: &[u8]) {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let _ = parse_tasks(text);
}

type Target = (&'static str, fn(&[u8]));

const TARGETS: [Target; 8] = [
    ("jsonl", jsonl),
    ("conllu", conllu),
    ("grammar", grammar),
    ("plan", plan),
    ("snapshot", snapshot),
    ("checkpoint", checkpoint),
    ("utilization_csv", utilization),
    ("tasks", tasks),
];

#[test]
fn seeds_decode_cleanly() {
    for (name, f) in TARGETS {
        for s in seeds(name) {
            f(&s);
        }
    }
}

#[test]
fn valid_seeds_are_accepted() {
    assert!(
        !parse_jsonl(std::str::from_utf8(&seeds("jsonl")[1]).unwrap(), Path::new("t"))
            .unwrap()
            .is_empty()
    );
    assert!(GrammarConfig::from_json(std::str::from_utf8(&seeds("grammar")[0]).unwrap()).is_ok());
    assert_eq!(decode_snapshots(&seeds("snapshot")[1]).unwrap().len(), 1);
    let ck = &seeds("checkpoint")[0];
    let len = u32::from_le_bytes(ck[..4].try_into().unwrap()) as usize;
    assert!(decode_checkpoint(&ck[4..4 + len], &ck[4 + len..]).is_ok());
    assert_eq!(
        UtilizationGrid::read_csv(std::str::from_utf8(&seeds("utilization_csv")[1]).unwrap())
            .unwrap()
            .len(),
        1
    );
}

#[test]
fn shipped_grammar_is_the_builtin_one() {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../grammars/default.json");
    let g = GrammarConfig::from_json(&fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(g, GrammarConfig::default());
}

#[test]
fn overflowing_grid_indices_are_rejected() {
    let text = format!("h\n{},0,a,pos,0.5\n", usize::MAX);
    assert!(UtilizationGrid::read_csv(&text).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn mutated_seeds_never_panic(t in 0usize..8, seed in 0usize..4, edits in prop::collection::vec((any::<usize>(), any::<u8>(), 0u8..3), 1..12)) {
        let (name, f) = TARGETS[t];
        let all = seeds(name);
        let mut data = all[seed % all.len()].clone();
        for (at, byte, op) in edits {
            let i = if data.is_empty() { 0 } else { at % data.len() };
            match op {
                0 if !data.is_empty() => data[i] = byte,
                1 => data.insert(i.min(data.len()), byte),
                _ if !data.is_empty() => { data.truncate(i); }
                _ => data.push(byte),
            }
        }
        f(&data);
    }

    #[test]
    fn random_bytes_never_panic(t in 0usize..8, data in prop::collection::vec(any::<u8>(), 0..256)) {
        TARGETS[t].1(&data);
    }
}
