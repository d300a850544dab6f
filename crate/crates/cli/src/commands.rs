use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use headlab::analysis::{gray_overlay, pearson_table, r2_table, rgb_encode, write_ppm, RunBundle};
use headlab::corpus::{read_conllu, read_jsonl, synth_generate, write_jsonl, GrammarConfig, Sentence, TagColumn};
use headlab::encoder::{read_snapshots, write_snapshots};
use headlab::model::Model;
use headlab::probes::{
    capture_snapshots, diff_report, label_frequencies, probe_all, Merge, ProbeOptions, ProbeReport, ProbeRun,
};
use headlab::task::parse_tasks;
use headlab::trainer::{grid_plans, run_grid, train_run, GridReport, TrainPlan, UtilizationGrid};
use headlab::Task;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::{AnalyzeArgs, Command, GridArgs, ProbeArgs, ReportArgs, SynthArgs, TrainArgs, OUT_ENV};

/// A bad flag value, reported with exit status 1.
#[derive(Debug)]
pub struct Usage(pub String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "usage: {}", self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

pub fn dispatch(cmd: Command, argv: &[String]) -> Result<()> {
    match cmd {
        Command::Synth(a) => synth(a),
        Command::Train(a) => train(a, argv),
        Command::Grid(a) => grid(a, argv),
        Command::Probe(a) => probe(a),
        Command::Analyze(a) => analyze(a),
        Command::Report(a) => report(a),
    }
}

fn out_dir(given: Option<PathBuf>, verb: &str) -> PathBuf {
    given.unwrap_or_else(|| {
        let root = std::env::var_os(OUT_ENV).map_or_else(|| PathBuf::from("runs"), PathBuf::from);
        root.join(verb)
    })
}

fn list(s: &str) -> Vec<String> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(String::from)
        .collect()
}

fn read_corpus(path: &Path) -> Result<Vec<Sentence>> {
    let c = match path.extension().and_then(|e| e.to_str()) {
        Some("conllu") | Some("conll") => read_conllu(path, TagColumn::Upos),
        _ => read_jsonl(path),
    };
    c.with_context(|| format!("reading corpus {}", path.display()))
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect())
}

fn read_plan(path: &Path) -> Result<TrainPlan> {
    let text = fs::read_to_string(path).with_context(|| format!("reading plan {}", path.display()))?;
    let plan: TrainPlan = serde_json::from_str(&text).map_err(|e| usage(format!("plan {}: {e}", path.display())))?;
    Ok(plan)
}

#[derive(Serialize)]
struct Versions {
    headlab: &'static str,
    plan_format: u32,
}

const VERSIONS: Versions = Versions {
    headlab: env!("CARGO_PKG_VERSION"),
    plan_format: 1,
};

/// Everything needed to repeat a run byte for byte.
#[derive(Serialize)]
struct RunManifest<'a> {
    command: &'a [String],
    seed: u64,
    config_hash: String,
    data: String,
    data_sha256: &'a str,
    versions: Versions,
}

#[derive(Serialize)]
struct BatchManifest<'a> {
    command: &'a [String],
    seeds: Vec<u64>,
    config_hash: String,
    data: String,
    data_sha256: &'a str,
    versions: Versions,
    runs: Vec<String>,
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, serde_json::to_string_pretty(value)?).with_context(|| format!("writing {}", path.display()))
}

fn run_manifest(dir: &Path, argv: &[String], plan: &TrainPlan, seed: u64, data: &Path, sha: &str) -> Result<()> {
    let single = TrainPlan {
        seeds: vec![seed],
        ..plan.clone()
    };
    write_json(
        &dir.join("manifest.json"),
        &RunManifest {
            command: argv,
            seed,
            config_hash: single.config_hash(),
            data: data.display().to_string(),
            data_sha256: sha,
            versions: VERSIONS,
        },
    )
}

fn synth(a: SynthArgs) -> Result<()> {
    let grammar = match &a.grammar {
        Some(p) => {
            GrammarConfig::from_json(&fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)?
        }
        None => GrammarConfig::default(),
    };
    let corpus = synth_generate(&grammar, a.count, a.seed)?;
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    write_jsonl(&a.out, &corpus)?;
    println!("wrote {} sentences to {}", corpus.len(), a.out.display());
    Ok(())
}

fn train(a: TrainArgs, argv: &[String]) -> Result<()> {
    let mut plan = read_plan(&a.plan)?;
    plan.sp_train_encoder |= a.sp_train_encoder;
    plan.validate().map_err(|e| usage(e.to_string()))?;
    let corpus = read_corpus(&a.data)?;
    let sha = sha256_file(&a.data)?;
    let out = out_dir(a.out, "train");
    let mut dirs = Vec::new();
    for &seed in &plan.seeds {
        let o = train_run(&plan, &corpus, seed)?;
        let name = format!("seed-{seed}");
        let dir = out.join(&name);
        o.write(&dir)?;
        run_manifest(&dir, argv, &plan, seed, &a.data, &sha)?;
        let dev: Vec<String> = o.dev.iter().map(|(t, s)| format!("{t} {:.2}", 100.0 * s)).collect();
        println!(
            "{} seed {seed}: dev {} | heads kept {:.1}%",
            plan.label(),
            dev.join(", "),
            o.heads_kept
        );
        dirs.push(name);
    }
    write_json(
        &out.join("manifest.json"),
        &BatchManifest {
            command: argv,
            seeds: plan.seeds.clone(),
            config_hash: plan.config_hash(),
            data: a.data.display().to_string(),
            data_sha256: &sha,
            versions: VERSIONS,
            runs: dirs,
        },
    )
}

fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    list(s)
        .iter()
        .map(|x| x.parse().map_err(|_| usage(format!("seed `{x}` is not an integer"))))
        .collect()
}

fn grid(a: GridArgs, argv: &[String]) -> Result<()> {
    let tasks = parse_tasks(&a.tasks).map_err(|e| usage(e.to_string()))?;
    let mut base = match &a.plan {
        Some(p) => read_plan(p)?,
        None => TrainPlan::desk(),
    };
    if let Some(s) = &a.seeds {
        base.seeds = parse_seeds(s)?;
    }
    let jobs = grid_plans(&base, &tasks).map_err(|e| usage(e.to_string()))?;
    let corpus = read_corpus(&a.data)?;
    let sha = sha256_file(&a.data)?;
    let out = out_dir(a.out, "grid");
    let report = run_grid(&base, &tasks, &corpus, Some(&out))?;
    for job in &jobs {
        run_manifest(&out.join(&job.dir), argv, &job.plan, job.seed, &a.data, &sha)?;
    }
    write_json(&out.join("grid.json"), &report)?;
    fs::write(out.join("table.md"), report.to_markdown())?;
    fs::write(out.join("table.csv"), report.to_csv())?;
    write_json(
        &out.join("manifest.json"),
        &BatchManifest {
            command: argv,
            seeds: base.seeds.clone(),
            config_hash: base.config_hash(),
            data: a.data.display().to_string(),
            data_sha256: &sha,
            versions: VERSIONS,
            runs: jobs.iter().map(|j| j.dir.clone()).collect(),
        },
    )?;
    print!("{}", report.to_markdown());
    println!("{} runs written to {}", jobs.len(), out.display());
    Ok(())
}

fn run_name(path: &str) -> String {
    let p = Path::new(path);
    let comps: Vec<String> = p
        .components()
        .rev()
        .take(2)
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect();
    comps.into_iter().rev().collect::<Vec<_>>().join("/")
}

fn probe(a: ProbeArgs) -> Result<()> {
    let task: Task = a.task.parse().map_err(|e: headlab::LabError| usage(e.to_string()))?;
    let merge = match a.merge.as_str() {
        "mean-sum" => Merge::MeanSum,
        "pure-mean" => Merge::PureMean,
        other => return Err(usage(format!("--merge must be mean-sum or pure-mean, got `{other}`"))),
    };
    let opts = ProbeOptions {
        merge,
        keep_bos: a.keep_bos,
    };
    let corpus = read_corpus(&a.data)?;
    let mut runs = Vec::new();
    if let Some(models) = &a.model {
        for (i, dir) in list(models).iter().enumerate() {
            let m = Model::load(Path::new(dir)).with_context(|| format!("loading model {dir}"))?;
            let records = capture_snapshots(&m, &corpus)?;
            if let Some(exp) = &a.export_snapshots {
                write_snapshots(&exp.join(format!("run{i}.snap")), &records)?;
            }
            runs.push(ProbeRun {
                name: run_name(dir),
                records,
            });
        }
    } else if let Some(files) = &a.snapshots {
        for f in list(files) {
            let records = read_snapshots(Path::new(&f)).with_context(|| format!("reading snapshots {f}"))?;
            runs.push(ProbeRun {
                name: run_name(&f),
                records,
            });
        }
    }
    if runs.is_empty() {
        return Err(usage("no models or snapshot files given"));
    }
    let report = probe_all(&corpus, &runs, task, opts)?;
    write_json(&a.out, &report)?;
    fs::write(a.out.with_extension("csv"), report.to_csv())?;
    if let Some(b) = &a.baseline {
        let base: ProbeReport =
            serde_json::from_str(&fs::read_to_string(b).with_context(|| format!("reading {}", b.display()))?)?;
        let freq = label_frequencies(task, &corpus);
        let d = diff_report(&[("model".to_string(), report.clone())], &base, &freq);
        fs::write(a.out.with_extension("diff.csv"), d.to_csv())?;
    }
    println!(
        "{task} probe over {} run(s), {} layers x {} heads",
        report.runs.len(),
        report.layers,
        report.heads
    );
    for l in report.labels.iter().chain(std::iter::once(&report.overall)) {
        println!(
            "  {:<10} support {:>6}  selected {:.2}  best layer {}",
            l.label,
            l.support,
            100.0 * l.selected,
            l.best_layer
        );
    }
    if !report.omitted.is_empty() {
        println!("  omitted (no support): {}", report.omitted.join(", "));
    }
    Ok(())
}

fn read_grids(entries: &[String]) -> Result<Vec<UtilizationGrid>> {
    let mut out = Vec::new();
    for e in entries {
        let p = Path::new(e);
        let file = if p.is_dir() {
            p.join("utilization.csv")
        } else {
            p.to_path_buf()
        };
        let text = fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
        out.extend(UtilizationGrid::read_csv(&text)?);
    }
    Ok(out)
}

fn analyze(a: AnalyzeArgs) -> Result<()> {
    let out = out_dir(a.out, "analyze");
    fs::create_dir_all(&out)?;
    let grids = read_grids(&list(&a.runs))?;
    if grids.is_empty() {
        return Err(usage("--runs names no utilization grids"));
    }
    let mut groups: Vec<(String, Vec<UtilizationGrid>)> = Vec::new();
    for g in grids {
        let label = g.task_label();
        match groups.iter_mut().find(|x| x.0 == label) {
            Some(x) => x.1.push(g),
            None => groups.push((label, vec![g])),
        }
    }
    let mut all_csv = String::from("layer,head,run,task,expected_z\n");
    for (_, gs) in &groups {
        for g in gs {
            all_csv.extend(g.to_csv().lines().skip(1).map(|l| format!("{l}\n")));
        }
    }
    fs::write(out.join("utilization.csv"), all_csv)?;
    let mut bundles = Vec::new();
    for (label, gs) in &groups {
        if gs.len() == 3 {
            let b = RunBundle::new(gs.clone())?;
            write_ppm(&rgb_encode(&b), &out.join(format!("rgb-{label}.ppm")), a.scale)?;
            bundles.push((label.clone(), b));
        } else {
            log::warn!("model {label} has {} runs; RGB and adjusted R² need 3", gs.len());
        }
    }
    if !bundles.is_empty() {
        let t = r2_table(&bundles)?;
        fs::write(out.join("adj_r2.csv"), &t)?;
        print!("{t}");
    }
    if groups.len() >= 2 {
        let means: Vec<(String, Vec<f64>)> = groups
            .iter()
            .map(|(l, gs)| {
                let n = gs[0].values.len();
                let m = (0..n)
                    .map(|j| gs.iter().map(|g| g.values[j]).sum::<f64>() / gs.len() as f64)
                    .collect();
                (l.clone(), m)
            })
            .collect();
        let t = pearson_table(&means)?;
        fs::write(out.join("pearson.csv"), &t)?;
        print!("{t}");
    }
    if let Some(ov) = &a.overlay {
        let gs = read_grids(&list(ov))?;
        let heat = gray_overlay(&gs, a.overlay_tasks, a.overlay_runs).map_err(|e| usage(e.to_string()))?;
        write_ppm(&heat.to_image(), &out.join("overlay.ppm"), a.scale)?;
        write_json(&out.join("overlay.json"), &heat)?;
        println!("overlay of {} grids written", gs.len());
    }
    println!("analysis written to {}", out.display());
    Ok(())
}

fn report(a: ReportArgs) -> Result<()> {
    let r = GridReport::from_dir(&a.input)?;
    let md = r.to_markdown();
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(&a.out, &md)?;
    fs::write(a.out.with_extension("csv"), r.to_csv())?;
    let kept: BTreeMap<String, Vec<f64>> = r.runs.iter().fold(BTreeMap::new(), |mut m, run| {
        m.entry(run.setting.clone()).or_default().push(run.heads_kept);
        m
    });
    print!("{md}");
    for (setting, k) in kept {
        let (mean, std) = headlab::trainer::mean_std(&k);
        println!("{setting}: heads kept {mean:.2} ± {std:.2}%");
    }
    Ok(())
}
