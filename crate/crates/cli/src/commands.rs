use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use log::{info, warn};

use clcp_core::clcp::{train as train_model, EpochMetrics, TrainOptions, TrainState};
use clcp_core::encoders::{shape_plan, ClcpModel, ModelConfig, TextVocab};
use clcp_core::himg::{encode_snippet, ImageFile};
use clcp_core::ingest::{load_pairs, sample_split, write_pairs, FieldNames, PairRecord, SamplePlan};
use clcp_core::ndnn::{read_checkpoint, write_checkpoint};
use clcp_core::pylex::tokenize;
use clcp_core::textclean::clean_corpus;
use clcp_core::vocab::{self, ExhaustPolicy, IdRanges, Vocabulary, PAD_ID};
use clcp_core::zeval::synth::{synth_distinct, synth_pairs, SynthSplit};
use clcp_core::zeval::{
    prepare, run_ablations, run_ladder, text_to_code_match, zero_shot_match, Delta, EvalResult, Variant,
};

use crate::manifest::{new_run_dir, sidecar, RunManifest};
use crate::{ConfigArgs, FieldArgs};

fn field_names(f: &FieldArgs) -> FieldNames {
    FieldNames {
        code: f.code_field.clone(),
        doc: f.doc_field.clone(),
        id: f.id_field.clone(),
    }
}

fn load(path: &Path, f: &FieldArgs, m: &mut RunManifest) -> Result<Vec<PairRecord>> {
    m.input(path)?;
    let loaded = load_pairs(path, f.limit, &field_names(f))?;
    if loaded.skipped > 0 {
        m.note("malformed_lines", loaded.skipped);
    }
    info!("loaded {} records from {}", loaded.records.len(), path.display());
    Ok(loaded.records)
}

fn apply_overrides(cfg: &mut ModelConfig, overrides: &[String]) -> Result<()> {
    for kv in overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| anyhow!("--set expects KEY=VALUE, got {kv:?}"))?;
        cfg.set(k.trim(), v.trim())?;
    }
    Ok(())
}

fn resolve_config(args: &ConfigArgs) -> Result<ModelConfig> {
    let mut cfg = match (&args.config, &args.family) {
        (Some(path), _) => ModelConfig::read(path)?,
        (None, Some(f)) => ModelConfig::family(f)?,
        (None, None) => ModelConfig::default(),
    };
    if let Some(b) = args.blocks {
        cfg.blocks = b;
    }
    apply_overrides(&mut cfg, &args.overrides)?;
    cfg.validate()?;
    Ok(cfg)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn file_name(p: &Path) -> String {
    p.file_name().map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned())
}

pub fn build_vocab(input: &Path, out: &Path, fields: &FieldArgs) -> Result<()> {
    let mut m = RunManifest::start();
    let records = load(input, fields, &mut m)?;
    let mut streams = Vec::with_capacity(records.len());
    let mut failed = 0;
    for r in &records {
        match tokenize(&r.code) {
            Ok(t) => streams.push(t),
            Err(e) => {
                warn!("{}: {e}", r.id);
                failed += 1;
            }
        }
    }
    let vocab = vocab::build_vocab(streams.iter().map(Vec::as_slice), &IdRanges::default())?;
    vocab.write(out)?;
    m.vocab_hash = Some(vocab.sha256_hex());
    m.note("snippets", streams.len());
    m.note("lex_failures", failed);
    m.artifact(file_name(out));
    m.write(&sidecar(out))?;
    println!("{} entries from {} snippets ({} failed to lex) -> {}", vocab.len(), streams.len(), failed, out.display());
    Ok(())
}

pub fn encode(input: &Path, vocab_path: &Path, out: &Path, img_len: usize, dump: bool, fields: &FieldArgs) -> Result<()> {
    if img_len == 0 {
        bail!("invalid config field `img_len`: must be positive");
    }
    let mut m = RunManifest::start();
    let records = load(input, fields, &mut m)?;
    m.input(vocab_path)?;
    let vocab = Vocabulary::read(vocab_path)?;
    m.vocab_hash = Some(vocab.sha256_hex());
    let mut file = ImageFile::new(img_len, vocab.max_id());
    let mut ids_written = Vec::new();
    let mut skipped = Vec::new();
    let mut truncated = 0;
    for r in &records {
        match tokenize(&r.code).and_then(|t| {
            let mut scope = clcp_core::vocab::NamespaceScope::with_policy(ExhaustPolicy::Recycle);
            vocab.assign_ids(&t, &mut scope)
        }) {
            Ok(ids) => {
                truncated += usize::from(ids.len() > img_len);
                file.push(&ids);
                ids_written.push(r.id.clone());
            }
            Err(e) => {
                warn!("{}: {e}", r.id);
                skipped.push(r.id.clone());
            }
        }
    }
    file.write(out)?;
    m.artifact(file_name(out));
    if dump {
        let mut p = out.as_os_str().to_owned();
        p.push(".txt");
        let p = PathBuf::from(p);
        write_text(&p, &file.debug_dump())?;
        m.artifact(file_name(&p));
    }
    m.note("record_ids", &ids_written);
    m.note("skipped_ids", &skipped);
    m.note("truncated", truncated);
    m.write(&sidecar(out))?;
    println!(
        "{} images ({} truncated, {} skipped) -> {}",
        file.images.len(),
        truncated,
        skipped.len(),
        out.display()
    );
    Ok(())
}

pub fn clean_text(input: &Path, out: &Path, fields: &FieldArgs) -> Result<()> {
    let mut m = RunManifest::start();
    let records = load(input, fields, &mut m)?;
    let (cleaned, report) = clean_corpus(&records);
    write_pairs(out, &cleaned, &field_names(fields))?;
    m.note("report", &report);
    m.artifact(file_name(out));
    m.write(&sidecar(out))?;
    println!(
        "{} in, {} out ({} dropped, {} changed)",
        report.records_in, report.records_out, report.dropped, report.changed
    );
    for (rule, hits) in &report.rules {
        println!("  {rule:?}: {} spans, {} chars", hits.spans, hits.chars);
    }
    Ok(())
}

fn variant_records(records: Vec<PairRecord>, variant: Variant, m: &mut RunManifest) -> Vec<PairRecord> {
    match variant {
        Variant::Raw => records,
        Variant::Cleaned => {
            let (cleaned, report) = clean_corpus(&records);
            m.note("clean_report", &report);
            cleaned
        }
    }
}

fn metrics_line(e: &EpochMetrics) -> String {
    serde_json::to_string(e).unwrap_or_default()
}

pub fn train(
    data: &Path,
    out_dir: &Path,
    variant: Variant,
    seed: Option<u64>,
    config: &ConfigArgs,
    fields: &FieldArgs,
) -> Result<()> {
    let mut cfg = resolve_config(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let mut m = RunManifest::start();
    let records = variant_records(load(data, fields, &mut m)?, variant, &mut m);
    let dir = new_run_dir(out_dir)?;
    let prep = prepare(&records, &[], &cfg)?;
    let mut model = ClcpModel::<f32>::new(&cfg, prep.text_vocab.len(), cfg.seed)?;
    let mut log = fs::File::create(dir.join("metrics.jsonl"))?;
    let outcome = train_model(&mut model, &prep.train, &TrainOptions::default(), &mut |e| {
        let _ = writeln!(log, "{}", metrics_line(e));
        eprintln!(
            "epoch {:>3}  train {:.4}  val {}  scale {:.2}",
            e.epoch,
            e.train_loss,
            e.val_loss.map_or("-".to_string(), |v| format!("{v:.4}")),
            e.temperature
        );
    })?;
    write_text(&dir.join("config.cfg"), &cfg.to_text())?;
    prep.vocab.write(&dir.join("vocab.tsv"))?;
    prep.text_vocab.write(&dir.join("text_vocab.txt"))?;
    write_checkpoint(&dir.join("model.ckpt"), &outcome.state.to_checkpoint())?;
    let summary = serde_json::json!({
        "config_id": cfg.id(),
        "variant": variant,
        "train_pairs": prep.train.len(),
        "skipped": prep.skipped_train,
        "best_epoch": outcome.best_epoch,
        "best_loss": outcome.best_loss,
        "stop": outcome.stop,
    });
    write_text(&dir.join("summary.json"), &serde_json::to_string_pretty(&summary)?)?;
    m.config_hash = Some(cfg.hash());
    m.vocab_hash = Some(prep.vocab.sha256_hex());
    m.seed = Some(cfg.seed);
    m.note("text_vocab_hash", prep.text_vocab.sha256_hex());
    for a in ["config.cfg", "vocab.tsv", "text_vocab.txt", "model.ckpt", "metrics.jsonl", "summary.json"] {
        m.artifact(a);
    }
    m.write(&dir.join("manifest.json"))?;
    println!("{}: best epoch {} loss {:.4} ({:?}) -> {}", cfg.id(), outcome.best_epoch, outcome.best_loss, outcome.stop, dir.display());
    Ok(())
}

struct LoadedRun {
    cfg: ModelConfig,
    vocab: Vocabulary,
    text_vocab: TextVocab,
    model: ClcpModel<f32>,
}

fn load_run(run: &Path, m: &mut RunManifest) -> Result<LoadedRun> {
    let cfg = ModelConfig::read(&run.join("config.cfg"))?;
    let vocab = Vocabulary::read(&run.join("vocab.tsv"))?;
    let text_vocab = TextVocab::read(&run.join("text_vocab.txt"))?;
    let ckpt_path = run.join("model.ckpt");
    m.input(&ckpt_path)?;
    let state = TrainState::<f32>::from_checkpoint(read_checkpoint(&ckpt_path)?)?;
    let mut model = ClcpModel::<f32>::new(&cfg, text_vocab.len(), cfg.seed)?;
    if model.params.len() != state.params.len() {
        bail!("checkpoint holds {} tensors, config builds {}", state.params.len(), model.params.len());
    }
    for ((_, a), (_, b)) in model.params.iter().zip(state.params.iter()) {
        if a.name != b.name || a.value.shape() != b.value.shape() {
            bail!("checkpoint tensor {} {:?} does not match config ({} {:?})", b.name, b.value.shape(), a.name, a.value.shape());
        }
    }
    model.params = state.params;
    m.config_hash = Some(cfg.hash());
    m.vocab_hash = Some(vocab.sha256_hex());
    m.seed = Some(cfg.seed);
    Ok(LoadedRun {
        cfg,
        vocab,
        text_vocab,
        model,
    })
}

pub fn eval(run: &Path, test: &Path, variant: Variant, out: &Path, fields: &FieldArgs) -> Result<()> {
    let mut m = RunManifest::start();
    let r = load_run(run, &mut m)?;
    let records = variant_records(load(test, fields, &mut m)?, variant, &mut m);
    let mut images = Vec::new();
    let mut docs = Vec::new();
    let mut skipped = 0;
    for rec in &records {
        match encode_snippet(&rec.code, &r.vocab, r.cfg.img_len, ExhaustPolicy::Recycle) {
            Ok((img, _)) => {
                images.push(img.values);
                docs.push(r.text_vocab.encode(&rec.doc, r.cfg.text_max_len).0);
            }
            Err(e) => {
                warn!("{}: {e}", rec.id);
                skipped += 1;
            }
        }
    }
    if images.is_empty() {
        bail!("no test record could be encoded");
    }
    let refs: Vec<&[f32]> = images.iter().map(Vec::as_slice).collect();
    let codes = r.model.embed_code(&refs)?;
    let texts = r.model.embed_text(&docs)?;
    let c2t = zero_shot_match(&codes, &texts)?;
    let t2c = text_to_code_match(&codes, &texts)?;
    let train_size = fs::read_to_string(run.join("summary.json"))
        .ok()
        .and_then(|s| serde_json::from_str::<serde_json::Value>(&s).ok())
        .and_then(|v| v.get("train_pairs").and_then(serde_json::Value::as_u64))
        .unwrap_or(0) as usize;
    let res = EvalResult {
        config_id: r.cfg.id(),
        variant,
        train_size,
        seed: r.cfg.seed,
        l: c2t.l,
        correct: c2t.correct,
        acc: c2t.acc,
        ea: c2t.ea,
        acc_t2c: t2c.acc,
    };
    let csv = format!(
        "config,variant,train_size,seed,L,correct,acc,ea,acc_t2c\n{},{},{},{},{},{},{:.6},{:.6},{:.6}\n",
        res.config_id, res.variant, res.train_size, res.seed, res.l, res.correct, res.acc, res.ea, res.acc_t2c
    );
    write_text(out, &csv)?;
    m.note("skipped", skipped);
    m.note("result", &res);
    m.artifact(file_name(out));
    m.write(&sidecar(out))?;
    println!(
        "{} [{}]  L={}  correct={}  acc={:.4}  EA={:.4}  acc(text->code)={:.4}",
        res.config_id, res.variant, res.l, res.correct, res.acc, res.ea, res.acc_t2c
    );
    Ok(())
}

/// Corpus for ladder-style commands: the given file or, when absent, a
/// synthetic sample large enough for the plan.
fn ladder_corpus(data: Option<&Path>, plan: &SamplePlan, fields: &FieldArgs, m: &mut RunManifest) -> Result<Vec<PairRecord>> {
    match data {
        Some(p) => load(p, fields, m),
        None => {
            let n = 2 * (plan.max_train() + plan.max_test());
            m.note("corpus", format!("synthetic family, {n} pairs, seed {}", plan.seed));
            Ok(synth_pairs(n, SynthSplit::Train, plan.seed)?)
        }
    }
}

fn write_split(dir: &Path, records: &[PairRecord], plan: &SamplePlan, variant: Variant, m: &mut RunManifest) -> Result<()> {
    let records = match variant {
        Variant::Raw => records.to_vec(),
        Variant::Cleaned => clean_corpus(records).0,
    };
    let splits = sample_split(&records, plan)?;
    let mut f = fs::File::create(dir.join("split.jsonl"))?;
    splits.write_manifest(&mut f)?;
    m.artifact("split.jsonl");
    Ok(())
}

fn write_logs(dir: &Path, logs: &[(String, Vec<EpochMetrics>)], m: &mut RunManifest) -> Result<()> {
    let log_dir = dir.join("logs");
    fs::create_dir_all(&log_dir)?;
    for (key, metrics) in logs {
        let name = format!("{}.jsonl", key.replace('/', "_").replace('+', "plus").replace('-', "minus"));
        let body: String = metrics.iter().map(|e| metrics_line(e) + "\n").collect();
        write_text(&log_dir.join(&name), &body)?;
        m.artifact(format!("logs/{name}"));
    }
    Ok(())
}

pub struct LadderArgs<'a> {
    pub plan: &'a Path,
    pub data: Option<&'a Path>,
    pub out_dir: &'a Path,
    pub variant: Variant,
    pub seeds: &'a [u64],
    pub configs: &'a [PathBuf],
    pub families: &'a [String],
    pub blocks: usize,
    pub overrides: &'a [String],
    pub fields: &'a FieldArgs,
}

pub fn ladder(a: LadderArgs<'_>) -> Result<()> {
    let mut m = RunManifest::start();
    m.input(a.plan)?;
    let plan = SamplePlan::read(a.plan)?;
    let mut configs = Vec::new();
    for p in a.configs {
        m.input(p)?;
        configs.push(ModelConfig::read(p)?);
    }
    for f in a.families {
        let mut c = ModelConfig::family(f)?;
        c.blocks = a.blocks;
        configs.push(c);
    }
    if configs.is_empty() {
        configs.push(ModelConfig::default());
    }
    for c in &mut configs {
        apply_overrides(c, a.overrides)?;
        c.validate()?;
    }
    let records = ladder_corpus(a.data, &plan, a.fields, &mut m)?;
    let dir = new_run_dir(a.out_dir)?;
    write_split(&dir, &records, &plan, a.variant, &mut m)?;
    let report = run_ladder(&records, &plan, &configs, a.variant, a.seeds)?;
    write_text(&dir.join("results.csv"), &report.to_csv())?;
    let table = report.render_table();
    write_text(&dir.join("table.txt"), &table)?;
    write_logs(&dir, &report.logs, &mut m)?;
    for (i, c) in configs.iter().enumerate() {
        let name = format!("config-{i}.cfg");
        write_text(&dir.join(&name), &c.to_text())?;
        m.artifact(name);
    }
    m.artifact("results.csv");
    m.artifact("table.txt");
    m.config_hash = Some(configs.iter().map(ModelConfig::hash).collect::<Vec<_>>().join(","));
    m.seed = Some(plan.seed);
    m.note("seeds", a.seeds);
    m.note("variant", a.variant);
    m.note("failed_rows", report.failed());
    m.write(&dir.join("manifest.json"))?;
    print!("{table}");
    println!("-> {}", dir.display());
    Ok(())
}

pub struct AblateArgs<'a> {
    pub plan: &'a Path,
    pub data: Option<&'a Path>,
    pub out_dir: &'a Path,
    pub variant: Variant,
    pub seeds: &'a [u64],
    pub config: Option<&'a Path>,
    pub families: &'a [String],
    pub blocks: &'a [usize],
    pub deltas: &'a [String],
    pub overrides: &'a [String],
    pub fields: &'a FieldArgs,
}

fn parse_delta(s: &str) -> Result<Delta> {
    Delta::ALL
        .into_iter()
        .find(|d| d.label().eq_ignore_ascii_case(s.trim()))
        .ok_or_else(|| anyhow!("unknown delta {s:?}; expected none, +BN, -Pool or -Init"))
}

pub fn ablate(a: AblateArgs<'_>) -> Result<()> {
    let mut m = RunManifest::start();
    m.input(a.plan)?;
    let plan = SamplePlan::read(a.plan)?;
    let shared = match a.config {
        Some(p) => {
            m.input(p)?;
            Some(ModelConfig::read(p)?)
        }
        None => None,
    };
    let mut bases = Vec::new();
    for f in a.families {
        for &b in a.blocks {
            let mut c = shared.clone().unwrap_or_default();
            let fam = ModelConfig::family(f)?;
            c.arch = fam.arch;
            c.pool_scope = fam.pool_scope;
            c.blocks = b;
            apply_overrides(&mut c, a.overrides)?;
            c.validate()?;
            bases.push(c);
        }
    }
    let deltas = a.deltas.iter().map(|d| parse_delta(d)).collect::<Result<Vec<_>>>()?;
    let records = ladder_corpus(a.data, &plan, a.fields, &mut m)?;
    let dir = new_run_dir(a.out_dir)?;
    write_split(&dir, &records, &plan, a.variant, &mut m)?;
    let report = run_ablations(&records, &plan, &bases, &deltas, a.variant, a.seeds)?;
    let table = report.render_table();
    write_text(&dir.join("ablation.txt"), &table)?;
    write_text(&dir.join("ablation.csv"), &report.to_csv())?;
    write_text(&dir.join("flags.json"), &serde_json::to_string_pretty(&report.flags)?)?;
    write_text(&dir.join("results.csv"), &report.ladder.to_csv())?;
    write_logs(&dir, &report.ladder.logs, &mut m)?;
    for a in ["ablation.txt", "ablation.csv", "flags.json", "results.csv"] {
        m.artifact(a);
    }
    m.config_hash = Some(bases.iter().map(ModelConfig::hash).collect::<Vec<_>>().join(","));
    m.seed = Some(plan.seed);
    m.note("seeds", a.seeds);
    m.note("variant", a.variant);
    m.write(&dir.join("manifest.json"))?;
    print!("{table}");
    println!("-> {}", dir.display());
    Ok(())
}

fn describe_id(id: u32, vocab: Option<&Vocabulary>) -> String {
    let ranges = vocab.map_or_else(IdRanges::default, |v| v.ranges.clone());
    if id == PAD_ID {
        return "PAD".into();
    }
    let Some(c) = ranges.component_of(id) else {
        return format!("{id} outside every component range");
    };
    let r = ranges.get(c);
    let mut s = format!("{c} (range {}-{})", r.lo, r.hi);
    match vocab.and_then(|v| v.entry(id).map(|(_, k)| (v, k))) {
        Some((v, key)) => {
            s.push_str(&format!("  {key:?}"));
            if let Some(list) = v.lookup_list(id) {
                let texts: Vec<&str> = list.iter().map(String::as_str).collect();
                s.push_str(&format!("  lookup [{}]", texts.join(", ")));
            }
        }
        None if vocab.is_some() => s.push_str("  <namespace-scoped>"),
        None => {}
    }
    s
}

pub fn inspect(
    vocab: Option<&Path>,
    id: Option<u32>,
    img: Option<&Path>,
    index: Option<usize>,
    config: Option<&Path>,
) -> Result<()> {
    let vocab = vocab.map(Vocabulary::read).transpose()?;
    let mut out = std::io::stdout().lock();
    let mut did = false;
    if let Some(id) = id {
        writeln!(out, "{id}: {}", describe_id(id, vocab.as_ref()))?;
        did = true;
    }
    if let Some(path) = img {
        let file = ImageFile::read(path)?;
        writeln!(out, "{}: {} images, img_len {}, max_id {}", path.display(), file.images.len(), file.img_len, file.max_id)?;
        if let Some(i) = index {
            let im = file
                .images
                .get(i)
                .ok_or_else(|| anyhow!("index {i} out of range ({} images)", file.images.len()))?;
            writeln!(out, "image {i}: true_len {} truncated {}", im.true_len, im.truncated)?;
            for (pos, &id) in im.ids[..im.true_len].iter().enumerate() {
                writeln!(out, "{pos:>5} {id:>6}  {}", describe_id(id, vocab.as_ref()))?;
            }
        }
        did = true;
    }
    if let Some(path) = config {
        let cfg = ModelConfig::read(path)?;
        writeln!(out, "{}  sha256 {}", cfg.id(), cfg.hash())?;
        write!(out, "{}", shape_plan(&cfg)?.render())?;
        did = true;
    }
    if !did {
        bail!("nothing to inspect: pass --id, --img or --config");
    }
    Ok(())
}

pub fn synth(out: &Path, n: usize, split: &str, seed: u64, distinct: bool) -> Result<()> {
    let mut m = RunManifest::start();
    let records = if distinct {
        synth_distinct(n, seed)?
    } else {
        let split = match split {
            "train" => SynthSplit::Train,
            "test" => SynthSplit::Test,
            other => bail!("--split must be train or test, got {other:?}"),
        };
        synth_pairs(n, split, seed)?
    };
    write_pairs(out, &records, &FieldNames::default())?;
    m.seed = Some(seed);
    m.artifact(file_name(out));
    m.write(&sidecar(out))?;
    println!("{} pairs -> {}", records.len(), out.display());
    Ok(())
}
