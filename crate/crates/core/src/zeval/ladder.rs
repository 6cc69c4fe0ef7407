use std::fmt::Write as _;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{prepare, text_to_code_match, zero_shot_match, EvalResult, Variant};
use crate::clcp::{train, EpochMetrics, StopReason, TrainOptions};
use crate::encoders::{ClcpModel, ModelConfig};
use crate::ingest::{sample_split, PairRecord, SamplePlan};
use crate::ndnn::{Real, Tensor};
use crate::textclean::clean_corpus;
use crate::{Error, Result};

/// Worker count for parallel cells: `CLCP_WORKERS`, else the number of
/// available cores.
pub fn workers() -> usize {
    std::env::var("CLCP_WORKERS")
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&n: &usize| n >= 1)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// One trained model evaluated on every requested test size.
#[derive(Debug, Clone)]
pub struct CellRun {
    pub config_id: String,
    pub train_size: usize,
    pub seed: u64,
    /// `(requested test size, result)`.
    pub results: Vec<(usize, EvalResult)>,
    pub metrics: Vec<EpochMetrics>,
    pub stop: StopReason,
    pub skipped_train: usize,
    pub skipped_test: usize,
}

fn prefix_rows<T: Real>(t: &Tensor<T>, k: usize) -> Tensor<T> {
    let d = t.shape()[1];
    Tensor::new(vec![k, d], t.data()[..k * d].to_vec()).expect("prefix of a valid tensor")
}

/// Trains one model on `train` and evaluates it on prefixes of `test`.
pub fn run_cell(
    train_set: &[PairRecord],
    test_set: &[PairRecord],
    test_sizes: &[usize],
    base: &ModelConfig,
    seed: u64,
    variant: Variant,
) -> Result<CellRun> {
    let mut cfg = base.clone();
    cfg.seed = seed;
    let prep = prepare(train_set, test_set, &cfg)?;
    if prep.train.len() < 2 || prep.test.is_empty() {
        return Err(Error::Plan("too few encodable pairs".into()));
    }
    let mut model = ClcpModel::<f32>::new(&cfg, prep.text_vocab.len(), seed)?;
    let outcome = train(&mut model, &prep.train, &TrainOptions::default(), &mut |_| {})?;
    if let StopReason::Aborted(msg) = &outcome.stop {
        return Err(Error::TrainingAborted(msg.clone()));
    }
    let images: Vec<&[f32]> = prep.test.iter().map(|p| p.image.as_slice()).collect();
    let docs: Vec<Vec<usize>> = prep.test.iter().map(|p| p.text.clone()).collect();
    let codes = model.embed_code(&images)?;
    let texts = model.embed_text(&docs)?;
    let mut results = Vec::new();
    for &size in test_sizes {
        let k = size.min(prep.test.len());
        let (c, t) = (prefix_rows(&codes, k), prefix_rows(&texts, k));
        let m = zero_shot_match(&c, &t)?;
        let back = text_to_code_match(&c, &t)?;
        results.push((
            size,
            EvalResult {
                config_id: cfg.id(),
                variant,
                train_size: train_set.len(),
                seed,
                l: m.l,
                correct: m.correct,
                acc: m.acc,
                ea: m.ea,
                acc_t2c: back.acc,
            },
        ));
    }
    Ok(CellRun {
        config_id: cfg.id(),
        train_size: train_set.len(),
        seed,
        results,
        metrics: outcome.metrics,
        stop: outcome.stop,
        skipped_train: prep.skipped_train,
        skipped_test: prep.skipped_test,
    })
}

/// One row of the stacked results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderRow {
    pub config_id: String,
    pub variant: Variant,
    /// `fixed` or `growing`.
    pub regime: String,
    pub train_size: usize,
    pub test_size: usize,
    pub seed: u64,
    pub status: String,
    pub result: Option<EvalResult>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default)]
pub struct LadderReport {
    pub rows: Vec<LadderRow>,
    /// Per-cell epoch logs keyed by `config/train_size/seed`.
    pub logs: Vec<(String, Vec<EpochMetrics>)>,
}

/// Trains one model per (config, training size, seed) and evaluates it on
/// the fixed test size (first of `plan.test_sizes`) and on every growing
/// test size. Failed cells are reported and the ladder continues.
pub fn run_ladder(
    records: &[PairRecord],
    plan: &SamplePlan,
    configs: &[ModelConfig],
    variant: Variant,
    seeds: &[u64],
) -> Result<LadderReport> {
    let cleaned;
    let records = match variant {
        Variant::Raw => records,
        Variant::Cleaned => {
            cleaned = clean_corpus(records).0;
            &cleaned[..]
        }
    };
    let splits = sample_split(records, plan)?;
    let mut cells = Vec::new();
    for cfg in configs {
        for &size in &plan.train_sizes {
            for &seed in seeds {
                cells.push((cfg, size, seed));
            }
        }
    }
    let test = splits.test(plan.max_test())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers())
        .build()
        .map_err(|e| Error::Plan(format!("thread pool: {e}")))?;
    let outs: Vec<Result<CellRun>> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(cfg, size, seed)| {
                let train_set = splits.train(size)?;
                let r = run_cell(train_set, test, &plan.test_sizes, cfg, seed, variant);
                match &r {
                    Ok(c) => info!("cell {}/{size}/{seed} done", c.config_id),
                    Err(e) => warn!("cell {}/{size}/{seed} failed: {e}", cfg.id()),
                }
                r
            })
            .collect()
    });
    let mut report = LadderReport::default();
    let fixed = plan.test_sizes[0];
    for (&(cfg, size, seed), out) in cells.iter().zip(outs) {
        let mut row = |regime: &str, test_size: usize, result: Option<EvalResult>, error: Option<String>| {
            report.rows.push(LadderRow {
                config_id: cfg.id(),
                variant,
                regime: regime.to_string(),
                train_size: size,
                test_size,
                seed,
                status: if error.is_none() { "ok" } else { "failed" }.to_string(),
                result,
                error,
            })
        };
        match out {
            Ok(cell) => {
                for (ts, r) in &cell.results {
                    if *ts == fixed {
                        row("fixed", *ts, Some(r.clone()), None);
                    }
                }
                for (ts, r) in &cell.results {
                    row("growing", *ts, Some(r.clone()), None);
                }
                report
                    .logs
                    .push((format!("{}/{}/{}", cell.config_id, size, seed), cell.metrics));
            }
            Err(e) => {
                row("fixed", fixed, None, Some(e.to_string()));
                for &ts in &plan.test_sizes {
                    row("growing", ts, None, Some(e.to_string()));
                }
            }
        }
    }
    Ok(report)
}

impl LadderReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("config,variant,regime,train_size,test_size,seed,status,L,correct,acc,ea,acc_t2c,error\n");
        for r in &self.rows {
            let (l, c, acc, ea, t2c) = match &r.result {
                Some(e) => (
                    e.l.to_string(),
                    e.correct.to_string(),
                    format!("{:.6}", e.acc),
                    format!("{:.6}", e.ea),
                    format!("{:.6}", e.acc_t2c),
                ),
                None => Default::default(),
            };
            let err = r.error.as_deref().unwrap_or("").replace([',', '\n'], ";");
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{l},{c},{acc},{ea},{t2c},{err}",
                r.config_id, r.variant, r.regime, r.train_size, r.test_size, r.seed, r.status
            );
        }
        s
    }

    pub fn render_table(&self) -> String {
        let mut s = format!(
            "{:<14} {:<8} {:<8} {:>7} {:>6} {:>5} {:>8} {:>8} {:>8}\n",
            "config", "variant", "regime", "train", "test", "seed", "acc", "EA", "status"
        );
        for r in &self.rows {
            let (acc, ea) = r
                .result
                .as_ref()
                .map_or(("-".into(), "-".into()), |e| (format!("{:.4}", e.acc), format!("{:.4}", e.ea)));
            let _ = writeln!(
                s,
                "{:<14} {:<8} {:<8} {:>7} {:>6} {:>5} {:>8} {:>8} {:>8}",
                r.config_id, r.variant, r.regime, r.train_size, r.test_size, r.seed, acc, ea, r.status
            );
        }
        s
    }

    pub fn failed(&self) -> usize {
        self.rows.iter().filter(|r| r.result.is_none()).count()
    }
}
