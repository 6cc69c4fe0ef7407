//! (code, text) pair loading and deterministic size-ladder sampling.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairRecord {
    pub id: String,
    pub code: String,
    pub doc: String,
}

impl PairRecord {
    pub fn new(id: impl Into<String>, code: impl Into<String>, doc: impl Into<String>) -> Self {
        PairRecord {
            id: id.into(),
            code: code.into(),
            doc: doc.into(),
        }
    }

    pub fn is_valid(&self) -> bool {
        !self.code.is_empty() && !self.doc.trim().is_empty()
    }
}

/// JSONL field names. Defaults match CodeSearchNet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldNames {
    pub code: String,
    pub doc: String,
    /// Explicit id field; when unset `id`, then `url`, then the line number.
    pub id: Option<String>,
}

impl Default for FieldNames {
    fn default() -> Self {
        FieldNames {
            code: "code".into(),
            doc: "docstring".into(),
            id: None,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Loaded {
    pub records: Vec<PairRecord>,
    pub skipped: usize,
}

fn value_as_id(v: &Value) -> Option<String> {
    match v {
        Value::String(s) if !s.is_empty() => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn parse_line(line: &str, lineno: usize, fields: &FieldNames) -> Option<PairRecord> {
    let obj: Value = serde_json::from_str(line).ok()?;
    let code = obj.get(&fields.code)?.as_str()?;
    let doc = obj.get(&fields.doc)?.as_str()?;
    let id = match &fields.id {
        Some(f) => obj.get(f).and_then(value_as_id)?,
        None => obj
            .get("id")
            .and_then(value_as_id)
            .or_else(|| obj.get("url").and_then(value_as_id))
            .unwrap_or_else(|| format!("L{lineno}")),
    };
    let rec = PairRecord::new(id, code, doc);
    rec.is_valid().then_some(rec)
}

/// Reads pairs in file order, skipping and counting malformed lines.
/// Fails when more than half of the non-blank lines are malformed.
pub fn load_pairs(path: &Path, limit: Option<usize>, fields: &FieldNames) -> Result<Loaded> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut loaded = Loaded::default();
    let mut total = 0;
    for (n, line) in BufReader::new(file).lines().enumerate() {
        if limit.is_some_and(|l| loaded.records.len() >= l) {
            break;
        }
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        total += 1;
        match parse_line(&line, n + 1, fields) {
            Some(rec) => loaded.records.push(rec),
            None => loaded.skipped += 1,
        }
    }
    if loaded.skipped * 2 > total {
        return Err(Error::MostlyMalformed {
            path: path.to_path_buf(),
            malformed: loaded.skipped,
            total,
        });
    }
    if loaded.skipped > 0 {
        log::warn!("{}: skipped {} malformed lines", path.display(), loaded.skipped);
    }
    Ok(loaded)
}

/// Writes pairs as JSONL with the given field names.
pub fn write_pairs(path: &Path, records: &[PairRecord], fields: &FieldNames) -> Result<()> {
    let mut out = String::new();
    for r in records {
        let mut obj = serde_json::Map::new();
        obj.insert(fields.id.clone().unwrap_or_else(|| "id".into()), Value::String(r.id.clone()));
        obj.insert(fields.code.clone(), Value::String(r.code.clone()));
        obj.insert(fields.doc.clone(), Value::String(r.doc.clone()));
        out.push_str(&Value::Object(obj).to_string());
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplePlan {
    pub train_sizes: Vec<usize>,
    pub test_sizes: Vec<usize>,
    pub seed: u64,
}

impl SamplePlan {
    pub fn validate(&self, corpus_size: usize) -> Result<()> {
        for (name, sizes) in [("train", &self.train_sizes), ("test", &self.test_sizes)] {
            if sizes.is_empty() {
                return Err(Error::Plan(format!("{name} sizes empty")));
            }
            if sizes.iter().any(|&s| s == 0) {
                return Err(Error::Plan(format!("{name} sizes must be positive")));
            }
            if sizes.windows(2).any(|w| w[1] < w[0]) {
                return Err(Error::Plan(format!("{name} sizes must be non-decreasing")));
            }
            if let Some(&s) = sizes.iter().find(|&&s| s > corpus_size) {
                return Err(Error::SizeExceedsPool {
                    split: if name == "train" { "train" } else { "test" },
                    size: s,
                    pool: corpus_size,
                });
            }
        }
        Ok(())
    }

    pub fn max_train(&self) -> usize {
        self.train_sizes.iter().copied().max().unwrap_or(0)
    }

    pub fn max_test(&self) -> usize {
        self.test_sizes.iter().copied().max().unwrap_or(0)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let src = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&src)?)
    }
}

/// Lowercased first sentence with punctuation collapsed; docs sharing this
/// key never straddle the train/test boundary.
pub fn doc_key(doc: &str) -> String {
    let first = doc
        .trim()
        .split(['\n'])
        .next()
        .unwrap_or("")
        .split(". ")
        .next()
        .unwrap_or("");
    first
        .to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Shuffled train and test pools; every ladder subset is a prefix.
#[derive(Debug, Clone)]
pub struct Splits {
    pub plan: SamplePlan,
    pub train_pool: Vec<PairRecord>,
    pub test_pool: Vec<PairRecord>,
}

impl Splits {
    pub fn train(&self, size: usize) -> Result<&[PairRecord]> {
        self.train_pool.get(..size).ok_or(Error::SizeExceedsPool {
            split: "train",
            size,
            pool: self.train_pool.len(),
        })
    }

    pub fn test(&self, size: usize) -> Result<&[PairRecord]> {
        self.test_pool.get(..size).ok_or(Error::SizeExceedsPool {
            split: "test",
            size,
            pool: self.test_pool.len(),
        })
    }

    pub fn train_subsets(&self) -> Vec<&[PairRecord]> {
        self.plan.train_sizes.iter().map(|&s| &self.train_pool[..s]).collect()
    }

    pub fn test_subsets(&self) -> Vec<&[PairRecord]> {
        self.plan.test_sizes.iter().map(|&s| &self.test_pool[..s]).collect()
    }

    /// Header line with seed and counts, then one `{split, rank, id}` line
    /// per pooled record in order.
    pub fn write_manifest(&self, mut w: impl Write) -> std::io::Result<()> {
        let header = serde_json::json!({
            "seed": self.plan.seed,
            "train_sizes": self.plan.train_sizes,
            "test_sizes": self.plan.test_sizes,
            "train_pool": self.train_pool.len(),
            "test_pool": self.test_pool.len(),
        });
        writeln!(w, "{header}")?;
        for (split, pool) in [("train", &self.train_pool), ("test", &self.test_pool)] {
            for (rank, r) in pool.iter().enumerate() {
                writeln!(w, "{}", serde_json::json!({"split": split, "rank": rank, "id": r.id}))?;
            }
        }
        Ok(())
    }
}

/// Seeded split into doc-disjoint test and train pools.
///
/// Records are deduplicated by id, grouped by [`doc_key`], groups shuffled
/// and taken whole into the test pool until it holds the largest test size.
/// Leftover records of the group that overflowed the test pool are dropped
/// rather than leaked into training. Both pools are then shuffled and the
/// train pool truncated to the largest train size.
pub fn sample_split(records: &[PairRecord], plan: &SamplePlan) -> Result<Splits> {
    plan.validate(records.len())?;
    let mut seen = HashSet::new();
    let mut groups: Vec<Vec<&PairRecord>> = Vec::new();
    let mut group_of: HashMap<String, usize> = HashMap::new();
    for r in records {
        if !seen.insert(r.id.as_str()) {
            continue;
        }
        let key = doc_key(&r.doc);
        let g = *group_of.entry(key).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[g].push(r);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    groups.shuffle(&mut rng);

    let want_test = plan.max_test();
    let mut test_pool: Vec<PairRecord> = Vec::with_capacity(want_test);
    let mut train_pool: Vec<PairRecord> = Vec::new();
    for g in groups {
        if test_pool.len() < want_test {
            let room = want_test - test_pool.len();
            test_pool.extend(g.into_iter().take(room).cloned());
        } else {
            train_pool.extend(g.into_iter().cloned());
        }
    }
    if test_pool.len() < want_test {
        return Err(Error::SizeExceedsPool {
            split: "test",
            size: want_test,
            pool: test_pool.len(),
        });
    }
    test_pool.shuffle(&mut rng);
    train_pool.shuffle(&mut rng);
    if train_pool.len() < plan.max_train() {
        return Err(Error::SizeExceedsPool {
            split: "train",
            size: plan.max_train(),
            pool: train_pool.len(),
        });
    }
    train_pool.truncate(plan.max_train());
    Ok(Splits {
        plan: plan.clone(),
        train_pool,
        test_pool,
    })
}

/// Seeded random subset of `n` records.
pub fn sample_records(records: &[PairRecord], n: usize, seed: u64) -> Result<Vec<PairRecord>> {
    if n > records.len() {
        return Err(Error::SizeExceedsPool {
            split: "sample",
            size: n,
            pool: records.len(),
        });
    }
    let mut idx: Vec<usize> = (0..records.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok(idx[..n].iter().map(|&i| records[i].clone()).collect())
}
