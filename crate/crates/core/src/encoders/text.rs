use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rand::Rng;
use sha2::{Digest, Sha256};

use super::config::ModelConfig;
use crate::ndnn::{default_init, normal_init, Graph, ParamId, ParamSet, Real, Tensor, Var};
use crate::{Error, Result};

pub const TEXT_PAD: usize = 0;
pub const TEXT_OOV: usize = 1;

/// Lowercased alphanumeric words.
pub fn text_tokens(doc: &str) -> Vec<String> {
    doc.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(|w| w.to_lowercase())
        .collect()
}

/// Word-level vocabulary: 0 is padding, 1 the out-of-vocabulary bucket.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TextVocab {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

impl TextVocab {
    fn from_words(words: Vec<String>) -> Self {
        let index = words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        TextVocab { words, index }
    }

    /// Keeps words with at least `min_freq` occurrences, most frequent
    /// first (ties by spelling), up to `max_size` entries including the two
    /// reserved ones.
    pub fn build<'a>(docs: impl IntoIterator<Item = &'a str>, max_size: usize, min_freq: usize) -> Self {
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for d in docs {
            for w in text_tokens(d) {
                *counts.entry(w).or_default() += 1;
            }
        }
        let mut ranked: Vec<(String, usize)> = counts.into_iter().filter(|(_, n)| *n >= min_freq).collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let mut words = vec!["<pad>".to_string(), "<oov>".to_string()];
        words.extend(ranked.into_iter().take(max_size.saturating_sub(2)).map(|(w, _)| w));
        Self::from_words(words)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.len() <= 2
    }

    pub fn word(&self, id: usize) -> Option<&str> {
        self.words.get(id).map(String::as_str)
    }

    /// Token ids, truncated to `max_len`. Never empty: a doc without words
    /// becomes a single OOV token.
    pub fn encode(&self, doc: &str, max_len: usize) -> (Vec<usize>, bool) {
        let toks = text_tokens(doc);
        let truncated = toks.len() > max_len;
        let mut ids: Vec<usize> = toks
            .iter()
            .take(max_len)
            .map(|w| self.index.get(w).copied().unwrap_or(TEXT_OOV))
            .collect();
        if ids.is_empty() {
            ids.push(TEXT_OOV);
        }
        (ids, truncated)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("#clcp-text-vocab\t1\n");
        for w in &self.words[2..] {
            s.push_str(w);
            s.push('\n');
        }
        s
    }

    pub fn from_text(src: &str) -> Result<Self> {
        let mut lines = src.lines();
        if lines.next() != Some("#clcp-text-vocab\t1") {
            return Err(Error::VocabFormat("missing text vocabulary header".into()));
        }
        let mut words = vec!["<pad>".to_string(), "<oov>".to_string()];
        words.extend(lines.map(str::to_string));
        Ok(Self::from_words(words))
    }

    pub fn sha256_hex(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let src = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&src)
    }
}

#[derive(Debug, Clone)]
struct TextLayer {
    wq: ParamId,
    wk: ParamId,
    wv: ParamId,
    wo: ParamId,
    bo: ParamId,
    w1: ParamId,
    b1: ParamId,
    w2: ParamId,
    b2: ParamId,
}

/// Token plus position embeddings, `A` residual attention/feed-forward
/// layers, masked mean pooling and a dense projection.
#[derive(Debug, Clone)]
pub struct TextEncoder {
    tok: ParamId,
    pos: ParamId,
    layers: Vec<TextLayer>,
    head_w: ParamId,
    head_b: ParamId,
    heads: usize,
    pub max_len: usize,
}

impl TextEncoder {
    pub fn build<T: Real, R: Rng>(cfg: &ModelConfig, vocab_size: usize, params: &mut ParamSet<T>, rng: &mut R) -> Self {
        let e = cfg.text_embed_dim;
        let f = cfg.text_ff_dim;
        let tok = params.add("text.tok", normal_init(&[vocab_size, e], 1.0 / (e as f64).sqrt(), rng));
        let pos = params.add("text.pos", normal_init(&[cfg.text_max_len, e], 0.02, rng));
        let mut layers = Vec::with_capacity(cfg.text_layers);
        for i in 0..cfg.text_layers {
            let n = |s: &str| format!("text.layer{}.{s}", i + 1);
            let mut lin = |name: String, a: usize, b: usize, params: &mut ParamSet<T>| {
                params.add(name, default_init(&[a, b], a, rng))
            };
            let wq = lin(n("wq"), e, e, params);
            let wk = lin(n("wk"), e, e, params);
            let wv = lin(n("wv"), e, e, params);
            let wo = lin(n("wo"), e, e, params);
            let w1 = lin(n("w1"), e, f, params);
            let w2 = lin(n("w2"), f, e, params);
            layers.push(TextLayer {
                wq,
                wk,
                wv,
                wo,
                bo: params.add(n("bo"), Tensor::zeros(&[e])),
                w1,
                b1: params.add(n("b1"), Tensor::zeros(&[f])),
                w2,
                b2: params.add(n("b2"), Tensor::zeros(&[e])),
            });
        }
        let head_w = params.add("text.head.w", default_init(&[e, cfg.embed_dim], e, rng));
        let head_b = params.add("text.head.b", Tensor::zeros(&[cfg.embed_dim]));
        TextEncoder {
            tok,
            pos,
            layers,
            head_w,
            head_b,
            heads: cfg.text_heads,
            max_len: cfg.text_max_len,
        }
    }

    /// Right-pads `batch` to its longest member; returns unnormalized
    /// `[B, d]`.
    pub fn forward<T: Real>(&self, g: &mut Graph<'_, T>, batch: &[Vec<usize>]) -> Result<Var> {
        let bsz = batch.len();
        let t = batch.iter().map(Vec::len).max().unwrap_or(0);
        if bsz == 0 || t == 0 {
            return Err(Error::Shape("text batch is empty".into()));
        }
        if t > self.max_len {
            return Err(Error::Shape(format!("text length {t} exceeds maximum {}", self.max_len)));
        }
        let mut ids = vec![super::text::TEXT_PAD; bsz * t];
        let mut mask = vec![false; bsz * t];
        for (b, seq) in batch.iter().enumerate() {
            ids[b * t..b * t + seq.len()].copy_from_slice(seq);
            mask[b * t..b * t + seq.len()].iter_mut().for_each(|m| *m = true);
        }
        let tok = g.param(self.tok);
        let pos = g.param(self.pos);
        let emb = g.embedding(tok, &ids, &[bsz, t])?;
        let mut x = g.add_positions(emb, pos)?;
        for (i, l) in self.layers.iter().enumerate() {
            let p = |g: &mut Graph<'_, T>, id| g.param(id);
            let (wq, wk, wv, wo, bo) = (p(g, l.wq), p(g, l.wk), p(g, l.wv), p(g, l.wo), p(g, l.bo));
            let q = g.linear(x, wq, None)?;
            let k = g.linear(x, wk, None)?;
            let v = g.linear(x, wv, None)?;
            let a = g.attention(q, k, v, self.heads, &mask)?;
            let o = g.linear(a, wo, Some(bo))?;
            x = g.add(x, o)?;
            let (w1, b1, w2, b2) = (p(g, l.w1), p(g, l.b1), p(g, l.w2), p(g, l.b2));
            let h = g.linear(x, w1, Some(b1))?;
            let h = g.relu(h);
            let f = g.linear(h, w2, Some(b2))?;
            x = g.add(x, f)?;
            g.check_finite(x, &format!("text.layer{}", i + 1))?;
        }
        let m = g.masked_mean(x, &mask)?;
        let (w, b) = (g.param(self.head_w), g.param(self.head_b));
        let out = g.linear(m, w, Some(b))?;
        g.check_finite(out, "text.head")?;
        Ok(out)
    }
}
