use log::debug;

use crate::clcp::EncodedPair;
use crate::encoders::{ModelConfig, TextVocab};
use crate::himg::encode_snippet;
use crate::ingest::PairRecord;
use crate::pylex::{tokenize, Token};
use crate::vocab::{build_vocab, ExhaustPolicy, IdRanges, Vocabulary};
use crate::Result;

/// Vocabularies and encoded pairs for one train/test split.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub vocab: Vocabulary,
    pub text_vocab: TextVocab,
    pub train: Vec<EncodedPair>,
    pub test: Vec<EncodedPair>,
    /// Records dropped because their code did not lex.
    pub skipped_train: usize,
    pub skipped_test: usize,
}

/// Image values for one snippet; scoped ranges wrap instead of failing.
pub fn encode_code_image(code: &str, vocab: &Vocabulary, img_len: usize) -> Result<Vec<f32>> {
    let (img, _) = encode_snippet(code, vocab, img_len, ExhaustPolicy::Recycle)?;
    Ok(img.values)
}

fn encode_all(
    records: &[PairRecord],
    vocab: &Vocabulary,
    text_vocab: &TextVocab,
    cfg: &ModelConfig,
) -> (Vec<EncodedPair>, usize) {
    let mut out = Vec::with_capacity(records.len());
    let mut skipped = 0;
    for r in records {
        match encode_code_image(&r.code, vocab, cfg.img_len) {
            Ok(image) => out.push(EncodedPair {
                image,
                text: text_vocab.encode(&r.doc, cfg.text_max_len).0,
            }),
            Err(e) => {
                debug!("skipping {}: {e}", r.id);
                skipped += 1;
            }
        }
    }
    (out, skipped)
}

/// Builds both vocabularies from `train` only, then encodes both sides.
pub fn prepare(train: &[PairRecord], test: &[PairRecord], cfg: &ModelConfig) -> Result<Prepared> {
    let streams: Vec<Vec<Token>> = train.iter().filter_map(|r| tokenize(&r.code).ok()).collect();
    let vocab = build_vocab(streams.iter().map(Vec::as_slice), &IdRanges::default())?;
    let text_vocab = TextVocab::build(train.iter().map(|r| r.doc.as_str()), cfg.text_vocab_size, cfg.text_min_freq);
    let (train_enc, skipped_train) = encode_all(train, &vocab, &text_vocab, cfg);
    let (test_enc, skipped_test) = encode_all(test, &vocab, &text_vocab, cfg);
    Ok(Prepared {
        vocab,
        text_vocab,
        train: train_enc,
        test: test_enc,
        skipped_train,
        skipped_test,
    })
}
