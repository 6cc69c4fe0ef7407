//! Zero-shot matching evaluation, the training-size ladder and the
//! ablation matrix.

mod ablate;
mod ladder;
mod pipeline;
pub mod synth;

pub use ablate::{run_ablations, AblationCell, AblationReport, Delta, Flag};
pub use ladder::{run_cell, run_ladder, workers, CellRun, LadderReport, LadderRow};
pub use pipeline::{encode_code_image, prepare, Prepared};

use serde::{Deserialize, Serialize};

use crate::clcp::{argmax_rows, similarity_matrix};
use crate::ndnn::{Real, Tensor};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Raw,
    Cleaned,
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Variant::Raw => "raw",
            Variant::Cleaned => "cleaned",
        })
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(Variant::Raw),
            "cleaned" => Ok(Variant::Cleaned),
            _ => Err(Error::config("variant", format!("expected raw or cleaned, got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    CodeToText,
    TextToCode,
}

/// Outcome of matching `l` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub l: usize,
    pub correct: usize,
    pub acc: f64,
    /// Accuracy of uniform random matching, exactly `1 / l`.
    pub ea: f64,
    pub direction: Direction,
    pub predictions: Vec<usize>,
}

/// Matches row `i` of `queries` against all of `candidates`; the pair is
/// correct when the most similar candidate (lowest index on ties) is `i`.
fn match_rows<T: Real>(queries: &Tensor<T>, candidates: &Tensor<T>, direction: Direction) -> Result<MatchResult> {
    let l = queries.shape()[0];
    if candidates.shape()[0] != l {
        return Err(Error::LengthMismatch(format!(
            "{l} queries vs {} candidates",
            candidates.shape()[0]
        )));
    }
    if l == 0 {
        return Err(Error::LengthMismatch("no pairs to match".into()));
    }
    let predictions = argmax_rows(&similarity_matrix(queries, candidates, 1.0)?);
    let correct = predictions.iter().enumerate().filter(|(i, p)| i == *p).count();
    Ok(MatchResult {
        l,
        correct,
        acc: correct as f64 / l as f64,
        ea: 1.0 / l as f64,
        direction,
        predictions,
    })
}

/// For each code, predicts the most similar text.
pub fn zero_shot_match<T: Real>(codes: &Tensor<T>, texts: &Tensor<T>) -> Result<MatchResult> {
    match_rows(codes, texts, Direction::CodeToText)
}

/// For each text, predicts the most similar code.
pub fn text_to_code_match<T: Real>(codes: &Tensor<T>, texts: &Tensor<T>) -> Result<MatchResult> {
    match_rows(texts, codes, Direction::TextToCode)
}

/// A labelled evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub config_id: String,
    pub variant: Variant,
    pub train_size: usize,
    pub seed: u64,
    pub l: usize,
    pub correct: usize,
    pub acc: f64,
    pub ea: f64,
    /// Text-to-code accuracy on the same pairs.
    pub acc_t2c: f64,
}
