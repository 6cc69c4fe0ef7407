//! Symmetric contrastive objective over batch similarities, and training.

mod train;

pub use train::{
    balanced_chunks, train, EncodedPair, EpochMetrics, StopReason, TrainOptions, TrainOutcome, TrainState,
};

use crate::ndnn::{Graph, ParamSet, Real, Tensor};
use crate::{Error, Result};

/// Loss of a square logit matrix whose diagonal holds the matching pairs.
pub fn clip_loss(sim: &Tensor<f64>) -> Result<f64> {
    let ps = ParamSet::new();
    let mut g = Graph::new(&ps);
    let s = g.input(sim.clone());
    let l = g.clip_loss(s)?;
    Ok(g.value(l)[0])
}

/// `scale * C T^T` for row-normalized `[N, d]` and `[M, d]` embeddings.
pub fn similarity_matrix<T: Real>(codes: &Tensor<T>, texts: &Tensor<T>, scale: f64) -> Result<Tensor<f64>> {
    let (n, d) = dims(codes)?;
    let (m, d2) = dims(texts)?;
    if d != d2 {
        return Err(Error::LengthMismatch(format!("embedding widths {d} and {d2}")));
    }
    let (c, t) = (codes.data(), texts.data());
    let data = (0..n * m)
        .map(|ij| {
            let (i, j) = (ij / m, ij % m);
            let dot: f64 = (0..d).map(|e| c[i * d + e].f64() * t[j * d + e].f64()).sum();
            scale * dot
        })
        .collect();
    Tensor::new(vec![n, m], data)
}

fn dims<T: Real>(t: &Tensor<T>) -> Result<(usize, usize)> {
    match *t.shape() {
        [a, b] => Ok((a, b)),
        ref s => Err(Error::Shape(format!("expected [N, d], got {s:?}"))),
    }
}

/// Row-wise argmax, ties to the lowest column.
pub fn argmax_rows(sim: &Tensor<f64>) -> Vec<usize> {
    let m = sim.shape()[1];
    sim.data()
        .chunks(m)
        .map(|row| {
            let mut best = 0;
            for (j, &v) in row.iter().enumerate().skip(1) {
                if v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}
