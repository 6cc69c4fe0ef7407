//! Central finite differences, used as an oracle for analytic gradients.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Graph, ParamSet, Var};
use crate::Result;

/// Numerical gradient of `f` at `x` with step `h`.
pub fn numeric_grad(mut f: impl FnMut(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Norm-wise relative error `|a - b| / max(|a|, |b|, floor)`.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / na.max(nb).max(1e-12)
}

/// Compares analytic and numerical gradients of `sum(w * build(params))`
/// for every trainable parameter, with fixed random weights `w` drawn from
/// `seed`. Returns `(name, relative error)` per parameter.
pub fn param_errors(
    params: &ParamSet<f64>,
    build: &dyn Fn(&mut Graph<'_, f64>) -> Result<Var>,
    seed: u64,
) -> Result<Vec<(String, f64)>> {
    let weights = |n: usize| -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    };
    let scalar = |ps: &ParamSet<f64>| -> Result<f64> {
        let mut g = Graph::new(ps);
        let out = build(&mut g)?;
        let n = g.value(out).len();
        let loss = g.weighted_sum(out, weights(n))?;
        Ok(g.value(loss)[0])
    };
    let mut g = Graph::new(params);
    let out = build(&mut g)?;
    let n = g.value(out).len();
    let loss = g.weighted_sum(out, weights(n))?;
    let grads = g.backward(loss)?;

    let mut report = Vec::new();
    for (id, entry) in params.iter() {
        if !entry.trainable {
            continue;
        }
        let analytic = grads
            .get(id)
            .map(<[f64]>::to_vec)
            .unwrap_or_else(|| vec![0.0; entry.value.numel()]);
        let x0 = entry.value.data().to_vec();
        let mut probe = params.clone();
        let numeric = numeric_grad(
            |x| {
                probe.get_mut(id).value.data_mut().copy_from_slice(x);
                scalar(&probe).unwrap_or(f64::NAN)
            },
            &x0,
            1e-5,
        );
        report.push((entry.name.clone(), relative_error(&analytic, &numeric)));
    }
    Ok(report)
}
