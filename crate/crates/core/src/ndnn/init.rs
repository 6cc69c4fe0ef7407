use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use super::{Real, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitScheme {
    /// Gaussian, mean 0, variance 2/fan_in.
    He,
    /// Uniform on ±1/sqrt(fan_in), the usual framework default.
    Default,
}

/// He initialization: samples N(0, 2/fan_in).
pub fn he_init<T: Real, R: Rng + ?Sized>(shape: &[usize], fan_in: usize, rng: &mut R) -> Tensor<T> {
    assert!(fan_in >= 1, "fan-in must be positive");
    normal_init(shape, (2.0 / fan_in as f64).sqrt(), rng)
}

pub fn default_init<T: Real, R: Rng + ?Sized>(shape: &[usize], fan_in: usize, rng: &mut R) -> Tensor<T> {
    assert!(fan_in >= 1, "fan-in must be positive");
    let bound = 1.0 / (fan_in as f64).sqrt();
    let dist = Uniform::new_inclusive(-bound, bound).expect("valid bounds");
    Tensor::from_fn(shape, |_| T::c(dist.sample(rng)))
}

pub fn normal_init<T: Real, R: Rng + ?Sized>(shape: &[usize], std: f64, rng: &mut R) -> Tensor<T> {
    let dist = Normal::new(0.0, std).expect("valid std");
    Tensor::from_fn(shape, |_| T::c(dist.sample(rng)))
}

impl InitScheme {
    pub fn sample<T: Real, R: Rng + ?Sized>(self, shape: &[usize], fan_in: usize, rng: &mut R) -> Tensor<T> {
        match self {
            InitScheme::He => he_init(shape, fan_in, rng),
            InitScheme::Default => default_init(shape, fan_in, rng),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn moments(data: &[f64]) -> (f64, f64) {
        let n = data.len() as f64;
        let mean = data.iter().sum::<f64>() / n;
        let var = data.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        (mean, var)
    }

    #[test]
    fn he_variance_matches_two_over_fan_in() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let t: Tensor<f64> = he_init(&[100_000], 50, &mut rng);
        let (mean, var) = moments(t.data());
        assert!(mean.abs() < 0.005, "mean {mean}");
        assert!((var - 0.04).abs() < 0.004, "var {var}");

        let t: Tensor<f64> = he_init(&[100_000], 2, &mut rng);
        let (_, var) = moments(t.data());
        assert!((var - 1.0).abs() < 0.1, "var {var}");
    }

    #[test]
    fn same_seed_same_tensor() {
        let a: Tensor<f32> = he_init(&[4, 3], 3, &mut ChaCha8Rng::seed_from_u64(5));
        let b: Tensor<f32> = he_init(&[4, 3], 3, &mut ChaCha8Rng::seed_from_u64(5));
        assert_eq!(a, b);
    }

    #[test]
    fn default_init_is_bounded() {
        let t: Tensor<f64> = default_init(&[1000], 16, &mut ChaCha8Rng::seed_from_u64(1));
        assert!(t.data().iter().all(|v| v.abs() <= 0.25));
    }
}
