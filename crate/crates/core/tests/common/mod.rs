#![allow(dead_code)]

use irw_core::Dataset;
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Gaussian design, `y = X beta + noise_sd * N(0, 1)`.
pub fn gaussian_instance(rng: &mut ChaCha8Rng, n: usize, beta: &[f64], noise_sd: f64) -> Dataset {
    let d = beta.len();
    let x = Array2::from_shape_fn((n, d), |_| rng.sample::<f64, _>(StandardNormal));
    let b = Array1::from(beta.to_vec());
    let y =
        x.dot(&b) + Array1::from_shape_fn(n, |_| noise_sd * rng.sample::<f64, _>(StandardNormal));
    Dataset::new(y, x).unwrap()
}

/// Random design with a few gross outliers in the response.
pub fn contaminated_instance(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Dataset {
    let beta: Vec<f64> = (0..d).map(|j| if j < 2 { 2.0 } else { 0.0 }).collect();
    let data = gaussian_instance(rng, n, &beta, 1.0);
    let mut y = data.y().to_owned();
    for i in 0..n / 10 {
        y[i] += 20.0 * rng.random::<f64>();
    }
    Dataset::new(y, data.x().to_owned()).unwrap()
}
