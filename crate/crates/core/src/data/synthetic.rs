use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};

use super::Dataset;
use crate::error::{param, Result};
use crate::rng::rng_from_seed;

/// Distance of every class mean from the origin before the per-wrap growth.
pub const MEAN_SCALE: f64 = 2.0;

/// Fraction of each class held out for the shared test set.
pub const TEST_FRACTION: f64 = 0.2;

/// Seed-independent mean of class `c`: a signed, scaled one-hot corner.
///
/// Classes cycle through the axes; every pass over the axes flips the sign and
/// the magnitude grows with the pass index so no two classes share a mean.
pub fn class_mean(c: usize, features: usize) -> Vec<f64> {
    let axis = c % features;
    let pass = c / features;
    let sign = if pass.is_multiple_of(2) { 1.0 } else { -1.0 };
    let magnitude = MEAN_SCALE * (1.0 + (pass / 2) as f64);
    let mut mean = vec![0.0; features];
    mean[axis] = sign * magnitude;
    mean
}

/// Class-conditional isotropic Gaussians. Samples are emitted class by class.
pub fn generate_synthetic(classes: usize, features: usize, per_class: usize, spread: f64, seed: u64) -> Result<Dataset> {
    if classes < 2 {
        return param("synthetic data needs at least 2 classes");
    }
    if features < 2 {
        return param("synthetic data needs at least 2 features");
    }
    if per_class < 1 {
        return param("synthetic data needs at least 1 sample per class");
    }
    if !(spread.is_finite() && spread >= 0.0) {
        return param(format!("spread must be finite and non-negative, got {spread}"));
    }
    let mut rng = rng_from_seed(seed);
    let mut values = Vec::with_capacity(classes * per_class * features);
    let mut labels = Vec::with_capacity(classes * per_class);
    for c in 0..classes {
        let mean = class_mean(c, features);
        for _ in 0..per_class {
            for &mu in &mean {
                let z: f64 = StandardNormal.sample(&mut rng);
                values.push(mu + spread * z);
            }
            labels.push(c);
        }
    }
    Dataset::new(values, labels, features, classes)
}

/// Stratified hold-out: `round(TEST_FRACTION * n_c)` samples of each class go to the
/// test set, chosen by a seeded shuffle. Both outputs keep the original sample order.
pub fn train_test_split(dataset: &Dataset, seed: u64) -> (Dataset, Dataset) {
    let mut rng = rng_from_seed(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for c in 0..dataset.classes() {
        let mut idx = dataset.indices_of_class(c);
        let n_test = (TEST_FRACTION * idx.len() as f64).round() as usize;
        idx.shuffle(&mut rng);
        test.extend_from_slice(&idx[..n_test]);
        train.extend_from_slice(&idx[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    (dataset.subset(&train), dataset.subset(&test))
}
