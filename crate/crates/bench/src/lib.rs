//! Fixtures shared by the benchmarks in `benches/`.

use custvec_core::dataset::{make_blobs, BlobSpec};
use custvec_core::Dataset;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `n` points in 3 dimensions around `k` centers spaced 4 apart.
pub fn blob_points(n: usize, k: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let c = (i % k) as f64 * 4.0;
            (0..3).map(|_| c + rng.random_range(-1.0..1.0)).collect()
        })
        .collect()
}

/// Labeled customers with roughly `positive_fraction` defaulters.
pub fn skewed_dataset(n: usize, dims: usize, positive_fraction: f64, seed: u64) -> Dataset {
    let positives = ((n as f64) * positive_fraction).round() as usize;
    let blob = |offset: f64, count: usize, label: u8| BlobSpec {
        center: vec![offset; dims],
        std: 1.0,
        count,
        label: Some(label),
    };
    make_blobs(&[blob(0.0, n - positives, 0), blob(3.0, positives, 1)], seed).expect("valid blobs")
}
