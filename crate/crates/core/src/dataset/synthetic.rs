//! Gaussian blob generators for tests, benchmarks and demos.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{CustomerRecord, Dataset, FeatureSchema, RecordId, DEFAULT_LABEL};
use crate::error::{Error, Result};

/// One isotropic Gaussian blob.
#[derive(Debug, Clone, PartialEq)]
pub struct BlobSpec {
    pub center: Vec<f64>,
    pub std: f64,
    pub count: usize,
    pub label: Option<u8>,
}

/// Samples the given blobs, shuffles the rows and numbers them `0..n`.
///
/// Features are named `f0..f{d-1}`; the label column is `loan_default`.
pub fn make_blobs(blobs: &[BlobSpec], seed: u64) -> Result<Dataset> {
    let dims = blobs
        .first()
        .map(|b| b.center.len())
        .ok_or_else(|| Error::invalid("at least one blob is required"))?;
    if dims == 0 || blobs.iter().any(|b| b.center.len() != dims) {
        return Err(Error::invalid("blob centers must share a positive dimension"));
    }
    if blobs.iter().any(|b| !(b.std >= 0.0)) {
        return Err(Error::invalid("blob std must be non-negative"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<(Vec<f64>, Option<u8>)> = Vec::new();
    for b in blobs {
        for _ in 0..b.count {
            let x = b
                .center
                .iter()
                .map(|c| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    c + b.std * z
                })
                .collect();
            rows.push((x, b.label));
        }
    }
    rows.shuffle(&mut rng);
    let names = (0..dims).map(|j| format!("f{j}")).collect();
    let schema = FeatureSchema::new(names, Some(DEFAULT_LABEL.into()))?;
    let records = rows
        .into_iter()
        .enumerate()
        .map(|(i, (features, label))| CustomerRecord {
            id: RecordId::from(i),
            features,
            label,
        })
        .collect();
    Dataset::new(schema, records)
}

/// Two unit-variance blobs whose means differ by `separation` in every
/// coordinate (negatives centered at `-separation/2`, positives at
/// `+separation/2`). Positives number `round(n * positive_fraction)`.
pub fn make_synthetic(
    n: usize,
    dims: usize,
    positive_fraction: f64,
    separation: f64,
    seed: u64,
) -> Result<Dataset> {
    if n < 10 {
        return Err(Error::invalid(format!("n = {n} must be at least 10")));
    }
    if dims == 0 {
        return Err(Error::invalid("dims must be at least 1"));
    }
    if !(positive_fraction > 0.0 && positive_fraction < 1.0) {
        return Err(Error::invalid("positive_fraction must lie in (0, 1)"));
    }
    if !separation.is_finite() {
        return Err(Error::invalid("separation must be finite"));
    }
    let n_pos = ((n as f64) * positive_fraction).round() as usize;
    let half = separation / 2.0;
    make_blobs(
        &[
            BlobSpec {
                center: vec![-half; dims],
                std: 1.0,
                count: n - n_pos,
                label: Some(0),
            },
            BlobSpec {
                center: vec![half; dims],
                std: 1.0,
                count: n_pos,
                label: Some(1),
            },
        ],
        seed,
    )
}
