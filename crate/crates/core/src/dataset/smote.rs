//! Synthetic minority oversampling.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{CustomerRecord, Dataset, RecordId};
use crate::error::{Error, Result};

pub const DEFAULT_K_NEIGHBORS: usize = 5;

/// Where a synthetic row came from.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticOrigin {
    pub id: RecordId,
    pub base: RecordId,
    pub neighbor: RecordId,
    /// Interpolation coefficient in `[0, 1)`.
    pub gap: f64,
}

/// Oversamples the minority class until both labels have equal counts.
///
/// Original rows are kept unchanged and in order; synthetic rows are appended.
pub fn smote_augment(data: &Dataset, seed: u64, k_neighbors: usize) -> Result<Dataset> {
    smote_augment_with_origins(data, seed, k_neighbors).map(|(d, _)| d)
}

/// [`smote_augment`] that also reports the parents of every synthetic row.
pub fn smote_augment_with_origins(
    data: &Dataset,
    seed: u64,
    k_neighbors: usize,
) -> Result<(Dataset, Vec<SyntheticOrigin>)> {
    if !data.is_labeled() {
        return Err(Error::Unlabeled);
    }
    if k_neighbors == 0 {
        return Err(Error::invalid("k_neighbors must be at least 1"));
    }
    let (neg, pos) = data.label_counts();
    if neg == 0 || pos == 0 {
        return Err(Error::SingleClass);
    }
    if neg == pos {
        return Ok((data.clone(), Vec::new()));
    }
    let (minority_label, needed) = if pos < neg { (1, neg - pos) } else { (0, pos - neg) };
    let minority: Vec<&CustomerRecord> = data
        .records()
        .iter()
        .filter(|r| r.label == Some(minority_label))
        .collect();
    if minority.len() <= k_neighbors {
        return Err(Error::InsufficientData(format!(
            "minority class has {} rows, need more than k_neighbors = {k_neighbors}",
            minority.len()
        )));
    }

    let neighbors = nearest_neighbors(&minority, k_neighbors);

    let mut taken: HashSet<String> = data.records().iter().map(|r| r.id.as_str().to_owned()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = data.records().to_vec();
    records.reserve(needed);
    let mut origins = Vec::with_capacity(needed);
    let mut fresh_ids = Vec::with_capacity(needed);
    for s in 0..needed {
        let mut id = format!("smote-{s}");
        while taken.contains(id.as_str()) {
            id.push('_');
        }
        taken.insert(id.clone());
        fresh_ids.push(id);
    }
    for id in fresh_ids {
        let b = rng.random_range(0..minority.len());
        let nn = neighbors[b][rng.random_range(0..k_neighbors)];
        let gap: f64 = rng.random();
        let x = &minority[b].features;
        let y = &minority[nn].features;
        let features = x.iter().zip(y).map(|(a, c)| a + gap * (c - a)).collect();
        let id = RecordId(id);
        origins.push(SyntheticOrigin {
            id: id.clone(),
            base: minority[b].id.clone(),
            neighbor: minority[nn].id.clone(),
            gap,
        });
        records.push(CustomerRecord {
            id,
            features,
            label: Some(minority_label),
        });
    }
    let out = Dataset::from_parts(
        data.schema().clone(),
        records,
        data.is_standardized(),
        data.scaler().cloned(),
    );
    Ok((out, origins))
}

/// Indices of the `k` nearest other points (Euclidean), ties broken by index.
fn nearest_neighbors(points: &[&CustomerRecord], k: usize) -> Vec<Vec<usize>> {
    points
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let mut cand: Vec<(f64, usize)> = points
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(j, q)| {
                    let d: f64 = p
                        .features
                        .iter()
                        .zip(&q.features)
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum();
                    (d, j)
                })
                .collect();
            let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
            if cand.len() > k {
                cand.select_nth_unstable_by(k, cmp);
                cand.truncate(k);
            }
            cand.sort_by(cmp);
            cand.into_iter().map(|(_, j)| j).collect()
        })
        .collect()
}
