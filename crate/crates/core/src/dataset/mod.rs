//! Tabular customer data: schema, records, preprocessing and splitting.
//!
//! Missing cells are stored as `NaN` until [`impute_missing`] fills them.

mod csv_io;
mod smote;
mod synthetic;

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use csv_io::{load_csv, write_csv};
pub use smote::{smote_augment, smote_augment_with_origins, SyntheticOrigin, DEFAULT_K_NEIGHBORS};
pub use synthetic::{make_blobs, make_synthetic, BlobSpec};

/// Default label column name.
pub const DEFAULT_LABEL: &str = "loan_default";

/// Column names of the five binary personality-trait features.
pub const PERSONALITY_COLUMNS: [&str; 5] = ["EXT", "NEU", "AGR", "CON", "OPN"];

/// Ordered feature-column names plus the optional binary target column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    #[serde(rename = "features")]
    names: Vec<String>,
    #[serde(rename = "label", default, skip_serializing_if = "Option::is_none")]
    label_name: Option<String>,
}

impl FeatureSchema {
    pub fn new(names: Vec<String>, label_name: Option<String>) -> Result<Self> {
        let schema = Self { names, label_name };
        schema.validate()?;
        Ok(schema)
    }

    /// Parses the `{"features": [...], "label": "..."}` JSON form.
    pub fn from_json(text: &str) -> Result<Self> {
        let schema: Self = serde_json::from_str(text)?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for name in &self.names {
            if name.is_empty() {
                return Err(Error::Schema("empty feature name".into()));
            }
            if !seen.insert(name.as_str()) {
                return Err(Error::Schema(format!("duplicate feature name `{name}`")));
            }
        }
        if let Some(label) = &self.label_name {
            if label.is_empty() {
                return Err(Error::Schema("empty label name".into()));
            }
            if seen.contains(label.as_str()) {
                return Err(Error::Schema(format!(
                    "label `{label}` is also listed as a feature"
                )));
            }
        }
        Ok(())
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn label_name(&self) -> Option<&str> {
        self.label_name.as_deref()
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

/// Opaque row identifier.
///
/// Ordering is "natural": ids that parse as unsigned integers sort
/// numerically and come before all other ids, which sort lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RecordId(pub String);

impl RecordId {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    fn numeric(&self) -> Option<u128> {
        self.0.parse().ok()
    }
}

impl From<&str> for RecordId {
    fn from(s: &str) -> Self {
        RecordId(s.to_owned())
    }
}

impl From<String> for RecordId {
    fn from(s: String) -> Self {
        RecordId(s)
    }
}

impl From<usize> for RecordId {
    fn from(i: usize) -> Self {
        RecordId(i.to_string())
    }
}

impl fmt::Display for RecordId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Ord for RecordId {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.numeric(), other.numeric()) {
            (Some(a), Some(b)) => a.cmp(&b).then_with(|| self.0.cmp(&other.0)),
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (None, None) => self.0.cmp(&other.0),
        }
    }
}

impl PartialOrd for RecordId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// One customer row.
#[derive(Debug, Clone, PartialEq)]
pub struct CustomerRecord {
    pub id: RecordId,
    /// Feature values in schema order; `NaN` marks a missing cell.
    pub features: Vec<f64>,
    /// 1 = loan-default history.
    pub label: Option<u8>,
}

impl CustomerRecord {
    pub fn new(id: impl Into<RecordId>, features: Vec<f64>, label: Option<u8>) -> Self {
        Self {
            id: id.into(),
            features,
            label,
        }
    }
}

/// Per-column standardization statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerColumn {
    pub name: String,
    pub mean: f64,
    /// Divisor applied to centered values. Constant columns store 1.
    pub std: f64,
}

/// Column statistics persisted as a JSON array of `{name, mean, std}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Scaler {
    pub columns: Vec<ScalerColumn>,
}

impl Scaler {
    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Transforms one raw feature vector.
    pub fn transform(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                actual: x.len(),
            });
        }
        Ok(x.iter()
            .zip(&self.columns)
            .map(|(v, c)| (v - c.mean) / effective_std(c.std))
            .collect())
    }

    /// Maps standardized values back to the raw scale.
    pub fn inverse_transform(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                actual: z.len(),
            });
        }
        Ok(z.iter()
            .zip(&self.columns)
            .map(|(v, c)| v * effective_std(c.std) + c.mean)
            .collect())
    }
}

fn effective_std(std: f64) -> f64 {
    if std == 0.0 || !std.is_finite() {
        1.0
    } else {
        std
    }
}

/// An ordered, schema-conforming collection of customer records.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: FeatureSchema,
    records: Vec<CustomerRecord>,
    standardized: bool,
    scaler: Option<Scaler>,
}

impl Dataset {
    /// Builds a dataset, checking row widths, labels and id uniqueness.
    pub fn new(schema: FeatureSchema, records: Vec<CustomerRecord>) -> Result<Self> {
        schema.validate()?;
        let mut ids = HashSet::with_capacity(records.len());
        for r in &records {
            if r.features.len() != schema.len() {
                return Err(Error::DimensionMismatch {
                    expected: schema.len(),
                    actual: r.features.len(),
                });
            }
            if let Some(l) = r.label {
                if l > 1 {
                    return Err(Error::invalid(format!("label {l} of `{}` is not 0/1", r.id)));
                }
            }
            if !ids.insert(&r.id) {
                return Err(Error::invalid(format!("duplicate record id `{}`", r.id)));
            }
        }
        Ok(Self {
            schema,
            records,
            standardized: false,
            scaler: None,
        })
    }

    pub(crate) fn from_parts(
        schema: FeatureSchema,
        records: Vec<CustomerRecord>,
        standardized: bool,
        scaler: Option<Scaler>,
    ) -> Self {
        Self {
            schema,
            records,
            standardized,
            scaler,
        }
    }

    /// Marks data that was standardized elsewhere, e.g. a prepared CSV
    /// written by an earlier pipeline stage.
    pub fn with_scaler(mut self, scaler: Scaler) -> Result<Self> {
        if scaler.len() != self.schema.len() {
            return Err(Error::DimensionMismatch {
                expected: self.schema.len(),
                actual: scaler.len(),
            });
        }
        self.standardized = true;
        self.scaler = Some(scaler);
        Ok(self)
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn records(&self) -> &[CustomerRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<CustomerRecord> {
        self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.schema.len()
    }

    pub fn is_standardized(&self) -> bool {
        self.standardized
    }

    pub fn scaler(&self) -> Option<&Scaler> {
        self.scaler.as_ref()
    }

    pub fn is_labeled(&self) -> bool {
        self.records.iter().all(|r| r.label.is_some())
    }

    /// `(negatives, positives)` among labeled rows.
    pub fn label_counts(&self) -> (usize, usize) {
        self.records.iter().fold((0, 0), |(n, p), r| match r.label {
            Some(1) => (n, p + 1),
            Some(_) => (n + 1, p),
            None => (n, p),
        })
    }

    pub fn has_missing(&self) -> bool {
        self.records
            .iter()
            .any(|r| r.features.iter().any(|v| v.is_nan()))
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(move |r| r.features[j])
    }

    /// Keeps rows satisfying `keep`, preserving order and metadata.
    pub fn filter(&self, mut keep: impl FnMut(&CustomerRecord) -> bool) -> Dataset {
        let records = self.records.iter().filter(|r| keep(r)).cloned().collect();
        Self::from_parts(
            self.schema.clone(),
            records,
            self.standardized,
            self.scaler.clone(),
        )
    }

    /// Keeps rows whose `column` value lies in `[min, max]` (either bound optional).
    pub fn filter_range(&self, column: &str, min: Option<f64>, max: Option<f64>) -> Result<Dataset> {
        let j = self
            .schema
            .index_of(column)
            .ok_or_else(|| Error::Schema(format!("unknown column `{column}`")))?;
        Ok(self.filter(|r| {
            let v = r.features[j];
            min.map_or(true, |lo| v >= lo) && max.map_or(true, |hi| v <= hi)
        }))
    }
}

/// Train / validation / test partition of one dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitSet {
    pub train: Dataset,
    pub validation: Dataset,
    pub test: Dataset,
}

/// Inner join on key columns.
///
/// The output schema is the left schema followed by the right schema's
/// non-key features. When several right rows match a left row their
/// non-key values are averaged column-wise. An empty result is not an error.
pub fn join_on_keys(left: &Dataset, right: &Dataset, keys: &[String]) -> Result<Dataset> {
    if keys.is_empty() {
        return Err(Error::invalid("join needs at least one key"));
    }
    let mut left_idx = Vec::with_capacity(keys.len());
    let mut right_idx = Vec::with_capacity(keys.len());
    for k in keys {
        left_idx.push(
            left.schema
                .index_of(k)
                .ok_or_else(|| Error::Schema(format!("join key `{k}` absent from left schema")))?,
        );
        right_idx.push(
            right.schema.index_of(k).ok_or_else(|| {
                Error::Schema(format!("join key `{k}` absent from right schema"))
            })?,
        );
    }
    let extra: Vec<usize> = (0..right.n_features())
        .filter(|j| !right_idx.contains(j))
        .collect();

    let mut names = left.schema.names.clone();
    for &j in &extra {
        let name = &right.schema.names[j];
        if names.contains(name) {
            return Err(Error::Schema(format!(
                "column `{name}` appears on both sides of the join"
            )));
        }
        names.push(name.clone());
    }
    let schema = FeatureSchema::new(names, left.schema.label_name.clone())?;

    let key_of = |r: &CustomerRecord, idx: &[usize]| -> Result<Vec<u64>> {
        idx.iter()
            .map(|&j| {
                let v = r.features[j];
                if v.is_nan() {
                    Err(Error::invalid(format!("record `{}` has a missing join key", r.id)))
                } else {
                    // +0.0 and -0.0 must meet.
                    Ok((v + 0.0).to_bits())
                }
            })
            .collect()
    };

    let mut groups: HashMap<Vec<u64>, (Vec<f64>, usize)> = HashMap::new();
    for r in &right.records {
        let key = key_of(r, &right_idx)?;
        let entry = groups
            .entry(key)
            .or_insert_with(|| (vec![0.0; extra.len()], 0));
        for (acc, &j) in entry.0.iter_mut().zip(&extra) {
            *acc += r.features[j];
        }
        entry.1 += 1;
    }

    let mut records = Vec::new();
    for r in &left.records {
        let key = key_of(r, &left_idx)?;
        if let Some((sums, count)) = groups.get(&key) {
            let mut features = r.features.clone();
            features.extend(sums.iter().map(|s| s / *count as f64));
            records.push(CustomerRecord {
                id: r.id.clone(),
                features,
                label: r.label,
            });
        }
    }
    Ok(Dataset::from_parts(schema, records, false, None))
}

/// Replaces each missing cell with the mean of the observed values in its column.
pub fn impute_missing(data: &Dataset) -> Result<Dataset> {
    let d = data.n_features();
    let mut sums = vec![0.0; d];
    let mut counts = vec![0usize; d];
    for r in &data.records {
        for (j, v) in r.features.iter().enumerate() {
            if !v.is_nan() {
                sums[j] += v;
                counts[j] += 1;
            }
        }
    }
    let mut means = Vec::with_capacity(d);
    for j in 0..d {
        if counts[j] == 0 && !data.is_empty() {
            return Err(Error::EntirelyMissing(data.schema.names[j].clone()));
        }
        means.push(sums[j] / counts[j].max(1) as f64);
    }
    let records = data
        .records
        .iter()
        .map(|r| CustomerRecord {
            id: r.id.clone(),
            features: r
                .features
                .iter()
                .zip(&means)
                .map(|(&v, &m)| if v.is_nan() { m } else { v })
                .collect(),
            label: r.label,
        })
        .collect();
    Ok(Dataset::from_parts(
        data.schema.clone(),
        records,
        data.standardized,
        data.scaler.clone(),
    ))
}

/// Fits per-column mean and population standard deviation.
pub fn fit_scaler(data: &Dataset) -> Result<Scaler> {
    if data.has_missing() {
        return Err(Error::invalid("cannot standardize data with missing cells"));
    }
    if data.is_empty() {
        return Err(Error::InsufficientData("cannot fit a scaler on zero rows".into()));
    }
    let n = data.len() as f64;
    let columns = data
        .schema
        .names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let mean = data.column(j).sum::<f64>() / n;
            let var = data.column(j).map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            let std = var.sqrt();
            ScalerColumn {
                name: name.clone(),
                mean,
                std: if std > 0.0 { std } else { 1.0 },
            }
        })
        .collect();
    Ok(Scaler { columns })
}

/// Standardizes every feature column to zero mean and unit population variance.
///
/// Constant columns become all zeros. The fitted statistics are kept on the
/// returned dataset for reuse via [`apply_scaler`].
pub fn standardize(data: &Dataset) -> Result<Dataset> {
    let scaler = fit_scaler(data)?;
    apply_scaler(data, &scaler)
}

/// Applies precomputed statistics (typically fitted on the train split).
pub fn apply_scaler(data: &Dataset, scaler: &Scaler) -> Result<Dataset> {
    if scaler.len() != data.n_features() {
        return Err(Error::DimensionMismatch {
            expected: data.n_features(),
            actual: scaler.len(),
        });
    }
    let records = data
        .records
        .iter()
        .map(|r| {
            Ok(CustomerRecord {
                id: r.id.clone(),
                features: scaler.transform(&r.features)?,
                label: r.label,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset::from_parts(
        data.schema.clone(),
        records,
        true,
        Some(scaler.clone()),
    ))
}

/// Seeded shuffle followed by a contiguous train/validation/test partition.
pub fn split(data: &Dataset, ratios: (f64, f64, f64), seed: u64) -> Result<SplitSet> {
    let (rt, rv, rs) = ratios;
    if !(rt > 0.0 && rv > 0.0 && rs > 0.0) || ((rt + rv + rs) - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!(
            "split ratios {ratios:?} must be positive and sum to 1"
        )));
    }
    let n = data.len();
    if n < 3 {
        return Err(Error::InsufficientData(format!(
            "split needs at least 3 records, got {n}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let n_train = ((n as f64) * rt).round() as usize;
    let n_val = (((n as f64) * rv).round() as usize).min(n - n_train);
    let take = |range: std::ops::Range<usize>| {
        let records = order[range]
            .iter()
            .map(|&i| data.records[i].clone())
            .collect();
        Dataset::from_parts(
            data.schema.clone(),
            records,
            data.standardized,
            data.scaler.clone(),
        )
    };
    Ok(SplitSet {
        train: take(0..n_train),
        validation: take(n_train..n_train + n_val),
        test: take(n_train + n_val..n),
    })
}
