//! Customer vectors read off the embedding layer, and similarity queries.

mod autoencoder;

use std::collections::HashSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, RecordId};
use crate::error::{Error, Result};
use crate::network::{forward, LayerSpec, NetworkParams};

pub use autoencoder::{compress_30_to_3, AutoencoderConfig, LinearAutoencoder, WIDE_DIM};

/// Which embedding-layer quantity becomes the customer vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingMode {
    /// `w1 = h(θ1·x + b1)`
    #[default]
    Post,
    /// `a1 = θ1·x + b1`
    Pre,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimilarityMetric {
    #[default]
    Cosine,
    Euclidean,
}

impl SimilarityMetric {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "cosine" => Ok(Self::Cosine),
            "euclidean" => Ok(Self::Euclidean),
            other => Err(Error::invalid(format!("unknown metric `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CustomerVector {
    pub id: RecordId,
    pub v: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<u8>,
}

/// Vectors for a set of customers, all of one dimension with unique ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingSet {
    vectors: Vec<CustomerVector>,
    /// Free-form reference to the model that produced the vectors.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    source_model: Option<String>,
}

impl EmbeddingSet {
    pub fn new(vectors: Vec<CustomerVector>) -> Result<Self> {
        let dim = vectors.first().map_or(0, |c| c.v.len());
        let mut ids = HashSet::with_capacity(vectors.len());
        for c in &vectors {
            if c.v.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: c.v.len(),
                });
            }
            if c.v.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid(format!("vector `{}` has non-finite entries", c.id)));
            }
            if !ids.insert(&c.id) {
                return Err(Error::invalid(format!("duplicate vector id `{}`", c.id)));
            }
        }
        Ok(Self {
            vectors,
            source_model: None,
        })
    }

    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.source_model = Some(source.into());
        self
    }

    pub fn source_model(&self) -> Option<&str> {
        self.source_model.as_deref()
    }

    pub fn vectors(&self) -> &[CustomerVector] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors.first().map_or(0, |c| c.v.len())
    }

    /// Raw coordinates in set order.
    pub fn points(&self) -> Vec<Vec<f64>> {
        self.vectors.iter().map(|c| c.v.clone()).collect()
    }

    pub fn get(&self, id: &RecordId) -> Option<&CustomerVector> {
        self.vectors.iter().find(|c| &c.id == id)
    }

    /// `id,v1,..,vd,label` with lossless float formatting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("id");
        for j in 1..=self.dim() {
            let _ = write!(out, ",v{j}");
        }
        out.push_str(",label\n");
        for c in &self.vectors {
            out.push_str(c.id.as_str());
            for x in &c.v {
                let _ = write!(out, ",{x}");
            }
            out.push(',');
            if let Some(l) = c.label {
                let _ = write!(out, "{l}");
            }
            out.push('\n');
        }
        out
    }

    /// Parses the [`to_csv`](Self::to_csv) format.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(text.as_bytes());
        let header = rdr
            .headers()
            .map_err(|e| Error::invalid(format!("vector file header: {e}")))?
            .clone();
        let cols: Vec<&str> = header.iter().collect();
        let dim = cols.iter().filter(|c| c.starts_with('v')).count();
        let expected_header: Vec<String> = std::iter::once("id".to_string())
            .chain((1..=dim).map(|j| format!("v{j}")))
            .chain(std::iter::once("label".to_string()))
            .collect();
        if cols != expected_header || dim == 0 {
            return Err(Error::invalid(format!(
                "vector file header `{}` is not `id,v1..v{dim},label`",
                cols.join(",")
            )));
        }
        let mut vectors = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::invalid(format!("vector file row {}: {e}", i + 2)))?;
            if rec.len() != dim + 2 {
                return Err(Error::invalid(format!("vector file row {} has {} cells", i + 2, rec.len())));
            }
            let v = (1..=dim)
                .map(|j| {
                    rec[j].parse::<f64>().map_err(|_| {
                        Error::invalid(format!("vector file row {}: bad number `{}`", i + 2, &rec[j]))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let label = match &rec[dim + 1] {
                "" => None,
                "0" => Some(0),
                "1" => Some(1),
                other => return Err(Error::InvalidLabel { line: i as u64 + 2, value: other.into() }),
            };
            vectors.push(CustomerVector {
                id: RecordId(rec[0].to_owned()),
                v,
                label,
            });
        }
        Self::new(vectors)
    }
}

/// The embedding-layer vector of one standardized input.
pub fn embed(params: &NetworkParams, spec: &LayerSpec, x: &[f64], mode: EmbeddingMode) -> Result<Vec<f64>> {
    let t = forward(params, spec, x)?;
    Ok(match mode {
        EmbeddingMode::Post => t.w1,
        EmbeddingMode::Pre => t.a1,
    })
}

/// Embeds every record, preserving order and labels.
pub fn embed_all(
    params: &NetworkParams,
    spec: &LayerSpec,
    data: &Dataset,
    mode: EmbeddingMode,
) -> Result<EmbeddingSet> {
    if !data.is_standardized() {
        return Err(Error::NotStandardized);
    }
    let vectors = data
        .records()
        .iter()
        .map(|r| {
            Ok(CustomerVector {
                id: r.id.clone(),
                v: embed(params, spec, &r.features, mode)?,
                label: r.label,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    EmbeddingSet::new(vectors)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `Σ tᵢeᵢ / (‖t‖‖e‖)`
pub fn cosine_similarity(t: &[f64], e: &[f64]) -> Result<f64> {
    if t.len() != e.len() {
        return Err(Error::DimensionMismatch {
            expected: t.len(),
            actual: e.len(),
        });
    }
    let (nt, ne) = (norm(t), norm(e));
    if nt == 0.0 || ne == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let dot: f64 = t.iter().zip(e).map(|(a, b)| a * b).sum();
    Ok(dot / (nt * ne))
}

pub fn euclidean_distance(t: &[f64], e: &[f64]) -> Result<f64> {
    if t.len() != e.len() {
        return Err(Error::DimensionMismatch {
            expected: t.len(),
            actual: e.len(),
        });
    }
    Ok(t.iter().zip(e).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
}

/// Scores each candidate against `query`. Cosine skips zero-norm candidates.
fn scores<'a>(
    set: &'a EmbeddingSet,
    query: &CustomerVector,
    metric: SimilarityMetric,
) -> Result<Vec<(&'a RecordId, f64)>> {
    let mut out = Vec::with_capacity(set.len());
    for c in &set.vectors {
        if c.id == query.id {
            continue;
        }
        let s = match metric {
            SimilarityMetric::Cosine => match cosine_similarity(&query.v, &c.v) {
                Ok(s) => s,
                Err(Error::ZeroNorm) if norm(&query.v) > 0.0 => continue,
                Err(e) => return Err(e),
            },
            SimilarityMetric::Euclidean => euclidean_distance(&query.v, &c.v)?,
        };
        out.push((&c.id, s));
    }
    Ok(out)
}

fn numeric_cmp(a: f64, b: f64) -> std::cmp::Ordering {
    a.partial_cmp(&b).unwrap_or_else(|| a.total_cmp(&b))
}

/// The `k` most similar other customers.
///
/// Cosine results are in descending similarity, Euclidean in ascending
/// distance; ties go to the smaller id. Asking for more than the set holds
/// returns every other customer.
pub fn top_k_similar(
    set: &EmbeddingSet,
    query_id: &RecordId,
    k: usize,
    metric: SimilarityMetric,
) -> Result<Vec<(RecordId, f64)>> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    let query = set
        .get(query_id)
        .ok_or_else(|| Error::UnknownId(query_id.to_string()))?;
    let mut scored = scores(set, query, metric)?;
    scored.sort_by(|a, b| {
        // `total_cmp` would separate 0.0 from -0.0, which must tie.
        let by_score = match metric {
            SimilarityMetric::Cosine => numeric_cmp(b.1, a.1),
            SimilarityMetric::Euclidean => numeric_cmp(a.1, b.1),
        };
        by_score.then_with(|| a.0.cmp(b.0))
    });
    scored.truncate(k);
    Ok(scored.into_iter().map(|(id, s)| (id.clone(), s)).collect())
}

/// A non-defaulter that resembles a known defaulter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefaulterMatch {
    pub id: RecordId,
    pub max_score: f64,
    pub nearest_defaulter: RecordId,
}

/// Similarity used for threshold screening: cosine, or `1 / (1 + distance)`
/// for the Euclidean metric so that larger always means closer.
pub fn screening_similarity(t: &[f64], e: &[f64], metric: SimilarityMetric) -> Result<f64> {
    match metric {
        SimilarityMetric::Cosine => cosine_similarity(t, e),
        SimilarityMetric::Euclidean => Ok(1.0 / (1.0 + euclidean_distance(t, e)?)),
    }
}

/// Every label-0 customer whose best similarity to a label-1 customer is at
/// least `threshold`, with the witnessing defaulter. Results are ordered by id.
pub fn similar_to_defaulters(
    set: &EmbeddingSet,
    threshold: f64,
    metric: SimilarityMetric,
) -> Result<Vec<DefaulterMatch>> {
    let defaulters: Vec<&CustomerVector> = set
        .vectors
        .iter()
        .filter(|c| c.label == Some(1) && (metric == SimilarityMetric::Euclidean || norm(&c.v) > 0.0))
        .collect();
    if defaulters.is_empty() {
        return Err(Error::invalid("no labeled defaulters to compare against"));
    }
    let mut out = Vec::new();
    for c in set.vectors.iter().filter(|c| c.label == Some(0)) {
        if metric == SimilarityMetric::Cosine && norm(&c.v) == 0.0 {
            continue;
        }
        let mut best: Option<(f64, &RecordId)> = None;
        for d in &defaulters {
            let s = screening_similarity(&c.v, &d.v, metric)?;
            let better = match best {
                None => true,
                Some((bs, bid)) => s > bs || (s == bs && &d.id < bid),
            };
            if better {
                best = Some((s, &d.id));
            }
        }
        if let Some((s, id)) = best {
            if s >= threshold {
                out.push(DefaulterMatch {
                    id: c.id.clone(),
                    max_score: s,
                    nearest_defaulter: id.clone(),
                });
            }
        }
    }
    out.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::ActivationKind;

    fn cv(id: &str, v: &[f64], label: Option<u8>) -> CustomerVector {
        CustomerVector {
            id: id.into(),
            v: v.to_vec(),
            label,
        }
    }

    #[test]
    fn embed_zero_params() {
        let spec = LayerSpec::new(4).with_activation(ActivationKind::Sigmoid);
        let p = NetworkParams::zeros(&spec);
        assert_eq!(embed(&p, &spec, &[1.0; 4], EmbeddingMode::Post).unwrap(), vec![0.5; 3]);
        let spec = LayerSpec::new(4);
        assert_eq!(embed(&p, &spec, &[1.0; 4], EmbeddingMode::Post).unwrap(), vec![0.0; 3]);
        assert!(embed(&p, &spec, &[1.0; 2], EmbeddingMode::Post).is_err());
    }

    #[test]
    fn embed_is_forward_restriction() {
        let spec = LayerSpec::new(5);
        let p = crate::network::init_params(&spec, 9).unwrap();
        let x = [0.3, -1.0, 2.0, 0.0, 0.7];
        let t = forward(&p, &spec, &x).unwrap();
        assert_eq!(embed(&p, &spec, &x, EmbeddingMode::Post).unwrap(), t.w1);
        assert_eq!(embed(&p, &spec, &x, EmbeddingMode::Pre).unwrap(), t.a1);
    }

    #[test]
    fn cosine_examples() {
        assert!((cosine_similarity(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(cosine_similarity(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]).unwrap(), 0.0);
        let c = cosine_similarity(&[1.0, 1.0, 0.0], &[1.0, 0.0, 0.0]).unwrap();
        assert!((c - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!(matches!(cosine_similarity(&[0.0; 3], &[1.0; 3]), Err(Error::ZeroNorm)));
    }

    #[test]
    fn euclidean_examples() {
        assert_eq!(euclidean_distance(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(euclidean_distance(&[0.0, 0.0, 0.0], &[3.0, 4.0, 0.0]).unwrap(), 5.0);
        assert!(euclidean_distance(&[0.0], &[0.0, 1.0]).is_err());
    }

    fn abc() -> EmbeddingSet {
        EmbeddingSet::new(vec![
            cv("A", &[1.0, 0.0, 0.0], Some(1)),
            cv("B", &[1.0, 0.01, 0.0], Some(0)),
            cv("C", &[0.0, 1.0, 0.0], Some(0)),
        ])
        .unwrap()
    }

    #[test]
    fn top_k_examples() {
        let set = abc();
        let r = top_k_similar(&set, &"A".into(), 1, SimilarityMetric::Cosine).unwrap();
        assert_eq!(r[0].0.as_str(), "B");
        let all = top_k_similar(&set, &"A".into(), 2, SimilarityMetric::Cosine).unwrap();
        assert_eq!(all.len(), 2);
        let more = top_k_similar(&set, &"A".into(), 10, SimilarityMetric::Euclidean).unwrap();
        assert_eq!(more.len(), 2);
        assert!(matches!(
            top_k_similar(&set, &"Z".into(), 1, SimilarityMetric::Cosine),
            Err(Error::UnknownId(_))
        ));
    }

    #[test]
    fn top_k_ties_by_id() {
        let set = EmbeddingSet::new(vec![
            cv("q", &[0.0, 0.0], None),
            cv("10", &[1.0, 0.0], None),
            cv("9", &[0.0, 1.0], None),
            cv("2", &[-1.0, 0.0], None),
        ])
        .unwrap();
        let r = top_k_similar(&set, &"q".into(), 3, SimilarityMetric::Euclidean).unwrap();
        let ids: Vec<&str> = r.iter().map(|(i, _)| i.as_str()).collect();
        assert_eq!(ids, ["2", "9", "10"]);
    }

    #[test]
    fn signed_zero_scores_tie() {
        // Both cosines are zero, one of them negative zero.
        let set = EmbeddingSet::new(vec![
            cv("q", &[1.0, 0.0], None),
            cv("c8", &[0.0, 1.0], None),
            cv("c2", &[-0.0, -1.0], None),
        ])
        .unwrap();
        let r = top_k_similar(&set, &"q".into(), 2, SimilarityMetric::Cosine).unwrap();
        let ids: Vec<&str> = r.iter().map(|(i, _)| i.as_str()).collect();
        assert_eq!(ids, ["c2", "c8"]);
    }

    #[test]
    fn defaulter_screening() {
        let set = EmbeddingSet::new(vec![
            cv("d", &[1.0, 2.0, 3.0], Some(1)),
            cv("twin", &[1.0, 2.0, 3.0], Some(0)),
            cv("other", &[-3.0, 0.5, 0.0], Some(0)),
        ])
        .unwrap();
        let exact = similar_to_defaulters(&set, 1.0, SimilarityMetric::Cosine).unwrap();
        assert_eq!(exact.len(), 1);
        assert_eq!(exact[0].id.as_str(), "twin");
        assert_eq!(exact[0].nearest_defaulter.as_str(), "d");
        assert!((exact[0].max_score - 1.0).abs() < 1e-15);

        let all = similar_to_defaulters(&set, -1.0, SimilarityMetric::Cosine).unwrap();
        assert_eq!(all.len(), 2);

        let none = EmbeddingSet::new(vec![cv("x", &[1.0], Some(0))]).unwrap();
        assert!(similar_to_defaulters(&none, 0.5, SimilarityMetric::Cosine).is_err());
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let set = EmbeddingSet::new(vec![
            cv("1", &[0.1, -2.5e-8, 1.0 / 3.0], Some(1)),
            cv("x", &[f64::MIN_POSITIVE, 7.0, -0.0], None),
        ])
        .unwrap();
        let back = EmbeddingSet::from_csv(&set.to_csv()).unwrap();
        assert_eq!(back, set);
        for (a, b) in set.vectors().iter().zip(back.vectors()) {
            for (x, y) in a.v.iter().zip(&b.v) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
        assert!(EmbeddingSet::from_csv("id,a,label\n1,2,\n").is_err());
    }

    #[test]
    fn rejects_duplicate_ids() {
        assert!(EmbeddingSet::new(vec![cv("a", &[1.0], None), cv("a", &[2.0], None)]).is_err());
        assert!(EmbeddingSet::new(vec![cv("a", &[1.0], None), cv("b", &[2.0, 1.0], None)]).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn vec3() -> impl Strategy<Value = Vec<f64>> {
            prop::collection::vec(-100.0f64..100.0, 3).prop_filter("non-zero", |v| norm(v) > 1e-6)
        }

        proptest! {
            #[test]
            fn screening_monotone_in_threshold(
                pts in prop::collection::vec((vec3(), any::<bool>()), 2..25),
                t1 in -1.0f64..1.0, t2 in -1.0f64..1.0,
            ) {
                let mut vectors: Vec<CustomerVector> = pts.iter().enumerate()
                    .map(|(i, (v, d))| cv(&i.to_string(), v, Some(u8::from(*d)))).collect();
                vectors[0].label = Some(1);
                let set = EmbeddingSet::new(vectors).unwrap();
                let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
                for metric in [SimilarityMetric::Cosine, SimilarityMetric::Euclidean] {
                    let low: HashSet<RecordId> = similar_to_defaulters(&set, lo, metric).unwrap()
                        .into_iter().map(|m| m.id).collect();
                    let high = similar_to_defaulters(&set, hi, metric).unwrap();
                    prop_assert!(high.iter().all(|m| low.contains(&m.id)));
                }
            }
        }
    }
}
