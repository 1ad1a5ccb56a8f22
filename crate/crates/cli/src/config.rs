//! Pipeline configuration file.

use std::fmt;
use std::path::{Path, PathBuf};

use custvec_core::clustering::{ClusterConfig, ClusterMethod};
use custvec_core::network::{ActivationKind, AdamConfig, LayerSpec, TrainConfig};
use custvec_core::{EmbeddingMode, FeatureSchema, SimilarityMetric};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ValidationError;

/// Environment variable that replaces `output_dir`.
pub const OUT_ENV: &str = "CUSTVEC_OUT";

/// Either a path to a schema JSON file or the schema inline.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SchemaRef {
    Path(PathBuf),
    Inline {
        features: Vec<String>,
        #[serde(default)]
        label: Option<String>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JoinConfig {
    pub path: PathBuf,
    pub schema: SchemaRef,
    pub keys: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeFilter {
    pub column: String,
    #[serde(default)]
    pub min: Option<f64>,
    #[serde(default)]
    pub max: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmoteSection {
    pub enabled: bool,
    pub k_neighbors: usize,
}

impl Default for SmoteSection {
    fn default() -> Self {
        Self {
            enabled: true,
            k_neighbors: custvec_core::dataset::DEFAULT_K_NEIGHBORS,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub early_stop_patience: usize,
    pub hidden1: usize,
    pub hidden2: usize,
    /// `sigmoid`, `tanh`, `relu` or `leaky_relu`.
    pub activation: String,
    pub use_bias: bool,
    /// Decision threshold for the classification reports.
    pub threshold: f64,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        let spec = LayerSpec::new(1);
        Self {
            epochs: t.epochs,
            batch_size: t.batch_size,
            learning_rate: t.optimizer.lr,
            beta1: t.optimizer.beta1,
            beta2: t.optimizer.beta2,
            epsilon: t.optimizer.eps,
            early_stop_patience: t.early_stop_patience,
            hidden1: spec.hidden1_dim,
            hidden2: spec.hidden2_dim,
            activation: spec.hidden_activation.name().to_string(),
            use_bias: true,
            threshold: custvec_core::network::DEFAULT_THRESHOLD,
        }
    }
}

impl TrainSection {
    pub fn activation(&self) -> anyhow::Result<ActivationKind> {
        ActivationKind::parse(&self.activation).map_err(|e| ValidationError(e.to_string()).into())
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            optimizer: AdamConfig {
                lr: self.learning_rate,
                beta1: self.beta1,
                beta2: self.beta2,
                eps: self.epsilon,
            },
            early_stop_patience: self.early_stop_patience,
            seed,
        }
    }
}

/// Which prepared rows a stage reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SplitName {
    /// Every customer that survived the row filters, without synthetic rows.
    #[default]
    All,
    Train,
    Validation,
    Test,
}

impl SplitName {
    pub fn name(&self) -> &'static str {
        match self {
            SplitName::All => "all",
            SplitName::Train => "train",
            SplitName::Validation => "validation",
            SplitName::Test => "test",
        }
    }
}

impl fmt::Display for SplitName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingSection {
    pub mode: EmbeddingMode,
    /// Train a 30-unit embedding layer and compress it to 3 dimensions.
    pub fig6: bool,
    pub split: SplitName,
}

impl Default for EmbeddingSection {
    fn default() -> Self {
        Self {
            mode: EmbeddingMode::Post,
            fig6: false,
            split: SplitName::All,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusteringSection {
    pub methods: Vec<ClusterMethod>,
    pub ks: Vec<usize>,
    pub max_iter: usize,
    pub tol: f64,
    /// Mean-shift window radius; 0 estimates it from the data.
    pub bandwidth: f64,
    pub max_restarts: usize,
}

impl Default for ClusteringSection {
    fn default() -> Self {
        let c = ClusterConfig::new(ClusterMethod::KmeansModified, 2, 0);
        Self {
            methods: ClusterMethod::ALL.to_vec(),
            ks: (2..=6).collect(),
            max_iter: c.max_iter,
            tol: c.tol,
            bandwidth: c.bandwidth,
            max_restarts: c.max_restarts,
        }
    }
}

impl ClusteringSection {
    pub fn cluster_config(&self, method: ClusterMethod, k: usize, seed: u64) -> ClusterConfig {
        ClusterConfig {
            method,
            k,
            seed,
            max_iter: self.max_iter,
            tol: self.tol,
            bandwidth: self.bandwidth,
            max_restarts: self.max_restarts,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimilaritySection {
    pub metric: SimilarityMetric,
    pub threshold: f64,
    pub k: usize,
}

impl Default for SimilaritySection {
    fn default() -> Self {
        Self {
            metric: SimilarityMetric::Cosine,
            threshold: 0.95,
            k: 5,
        }
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_split() -> [f64; 3] {
    [0.6, 0.2, 0.2]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: PathBuf,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub schema: SchemaRef,
    #[serde(default)]
    pub join: Option<JoinConfig>,
    #[serde(default)]
    pub filters: Vec<RangeFilter>,
    #[serde(default = "default_split")]
    pub split: [f64; 3],
    #[serde(default)]
    pub smote: SmoteSection,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub embedding: EmbeddingSection,
    #[serde(default)]
    pub clustering: ClusteringSection,
    #[serde(default)]
    pub similarity: SimilaritySection,
    #[serde(default)]
    pub seed: u64,
}

/// A parsed configuration together with where it came from.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: PipelineConfig,
    /// Hex SHA-256 of the config file bytes.
    pub sha256: String,
    /// Directory that relative paths are resolved against.
    pub base: PathBuf,
}

impl LoadedConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let bytes = std::fs::read(path)
            .map_err(|e| ValidationError(format!("cannot read config {}: {e}", path.display())))?;
        let config: PipelineConfig = serde_json::from_slice(&bytes)
            .map_err(|e| ValidationError(format!("config {}: {e}", path.display())))?;
        let base = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_default();
        let loaded = Self {
            config,
            sha256: sha256_hex(&bytes),
            base,
        };
        loaded.validate()?;
        Ok(loaded)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    /// `CUSTVEC_OUT` if set, else the configured directory.
    pub fn output_dir(&self) -> PathBuf {
        match std::env::var_os(OUT_ENV) {
            Some(v) if !v.is_empty() => PathBuf::from(v),
            _ => self.resolve(&self.config.output_dir),
        }
    }

    pub fn schema(&self, r: &SchemaRef) -> anyhow::Result<FeatureSchema> {
        match r {
            SchemaRef::Path(p) => {
                let p = self.resolve(p);
                let text = std::fs::read_to_string(&p)
                    .map_err(|e| ValidationError(format!("cannot read schema {}: {e}", p.display())))?;
                Ok(FeatureSchema::from_json(&text)?)
            }
            SchemaRef::Inline { features, label } => {
                Ok(FeatureSchema::new(features.clone(), label.clone())?)
            }
        }
    }

    fn validate(&self) -> anyhow::Result<()> {
        let c = &self.config;
        let bad = |msg: String| Err(ValidationError(msg).into());
        let [a, b, d] = c.split;
        if !(a > 0.0 && b > 0.0 && d > 0.0) || (a + b + d - 1.0).abs() > 1e-9 {
            return bad(format!("split ratios {:?} must be positive and sum to 1", c.split));
        }
        for f in &c.filters {
            if let (Some(lo), Some(hi)) = (f.min, f.max) {
                if lo > hi {
                    return bad(format!("filter on `{}` has min {lo} > max {hi}", f.column));
                }
            }
        }
        if c.clustering.methods.is_empty() {
            return bad("clustering.methods is empty".into());
        }
        if c.clustering.ks.contains(&0) {
            return bad("clustering.ks must be positive".into());
        }
        if c.similarity.k == 0 {
            return bad("similarity.k must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&c.train.threshold) {
            return bad(format!("train.threshold {} is outside [0, 1]", c.train.threshold));
        }
        check_threshold(c.similarity.threshold, c.similarity.metric)?;
        c.train.train_config(0).validate()?;
        c.train.activation()?;
        Ok(())
    }

    /// Fails unless every input path named by the config exists.
    pub fn check_inputs(&self) -> anyhow::Result<()> {
        let mut paths = vec![self.resolve(&self.config.input)];
        if let SchemaRef::Path(p) = &self.config.schema {
            paths.push(self.resolve(p));
        }
        if let Some(j) = &self.config.join {
            paths.push(self.resolve(&j.path));
            if let SchemaRef::Path(p) = &j.schema {
                paths.push(self.resolve(p));
            }
        }
        for p in paths {
            if !p.exists() {
                return Err(ValidationError(format!("{} does not exist", p.display())).into());
            }
        }
        Ok(())
    }
}

/// Screening thresholds must be reachable by the metric's similarity.
pub fn check_threshold(threshold: f64, metric: SimilarityMetric) -> anyhow::Result<()> {
    let ok = match metric {
        SimilarityMetric::Cosine => (-1.0..=1.0).contains(&threshold),
        SimilarityMetric::Euclidean => threshold > 0.0 && threshold <= 1.0,
    };
    if ok {
        Ok(())
    } else {
        let range = match metric {
            SimilarityMetric::Cosine => "[-1, 1]",
            SimilarityMetric::Euclidean => "(0, 1]",
        };
        Err(ValidationError(format!("threshold {threshold} is outside {range} for this metric")).into())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Per-stage seed: the first 8 bytes of `sha256(seed_le || stage)`.
pub fn stage_seed(seed: u64, stage: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(stage.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest is 32 bytes"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let c: PipelineConfig =
            serde_json::from_str(r#"{"input": "a.csv", "schema": {"features": ["x"], "label": "y"}}"#).unwrap();
        assert_eq!(c.split, [0.6, 0.2, 0.2]);
        assert_eq!(c.train.epochs, 50);
        assert_eq!(c.train.hidden1, 3);
        assert_eq!(c.clustering.ks, vec![2, 3, 4, 5, 6]);
        assert_eq!(c.clustering.methods.len(), 4);
        assert!(c.smote.enabled);
        assert!(matches!(c.schema, SchemaRef::Inline { .. }));
    }

    #[test]
    fn unknown_fields_rejected() {
        let r: Result<PipelineConfig, _> =
            serde_json::from_str(r#"{"input": "a.csv", "schema": "s.json", "epochs": 3}"#);
        assert!(r.is_err());
    }

    #[test]
    fn stage_seeds_differ_by_stage_and_seed() {
        assert_eq!(stage_seed(7, "train"), stage_seed(7, "train"));
        assert_ne!(stage_seed(7, "train"), stage_seed(7, "split"));
        assert_ne!(stage_seed(7, "train"), stage_seed(8, "train"));
    }

    #[test]
    fn thresholds() {
        assert!(check_threshold(1.0, SimilarityMetric::Cosine).is_ok());
        assert!(check_threshold(-1.0, SimilarityMetric::Cosine).is_ok());
        assert!(check_threshold(1.01, SimilarityMetric::Cosine).is_err());
        assert!(check_threshold(0.0, SimilarityMetric::Euclidean).is_err());
    }
}
