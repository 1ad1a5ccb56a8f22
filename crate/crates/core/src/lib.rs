//! Supervised customer embedding for goal-based segmentation.
//!
//! The pipeline is:
//!
//! 1. [`dataset`]: load, join, impute, standardize, split and rebalance tabular
//!    customer features.
//! 2. [`network`]: train a small fully connected binary classifier
//!    (`input -> 3 -> 10 -> 1` by default). The first hidden layer is the
//!    embedding layer.
//! 3. [`embedding`]: read the per-customer vectors off the embedding layer and
//!    run similarity queries over them.
//! 4. [`clustering`]: segment the vectors with modified k-means, a 1-D SOM, a
//!    Gaussian mixture, or mean-shift.
//! 5. [`evaluation`]: classification metrics, cluster validity indices and
//!    knee-based selection of `k`.
//!
//! All randomness is drawn from seeded [`rand_chacha::ChaCha8Rng`] streams so
//! every operation is reproducible bit-for-bit for a fixed seed.

pub mod clustering;
pub mod dataset;
pub mod embedding;
pub mod error;
pub mod evaluation;
pub mod network;

pub use clustering::{ClusterConfig, ClusterMethod, ClusterModel};
pub use dataset::{CustomerRecord, Dataset, FeatureSchema, RecordId, Scaler, SplitSet};
pub use embedding::{CustomerVector, EmbeddingMode, EmbeddingSet, SimilarityMetric};
pub use error::{Error, Result};
pub use evaluation::{ClassificationReport, ClusterValidityReport, ConfusionCounts, KneeResult};
pub use network::{
    ActivationKind, AdamConfig, LayerSpec, NetworkParams, TrainConfig, TrainReport,
};

/// Reals used throughout the crate.
pub type Vector = Vec<f64>;
