//! Classification metrics, cluster validity indices and knee-based choice of k.

mod classification;
mod knee;
mod validity;

pub use classification::{
    accuracy, confusion, evaluate_classifier, f1, mse, precision, recall, ClassificationReport,
    ConfusionCounts,
};
pub use knee::{knee_select_k, KneeResult};
pub use validity::{
    calinski_harabasz, davies_bouldin, evaluate_clustering, silhouette, ClusterValidityReport,
    DEGENERATE_SENTINEL,
};
