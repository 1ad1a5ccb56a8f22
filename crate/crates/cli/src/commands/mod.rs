//! One module per subcommand.

mod cluster;
mod embed;
mod prepare;
mod report;
mod similar;
mod train;

pub use cluster::{cluster, ClusterArgs, ClusterSummary, ComparisonRow, COMPARISON_CSV, COMPARISON_TXT};
pub use embed::{embed, load_vectors, EmbedArgs, VectorsMeta};
pub use prepare::{prepare, PrepareSummary, SmoteSummary, SplitShape};
pub use report::{render, report, Report};
pub use similar::{similar, SimilarArgs};
pub use train::{train, ModelFile, TrainArgs, TrainMetrics};

use std::path::Path;

use anyhow::Context;
use custvec_core::dataset::load_csv;
use custvec_core::{Dataset, FeatureSchema, Scaler};

use crate::config::SplitName;
use crate::{read_json, Run};

pub const SCHEMA_FILE: &str = "prepared/schema.json";
pub const SCALER_FILE: &str = "prepared/scaler.json";

pub fn split_file(split: SplitName) -> String {
    format!("prepared/{}.csv", split.name())
}

/// Reads a standardized split written by `prepare`.
pub fn load_prepared(run: &Run, split: SplitName) -> anyhow::Result<Dataset> {
    let schema: FeatureSchema = read_json(&run.require(SCHEMA_FILE, "prepare")?)?;
    let scaler = load_scaler(&run.require(SCALER_FILE, "prepare")?)?;
    let path = run.require(&split_file(split), "prepare")?;
    let data = load_csv(&path, &schema)?;
    Ok(data.with_scaler(scaler)?)
}

pub fn load_scaler(path: &Path) -> anyhow::Result<Scaler> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Scaler::from_json(&text)?)
}

/// Keeps an identifier usable as a file-name component.
pub fn file_safe(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}
