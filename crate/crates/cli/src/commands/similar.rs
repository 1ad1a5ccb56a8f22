use std::fmt::Write as _;
use std::time::Instant;

use custvec_core::embedding::{similar_to_defaulters, top_k_similar};
use custvec_core::{RecordId, SimilarityMetric};

use super::embed::load_vectors;
use super::file_safe;
use crate::config::check_threshold;
use crate::{write_text, Run, ValidationError};

#[derive(Debug, Clone, Default)]
pub struct SimilarArgs {
    pub id: Option<String>,
    pub k: Option<usize>,
    pub defaulters: bool,
    pub threshold: Option<f64>,
    pub metric: Option<SimilarityMetric>,
}

/// Runs one query and returns the CSV it wrote.
pub fn similar(run: &Run, args: &SimilarArgs) -> anyhow::Result<String> {
    let started = Instant::now();
    let s = &run.cfg.config.similarity;
    let metric = args.metric.unwrap_or(s.metric);
    let (rel, csv) = match (&args.id, args.defaulters) {
        (Some(_), true) | (None, false) => {
            return Err(ValidationError("give exactly one of --id or --defaulters".into()).into());
        }
        (Some(id), false) => {
            let k = args.k.unwrap_or(s.k);
            if k == 0 {
                return Err(ValidationError("--k must be at least 1".into()).into());
            }
            let set = load_vectors(run)?;
            let hits = top_k_similar(&set, &RecordId::from(id.as_str()), k, metric)?;
            let col = match metric {
                SimilarityMetric::Cosine => "cosine",
                SimilarityMetric::Euclidean => "distance",
            };
            let mut csv = format!("rank,id,{col}\n");
            for (i, (hid, score)) in hits.iter().enumerate() {
                let _ = writeln!(csv, "{},{hid},{score}", i + 1);
            }
            (format!("report/similar_{}.csv", file_safe(id)), csv)
        }
        (None, true) => {
            let threshold = args.threshold.unwrap_or(s.threshold);
            check_threshold(threshold, metric)?;
            let set = load_vectors(run)?;
            let matches = similar_to_defaulters(&set, threshold, metric)?;
            let mut csv = String::from("id,max_score,nearest_defaulter\n");
            for m in &matches {
                let _ = writeln!(csv, "{},{},{}", m.id, m.max_score, m.nearest_defaulter);
            }
            ("report/defaulters.csv".to_string(), csv)
        }
    };
    run.dir("report")?;
    write_text(&run.out.join(&rel), &csv)?;
    run.finish("similar", started)?;
    Ok(csv)
}
