use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::time::Instant;

use anyhow::Context;
use custvec_core::dataset::{
    apply_scaler, fit_scaler, impute_missing, join_on_keys, load_csv, smote_augment_with_origins, split,
    write_csv,
};
use custvec_core::Dataset;
use serde::{Deserialize, Serialize};

use super::{split_file, SCALER_FILE, SCHEMA_FILE};
use crate::config::SplitName;
use crate::{write_json, write_text, Run};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitShape {
    pub rows: usize,
    pub negatives: usize,
    pub positives: usize,
}

impl SplitShape {
    fn of(d: &Dataset) -> Self {
        let (negatives, positives) = d.label_counts();
        Self {
            rows: d.len(),
            negatives,
            positives,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoteSummary {
    pub enabled: bool,
    pub k_neighbors: usize,
    pub synthetic_rows: usize,
    /// True when every synthetic row's parents are original train rows.
    pub parents_in_train_only: bool,
}

/// Written to `prepared/summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrepareSummary {
    pub features: usize,
    pub input_rows: usize,
    pub joined_rows: Option<usize>,
    pub filtered_rows: usize,
    pub imputed_cells: usize,
    pub splits: BTreeMap<String, SplitShape>,
    pub smote: SmoteSummary,
}

/// Load, join, impute, filter, split, standardize with train statistics and
/// oversample the train split.
pub fn prepare(run: &Run) -> anyhow::Result<PrepareSummary> {
    let started = Instant::now();
    let cfg = &run.cfg;
    let c = &cfg.config;
    cfg.check_inputs()?;

    let schema = cfg.schema(&c.schema)?;
    let input = cfg.resolve(&c.input);
    let mut data = load_csv(&input, &schema).with_context(|| format!("loading {}", input.display()))?;
    let input_rows = data.len();

    let mut joined_rows = None;
    if let Some(j) = &c.join {
        let right_schema = cfg.schema(&j.schema)?;
        let path = cfg.resolve(&j.path);
        let right = load_csv(&path, &right_schema).with_context(|| format!("loading {}", path.display()))?;
        data = join_on_keys(&data, &right, &j.keys)?;
        joined_rows = Some(data.len());
    }

    let imputed_cells = data
        .records()
        .iter()
        .map(|r| r.features.iter().filter(|v| v.is_nan()).count())
        .sum();
    if imputed_cells > 0 {
        data = impute_missing(&data)?;
    }

    for f in &c.filters {
        data = data.filter_range(&f.column, f.min, f.max)?;
    }
    let filtered_rows = data.len();

    let parts = split(&data, (c.split[0], c.split[1], c.split[2]), run.seed_for("split"))?;
    let scaler = fit_scaler(&parts.train)?;
    let all = apply_scaler(&data, &scaler)?;
    let mut train = apply_scaler(&parts.train, &scaler)?;
    let validation = apply_scaler(&parts.validation, &scaler)?;
    let test = apply_scaler(&parts.test, &scaler)?;

    let dir = run.dir("prepared")?;
    let mut smote = SmoteSummary {
        enabled: c.smote.enabled,
        k_neighbors: c.smote.k_neighbors,
        synthetic_rows: 0,
        parents_in_train_only: true,
    };
    if c.smote.enabled {
        let (augmented, origins) = smote_augment_with_origins(&train, run.seed_for("smote"), c.smote.k_neighbors)?;
        let train_ids: HashSet<&str> = train.records().iter().map(|r| r.id.as_str()).collect();
        let held_out: HashSet<&str> = validation
            .records()
            .iter()
            .chain(test.records())
            .map(|r| r.id.as_str())
            .collect();
        smote.parents_in_train_only = origins.iter().all(|o| {
            [&o.base, &o.neighbor]
                .iter()
                .all(|p| train_ids.contains(p.as_str()) && !held_out.contains(p.as_str()))
        });
        anyhow::ensure!(smote.parents_in_train_only, "a synthetic row has a parent outside the train split");
        smote.synthetic_rows = origins.len();

        let mut prov = String::from("id,base,neighbor,gap\n");
        for o in &origins {
            let _ = writeln!(prov, "{},{},{},{}", o.id, o.base, o.neighbor, o.gap);
        }
        write_text(&dir.join("smote_provenance.csv"), &prov)?;
        train = augmented;
    }

    for (name, d) in [
        (SplitName::All, &all),
        (SplitName::Train, &train),
        (SplitName::Validation, &validation),
        (SplitName::Test, &test),
    ] {
        write_csv(run.out.join(split_file(name)), d)?;
    }
    write_json(&run.out.join(SCHEMA_FILE), data.schema())?;
    write_text(&run.out.join(SCALER_FILE), &(scaler.to_json()? + "\n"))?;

    let summary = PrepareSummary {
        features: data.n_features(),
        input_rows,
        joined_rows,
        filtered_rows,
        imputed_cells,
        splits: [
            ("all", &all),
            ("train", &train),
            ("validation", &validation),
            ("test", &test),
        ]
        .into_iter()
        .map(|(n, d)| (n.to_string(), SplitShape::of(d)))
        .collect(),
        smote,
    };
    write_json(&dir.join("summary.json"), &summary)?;
    run.finish("prepare", started)?;
    Ok(summary)
}
