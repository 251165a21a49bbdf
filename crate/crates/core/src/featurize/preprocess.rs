use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{label_gap, GapClass, SMILES_LENGTH};

/// One row of the polymer CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolymerRecord {
    pub id: String,
    pub smiles: String,
    pub gap_ev: f64,
}

/// Counts of records removed by each cleaning rule.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreprocessReport {
    pub input: usize,
    pub overlong: usize,
    pub out_of_range: usize,
    pub mir: usize,
    pub duplicates: usize,
    pub outliers: usize,
    pub kept: usize,
    pub empty: bool,
}

/// Z-score beyond which a gap counts as an outlier.
const OUTLIER_Z: f64 = 3.0;

/// Drops overlong SMILES, gaps outside the labelled range, MIR polymers and
/// repeated SMILES (first occurrence wins), then clips gap outliers until no
/// record has `|z| > 3`. Idempotent.
pub fn preprocess_dataset(records: Vec<PolymerRecord>) -> (Vec<PolymerRecord>, PreprocessReport) {
    let mut report = PreprocessReport {
        input: records.len(),
        ..Default::default()
    };
    let mut seen = HashSet::new();
    let mut kept: Vec<PolymerRecord> = Vec::with_capacity(records.len());
    for r in records {
        if r.smiles.chars().count() > SMILES_LENGTH {
            report.overlong += 1;
            continue;
        }
        match label_gap(r.gap_ev) {
            Err(_) => {
                report.out_of_range += 1;
                continue;
            }
            Ok(GapClass::Mir) => {
                report.mir += 1;
                continue;
            }
            Ok(_) => {}
        }
        if !seen.insert(r.smiles.clone()) {
            report.duplicates += 1;
            continue;
        }
        kept.push(r);
    }

    loop {
        let n = kept.len() as f64;
        if kept.len() < 2 {
            break;
        }
        let mean = kept.iter().map(|r| r.gap_ev).sum::<f64>() / n;
        let var = kept.iter().map(|r| (r.gap_ev - mean).powi(2)).sum::<f64>() / n;
        let std = var.sqrt();
        if std == 0.0 {
            break;
        }
        let before = kept.len();
        kept.retain(|r| ((r.gap_ev - mean) / std).abs() <= OUTLIER_Z);
        let removed = before - kept.len();
        if removed == 0 {
            break;
        }
        report.outliers += removed;
    }

    report.kept = kept.len();
    report.empty = kept.is_empty();
    (kept, report)
}
