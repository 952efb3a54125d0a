use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::run::{Harness, RunRecord};
use super::{PromptVariant, RunConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub stability: f64,
    pub iou: f64,
    pub runs: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipCount {
    pub model: String,
    pub variant: PromptVariant,
    pub count: usize,
}

/// Mean scores per model (rows) and prompt variant (column pairs). Only
/// models and variants with at least one scored run appear; cells without
/// one are gaps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub models: Vec<String>,
    pub variants: Vec<PromptVariant>,
    /// `cells[model][variant]`.
    pub cells: Vec<Vec<Option<Cell>>>,
    pub skipped: Vec<SkipCount>,
}

impl Aggregate {
    pub fn from_records(records: &[RunRecord]) -> Self {
        let mut models: Vec<String> = Vec::new();
        let mut variants: Vec<PromptVariant> = Vec::new();
        let mut skipped: Vec<SkipCount> = Vec::new();
        for r in records {
            if r.report.is_some() {
                if !models.contains(&r.model) {
                    models.push(r.model.clone());
                }
                if !variants.contains(&r.variant) {
                    variants.push(r.variant);
                }
            } else if let Some(s) = skipped
                .iter_mut()
                .find(|s| s.model == r.model && s.variant == r.variant)
            {
                s.count += 1;
            } else {
                skipped.push(SkipCount {
                    model: r.model.clone(),
                    variant: r.variant,
                    count: 1,
                });
            }
        }
        variants.sort();
        let cells = models
            .iter()
            .map(|m| {
                variants
                    .iter()
                    .map(|v| {
                        let reports: Vec<_> = records
                            .iter()
                            .filter(|r| &r.model == m && r.variant == *v)
                            .filter_map(|r| r.report.as_ref())
                            .collect();
                        let n = reports.len();
                        (n > 0).then(|| Cell {
                            stability: reports.iter().map(|r| r.stability).sum::<f64>() / n as f64,
                            iou: reports.iter().map(|r| r.iou).sum::<f64>() / n as f64,
                            runs: n,
                        })
                    })
                    .collect()
            })
            .collect();
        Aggregate {
            models,
            variants,
            cells,
            skipped,
        }
    }

    /// Rows by numeric columns: two per variant.
    pub fn shape(&self) -> (usize, usize) {
        (self.models.len(), 2 * self.variants.len())
    }

    pub fn total_skipped(&self) -> usize {
        self.skipped.iter().map(|s| s.count).sum()
    }

    /// Aligned plain-text table followed by skip counts.
    pub fn render(&self) -> String {
        let mut rows: Vec<Vec<String>> = Vec::new();
        let mut header = vec!["model".to_string()];
        for v in &self.variants {
            header.push(format!("{v} stability"));
            header.push(format!("{v} iou"));
        }
        rows.push(header);
        for (m, cells) in self.models.iter().zip(&self.cells) {
            let mut row = vec![m.clone()];
            for c in cells {
                match c {
                    Some(c) => {
                        row.push(format!("{:.3}", c.stability));
                        row.push(format!("{:.3}", c.iou));
                    }
                    None => row.extend(["-".to_string(), "-".to_string()]),
                }
            }
            rows.push(row);
        }
        let widths: Vec<usize> = (0..rows[0].len())
            .map(|i| rows.iter().map(|r| r[i].len()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for r in &rows {
            let line: Vec<String> = r
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    if i == 0 {
                        format!("{s:<w$}", w = widths[i])
                    } else {
                        format!("{s:>w$}", w = widths[i])
                    }
                })
                .collect();
            let _ = writeln!(out, "{}", line.join("  ").trim_end());
        }
        for s in &self.skipped {
            let _ = writeln!(out, "skipped {} {}: {}", s.model, s.variant, s.count);
        }
        out
    }
}

/// Runs every config on at most `workers` threads. Records keep input order.
pub fn batch(harness: &Harness, configs: &[RunConfig], workers: usize) -> (Vec<RunRecord>, Aggregate) {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build();
    let records: Vec<RunRecord> = match pool {
        Ok(pool) => pool.install(|| configs.par_iter().map(|c| harness.run(c)).collect()),
        Err(e) => {
            log::warn!("worker pool unavailable ({e}); running sequentially");
            configs.iter().map(|c| harness.run(c)).collect()
        }
    };
    let agg = Aggregate::from_records(&records);
    (records, agg)
}
