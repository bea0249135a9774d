use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::run::{fmt6, read_manifest, SUMMARY_FILE};
use crate::error::{Error, Result};

/// One row of `summary.csv`: the final-iteration MSE band of a scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub setting_id: usize,
    pub scheme: String,
    pub k: usize,
    pub mse: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl SummaryRow {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.ci_low + self.ci_high)
    }
}

/// Scheme comparison across settings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonTable {
    pub rows: Vec<SummaryRow>,
    /// Scheme with the lowest CI midpoint per setting (first listed on ties).
    pub winners: BTreeMap<usize, String>,
    /// Per scheme, the worst ratio of its midpoint to the setting's best.
    pub robustness: Vec<(String, f64)>,
}

impl ComparisonTable {
    pub fn robustness_of(&self, scheme: &str) -> Option<f64> {
        self.robustness.iter().find(|(s, _)| s == scheme).map(|(_, v)| *v)
    }

    pub fn row(&self, setting_id: usize, scheme: &str) -> Option<&SummaryRow> {
        self.rows
            .iter()
            .find(|r| r.setting_id == setting_id && r.scheme == scheme)
    }
}

/// `mid / best`, with `0/0` read as a tie.
fn ratio(mid: f64, best: f64) -> f64 {
    if mid == best {
        1.0
    } else {
        mid / best
    }
}

/// Builds the comparison from summary rows, keeping scheme order of first appearance.
pub fn compare(rows: Vec<SummaryRow>) -> Result<ComparisonTable> {
    if rows.is_empty() {
        return Err(Error::Empty("summary rows"));
    }
    let mut schemes: Vec<String> = Vec::new();
    let mut by_setting: BTreeMap<usize, Vec<&SummaryRow>> = BTreeMap::new();
    for r in &rows {
        if !schemes.contains(&r.scheme) {
            schemes.push(r.scheme.clone());
        }
        by_setting.entry(r.setting_id).or_default().push(r);
    }

    let mut winners = BTreeMap::new();
    let mut worst: BTreeMap<&str, f64> = BTreeMap::new();
    for (&id, group) in &by_setting {
        if group.len() != schemes.len() {
            return Err(Error::Config(format!(
                "setting {id} has {} of {} schemes",
                group.len(),
                schemes.len()
            )));
        }
        let best = group
            .iter()
            .min_by(|a, b| a.midpoint().total_cmp(&b.midpoint()))
            .expect("group is non-empty");
        winners.insert(id, best.scheme.clone());
        for r in group {
            let w = worst.entry(r.scheme.as_str()).or_insert(0.0);
            *w = w.max(ratio(r.midpoint(), best.midpoint()));
        }
    }
    let robustness = schemes.iter().map(|s| (s.clone(), worst[s.as_str()])).collect();
    Ok(ComparisonTable {
        rows,
        winners,
        robustness,
    })
}

pub fn read_summary(dir: &Path) -> Result<Vec<SummaryRow>> {
    let mut reader = csv::Reader::from_path(dir.join(SUMMARY_FILE)).map_err(|e| Error::Io(e.to_string()))?;
    reader
        .deserialize()
        .map(|r| r.map_err(|e| Error::Io(format!("{SUMMARY_FILE}: {e}"))))
        .collect()
}

/// Reads a bundle and compares its schemes. Bundles with failed runs are rejected.
pub fn summarize(dir: &Path) -> Result<ComparisonTable> {
    let manifest = read_manifest(dir)?;
    if !manifest.complete {
        return Err(Error::Config("bundle is incomplete: some runs failed (see manifest.json)".into()));
    }
    compare(read_summary(dir)?)
}

impl fmt::Display for ComparisonTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:>7}  {:<10} {:>13} {:>13}  winner", "setting", "scheme", "ci_low", "ci_high")?;
        for r in &self.rows {
            let mark = if self.winners.get(&r.setting_id) == Some(&r.scheme) { "*" } else { "" };
            writeln!(
                f,
                "{:>7}  {:<10} {:>13} {:>13}  {mark}",
                r.setting_id,
                r.scheme,
                fmt6(r.ci_low),
                fmt6(r.ci_high)
            )?;
        }
        writeln!(f, "\nrobustness (worst midpoint / best midpoint):")?;
        for (s, v) in &self.robustness {
            writeln!(f, "  {s:<10} {}", fmt6(*v))?;
        }
        Ok(())
    }
}
