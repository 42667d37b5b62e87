use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::metrics::Summary;
use super::{io_err, CampaignConfig, Result};

/// Milliseconds spent in each pipeline stage for one mutant.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StageMs {
    pub construct: f64,
    pub mutate: f64,
    pub refine: f64,
    pub execute: f64,
    pub serialize: f64,
    /// Wall time of the whole iteration.
    pub total: f64,
}

impl StageMs {
    pub fn stage_sum(&self) -> f64 {
        self.construct + self.mutate + self.refine + self.execute + self.serialize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MutantRow {
    pub id: String,
    pub seed: String,
    /// Artifact file name inside `inputs/`.
    pub file: String,
    pub ops: Vec<String>,
    /// `clean`, `repaired`, `discarded`, or `skipped` when refinement is off.
    pub refine_status: String,
    pub violations_before: usize,
    pub violations_after: usize,
    pub executed: bool,
    pub accepted: bool,
    pub label: Option<String>,
    pub reject_reason: Option<String>,
    pub ms: StageMs,
}

/// Mean milliseconds per generated input.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EtiMs {
    pub graph_construction: f64,
    pub neighbor_selection_and_mutation: f64,
    pub constraint_refinement: f64,
    pub target_execution: f64,
    pub serialization: f64,
    pub total: f64,
    /// Mean of `total - target_execution`.
    pub pipeline_without_execution: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedSeed {
    pub seed: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub generated: usize,
    pub valid: usize,
    /// Refinement gave up; never executed.
    pub invalid_discarded: usize,
    pub invalid_rejected: usize,
    /// Seeds where the mutation budget could not be spent.
    pub mutation_failures: usize,
    /// `valid / generated`; `None` when nothing was generated.
    pub vir: Option<f64>,
    pub sps: Option<f64>,
    /// Mutants that passed the verifier but were rejected by the target;
    /// they carry no label and are left out of `sps`.
    pub sps_excluded: usize,
    pub md: Option<Summary>,
    pub eti_ms: EtiMs,
    pub refine_outcomes: BTreeMap<String, usize>,
    /// Violations found on fresh mutants, before refinement.
    pub violations_by_kind: BTreeMap<String, usize>,
    pub residual_violations_by_kind: BTreeMap<String, usize>,
    pub skipped_seeds: Vec<SkippedSeed>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub config_echo: CampaignConfig,
    pub per_mutant: Vec<MutantRow>,
    pub summary: SummaryStats,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(format!("unknown report format `{other}` (expected json or csv)")),
        }
    }
}

pub const CSV_HEADER: [&str; 17] = [
    "id",
    "seed",
    "file",
    "ops",
    "refine_status",
    "violations_before",
    "violations_after",
    "executed",
    "accepted",
    "label",
    "reject_reason",
    "ms_construct",
    "ms_mutate",
    "ms_refine",
    "ms_execute",
    "ms_serialize",
    "ms_total",
];

impl CampaignReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// One row per mutant under [`CSV_HEADER`]; ops are joined with `|`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER)?;
        for r in &self.per_mutant {
            let ms = [r.ms.construct, r.ms.mutate, r.ms.refine, r.ms.execute, r.ms.serialize, r.ms.total];
            let mut row = vec![
                r.id.clone(),
                r.seed.clone(),
                r.file.clone(),
                r.ops.join("|"),
                r.refine_status.clone(),
                r.violations_before.to_string(),
                r.violations_after.to_string(),
                r.executed.to_string(),
                r.accepted.to_string(),
                r.label.clone().unwrap_or_default(),
                r.reject_reason.clone().unwrap_or_default(),
            ];
            row.extend(ms.iter().map(f64::to_string));
            w.write_record(&row)?;
        }
        let bytes = w.into_inner().map_err(|e| super::HarnessError::Metric(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv writer emits UTF-8"))
    }
}

pub fn emit_report(report: &CampaignReport, format: ReportFormat, path: &Path) -> Result<()> {
    let text = match format {
        ReportFormat::Json => report.to_json()?,
        ReportFormat::Csv => report.to_csv()?,
    };
    std::fs::write(path, text).map_err(io_err(path))
}

pub fn read_report(path: &Path) -> Result<CampaignReport> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    Ok(serde_json::from_str(&text)?)
}
