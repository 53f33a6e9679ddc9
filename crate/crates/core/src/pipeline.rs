//! File-level plumbing around an extraction run: reading a directory of
//! plaintext reports and writing per-report outputs plus a run summary.

use crate::linked_data::{to_linked_data, ContextMap};
use crate::llm::{compute_cost, LlmError, PriceTable};
use crate::record::{ExtractionRecord, FeatureStatus, TokenUsage};
use indexmap::IndexMap;
use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};
use std::io;
use std::path::{Path, PathBuf};

/// Reads every `*.txt` file in `dir` as `(report_id, text)`, where the id is
/// the file stem. Sorted by file name.
pub fn read_reports(dir: &Path) -> io::Result<Vec<(String, String)>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "txt"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let id = p
                .file_stem()
                .and_then(|s| s.to_str())
                .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidData, format!("bad file name {}", p.display())))?
                .to_string();
            Ok((id, std::fs::read_to_string(&p)?))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub report_id: String,
    pub complete: bool,
    pub usage: TokenUsage,
    pub cost_usd: Option<Decimal>,
    pub statuses: IndexMap<String, FeatureStatus>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub model_id: String,
    pub reports: Vec<ReportSummary>,
    pub total_usage: TokenUsage,
    pub total_cost_usd: Option<Decimal>,
    pub complete_reports: usize,
    pub incomplete_reports: usize,
}

impl RunSummary {
    pub fn all_complete(&self) -> bool {
        self.incomplete_reports == 0
    }
}

pub fn summarize(
    records: &[ExtractionRecord],
    model_id: &str,
    prices: Option<&PriceTable>,
) -> Result<RunSummary, LlmError> {
    let mut reports = Vec::with_capacity(records.len());
    for r in records {
        reports.push(ReportSummary {
            report_id: r.report_id.clone(),
            complete: r.is_complete(),
            usage: r.usage,
            cost_usd: prices.map(|p| compute_cost(r.usage, model_id, p)).transpose()?,
            statuses: r.statuses.clone(),
        });
    }
    let total_usage = records.iter().map(|r| r.usage).sum();
    let complete_reports = reports.iter().filter(|r| r.complete).count();
    Ok(RunSummary {
        model_id: model_id.to_string(),
        total_cost_usd: prices.map(|p| compute_cost(total_usage, model_id, p)).transpose()?,
        incomplete_reports: reports.len() - complete_reports,
        complete_reports,
        reports,
        total_usage,
    })
}

fn write_json(path: &Path, value: &impl Serialize) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    text.push('\n');
    std::fs::write(path, text)
}

/// Writes `<id>.json` (the extracted values), `<id>.jsonld` when a context is
/// given, and `summary.json`. Returns the linked-data warnings.
pub fn write_outputs(
    records: &[ExtractionRecord],
    context: Option<&ContextMap>,
    summary: &RunSummary,
    out_dir: &Path,
) -> io::Result<Vec<String>> {
    std::fs::create_dir_all(out_dir)?;
    let mut warnings = Vec::new();
    for r in records {
        write_json(&out_dir.join(format!("{}.json", r.report_id)), &r.values)?;
        if let Some(ctx) = context {
            let ld = to_linked_data(r, ctx);
            warnings.extend(ld.warnings.into_iter().map(|w| format!("{}: {w}", r.report_id)));
            write_json(&out_dir.join(format!("{}.jsonld", r.report_id)), &ld.document)?;
        }
    }
    write_json(&out_dir.join("summary.json"), summary)?;
    Ok(warnings)
}
