use super::{GlmFit, ReportOutcome};
use crate::gold::{values_agree, GoldStandard};
use crate::schema::ExtractionSchema;
use indexmap::IndexMap;
use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MentionRates {
    /// Fraction of gold reports in which the feature carries a finding.
    pub rates: IndexMap<String, f64>,
    pub warnings: Vec<String>,
}

/// How often each schema feature is mentioned in the gold standard.
///
/// A value is unmentioned when it equals the feature's no-mention code, or its
/// negative code when there is no no-mention code. `null` always counts as
/// unmentioned. A feature with neither code is otherwise always mentioned and
/// gets a warning.
pub fn mention_rates(gold: &GoldStandard, schema: &ExtractionSchema) -> MentionRates {
    let mut rates = IndexMap::new();
    let mut warnings = Vec::new();
    for spec in &schema.features {
        let values: Vec<&Value> = gold
            .entries
            .iter()
            .filter(|e| e.feature == spec.name)
            .map(|e| &e.value)
            .collect();
        if values.is_empty() {
            continue;
        }
        let marker = spec.no_mention_code.as_ref().or(spec.negative_code.as_ref());
        if marker.is_none() {
            warnings.push(format!(
                "{} has neither a no-mention nor a negative code; only null values count as unmentioned",
                spec.name
            ));
        }
        let mentioned = values
            .iter()
            .filter(|v| !v.is_null() && !marker.is_some_and(|m| values_agree(m, v, Some(spec.kind))))
            .count();
        rates.insert(spec.name.clone(), mentioned as f64 / values.len() as f64);
    }
    MentionRates { rates, warnings }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistogramBin {
    /// Inclusive lower edge in percent.
    pub lower: u32,
    /// Exclusive upper edge, except for the final bin which holds exactly 100.
    pub upper: u32,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatorHistogram {
    pub annotator_id: String,
    pub bins: Vec<HistogramBin>,
    pub reports: u64,
    pub minimum_percent: f64,
}

/// Per-annotator histogram of per-report agreement `100 k / n`.
///
/// Bins are `[0, w), [w, 2w), ..., [100 - w, 100)` plus a final bin for
/// exactly 100%. Assignment uses integer arithmetic, so a report sitting on an
/// edge always lands in the upper bin. `bin_width` must divide 100.
pub fn agreement_histogram(outcomes: &[ReportOutcome], bin_width: u32) -> Option<Vec<AnnotatorHistogram>> {
    if bin_width == 0 || 100 % bin_width != 0 {
        return None;
    }
    let regular = 100 / bin_width;
    let mut by_annotator: IndexMap<&str, Vec<&ReportOutcome>> = IndexMap::new();
    for o in outcomes.iter().filter(|o| o.n > 0) {
        by_annotator.entry(o.annotator_id.as_str()).or_default().push(o);
    }
    let hists = by_annotator
        .into_iter()
        .map(|(id, os)| {
            let mut bins: Vec<HistogramBin> = (0..regular)
                .map(|i| HistogramBin {
                    lower: i * bin_width,
                    upper: (i + 1) * bin_width,
                    count: 0,
                })
                .chain(std::iter::once(HistogramBin {
                    lower: 100,
                    upper: 100,
                    count: 0,
                }))
                .collect();
            let mut minimum = f64::INFINITY;
            for o in &os {
                let idx = if o.k >= o.n {
                    regular as usize
                } else {
                    (100 * o.k / (o.n * bin_width as u64)) as usize
                };
                bins[idx].count += 1;
                minimum = minimum.min(100.0 * o.k as f64 / o.n as f64);
            }
            AnnotatorHistogram {
                annotator_id: id.to_string(),
                bins,
                reports: os.len() as u64,
                minimum_percent: minimum,
            }
        })
        .collect();
    Some(hists)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub annotator_id: String,
    pub accuracy_percent: f64,
    pub average_cost_usd: Option<Decimal>,
    /// Wald p-value against the reference; `None` for the reference itself.
    pub p_value: Option<f64>,
}

/// One row per annotator in order of first appearance: pooled accuracy, cost
/// per report where known, and the p-value from `fit` where available.
pub fn performance_cost_summary(
    outcomes: &[ReportOutcome],
    fit: Option<&GlmFit>,
    costs: &IndexMap<String, Decimal>,
) -> Vec<SummaryRow> {
    let mut pooled: IndexMap<&str, (u64, u64)> = IndexMap::new();
    for o in outcomes {
        let e = pooled.entry(o.annotator_id.as_str()).or_default();
        e.0 += o.k;
        e.1 += o.n;
    }
    pooled
        .into_iter()
        .map(|(id, (k, n))| SummaryRow {
            annotator_id: id.to_string(),
            accuracy_percent: if n == 0 { 0.0 } else { 100.0 * k as f64 / n as f64 },
            average_cost_usd: costs.get(id).copied(),
            p_value: fit.and_then(|f| f.coefficients.get(id)).map(|c| c.p),
        })
        .collect()
}
