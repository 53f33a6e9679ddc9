//! Scoring annotators against the gold standard, and the statistics built on
//! those scores.

mod describe;
mod glm;
mod normal;

pub use describe::{
    agreement_histogram, mention_rates, performance_cost_summary, AnnotatorHistogram, HistogramBin, MentionRates,
    SummaryRow,
};
pub use glm::{fit_binomial_glm, Coefficient, GlmError, GlmFit, DEVIANCE_TOLERANCE, MAX_ITERATIONS};
pub use normal::{erfc, two_sided_p};

use crate::gold::{values_agree, AnnotationSet, GoldStandard};
use crate::schema::ExtractionSchema;
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Successes `k` out of `n` comparable features for one annotator on one report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportOutcome {
    pub annotator_id: String,
    pub report_id: String,
    pub k: u64,
    pub n: u64,
}

impl ReportOutcome {
    pub fn new(annotator_id: impl Into<String>, report_id: impl Into<String>, k: u64, n: u64) -> Self {
        Self {
            annotator_id: annotator_id.into(),
            report_id: report_id.into(),
            k,
            n,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureAccuracy {
    pub matches: u64,
    pub reports: u64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreResult {
    pub annotator_id: String,
    pub outcomes: Vec<ReportOutcome>,
    pub per_feature: IndexMap<String, FeatureAccuracy>,
    /// Gold cells the annotator has no value for. They count as failures.
    pub missing: u64,
}

/// Scores one annotator cell by cell against the gold standard.
///
/// Features are listed in schema order when a schema is given, with any
/// others after them in name order.
pub fn score_against_gold(
    annotations: &AnnotationSet,
    gold: &GoldStandard,
    schema: Option<&ExtractionSchema>,
) -> ScoreResult {
    let mut per_report: IndexMap<&str, (u64, u64)> = IndexMap::new();
    let mut per_feature: BTreeMap<&str, (u64, u64)> = BTreeMap::new();
    let mut missing = 0;
    for e in &gold.entries {
        let kind = schema.and_then(|s| s.feature(&e.feature)).map(|f| f.kind);
        let hit = match annotations.get(&e.report_id, &e.feature) {
            Some(v) => values_agree(v, &e.value, kind),
            None => {
                missing += 1;
                false
            }
        };
        let r = per_report.entry(e.report_id.as_str()).or_default();
        r.0 += hit as u64;
        r.1 += 1;
        let f = per_feature.entry(e.feature.as_str()).or_default();
        f.0 += hit as u64;
        f.1 += 1;
    }
    if missing > 0 {
        tracing::warn!(annotator = %annotations.annotator_id, missing, "gold cells without an annotation");
    }

    let mut ordered: Vec<&str> = Vec::new();
    if let Some(s) = schema {
        ordered.extend(s.feature_names().filter(|f| per_feature.contains_key(f)));
    }
    ordered.extend(
        per_feature
            .keys()
            .filter(|f| !ordered.contains(f))
            .copied()
            .collect::<Vec<_>>(),
    );

    ScoreResult {
        annotator_id: annotations.annotator_id.clone(),
        outcomes: per_report
            .into_iter()
            .map(|(r, (k, n))| ReportOutcome::new(annotations.annotator_id.clone(), r, k, n))
            .collect(),
        per_feature: ordered
            .into_iter()
            .map(|f| {
                let (m, n) = per_feature[f];
                (
                    f.to_string(),
                    FeatureAccuracy {
                        matches: m,
                        reports: n,
                        accuracy: m as f64 / n as f64,
                    },
                )
            })
            .collect(),
        missing,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitSet {
    Train,
    Test,
}

impl std::str::FromStr for SplitSet {
    type Err = SplitError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "train" => Ok(Self::Train),
            "test" => Ok(Self::Test),
            other => Err(SplitError::Malformed(format!(
                "unknown set `{other}` (expected train or test)"
            ))),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SplitError {
    #[error("split file: {0}")]
    Malformed(String),
    #[error("report {0} is not assigned to a split")]
    Unassigned(String),
    #[error("reports span {0:?}; mixing sets needs an explicit override")]
    Mixed(Vec<SplitSet>),
}

/// Train/test membership, read from a `report_id,set` CSV.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Split {
    pub membership: BTreeMap<String, SplitSet>,
}

impl Split {
    pub fn read_csv(reader: impl std::io::Read) -> Result<Self, SplitError> {
        #[derive(Deserialize)]
        struct Row {
            report_id: String,
            set: SplitSet,
        }
        let mut membership = BTreeMap::new();
        for row in csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader)
            .deserialize::<Row>()
        {
            let row = row.map_err(|e| SplitError::Malformed(e.to_string()))?;
            if membership.insert(row.report_id.clone(), row.set).is_some() {
                return Err(SplitError::Malformed(format!("report {} listed twice", row.report_id)));
            }
        }
        Ok(Self { membership })
    }

    /// The sets the given reports belong to. Fails if they span more than one
    /// set and `allow_mixed` is false.
    pub fn check<'a>(
        &self,
        report_ids: impl IntoIterator<Item = &'a str>,
        allow_mixed: bool,
    ) -> Result<Vec<SplitSet>, SplitError> {
        let mut sets = Vec::new();
        for id in report_ids {
            let s = *self
                .membership
                .get(id)
                .ok_or_else(|| SplitError::Unassigned(id.to_string()))?;
            if !sets.contains(&s) {
                sets.push(s);
            }
        }
        sets.sort();
        if sets.len() > 1 && !allow_mixed {
            return Err(SplitError::Mixed(sets));
        }
        Ok(sets)
    }
}
