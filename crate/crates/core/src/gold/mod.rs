//! Gold-standard construction from two annotation sets.
//!
//! Agreements are accepted automatically. Disagreements go through a blinded,
//! seeded adjudication queue, and [`apply_resolutions`] turns the decisions
//! back into source-attributed gold values.

mod normalize;
mod resolve;
pub mod service;

pub use normalize::{normalize, values_agree, Normalized};
pub use resolve::{
    apply_resolutions, read_resolution_log, Composition, CompositionRow, Decision, GoldEntry, GoldStandard, Provenance,
    Resolution, ResolutionLog,
};

use crate::record::ExtractionRecord;
use crate::schema::ExtractionSchema;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::io::{Read, Write};

#[derive(Debug, thiserror::Error)]
pub enum GoldError {
    #[error("annotation input: {0}")]
    Input(String),
    #[error("annotator {annotator}: more than one value for report {report_id}, feature {feature}")]
    DuplicateEntry {
        annotator: String,
        report_id: String,
        feature: String,
    },
    #[error("unresolved conflicts: {}", .0.join(", "))]
    UnresolvedConflicts(Vec<String>),
    #[error("resolution refers to unknown conflict {0}")]
    UnknownConflict(String),
    #[error("conflict {0} has more than one resolution")]
    DuplicateResolution(String),
    #[error("invalid resolution for conflict {conflict_id}: {reason}")]
    InvalidResolution { conflict_id: String, reason: String },
    #[error("annotator {0} is neither side of the comparison")]
    UnknownAnnotator(String),
    #[error("resolution log line {line}: {message}")]
    Log { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Identifies one annotated cell.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EntryKey {
    pub report_id: String,
    pub feature: String,
}

impl EntryKey {
    pub fn new(report_id: impl Into<String>, feature: impl Into<String>) -> Self {
        Self {
            report_id: report_id.into(),
            feature: feature.into(),
        }
    }
}

/// One row of the annotation interchange format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRow {
    pub report_id: String,
    pub feature: String,
    pub value: Value,
    pub annotator_id: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AnnotationSet {
    pub annotator_id: String,
    /// `Value::Null` records an explicit "not reported" answer.
    pub entries: BTreeMap<EntryKey, Value>,
}

impl AnnotationSet {
    pub fn new(annotator_id: impl Into<String>) -> Self {
        Self {
            annotator_id: annotator_id.into(),
            entries: BTreeMap::new(),
        }
    }

    pub fn insert(
        &mut self,
        report_id: impl Into<String>,
        feature: impl Into<String>,
        value: Value,
    ) -> Result<(), GoldError> {
        let key = EntryKey::new(report_id, feature);
        if self.entries.contains_key(&key) {
            return Err(GoldError::DuplicateEntry {
                annotator: self.annotator_id.clone(),
                report_id: key.report_id,
                feature: key.feature,
            });
        }
        self.entries.insert(key, value);
        Ok(())
    }

    pub fn get(&self, report_id: &str, feature: &str) -> Option<&Value> {
        self.entries.get(&EntryKey::new(report_id, feature))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Builds a set from extraction output. Only values with status `ok` are
    /// present in a record, so failed features become coverage gaps.
    pub fn from_records<'a>(
        annotator_id: impl Into<String>,
        records: impl IntoIterator<Item = &'a ExtractionRecord>,
    ) -> Result<Self, GoldError> {
        let mut set = Self::new(annotator_id);
        for r in records {
            for (feature, value) in &r.values {
                set.insert(r.report_id.clone(), feature.clone(), value.clone())?;
            }
        }
        Ok(set)
    }

    pub fn rows(&self) -> impl Iterator<Item = AnnotationRow> + '_ {
        self.entries.iter().map(|(k, v)| AnnotationRow {
            report_id: k.report_id.clone(),
            feature: k.feature.clone(),
            value: v.clone(),
            annotator_id: self.annotator_id.clone(),
        })
    }

    /// Groups rows by `annotator_id`, keeping first-seen annotator order.
    pub fn from_rows(rows: impl IntoIterator<Item = AnnotationRow>) -> Result<Vec<Self>, GoldError> {
        let mut sets: Vec<AnnotationSet> = Vec::new();
        for row in rows {
            let idx = match sets.iter().position(|s| s.annotator_id == row.annotator_id) {
                Some(i) => i,
                None => {
                    sets.push(AnnotationSet::new(row.annotator_id.clone()));
                    sets.len() - 1
                }
            };
            sets[idx].insert(row.report_id, row.feature, row.value)?;
        }
        Ok(sets)
    }

    /// Reads the CSV interchange format (`report_id,feature,value,annotator_id`).
    /// CSV carries text only: an empty cell is `null`, anything else a string.
    /// Call [`AnnotationSet::coerce_with_schema`] to recover typed values.
    pub fn read_csv(reader: impl Read) -> Result<Vec<Self>, GoldError> {
        #[derive(Deserialize)]
        struct CsvRow {
            report_id: String,
            feature: String,
            value: String,
            annotator_id: String,
        }
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::Headers).from_reader(reader);
        let mut rows = Vec::new();
        for rec in rdr.deserialize::<CsvRow>() {
            let r = rec.map_err(|e| GoldError::Input(e.to_string()))?;
            rows.push(AnnotationRow {
                report_id: r.report_id,
                feature: r.feature,
                value: if r.value.is_empty() {
                    Value::Null
                } else {
                    Value::String(r.value)
                },
                annotator_id: r.annotator_id,
            });
        }
        Self::from_rows(rows)
    }

    /// Reads a JSON array of [`AnnotationRow`] objects.
    pub fn read_json(reader: impl Read) -> Result<Vec<Self>, GoldError> {
        let rows: Vec<AnnotationRow> = serde_json::from_reader(reader).map_err(|e| GoldError::Input(e.to_string()))?;
        Self::from_rows(rows)
    }

    pub fn write_csv(&self, writer: impl Write) -> Result<(), GoldError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["report_id", "feature", "value", "annotator_id"])
            .map_err(|e| GoldError::Input(e.to_string()))?;
        for row in self.rows() {
            w.write_record([
                row.report_id.as_str(),
                row.feature.as_str(),
                &value_to_cell(&row.value),
                row.annotator_id.as_str(),
            ])
            .map_err(|e| GoldError::Input(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_json(&self, writer: impl Write) -> Result<(), GoldError> {
        let rows: Vec<AnnotationRow> = self.rows().collect();
        serde_json::to_writer_pretty(writer, &rows).map_err(|e| GoldError::Input(e.to_string()))
    }

    /// Replaces string values with the typed code or number the schema
    /// declares for that feature, when one matches under normalization.
    pub fn coerce_with_schema(&mut self, schema: &ExtractionSchema) {
        for (key, value) in self.entries.iter_mut() {
            let Some(spec) = schema.feature(&key.feature) else {
                continue;
            };
            let Value::String(s) = value else { continue };
            if let Some(code) = spec
                .allowed_codes
                .iter()
                .find(|c| values_agree(&c.code, &Value::String(s.clone()), Some(spec.kind)))
            {
                *value = code.code.clone();
                continue;
            }
            use crate::schema::FeatureKind::*;
            match spec.kind {
                Integer | Decimal => {
                    if let Ok(n) = s.trim().parse::<serde_json::Number>() {
                        *value = Value::Number(n);
                    }
                }
                BooleanCoded => match s.trim().to_ascii_lowercase().as_str() {
                    "true" => *value = Value::Bool(true),
                    "false" => *value = Value::Bool(false),
                    _ => {}
                },
                _ => {}
            }
        }
    }
}

fn value_to_cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    pub report_id: String,
    pub feature: String,
    /// The first set's spelling of the agreed value.
    pub value: Value,
}

/// A cell on which the two sets disagree, before blinding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Disagreement {
    pub report_id: String,
    pub feature: String,
    pub first: Value,
    pub second: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageGap {
    pub report_id: String,
    pub feature: String,
    /// The annotator that did supply a value.
    pub present_in: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffResult {
    pub first_annotator: String,
    pub second_annotator: String,
    pub agreements: Vec<Agreement>,
    pub disagreements: Vec<Disagreement>,
    pub coverage_gaps: Vec<CoverageGap>,
}

impl DiffResult {
    /// Pairs present in both sets.
    pub fn comparable(&self) -> usize {
        self.agreements.len() + self.disagreements.len()
    }

    /// `None` when nothing is comparable.
    pub fn agreement_rate(&self) -> Option<f64> {
        let n = self.comparable();
        (n > 0).then(|| self.agreements.len() as f64 / n as f64)
    }
}

/// Compares two annotation sets cell by cell.
///
/// Equality is [`values_agree`], using the feature kind from `schema` when
/// the feature is known. Cells present in only one set are reported as
/// coverage gaps and take no part in the counts.
pub fn diff_annotations(
    first: &AnnotationSet,
    second: &AnnotationSet,
    schema: Option<&ExtractionSchema>,
) -> DiffResult {
    let mut out = DiffResult {
        first_annotator: first.annotator_id.clone(),
        second_annotator: second.annotator_id.clone(),
        agreements: Vec::new(),
        disagreements: Vec::new(),
        coverage_gaps: Vec::new(),
    };
    for (key, a) in &first.entries {
        let Some(b) = second.entries.get(key) else {
            out.coverage_gaps.push(CoverageGap {
                report_id: key.report_id.clone(),
                feature: key.feature.clone(),
                present_in: first.annotator_id.clone(),
            });
            continue;
        };
        let kind = schema.and_then(|s| s.feature(&key.feature)).map(|f| f.kind);
        if values_agree(a, b, kind) {
            out.agreements.push(Agreement {
                report_id: key.report_id.clone(),
                feature: key.feature.clone(),
                value: a.clone(),
            });
        } else {
            out.disagreements.push(Disagreement {
                report_id: key.report_id.clone(),
                feature: key.feature.clone(),
                first: a.clone(),
                second: b.clone(),
            });
        }
    }
    for key in second.entries.keys() {
        if !first.entries.contains_key(key) {
            out.coverage_gaps.push(CoverageGap {
                report_id: key.report_id.clone(),
                feature: key.feature.clone(),
                present_in: second.annotator_id.clone(),
            });
        }
    }
    out
}

/// Which input set supplied candidate A.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlindAssignment {
    FirstIsA,
    SecondIsA,
}

/// A queued disagreement. `blind_assignment` must never leave the server.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conflict {
    pub conflict_id: String,
    pub report_id: String,
    pub feature: String,
    pub candidate_a: Value,
    pub candidate_b: Value,
    pub blind_assignment: BlindAssignment,
    pub queue_position: usize,
}

impl Conflict {
    /// The candidate value supplied by the first or second set.
    pub fn value_of(&self, first: bool) -> &Value {
        match (self.blind_assignment, first) {
            (BlindAssignment::FirstIsA, true) | (BlindAssignment::SecondIsA, false) => &self.candidate_a,
            _ => &self.candidate_b,
        }
    }

    /// Whether candidate A came from the first set.
    pub fn a_is_first(&self) -> bool {
        self.blind_assignment == BlindAssignment::FirstIsA
    }
}

/// Everything needed to run and later unblind an adjudication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjudicationQueue {
    pub seed: u64,
    pub first_annotator: String,
    pub second_annotator: String,
    pub conflicts: Vec<Conflict>,
}

impl AdjudicationQueue {
    pub fn get(&self, conflict_id: &str) -> Option<&Conflict> {
        self.conflicts.iter().find(|c| c.conflict_id == conflict_id)
    }
}

fn conflict_id(seed: u64, report_id: &str, feature: &str) -> String {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update((report_id.len() as u64).to_le_bytes());
    h.update(report_id.as_bytes());
    h.update(feature.as_bytes());
    let digest = h.finalize();
    format!("c-{}", hex::encode(&digest[..8]))
}

/// Shuffles the disagreements and blinds each one with a fair coin.
///
/// Both the permutation and the coins come from one ChaCha8 stream seeded
/// with `seed`: the permutation is drawn first, then one coin per conflict in
/// queue order.
pub fn make_adjudication_queue(diff: &DiffResult, seed: u64) -> AdjudicationQueue {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<&Disagreement> = diff.disagreements.iter().collect();
    order.shuffle(&mut rng);
    let conflicts = order
        .into_iter()
        .enumerate()
        .map(|(pos, d)| {
            let first_is_a = rng.random_bool(0.5);
            let (a, b, assignment) = if first_is_a {
                (d.first.clone(), d.second.clone(), BlindAssignment::FirstIsA)
            } else {
                (d.second.clone(), d.first.clone(), BlindAssignment::SecondIsA)
            };
            Conflict {
                conflict_id: conflict_id(seed, &d.report_id, &d.feature),
                report_id: d.report_id.clone(),
                feature: d.feature.clone(),
                candidate_a: a,
                candidate_b: b,
                blind_assignment: assignment,
                queue_position: pos,
            }
        })
        .collect();
    AdjudicationQueue {
        seed,
        first_annotator: diff.first_annotator.clone(),
        second_annotator: diff.second_annotator.clone(),
        conflicts,
    }
}
