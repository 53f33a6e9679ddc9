use super::{values_agree, AdjudicationQueue, Agreement, Conflict, GoldError};
use chrono::{DateTime, Utc};
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::{BTreeMap, HashMap};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Decision {
    ChooseA,
    ChooseB,
    Other(Value),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resolution {
    pub conflict_id: String,
    pub decision: Decision,
    #[serde(default)]
    pub ocr_error_flag: bool,
    pub decided_at: DateTime<Utc>,
}

impl Resolution {
    pub fn new(conflict_id: impl Into<String>, decision: Decision, ocr_error_flag: bool) -> Self {
        Self {
            conflict_id: conflict_id.into(),
            decision,
            ocr_error_flag,
            decided_at: Utc::now(),
        }
    }

    /// Checks the decision against the conflict it resolves.
    pub fn check(&self, conflict: &Conflict) -> Result<(), GoldError> {
        if let Decision::Other(v) = &self.decision {
            if values_agree(v, &conflict.candidate_a, None) || values_agree(v, &conflict.candidate_b, None) {
                return Err(GoldError::InvalidResolution {
                    conflict_id: self.conflict_id.clone(),
                    reason: "a new value must differ from both candidates".into(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Agreement,
    AlignedHuman,
    AlignedLlm,
    PhysicianNew,
    OcrErrorHuman,
}

impl Provenance {
    pub const ALL: [Provenance; 5] = [
        Provenance::Agreement,
        Provenance::AlignedHuman,
        Provenance::AlignedLlm,
        Provenance::PhysicianNew,
        Provenance::OcrErrorHuman,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Agreement => "agreement",
            Provenance::AlignedHuman => "aligned_human",
            Provenance::AlignedLlm => "aligned_llm",
            Provenance::PhysicianNew => "physician_new",
            Provenance::OcrErrorHuman => "ocr_error_human",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldEntry {
    pub report_id: String,
    pub feature: String,
    pub value: Value,
    pub provenance: Provenance,
}

/// Adjudicated reference values, sorted by `(report_id, feature)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldStandard {
    pub human_annotator: String,
    pub other_annotator: String,
    pub entries: Vec<GoldEntry>,
}

impl GoldStandard {
    pub fn get(&self, report_id: &str, feature: &str) -> Option<&GoldEntry> {
        self.entries
            .binary_search_by(|e| (e.report_id.as_str(), e.feature.as_str()).cmp(&(report_id, feature)))
            .ok()
            .map(|i| &self.entries[i])
    }

    pub fn report_ids(&self) -> Vec<&str> {
        let mut ids: Vec<&str> = self.entries.iter().map(|e| e.report_id.as_str()).collect();
        ids.dedup();
        ids
    }

    pub fn composition(&self) -> Composition {
        Composition::from_entries(self.entries.iter())
    }

    pub fn composition_by_feature(&self) -> BTreeMap<String, Composition> {
        let mut groups: BTreeMap<String, Vec<&GoldEntry>> = BTreeMap::new();
        for e in &self.entries {
            groups.entry(e.feature.clone()).or_default().push(e);
        }
        groups
            .into_iter()
            .map(|(f, es)| (f, Composition::from_entries(es.into_iter())))
            .collect()
    }

    pub fn write_csv(&self, writer: impl Write) -> Result<(), GoldError> {
        let mut w = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| GoldError::Input(e.to_string());
        w.write_record(["report_id", "feature", "value", "provenance"])
            .map_err(io)?;
        for e in &self.entries {
            let cell = match &e.value {
                Value::Null => String::new(),
                Value::String(s) => s.clone(),
                v => v.to_string(),
            };
            w.write_record([&e.report_id, &e.feature, &cell, e.provenance.as_str()])
                .map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Entry counts per provenance.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Composition {
    pub total: usize,
    pub counts: BTreeMap<Provenance, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompositionRow {
    pub provenance: Provenance,
    pub count: usize,
    pub percent_of_total: Option<f64>,
    /// Share among entries that went through adjudication.
    pub percent_of_conflicts: Option<f64>,
}

impl Composition {
    fn from_entries<'a>(entries: impl Iterator<Item = &'a GoldEntry>) -> Self {
        let mut c = Composition::default();
        for e in entries {
            c.total += 1;
            *c.counts.entry(e.provenance).or_default() += 1;
        }
        c
    }

    pub fn count(&self, p: Provenance) -> usize {
        self.counts.get(&p).copied().unwrap_or(0)
    }

    pub fn adjudicated(&self) -> usize {
        self.total - self.count(Provenance::Agreement)
    }

    pub fn rows(&self) -> Vec<CompositionRow> {
        let pct = |num: usize, den: usize| (den > 0).then(|| 100.0 * num as f64 / den as f64);
        Provenance::ALL
            .iter()
            .map(|&p| CompositionRow {
                provenance: p,
                count: self.count(p),
                percent_of_total: pct(self.count(p), self.total),
                percent_of_conflicts: if p == Provenance::Agreement {
                    None
                } else {
                    pct(self.count(p), self.adjudicated())
                },
            })
            .collect()
    }
}

/// Assembles the gold standard.
///
/// An OCR-error flag overrides the decision: the human annotator's candidate
/// becomes gold. Otherwise the chosen side is unblinded to `aligned_human` or
/// `aligned_llm`, and a new value is `physician_new`.
pub fn apply_resolutions(
    agreements: &[Agreement],
    queue: &AdjudicationQueue,
    resolutions: &[Resolution],
    human_annotator: &str,
) -> Result<GoldStandard, GoldError> {
    let human_is_first = if human_annotator == queue.first_annotator {
        true
    } else if human_annotator == queue.second_annotator {
        false
    } else {
        return Err(GoldError::UnknownAnnotator(human_annotator.to_string()));
    };
    let other_annotator = if human_is_first {
        &queue.second_annotator
    } else {
        &queue.first_annotator
    };

    let by_id: HashMap<&str, &Conflict> = queue.conflicts.iter().map(|c| (c.conflict_id.as_str(), c)).collect();
    let mut chosen: HashMap<&str, &Resolution> = HashMap::new();
    for r in resolutions {
        let conflict = by_id
            .get(r.conflict_id.as_str())
            .ok_or_else(|| GoldError::UnknownConflict(r.conflict_id.clone()))?;
        r.check(conflict)?;
        if chosen.insert(r.conflict_id.as_str(), r).is_some() {
            return Err(GoldError::DuplicateResolution(r.conflict_id.clone()));
        }
    }
    let missing: Vec<String> = queue
        .conflicts
        .iter()
        .filter(|c| !chosen.contains_key(c.conflict_id.as_str()))
        .map(|c| c.conflict_id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(GoldError::UnresolvedConflicts(missing));
    }

    let mut entries: Vec<GoldEntry> = agreements
        .iter()
        .map(|a| GoldEntry {
            report_id: a.report_id.clone(),
            feature: a.feature.clone(),
            value: a.value.clone(),
            provenance: Provenance::Agreement,
        })
        .collect();
    for c in &queue.conflicts {
        let r = chosen[c.conflict_id.as_str()];
        let (value, provenance) = if r.ocr_error_flag {
            (c.value_of(human_is_first).clone(), Provenance::OcrErrorHuman)
        } else {
            match &r.decision {
                Decision::Other(v) => (v.clone(), Provenance::PhysicianNew),
                d => {
                    let picked_a = *d == Decision::ChooseA;
                    let from_first = picked_a == c.a_is_first();
                    let value = if picked_a { &c.candidate_a } else { &c.candidate_b };
                    let p = if from_first == human_is_first {
                        Provenance::AlignedHuman
                    } else {
                        Provenance::AlignedLlm
                    };
                    (value.clone(), p)
                }
            }
        };
        entries.push(GoldEntry {
            report_id: c.report_id.clone(),
            feature: c.feature.clone(),
            value,
            provenance,
        });
    }
    entries.sort_by(|a, b| (&a.report_id, &a.feature).cmp(&(&b.report_id, &b.feature)));
    Ok(GoldStandard {
        human_annotator: human_annotator.to_string(),
        other_annotator: other_annotator.clone(),
        entries,
    })
}

/// Append-only JSON-lines store of resolutions. Later lines for the same
/// conflict supersede earlier ones; the earlier lines stay as an audit trail.
#[derive(Debug)]
pub struct ResolutionLog {
    path: PathBuf,
    file: File,
}

impl ResolutionLog {
    pub fn open(path: impl AsRef<Path>) -> Result<Self, GoldError> {
        let path = path.as_ref().to_path_buf();
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(Self { path, file })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&mut self, r: &Resolution) -> Result<(), GoldError> {
        let mut line = serde_json::to_string(r).map_err(|e| GoldError::Input(e.to_string()))?;
        line.push('\n');
        self.file.write_all(line.as_bytes())?;
        self.file.sync_data()?;
        Ok(())
    }

    /// The current resolution of every conflict in the log.
    pub fn replay(&self) -> Result<Vec<Resolution>, GoldError> {
        read_resolution_log(File::open(&self.path)?)
    }
}

/// Reads a resolution log, keeping the last line for each conflict, in order
/// of each conflict's first appearance.
pub fn read_resolution_log(reader: impl Read) -> Result<Vec<Resolution>, GoldError> {
    let mut latest: IndexMap<String, Resolution> = IndexMap::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let r: Resolution = serde_json::from_str(&line).map_err(|e| GoldError::Log {
            line: i + 1,
            message: e.to_string(),
        })?;
        latest.insert(r.conflict_id.clone(), r);
    }
    Ok(latest.into_values().collect())
}
