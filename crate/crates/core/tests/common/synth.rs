//! Synthetic reports, annotation sets and adjudications.

use indexmap::IndexMap;
use mrie_core::gold::{AdjudicationQueue, AnnotationSet, Decision, Resolution};
use mrie_core::mock::MockBehavior;
use mrie_core::schema::{ExtractionSchema, FeatureKind, FeatureSpec};
use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

/// A valid value for `spec`.
pub fn random_value(spec: &FeatureSpec, rng: &mut ChaCha8Rng) -> Value {
    match spec.kind {
        FeatureKind::Categorical => spec.allowed_codes.choose(rng).unwrap().code.clone(),
        FeatureKind::Integer | FeatureKind::Decimal => {
            if spec.nullable && rng.random_bool(0.15) {
                return Value::Null;
            }
            let range = spec.range.unwrap();
            let lo = range.min.unwrap_or(0.0);
            let hi = range.max.unwrap_or(1000.0).min(lo + 200.0);
            if spec.kind == FeatureKind::Integer {
                json!(rng.random_range(lo as i64..=hi as i64))
            } else {
                json!((rng.random_range(lo..hi) * 10.0).round() / 10.0)
            }
        }
        FeatureKind::FreeText => json!(format!("note {}", rng.random_range(0..1000))),
        FeatureKind::BooleanCoded => json!(rng.random_bool(0.5)),
    }
}

/// A value for `spec` that differs from `value`, if one exists.
pub fn other_value(spec: &FeatureSpec, value: &Value, rng: &mut ChaCha8Rng) -> Value {
    for _ in 0..100 {
        let v = random_value(spec, rng);
        if !mrie_core::gold::values_agree(&v, value, Some(spec.kind)) {
            return v;
        }
    }
    panic!("feature {} has a single possible value", spec.name)
}

pub struct SyntheticReport {
    pub id: String,
    pub text: String,
    pub values: IndexMap<String, Value>,
}

/// Reports whose text lists every feature's title and value, laid out like a
/// two-column form.
pub fn reports(schema: &ExtractionSchema, count: usize, rng: &mut ChaCha8Rng) -> Vec<SyntheticReport> {
    (0..count)
        .map(|i| {
            let id = format!("report-{i:03}");
            let mut text = format!(
                "HISTOPATHOLOGY REPORT          Lab no: H{:02}-{:05}\n\n",
                i % 100,
                i * 37
            );
            let mut values = IndexMap::new();
            for spec in &schema.features {
                let v = random_value(spec, rng);
                let title = spec.extra.get("title").and_then(Value::as_str).unwrap_or(&spec.name);
                let shown = match &v {
                    Value::String(s) => s.clone(),
                    Value::Null => "not stated".into(),
                    other => other.to_string(),
                };
                text.push_str(&format!("{title:<32}{shown}\n"));
                values.insert(spec.name.clone(), v);
            }
            SyntheticReport { id, text, values }
        })
        .collect()
}

pub fn behavior(reports: &[SyntheticReport], seed: u64) -> MockBehavior {
    let mut b = MockBehavior {
        seed,
        ..MockBehavior::default()
    };
    for r in reports {
        b.add_report(&r.text, r.values.clone());
    }
    b
}

/// Two annotation sets over `reports` x schema features, minus `excluded`
/// cells, that disagree on exactly `conflicts` cells.
pub fn annotation_pair(
    schema: &ExtractionSchema,
    reports: usize,
    excluded: usize,
    conflicts: usize,
    rng: &mut ChaCha8Rng,
    human_id: &str,
    llm_id: &str,
) -> (AnnotationSet, AnnotationSet) {
    let mut cells: Vec<(String, &FeatureSpec)> = (0..reports)
        .flat_map(|r| schema.features.iter().map(move |f| (format!("report-{r:03}"), f)))
        .collect();
    cells.truncate(cells.len() - excluded);
    let mut idx: Vec<usize> = (0..cells.len()).collect();
    for i in (1..idx.len()).rev() {
        idx.swap(i, rng.random_range(0..=i));
    }
    let disagree: std::collections::HashSet<usize> = idx.into_iter().take(conflicts).collect();

    let mut human = AnnotationSet::new(human_id);
    let mut llm = AnnotationSet::new(llm_id);
    for (i, (report, spec)) in cells.iter().enumerate() {
        let v = random_value(spec, rng);
        let w = if disagree.contains(&i) {
            other_value(spec, &v, rng)
        } else {
            v.clone()
        };
        human.insert(report.clone(), spec.name.clone(), v).unwrap();
        llm.insert(report.clone(), spec.name.clone(), w).unwrap();
    }
    (human, llm)
}

/// What the adjudicator should do with one conflict.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Human,
    Llm,
    New,
    OcrError,
}

/// Resolutions producing the requested outcome for each conflict, where the
/// human set is the first set of the queue. `new_value` supplies values for
/// [`Outcome::New`].
pub fn resolutions(
    queue: &AdjudicationQueue,
    outcomes: &[Outcome],
    mut new_value: impl FnMut(usize) -> Value,
) -> Vec<Resolution> {
    assert_eq!(queue.conflicts.len(), outcomes.len());
    queue
        .conflicts
        .iter()
        .zip(outcomes)
        .enumerate()
        .map(|(i, (c, o))| {
            let pick = |first: bool| {
                if c.a_is_first() == first {
                    Decision::ChooseA
                } else {
                    Decision::ChooseB
                }
            };
            let (decision, ocr) = match o {
                Outcome::Human => (pick(true), false),
                Outcome::Llm => (pick(false), false),
                Outcome::New => (Decision::Other(new_value(i)), false),
                Outcome::OcrError => (pick(false), true),
            };
            let mut r = Resolution::new(c.conflict_id.clone(), decision, ocr);
            r.decided_at = chrono::DateTime::from_timestamp(1_700_000_000 + i as i64, 0).unwrap();
            r
        })
        .collect()
}

/// A value for `spec` agreeing with neither `a` nor `b`, if one is found.
pub fn third_value(spec: &FeatureSpec, a: &Value, b: &Value, rng: &mut ChaCha8Rng) -> Option<Value> {
    (0..200).map(|_| random_value(spec, rng)).find(|v| {
        !mrie_core::gold::values_agree(v, a, Some(spec.kind)) && !mrie_core::gold::values_agree(v, b, Some(spec.kind))
    })
}

/// Outcomes for every conflict of `queue` with exactly `llm`, `human` and
/// `new` of each kind, plus the replacement values for the `new` ones.
/// New values go to the first conflicts that admit a third value.
pub fn outcome_plan(
    queue: &AdjudicationQueue,
    schema: &ExtractionSchema,
    (llm, human, new): (usize, usize, usize),
    rng: &mut ChaCha8Rng,
) -> (Vec<Outcome>, Vec<Resolution>) {
    assert_eq!(llm + human + new, queue.conflicts.len());
    let mut outcomes = vec![Outcome::Human; queue.conflicts.len()];
    let mut values: Vec<Value> = vec![Value::Null; queue.conflicts.len()];
    let mut placed = 0;
    for (i, c) in queue.conflicts.iter().enumerate() {
        if placed == new {
            break;
        }
        let spec = schema.feature(&c.feature).unwrap();
        if let Some(v) = third_value(spec, &c.candidate_a, &c.candidate_b, rng) {
            outcomes[i] = Outcome::New;
            values[i] = v;
            placed += 1;
        }
    }
    assert_eq!(placed, new, "not enough conflicts admit a new value");
    outcomes
        .iter_mut()
        .filter(|o| **o != Outcome::New)
        .take(llm)
        .for_each(|o| *o = Outcome::Llm);
    let res = resolutions(queue, &outcomes, |i| values[i].clone());
    (outcomes, res)
}
