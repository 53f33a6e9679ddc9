use super::{ExtractionSchema, FeatureKind, FeatureSpec};
use crate::record::ExtractionRecord;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    UnknownFeature,
    WrongType,
    OutOfEnum,
    OutOfRange,
    NullNotAllowed,
    /// A feature requested from the model is missing from its answer.
    Missing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub feature: String,
    pub kind: ViolationKind,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {:?}: {}", self.feature, self.kind, self.detail)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn len(&self) -> usize {
        self.violations.len()
    }

    pub fn for_feature<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a Violation> {
        self.violations.iter().filter(move |v| v.feature == name)
    }
}

/// Checks every value of `record` against its feature spec, reporting all
/// failures.
pub fn validate_record(record: &ExtractionRecord, schema: &ExtractionSchema) -> ValidationReport {
    validate_values(record.values.iter(), schema)
}

pub(crate) fn validate_values<'a>(
    values: impl IntoIterator<Item = (&'a String, &'a Value)>,
    schema: &ExtractionSchema,
) -> ValidationReport {
    let mut violations = Vec::new();
    for (name, value) in values {
        match schema.feature(name) {
            Some(spec) => check_value(spec, value, &mut violations),
            None => violations.push(Violation {
                feature: name.clone(),
                kind: ViolationKind::UnknownFeature,
                detail: "feature is not defined in the schema".into(),
            }),
        }
    }
    ValidationReport { violations }
}

pub(crate) fn check_value(spec: &FeatureSpec, value: &Value, out: &mut Vec<Violation>) {
    let violation = |kind, detail: String| Violation {
        feature: spec.name.clone(),
        kind,
        detail,
    };
    if value.is_null() {
        if !spec.nullable {
            out.push(violation(ViolationKind::NullNotAllowed, "null is not permitted".into()));
        }
        return;
    }
    match spec.kind {
        FeatureKind::Categorical => {
            if !spec.has_code(value) {
                let codes: Vec<String> = spec.allowed_codes.iter().map(|c| c.code.to_string()).collect();
                out.push(violation(
                    ViolationKind::OutOfEnum,
                    format!("{value} is not one of [{}]", codes.join(", ")),
                ));
                return;
            }
        }
        FeatureKind::Integer => {
            let integral = value.as_f64().is_some_and(|x| x.fract() == 0.0 && x.is_finite());
            if !integral {
                out.push(violation(
                    ViolationKind::WrongType,
                    format!("expected an integer, got {value}"),
                ));
                return;
            }
        }
        FeatureKind::Decimal => {
            if !value.is_number() {
                out.push(violation(
                    ViolationKind::WrongType,
                    format!("expected a number, got {value}"),
                ));
                return;
            }
        }
        FeatureKind::FreeText => {
            if !value.is_string() {
                out.push(violation(
                    ViolationKind::WrongType,
                    format!("expected a string, got {value}"),
                ));
                return;
            }
        }
        FeatureKind::BooleanCoded => {
            if !value.is_boolean() {
                out.push(violation(
                    ViolationKind::WrongType,
                    format!("expected a boolean, got {value}"),
                ));
                return;
            }
        }
    }
    if let (Some(range), Some(x)) = (spec.range, value.as_f64()) {
        if !range.contains(x) {
            let lo = range.min.map_or("-inf".to_string(), |m| m.to_string());
            let hi = range.max.map_or("inf".to_string(), |m| m.to_string());
            out.push(violation(
                ViolationKind::OutOfRange,
                format!("{x} is outside [{lo}, {hi}]"),
            ));
        }
    }
}
