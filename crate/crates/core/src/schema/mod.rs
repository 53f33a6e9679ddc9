//! The data dictionary: a JSON Schema document describing every feature to
//! extract, plus the plaintext task instructions and the feature batching.
//!
//! Only a draft-agnostic subset of JSON Schema is interpreted (`type`, `enum`,
//! `oneOf` of `const`/`title` pairs, `minimum`, `maximum`, `description`,
//! `properties`). Three extension keywords carry dictionary metadata that JSON
//! Schema has no vocabulary for:
//!
//! * `unit` - measurement unit of a numeric feature
//! * `noMentionCode` - the code meaning "not mentioned in the report"
//! * `negativeCode` - the code meaning a negative finding
//!
//! Every other keyword is preserved verbatim and ignored for validation.

mod strict;
pub(crate) mod validate;

pub use validate::{validate_record, ValidationReport, Violation, ViolationKind};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use std::collections::BTreeMap;

/// Errors raised while building an [`ExtractionSchema`].
#[derive(Debug, thiserror::Error)]
pub enum SchemaError {
    #[error("malformed JSON at byte {offset}: {message}")]
    Malformed { offset: usize, message: String },
    #[error("duplicate property name `{0}`")]
    DuplicateProperty(String),
    #[error("schema document has no `properties` object")]
    MissingProperties,
    #[error("categorical property `{0}` has an empty enumeration")]
    EmptyEnumeration(String),
    #[error("property `{feature}`: {reason}")]
    InvalidProperty { feature: String, reason: String },
    #[error("batching refers to `{0}`, which is not a property of the schema")]
    UnknownBatchedFeature(String),
    #[error("feature `{feature}` has batch id {batch_id}; batch ids start at 1")]
    InvalidBatchId { feature: String, batch_id: u32 },
    #[error("batch {0} has no features")]
    EmptyBatch(u32),
    #[error("malformed batching sidecar: {0}")]
    Batching(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureKind {
    Categorical,
    Integer,
    Decimal,
    FreeText,
    BooleanCoded,
}

/// One allowed code of a categorical feature with its human-readable label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeLabel {
    pub code: Value,
    pub label: String,
}

/// Inclusive numeric bounds. Either side may be open.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NumericRange {
    pub min: Option<f64>,
    pub max: Option<f64>,
}

impl NumericRange {
    pub fn contains(&self, x: f64) -> bool {
        self.min.is_none_or(|m| x >= m) && self.max.is_none_or(|m| x <= m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub kind: FeatureKind,
    pub allowed_codes: Vec<CodeLabel>,
    pub unit: Option<String>,
    pub range: Option<NumericRange>,
    pub description: String,
    pub batch_id: u32,
    pub nullable: bool,
    pub no_mention_code: Option<Value>,
    pub negative_code: Option<Value>,
    /// Keywords outside the interpreted subset, in document order.
    pub extra: Map<String, Value>,
}

impl FeatureSpec {
    /// Whether `value` is one of the allowed codes. Numbers compare by value.
    pub fn has_code(&self, value: &Value) -> bool {
        self.allowed_codes.iter().any(|c| json_value_eq(&c.code, value))
    }

    /// The JSON Schema property object describing this feature.
    pub fn to_property(&self) -> Value {
        let mut prop = Map::new();
        let base_type = match self.kind {
            FeatureKind::Categorical => code_type(&self.allowed_codes),
            FeatureKind::Integer => Some("integer"),
            FeatureKind::Decimal => Some("number"),
            FeatureKind::FreeText => Some("string"),
            FeatureKind::BooleanCoded => Some("boolean"),
        };
        if let Some(t) = base_type {
            prop.insert(
                "type".into(),
                if self.nullable {
                    serde_json::json!([t, "null"])
                } else {
                    Value::from(t)
                },
            );
        }
        if !self.description.is_empty() {
            prop.insert("description".into(), Value::from(self.description.clone()));
        }
        if self.kind == FeatureKind::Categorical {
            let labelled = self
                .allowed_codes
                .iter()
                .any(|c| c.code.as_str() != Some(c.label.as_str()) && !c.label.is_empty());
            if labelled {
                let mut options: Vec<Value> = self
                    .allowed_codes
                    .iter()
                    .map(|c| serde_json::json!({"const": c.code, "title": c.label}))
                    .collect();
                if self.nullable {
                    options.push(serde_json::json!({"const": null, "title": "null"}));
                }
                prop.insert("oneOf".into(), Value::Array(options));
            } else {
                let mut codes: Vec<Value> = self.allowed_codes.iter().map(|c| c.code.clone()).collect();
                if self.nullable {
                    codes.push(Value::Null);
                }
                prop.insert("enum".into(), Value::Array(codes));
            }
        }
        if let Some(range) = self.range {
            if let Some(min) = range.min {
                prop.insert("minimum".into(), number(min));
            }
            if let Some(max) = range.max {
                prop.insert("maximum".into(), number(max));
            }
        }
        if let Some(unit) = &self.unit {
            prop.insert("unit".into(), Value::from(unit.clone()));
        }
        if let Some(code) = &self.no_mention_code {
            prop.insert("noMentionCode".into(), code.clone());
        }
        if let Some(code) = &self.negative_code {
            prop.insert("negativeCode".into(), code.clone());
        }
        for (k, v) in &self.extra {
            prop.insert(k.clone(), v.clone());
        }
        Value::Object(prop)
    }
}

fn code_type(codes: &[CodeLabel]) -> Option<&'static str> {
    let first = codes.first()?;
    let t = json_type_name(&first.code)?;
    codes.iter().all(|c| json_type_name(&c.code) == Some(t)).then_some(t)
}

fn json_type_name(v: &Value) -> Option<&'static str> {
    match v {
        Value::String(_) => Some("string"),
        Value::Number(n) if n.is_i64() || n.is_u64() => Some("integer"),
        Value::Number(_) => Some("number"),
        Value::Bool(_) => Some("boolean"),
        _ => None,
    }
}

fn has_json_type(v: &Value, t: &str) -> bool {
    match t {
        "string" => v.is_string(),
        "boolean" => v.is_boolean(),
        "number" => v.is_number(),
        "integer" => v.as_f64().is_some_and(|x| x.fract() == 0.0),
        _ => false,
    }
}

fn number(x: f64) -> Value {
    if x.fract() == 0.0 && x.abs() < 9.0e15 {
        Value::from(x as i64)
    } else {
        serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
    }
}

/// JSON equality where numbers compare by numeric value (`1 == 1.0`).
pub fn json_value_eq(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => match (x.as_f64(), y.as_f64()) {
            (Some(x), Some(y)) => x == y,
            _ => x == y,
        },
        _ => a == b,
    }
}

/// The parsed data dictionary. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionSchema {
    pub features: Vec<FeatureSpec>,
    pub task_instructions: String,
    pub batch_count: u32,
    /// Top-level keywords of the schema document other than `properties`.
    pub document_extra: Map<String, Value>,
}

/// One group of features extracted with a single request.
#[derive(Debug, Clone)]
pub struct Batch<'a> {
    pub id: u32,
    pub features: Vec<&'a FeatureSpec>,
}

impl<'a> Batch<'a> {
    pub fn names(&self) -> impl Iterator<Item = &'a str> + '_ {
        self.features.iter().map(|f| f.name.as_str())
    }
}

impl ExtractionSchema {
    pub fn feature(&self, name: &str) -> Option<&FeatureSpec> {
        self.features.iter().find(|f| f.name == name)
    }

    pub fn feature_names(&self) -> impl Iterator<Item = &str> {
        self.features.iter().map(|f| f.name.as_str())
    }

    /// Feature name to batch id, suitable for writing back out as a sidecar.
    pub fn batching(&self) -> IndexMap<String, u32> {
        self.features.iter().map(|f| (f.name.clone(), f.batch_id)).collect()
    }

    /// Serializes the dictionary back into a JSON Schema document.
    pub fn to_json_schema(&self) -> Value {
        let mut doc = Map::new();
        let mut properties = Map::new();
        for f in &self.features {
            properties.insert(f.name.clone(), f.to_property());
        }
        let mut placed = false;
        for (k, v) in &self.document_extra {
            doc.insert(k.clone(), v.clone());
            if k == "type" && !placed {
                doc.insert("properties".into(), Value::Object(properties.clone()));
                placed = true;
            }
        }
        if !placed {
            doc.insert("properties".into(), Value::Object(properties));
        }
        Value::Object(doc)
    }

    /// A JSON Schema fragment holding only the given features.
    pub fn sub_schema(features: &[&FeatureSpec]) -> Value {
        let properties: Map<String, Value> = features.iter().map(|f| (f.name.clone(), f.to_property())).collect();
        serde_json::json!({"type": "object", "properties": properties})
    }
}

/// Parses a batching sidecar: a JSON object mapping feature name to batch id.
pub fn parse_batching(text: &str) -> Result<IndexMap<String, u32>, SchemaError> {
    serde_json::from_str(text).map_err(|e| SchemaError::Batching(e.to_string()))
}

/// Builds an [`ExtractionSchema`] from a schema document, the task
/// instructions, and the feature batching. Features absent from `batching`
/// go to batch 1.
pub fn parse_schema(
    schema_document: &str,
    instructions: &str,
    batching: &IndexMap<String, u32>,
) -> Result<ExtractionSchema, SchemaError> {
    let doc = strict::parse(schema_document).map_err(|e| match e {
        strict::StrictError::Malformed { offset, message } => SchemaError::Malformed { offset, message },
        strict::StrictError::Duplicate(key) => SchemaError::DuplicateProperty(key),
    })?;
    let Value::Object(mut doc) = doc else {
        return Err(SchemaError::MissingProperties);
    };
    let Some(Value::Object(properties)) = doc.shift_remove("properties") else {
        return Err(SchemaError::MissingProperties);
    };

    for name in batching.keys() {
        if !properties.contains_key(name) {
            return Err(SchemaError::UnknownBatchedFeature(name.clone()));
        }
    }

    let mut features = Vec::with_capacity(properties.len());
    for (name, prop) in properties {
        let batch_id = batching.get(&name).copied().unwrap_or(1);
        if batch_id == 0 {
            return Err(SchemaError::InvalidBatchId {
                feature: name,
                batch_id,
            });
        }
        features.push(parse_property(name, prop, batch_id)?);
    }

    let batch_count = features.iter().map(|f| f.batch_id).max().unwrap_or(0);
    let mut used = BTreeMap::new();
    for f in &features {
        *used.entry(f.batch_id).or_insert(0usize) += 1;
    }
    if let Some(missing) = (1..=batch_count).find(|id| !used.contains_key(id)) {
        return Err(SchemaError::EmptyBatch(missing));
    }

    Ok(ExtractionSchema {
        features,
        task_instructions: instructions.to_string(),
        batch_count,
        document_extra: doc,
    })
}

fn parse_property(name: String, prop: Value, batch_id: u32) -> Result<FeatureSpec, SchemaError> {
    let invalid = |reason: &str| SchemaError::InvalidProperty {
        feature: name.clone(),
        reason: reason.to_string(),
    };
    let Value::Object(mut prop) = prop else {
        return Err(invalid("property definition must be an object"));
    };

    let mut type_nullable = false;
    let mut codes_nullable = false;
    let mut base_type: Option<String> = None;
    match prop.shift_remove("type") {
        None => {}
        Some(Value::String(t)) => base_type = Some(t),
        Some(Value::Array(types)) => {
            for t in types {
                match t.as_str() {
                    Some("null") => type_nullable = true,
                    Some(t) if base_type.is_none() => base_type = Some(t.to_string()),
                    Some(_) => return Err(invalid("only one non-null type is supported")),
                    None => return Err(invalid("`type` entries must be strings")),
                }
            }
        }
        Some(_) => return Err(invalid("`type` must be a string or an array of strings")),
    }

    let mut codes: Option<Vec<CodeLabel>> = None;
    if let Some(enumeration) = prop.shift_remove("enum") {
        let Value::Array(items) = enumeration else {
            return Err(invalid("`enum` must be an array"));
        };
        let mut out = Vec::new();
        for item in items {
            if item.is_null() {
                codes_nullable = true;
                continue;
            }
            let label = match &item {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            out.push(CodeLabel { code: item, label });
        }
        codes = Some(out);
    }
    let one_of_is_codes = matches!(prop.get("oneOf"), Some(Value::Array(opts))
        if !opts.is_empty() && opts.iter().all(|o| o.get("const").is_some()));
    if one_of_is_codes {
        let Some(Value::Array(options)) = prop.shift_remove("oneOf") else {
            unreachable!()
        };
        let mut out = codes.take().unwrap_or_default();
        for opt in options {
            let code = opt.get("const").cloned().unwrap_or(Value::Null);
            if code.is_null() {
                codes_nullable = true;
                continue;
            }
            let label = opt
                .get("title")
                .and_then(Value::as_str)
                .map(str::to_string)
                .unwrap_or_else(|| match &code {
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                });
            out.push(CodeLabel { code, label });
        }
        codes = Some(out);
    }

    let kind = match (&codes, base_type.as_deref()) {
        (Some(_), _) => FeatureKind::Categorical,
        (None, Some("integer")) => FeatureKind::Integer,
        (None, Some("number")) => FeatureKind::Decimal,
        (None, Some("string")) => FeatureKind::FreeText,
        (None, Some("boolean")) => FeatureKind::BooleanCoded,
        (None, Some(other)) => return Err(invalid(&format!("unsupported type `{other}`"))),
        (None, None) => return Err(invalid("property needs a `type` or an `enum`")),
    };
    let allowed_codes = codes.unwrap_or_default();
    if kind == FeatureKind::Categorical && allowed_codes.is_empty() {
        return Err(SchemaError::EmptyEnumeration(name));
    }
    if let Some(t) = base_type.as_deref().filter(|_| kind == FeatureKind::Categorical) {
        if let Some(c) = allowed_codes.iter().find(|c| !has_json_type(&c.code, t)) {
            return Err(invalid(&format!("code {} is not of declared type `{t}`", c.code)));
        }
    }
    // An enumeration restricts null like any other value.
    let nullable = if kind == FeatureKind::Categorical {
        codes_nullable
    } else {
        type_nullable
    };

    let bound = |prop: &mut Map<String, Value>, key: &str| -> Result<Option<f64>, SchemaError> {
        match prop.shift_remove(key) {
            None => Ok(None),
            Some(v) => v
                .as_f64()
                .map(Some)
                .ok_or_else(|| invalid(&format!("`{key}` must be a number"))),
        }
    };
    let min = bound(&mut prop, "minimum")?;
    let max = bound(&mut prop, "maximum")?;
    let range = (min.is_some() || max.is_some()).then_some(NumericRange { min, max });
    if let (Some(lo), Some(hi)) = (min, max) {
        if lo > hi {
            return Err(invalid("`minimum` exceeds `maximum`"));
        }
    }

    let description = match prop.shift_remove("description") {
        None => String::new(),
        Some(Value::String(s)) => s,
        Some(_) => return Err(invalid("`description` must be a string")),
    };
    let unit = match prop.shift_remove("unit") {
        None => None,
        Some(Value::String(s)) => Some(s),
        Some(_) => return Err(invalid("`unit` must be a string")),
    };
    let no_mention_code = prop.shift_remove("noMentionCode");
    let negative_code = prop.shift_remove("negativeCode");

    Ok(FeatureSpec {
        name,
        kind,
        allowed_codes,
        unit,
        range,
        description,
        batch_id,
        nullable,
        no_mention_code,
        negative_code,
        extra: prop,
    })
}

/// Splits the schema's features into batches, ascending by batch id, each
/// batch keeping document order.
pub fn batch_features(schema: &ExtractionSchema) -> Vec<Batch<'_>> {
    let mut groups: BTreeMap<u32, Vec<&FeatureSpec>> = BTreeMap::new();
    for f in &schema.features {
        groups.entry(f.batch_id).or_default().push(f);
    }
    groups
        .into_iter()
        .map(|(id, features)| Batch { id, features })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn no_batching() -> IndexMap<String, u32> {
        IndexMap::new()
    }

    #[test]
    fn single_enum_property() {
        let doc = r#"{"type":"object","properties":{"Side":{"enum":["left","right","bilateral"]}}}"#;
        let s = parse_schema(doc, "Extract.", &no_batching()).unwrap();
        assert_eq!(s.features.len(), 1);
        assert_eq!(s.features[0].kind, FeatureKind::Categorical);
        assert_eq!(s.features[0].allowed_codes.len(), 3);
        assert_eq!(s.batch_count, 1);
        assert_eq!(s.task_instructions, "Extract.");
    }

    #[test]
    fn range_maps_directly() {
        let doc = r#"{"properties":{"Size":{"type":"integer","minimum":0,"maximum":999}}}"#;
        let s = parse_schema(doc, "", &no_batching()).unwrap();
        assert_eq!(
            s.features[0].range,
            Some(NumericRange {
                min: Some(0.0),
                max: Some(999.0)
            })
        );
    }

    #[test]
    fn malformed_json_reports_offset() {
        let err = parse_schema("{\"properties\": {,}}", "", &no_batching()).unwrap_err();
        match err {
            SchemaError::Malformed { offset, .. } => assert_eq!(offset, 16),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_property_is_schema_error() {
        let doc = r#"{"properties":{"A":{"type":"string"},"A":{"type":"integer"}}}"#;
        assert!(matches!(
            parse_schema(doc, "", &no_batching()),
            Err(SchemaError::DuplicateProperty(name)) if name == "A"
        ));
    }

    #[test]
    fn empty_enum_is_schema_error() {
        let doc = r#"{"properties":{"Grade":{"enum":[]}}}"#;
        assert!(matches!(
            parse_schema(doc, "", &no_batching()),
            Err(SchemaError::EmptyEnumeration(_))
        ));
        let only_null = r#"{"properties":{"Grade":{"enum":[null]}}}"#;
        assert!(parse_schema(only_null, "", &no_batching()).is_err());
    }

    #[test]
    fn codes_must_match_declared_type() {
        let doc = r#"{"properties":{"Grade":{"type":"string","oneOf":[{"const":1},{"const":2}]}}}"#;
        assert!(matches!(
            parse_schema(doc, "", &no_batching()),
            Err(SchemaError::InvalidProperty { .. })
        ));
        let ok = r#"{"properties":{"Grade":{"type":"integer","oneOf":[{"const":1},{"const":2}]}}}"#;
        assert!(parse_schema(ok, "", &no_batching()).is_ok());
    }

    #[test]
    fn enumeration_without_null_rejects_null() {
        let doc = r#"{"properties":{"Side":{"type":["string","null"],"enum":["left","right"]},
                                    "Flag":{"enum":["yes",null]}}}"#;
        let s = parse_schema(doc, "", &no_batching()).unwrap();
        assert!(!s.feature("Side").unwrap().nullable);
        assert!(s.feature("Flag").unwrap().nullable);
    }

    #[test]
    fn inverted_range_rejected() {
        let doc = r#"{"properties":{"X":{"type":"number","minimum":5,"maximum":1}}}"#;
        assert!(matches!(
            parse_schema(doc, "", &no_batching()),
            Err(SchemaError::InvalidProperty { .. })
        ));
    }

    #[test]
    fn batching_must_name_known_features_and_fill_every_batch() {
        let doc = r#"{"properties":{"A":{"type":"string"},"B":{"type":"string"}}}"#;
        let unknown: IndexMap<String, u32> = [("C".to_string(), 1)].into_iter().collect();
        assert!(matches!(
            parse_schema(doc, "", &unknown),
            Err(SchemaError::UnknownBatchedFeature(_))
        ));
        let gap: IndexMap<String, u32> = [("A".to_string(), 3)].into_iter().collect();
        assert!(matches!(parse_schema(doc, "", &gap), Err(SchemaError::EmptyBatch(2))));
        let zero: IndexMap<String, u32> = [("A".to_string(), 0)].into_iter().collect();
        assert!(matches!(
            parse_schema(doc, "", &zero),
            Err(SchemaError::InvalidBatchId { .. })
        ));
    }

    #[test]
    fn nullable_and_labels_and_extensions() {
        let doc = json!({
            "properties": {
                "Grade": {
                    "oneOf": [
                        {"const": 1, "title": "Grade 1"},
                        {"const": 2, "title": "Grade 2"},
                        {"const": null}
                    ],
                    "noMentionCode": 9,
                    "x-source": "dictionary v3",
                    "title": "Invasive grade"
                },
                "Weight": {"type": ["number", "null"], "unit": "g", "minimum": 0}
            }
        })
        .to_string();
        let s = parse_schema(&doc, "", &no_batching()).unwrap();
        let grade = &s.features[0];
        assert!(grade.nullable);
        assert_eq!(grade.allowed_codes[1].label, "Grade 2");
        assert_eq!(grade.no_mention_code, Some(json!(9)));
        assert_eq!(grade.extra.get("x-source"), Some(&json!("dictionary v3")));
        let weight = &s.features[1];
        assert_eq!(weight.kind, FeatureKind::Decimal);
        assert!(weight.nullable);
        assert_eq!(weight.unit.as_deref(), Some("g"));
        assert_eq!(weight.range.unwrap().max, None);
    }

    #[test]
    fn batches_keep_document_order() {
        let doc = r#"{"properties":{"f1":{"type":"string"},"f2":{"type":"string"},"f3":{"type":"string"}}}"#;
        let batching: IndexMap<String, u32> = [("f1", 2), ("f2", 1), ("f3", 2)]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        let s = parse_schema(doc, "", &batching).unwrap();
        let names: Vec<Vec<&str>> = batch_features(&s).iter().map(|b| b.names().collect()).collect();
        assert_eq!(names, vec![vec!["f2"], vec!["f1", "f3"]]);
    }

    #[test]
    fn all_batch_one_is_single_batch() {
        let doc = r#"{"properties":{"a":{"type":"string"},"b":{"type":"integer"}}}"#;
        let s = parse_schema(doc, "", &no_batching()).unwrap();
        let batches = batch_features(&s);
        assert_eq!(batches.len(), 1);
        assert_eq!(batches[0].features.len(), 2);
    }

    #[test]
    fn numeric_codes_compare_by_value() {
        assert!(json_value_eq(&json!(1), &json!(1.0)));
        assert!(!json_value_eq(&json!("1"), &json!(1)));
    }
}
