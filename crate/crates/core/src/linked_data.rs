//! JSON-LD output for extraction records.
//!
//! A user-supplied context binds feature names (and optionally coded values)
//! to IRIs. Records are never rewritten: the context is embedded verbatim and
//! a JSON-LD processor does the mapping on expansion.

use crate::record::ExtractionRecord;
use indexmap::IndexMap;
use serde::Serialize;
use serde_json::{Map, Value};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinkedDataError {
    #[error("malformed context document: {0}")]
    Malformed(String),
    #[error("not a JSON-LD context: no top-level @context member")]
    NotAContext,
    #[error("unsupported @context: {0}")]
    Unsupported(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContextMap {
    /// Local term to IRI, with compact IRIs already expanded.
    pub term_bindings: IndexMap<String, String>,
    pub vocab: Option<String>,
    /// The `@context` value exactly as supplied.
    pub raw_context: Value,
    pub warnings: Vec<String>,
}

impl ContextMap {
    pub fn iri(&self, term: &str) -> Option<&str> {
        self.term_bindings.get(term).map(String::as_str)
    }

    /// Whether a JSON-LD processor would map `key` to an IRI.
    pub fn binds(&self, key: &str) -> bool {
        self.term_bindings.contains_key(key) || self.vocab.is_some() || is_absolute_iri(key)
    }
}

fn is_absolute_iri(s: &str) -> bool {
    let Some((scheme, _)) = s.split_once(':') else {
        return false;
    };
    let mut chars = scheme.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'))
}

/// Parses a JSON-LD context document into flat term bindings.
///
/// Both `"Term": "iri"` and `"Term": {"@id": "iri"}` are accepted. Compact IRIs
/// (`prefix:suffix`) are expanded against prefixes defined in the same
/// context. Relative IRIs are kept with a warning.
pub fn parse_context(text: &str) -> Result<ContextMap, LinkedDataError> {
    let doc: Value = serde_json::from_str(text).map_err(|e| LinkedDataError::Malformed(e.to_string()))?;
    let raw = doc
        .as_object()
        .and_then(|o| o.get("@context"))
        .ok_or(LinkedDataError::NotAContext)?
        .clone();

    let mut merged = Map::new();
    match &raw {
        Value::Object(o) => merged.extend(o.clone()),
        Value::Array(items) => {
            for item in items {
                match item {
                    Value::Object(o) => merged.extend(o.clone()),
                    Value::Null => merged.clear(),
                    other => {
                        return Err(LinkedDataError::Unsupported(format!(
                            "array entry {other} (remote contexts are not fetched)"
                        )))
                    }
                }
            }
        }
        Value::Null => {}
        other => {
            return Err(LinkedDataError::Unsupported(format!(
                "{other} (remote contexts are not fetched)"
            )))
        }
    }

    let vocab = merged.get("@vocab").and_then(Value::as_str).map(str::to_string);
    let mut raw_ids: IndexMap<String, String> = IndexMap::new();
    for (term, def) in &merged {
        if term.starts_with('@') {
            continue;
        }
        let id = match def {
            Value::String(s) => s.clone(),
            Value::Object(o) => match o.get("@id") {
                Some(Value::String(s)) => s.clone(),
                Some(Value::Null) => continue,
                Some(other) => {
                    return Err(LinkedDataError::Malformed(format!(
                        "@id of {term} is not a string: {other}"
                    )))
                }
                // A definition without @id maps the term through @vocab, or
                // itself when the term is a compact or absolute IRI.
                None => match &vocab {
                    Some(v) if !term.contains(':') => format!("{v}{term}"),
                    _ => term.clone(),
                },
            },
            Value::Null => continue,
            other => return Err(LinkedDataError::Malformed(format!("definition of {term}: {other}"))),
        };
        raw_ids.insert(term.clone(), id);
    }

    let mut term_bindings = IndexMap::new();
    let mut warnings = Vec::new();
    for (term, id) in &raw_ids {
        let iri = expand_iri(id, &raw_ids, vocab.as_deref());
        if !is_absolute_iri(&iri) {
            warnings.push(format!("term {term:?} maps to relative IRI {iri:?}"));
        }
        term_bindings.insert(term.clone(), iri);
    }

    Ok(ContextMap {
        term_bindings,
        vocab,
        raw_context: raw,
        warnings,
    })
}

fn expand_iri(id: &str, terms: &IndexMap<String, String>, vocab: Option<&str>) -> String {
    if let Some((prefix, suffix)) = id.split_once(':') {
        if !suffix.starts_with("//") {
            if let Some(base) = terms.get(prefix) {
                if base != id {
                    return format!("{base}{suffix}");
                }
            }
        }
        return id.to_string();
    }
    if let Some(iri) = terms.get(id).filter(|iri| iri.as_str() != id) {
        return expand_iri(iri, terms, vocab);
    }
    match vocab {
        Some(v) => format!("{v}{id}"),
        None => id.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkedDataOutput {
    pub document: Value,
    /// Features carried through without an IRI binding.
    pub warnings: Vec<String>,
}

/// Embeds the context and copies the record's values unchanged.
pub fn to_linked_data(record: &ExtractionRecord, context: &ContextMap) -> LinkedDataOutput {
    let mut doc = Map::new();
    doc.insert("@context".to_string(), context.raw_context.clone());
    let mut warnings = Vec::new();
    for (name, value) in &record.values {
        if !context.binds(name) {
            warnings.push(format!("feature {name} has no IRI binding"));
        }
        doc.insert(name.clone(), value.clone());
    }
    LinkedDataOutput {
        document: Value::Object(doc),
        warnings,
    }
}
