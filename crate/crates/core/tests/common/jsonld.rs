//! A small JSON-LD 1.1 expansion oracle covering the subset used by output
//! documents: an inline object context with simple and `@id` term
//! definitions, compact IRIs, `@vocab`, and scalar or array values.
//! Written from the expansion algorithm independently of the crate's own
//! context parser.

use serde_json::{json, Map, Value};

fn is_absolute(iri: &str) -> bool {
    match iri.find(':') {
        Some(i) if i > 0 => {
            let scheme = &iri[..i];
            scheme.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
                && scheme.chars().all(|c| c.is_ascii_alphanumeric() || "+-.".contains(c))
        }
        _ => false,
    }
}

struct ActiveContext<'a> {
    defs: &'a Map<String, Value>,
    vocab: Option<String>,
}

impl ActiveContext<'_> {
    fn definition_id(&self, term: &str) -> Option<Option<&str>> {
        match self.defs.get(term)? {
            Value::String(s) => Some(Some(s.as_str())),
            Value::Object(o) => Some(o.get("@id").and_then(Value::as_str)),
            Value::Null => Some(None),
            _ => None,
        }
    }

    /// IRI expansion with `vocab = true`, as used for property keys.
    fn expand_iri(&self, value: &str, depth: usize) -> Option<String> {
        assert!(depth < 16, "cyclic context");
        if value.starts_with('@') {
            return Some(value.to_string());
        }
        if let Some(def) = self.definition_id(value) {
            return match def {
                Some(id) if id != value => self.expand_iri(id, depth + 1),
                Some(id) => Some(self.expand_compact(id, depth).unwrap_or_else(|| self.with_vocab(id))),
                None if self.defs.get(value).is_some_and(Value::is_object) => Some(self.with_vocab(value)),
                None => None,
            };
        }
        if let Some(iri) = self.expand_compact(value, depth) {
            return Some(iri);
        }
        if is_absolute(value) {
            return Some(value.to_string());
        }
        self.vocab.as_ref().map(|v| format!("{v}{value}"))
    }

    fn expand_compact(&self, value: &str, depth: usize) -> Option<String> {
        let (prefix, suffix) = value.split_once(':')?;
        if suffix.starts_with("//") || prefix == "_" {
            return None;
        }
        self.definition_id(prefix)?;
        let base = self.expand_iri(prefix, depth + 1)?;
        Some(format!("{base}{suffix}"))
    }

    fn with_vocab(&self, term: &str) -> String {
        match &self.vocab {
            Some(v) if !is_absolute(term) => format!("{v}{term}"),
            _ => term.to_string(),
        }
    }
}

fn expand_value(v: &Value) -> Vec<Value> {
    match v {
        Value::Null => Vec::new(),
        Value::Array(items) => items.iter().flat_map(expand_value).collect(),
        Value::Object(_) => panic!("nested node objects are outside the oracle's subset"),
        scalar => vec![json!({ "@value": scalar })],
    }
}

/// Expanded form of `doc`: a one-element array holding the node object, or an
/// empty array if nothing survives expansion.
pub fn expand(doc: &Value) -> Value {
    let obj = doc.as_object().expect("document is an object");
    let empty = Map::new();
    let defs = match obj.get("@context") {
        Some(Value::Object(m)) => m,
        None | Some(Value::Null) => &empty,
        Some(other) => panic!("unsupported context {other}"),
    };
    let ctx = ActiveContext {
        defs,
        vocab: defs.get("@vocab").and_then(Value::as_str).map(str::to_string),
    };
    let mut node = Map::new();
    for (key, value) in obj {
        if key == "@context" {
            continue;
        }
        let Some(iri) = ctx.expand_iri(key, 0) else {
            continue;
        };
        if !is_absolute(&iri) {
            continue;
        }
        let expanded = expand_value(value);
        if expanded.is_empty() {
            continue;
        }
        node.entry(iri)
            .or_insert_with(|| Value::Array(Vec::new()))
            .as_array_mut()
            .unwrap()
            .extend(expanded);
    }
    if node.is_empty() {
        json!([])
    } else {
        json!([Value::Object(node)])
    }
}
