//! Validates JSON instances against raw JSON Schema documents, covering the
//! keywords a data dictionary uses: `type`, `enum`, `const`, `oneOf`,
//! `anyOf`, `minimum`, `maximum`, `exclusiveMinimum`, `exclusiveMaximum`,
//! `properties`, `required` and `additionalProperties`. Works on the schema
//! text directly, independently of the crate's schema model.

use serde_json::Value;

fn same(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => x.as_f64() == y.as_f64(),
        (Value::Array(x), Value::Array(y)) => x.len() == y.len() && x.iter().zip(y).all(|(p, q)| same(p, q)),
        (Value::Object(x), Value::Object(y)) => {
            x.len() == y.len() && x.iter().all(|(k, v)| y.get(k).is_some_and(|w| same(v, w)))
        }
        _ => a == b,
    }
}

fn has_type(v: &Value, t: &str) -> bool {
    match t {
        "null" => v.is_null(),
        "boolean" => v.is_boolean(),
        "string" => v.is_string(),
        "number" => v.is_number(),
        "integer" => v.as_f64().is_some_and(|x| x.fract() == 0.0),
        "array" => v.is_array(),
        "object" => v.is_object(),
        _ => false,
    }
}

/// Every violation found, as `path: message`.
pub fn errors(schema: &Value, instance: &Value, path: &str) -> Vec<String> {
    let mut out = Vec::new();
    let Some(s) = schema.as_object() else {
        if schema == &Value::Bool(false) {
            out.push(format!("{path}: schema is false"));
        }
        return out;
    };
    if let Some(t) = s.get("type") {
        let ok = match t {
            Value::String(t) => has_type(instance, t),
            Value::Array(ts) => ts.iter().filter_map(Value::as_str).any(|t| has_type(instance, t)),
            _ => true,
        };
        if !ok {
            out.push(format!("{path}: {instance} is not of type {t}"));
        }
    }
    if let Some(Value::Array(options)) = s.get("enum") {
        if !options.iter().any(|o| same(o, instance)) {
            out.push(format!("{path}: {instance} not in enum"));
        }
    }
    if let Some(c) = s.get("const") {
        if !same(c, instance) {
            out.push(format!("{path}: {instance} != const {c}"));
        }
    }
    if let Some(Value::Array(subs)) = s.get("oneOf") {
        let passing = subs.iter().filter(|sub| errors(sub, instance, path).is_empty()).count();
        if passing != 1 {
            out.push(format!("{path}: {instance} matches {passing} oneOf branches"));
        }
    }
    if let Some(Value::Array(subs)) = s.get("anyOf") {
        if !subs.iter().any(|sub| errors(sub, instance, path).is_empty()) {
            out.push(format!("{path}: {instance} matches no anyOf branch"));
        }
    }
    if let Some(x) = instance.as_f64() {
        let bound = |k: &str| s.get(k).and_then(Value::as_f64);
        if bound("minimum").is_some_and(|m| x < m)
            || bound("maximum").is_some_and(|m| x > m)
            || bound("exclusiveMinimum").is_some_and(|m| x <= m)
            || bound("exclusiveMaximum").is_some_and(|m| x >= m)
        {
            out.push(format!("{path}: {x} out of range"));
        }
    }
    if let Some(obj) = instance.as_object() {
        let props = s.get("properties").and_then(Value::as_object);
        if let Some(props) = props {
            for (k, sub) in props {
                if let Some(v) = obj.get(k) {
                    out.extend(errors(sub, v, &format!("{path}/{k}")));
                }
            }
        }
        if let Some(Value::Array(req)) = s.get("required") {
            for k in req.iter().filter_map(Value::as_str) {
                if !obj.contains_key(k) {
                    out.push(format!("{path}: missing required {k}"));
                }
            }
        }
        if let Some(extra) = s.get("additionalProperties") {
            for (k, v) in obj {
                if !props.is_some_and(|p| p.contains_key(k)) {
                    out.extend(errors(extra, v, &format!("{path}/{k}")));
                }
            }
        }
    }
    out
}

/// The schema document with `additionalProperties: false` at the top level,
/// so unknown keys in an output are caught.
pub fn closed(schema: &Value) -> Value {
    let mut s = schema.clone();
    s.as_object_mut()
        .unwrap()
        .insert("additionalProperties".into(), Value::Bool(false));
    s
}
