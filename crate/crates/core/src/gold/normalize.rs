use crate::schema::FeatureKind;
use serde_json::Value;

/// Canonical form used for every equality test between annotations.
#[derive(Debug, Clone, PartialEq)]
pub enum Normalized {
    Null,
    Bool(bool),
    Number(f64),
    Text(String),
    Composite(String),
}

fn looks_numeric(t: &str) -> bool {
    t.starts_with(|c: char| c.is_ascii_digit() || matches!(c, '-' | '+' | '.'))
}

/// Trims strings, case-folds everything except free text, and reads numeric
/// strings as numbers so that `"05"`, `5` and `5.0` coincide. Blank strings
/// count as null.
pub fn normalize(value: &Value, kind: Option<FeatureKind>) -> Normalized {
    match value {
        Value::Null => Normalized::Null,
        Value::Bool(b) => Normalized::Bool(*b),
        Value::Number(n) => Normalized::Number(n.as_f64().map_or(f64::NAN, |x| x + 0.0)),
        Value::String(s) => {
            let t = s.trim();
            if t.is_empty() {
                return Normalized::Null;
            }
            if looks_numeric(t) {
                if let Ok(x) = t.parse::<f64>() {
                    if x.is_finite() {
                        return Normalized::Number(x + 0.0);
                    }
                }
            }
            if kind == Some(FeatureKind::FreeText) {
                Normalized::Text(t.to_string())
            } else {
                Normalized::Text(t.to_lowercase())
            }
        }
        other => Normalized::Composite(other.to_string()),
    }
}

pub fn values_agree(a: &Value, b: &Value, kind: Option<FeatureKind>) -> bool {
    normalize(a, kind) == normalize(b, kind)
}
