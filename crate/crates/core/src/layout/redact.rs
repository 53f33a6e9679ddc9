use super::LayoutError;
use regex::Regex;
use serde::{Deserialize, Serialize};
use std::sync::LazyLock;

pub const POSTCODE_CATEGORY: &str = "POSTCODE";

/// A character-offset range of a document to be replaced by `[CATEGORY]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RedactionSpan {
    pub start: usize,
    pub end: usize,
    pub category: String,
}

impl RedactionSpan {
    pub fn new(start: usize, end: usize, category: impl Into<String>) -> Self {
        Self {
            start,
            end,
            category: category.into(),
        }
    }

    pub fn token(&self) -> String {
        format!("[{}]", self.category)
    }
}

// Outward code (A9, A99, A9A, AA9, AA99, AA9A), optional space, inward code
// (9AA). The surrounding classes keep matches to standalone tokens.
static POSTCODE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?:^|[^\p{L}\p{N}])([A-Z]{1,2}[0-9][A-Z0-9]? ?[0-9][A-Z]{2})(?:$|[^\p{L}\p{N}])")
        .expect("postcode pattern")
});

/// Replaces every standalone UK postcode with `[POSTCODE]`. Span offsets are
/// character offsets into the original text.
pub fn redact_postcodes(text: &str) -> (String, Vec<RedactionSpan>) {
    let mut byte_ranges = Vec::new();
    let mut pos = 0;
    while pos <= text.len() {
        let Some(caps) = POSTCODE.captures_at(text, pos) else {
            break;
        };
        let m = caps.get(1).expect("group 1 always participates");
        byte_ranges.push((m.start(), m.end()));
        // Resume at the end of the postcode itself so a single separator
        // character can bound two neighbouring matches.
        pos = m.end();
    }
    if byte_ranges.is_empty() {
        return (text.to_string(), Vec::new());
    }

    let mut out = String::with_capacity(text.len());
    let mut spans = Vec::with_capacity(byte_ranges.len());
    let mut last = 0;
    let mut chars_before = 0;
    for (start, end) in byte_ranges {
        let head = &text[last..start];
        out.push_str(head);
        chars_before += head.chars().count();
        let len = text[start..end].chars().count();
        spans.push(RedactionSpan::new(chars_before, chars_before + len, POSTCODE_CATEGORY));
        out.push('[');
        out.push_str(POSTCODE_CATEGORY);
        out.push(']');
        chars_before += len;
        last = end;
    }
    out.push_str(&text[last..]);
    (out, spans)
}

/// Replaces each span with `[CATEGORY]`. Spans may be given in any order but
/// must not overlap.
pub fn apply_spans(text: &str, spans: &[RedactionSpan]) -> Result<String, LayoutError> {
    let char_len = text.chars().count();
    let mut sorted: Vec<&RedactionSpan> = spans.iter().collect();
    sorted.sort_by_key(|s| (s.start, s.end));
    for s in &sorted {
        if s.start >= s.end || s.end > char_len {
            return Err(LayoutError::SpanOutOfBounds {
                start: s.start,
                end: s.end,
                len: char_len,
            });
        }
    }
    for pair in sorted.windows(2) {
        if pair[1].start < pair[0].end {
            return Err(LayoutError::OverlappingSpans {
                first: (pair[0].start, pair[0].end),
                second: (pair[1].start, pair[1].end),
            });
        }
    }

    // byte offset of every char boundary, including the end
    let boundaries: Vec<usize> = text
        .char_indices()
        .map(|(i, _)| i)
        .chain(std::iter::once(text.len()))
        .collect();
    let mut out = text.to_string();
    for s in sorted.iter().rev() {
        out.replace_range(boundaries[s.start]..boundaries[s.end], &s.token());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn postcode_in_sentence() {
        let (out, spans) = redact_postcodes("Lives at SW1A 1AA today");
        assert_eq!(out, "Lives at [POSTCODE] today");
        assert_eq!(spans, [RedactionSpan::new(9, 17, "POSTCODE")]);
    }

    #[test]
    fn clinical_text_untouched() {
        let (out, spans) = redact_postcodes("Tumor 10 mm, grade 2");
        assert_eq!(out, "Tumor 10 mm, grade 2");
        assert!(spans.is_empty());
    }

    #[test]
    fn two_postcodes() {
        let (out, spans) = redact_postcodes("M1 1AE and EC1A 1BB");
        assert_eq!(out, "[POSTCODE] and [POSTCODE]");
        assert_eq!(spans.len(), 2);
        assert_eq!((spans[1].start, spans[1].end), (11, 19));
    }

    #[test]
    fn adjacent_postcodes_share_a_separator() {
        let (out, _) = redact_postcodes("M1 1AE,EC1A 1BB");
        assert_eq!(out, "[POSTCODE],[POSTCODE]");
    }

    #[test]
    fn embedded_codes_are_not_postcodes() {
        for s in ["XSW1A 1AA", "SW1A 1AAB", "9M1 1AE", "éM1 1AE"] {
            assert_eq!(redact_postcodes(s).0, s, "{s}");
        }
    }

    #[test]
    fn offsets_are_in_characters() {
        let (_, spans) = redact_postcodes("Née à M1 1AE");
        assert_eq!((spans[0].start, spans[0].end), (6, 12));
    }

    #[test]
    fn span_application() {
        assert_eq!(
            apply_spans("John saw Mary", &[RedactionSpan::new(0, 4, "NAME")]).unwrap(),
            "[NAME] saw Mary"
        );
        assert_eq!(apply_spans("abc", &[]).unwrap(), "abc");
        assert_eq!(
            apply_spans(
                "John saw Mary",
                &[RedactionSpan::new(9, 13, "NAME"), RedactionSpan::new(0, 4, "NAME")]
            )
            .unwrap(),
            "[NAME] saw [NAME]"
        );
    }

    #[test]
    fn span_errors() {
        assert!(matches!(
            apply_spans(
                "abcdef",
                &[RedactionSpan::new(0, 2, "X"), RedactionSpan::new(1, 3, "Y")]
            ),
            Err(LayoutError::OverlappingSpans { .. })
        ));
        assert!(matches!(
            apply_spans("abc", &[RedactionSpan::new(2, 4, "X")]),
            Err(LayoutError::SpanOutOfBounds { .. })
        ));
        assert!(matches!(
            apply_spans("abc", &[RedactionSpan::new(2, 2, "X")]),
            Err(LayoutError::SpanOutOfBounds { .. })
        ));
    }
}
