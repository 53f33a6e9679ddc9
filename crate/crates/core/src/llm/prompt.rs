use super::wire::ChatMessage;
use crate::schema::{ExtractionSchema, FeatureSpec, Violation};

/// Marks the start of the schema fragment inside the user message.
pub const SCHEMA_MARKER: &str = "=== SCHEMA ===\n";
/// Separates the schema fragment from the verbatim report text.
pub const REPORT_MARKER: &str = "\n=== REPORT ===\n";

/// System message carries the task instructions; the user message carries the
/// batch's schema fragment followed by the report verbatim.
pub fn build_prompt(instructions: &str, batch: &[&FeatureSpec], report_text: &str) -> Vec<ChatMessage> {
    let fragment = ExtractionSchema::sub_schema(batch);
    let fragment = serde_json::to_string_pretty(&fragment).expect("schema fragment serializes");
    let user = format!(
        "Return one JSON object whose keys are exactly the properties of the schema below, \
         filled in from the report.\n{SCHEMA_MARKER}{fragment}{REPORT_MARKER}{report_text}"
    );
    vec![ChatMessage::system(instructions), ChatMessage::user(user)]
}

/// Follow-up sent after an answer failed validation.
pub fn corrective_message(batch: &[&FeatureSpec], problems: &[String]) -> ChatMessage {
    let names: Vec<&str> = batch.iter().map(|f| f.name.as_str()).collect();
    let mut text = String::from("Your previous answer did not conform to the schema:\n");
    for p in problems {
        text.push_str("- ");
        text.push_str(p);
        text.push('\n');
    }
    text.push_str("Reply with a corrected JSON object containing exactly these keys: ");
    text.push_str(&names.join(", "));
    ChatMessage::user(text)
}

pub(crate) fn describe(violations: &[Violation]) -> Vec<String> {
    violations.iter().map(ToString::to_string).collect()
}

/// Splits a user message built by [`build_prompt`] into its schema fragment
/// and report text.
pub fn split_user_message(content: &str) -> Option<(&str, &str)> {
    let (_, rest) = content.split_once(SCHEMA_MARKER)?;
    rest.split_once(REPORT_MARKER)
}
