use super::client::ChatClient;
use super::prompt::{build_prompt, corrective_message, describe};
use super::wire::ChatMessage;
use crate::record::{ExtractionRecord, FeatureStatus, TokenUsage};
use crate::schema::{batch_features, validate::check_value, ExtractionSchema, FeatureSpec, Violation, ViolationKind};
use futures::future::join_all;
use indexmap::IndexMap;
use serde_json::{Map, Value};
use tracing::{debug, info, warn};

/// Result of extracting one batch for one report.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchOutcome {
    pub values: IndexMap<String, Value>,
    pub statuses: IndexMap<String, FeatureStatus>,
    pub usage: TokenUsage,
    pub attempts: u32,
    /// Set when no attempt produced a response at all.
    pub error: Option<String>,
}

/// Drives schema-constrained extraction against one endpoint.
#[derive(Clone)]
pub struct Extractor {
    client: ChatClient,
}

impl Extractor {
    pub fn new(client: ChatClient) -> Self {
        Self { client }
    }

    pub fn client(&self) -> &ChatClient {
        &self.client
    }

    /// Extracts one batch, resubmitting with the violation list until the
    /// answer validates or `max_retries` extra attempts are spent.
    ///
    /// Features valid in the last parsed answer are `ok`, the rest
    /// `failed_after_retries`. When every attempt failed at the transport
    /// level the outcome carries `error` and all features are `absent`.
    pub async fn extract_batch(&self, instructions: &str, batch: &[&FeatureSpec], report_text: &str) -> BatchOutcome {
        let max_attempts = self.client.config().max_retries + 1;
        let mut messages = build_prompt(instructions, batch, report_text);
        let mut usage = TokenUsage::default();
        let mut attempts = 0;
        let mut last_answer: Option<Map<String, Value>> = None;
        let mut responded = false;
        let mut last_error = None;

        while attempts < max_attempts {
            attempts += 1;
            let outcome = match self.client.chat(&messages).await {
                Ok(o) => o,
                Err(e) => {
                    warn!(attempt = attempts, error = %e, "chat request failed");
                    let retry = e.is_retryable();
                    last_error = Some(e);
                    if retry {
                        continue;
                    }
                    break;
                }
            };
            responded = true;
            usage += outcome.usage;
            let problems = match serde_json::from_str::<Value>(&outcome.content) {
                Ok(Value::Object(answer)) => {
                    let violations = check_answer(batch, &answer);
                    if violations.is_empty() {
                        debug!(attempt = attempts, "batch validated");
                        return finish(batch, Some(&answer), usage, attempts, None);
                    }
                    info!(
                        attempt = attempts,
                        violations = violations.len(),
                        "answer failed validation"
                    );
                    let problems = describe(&violations);
                    last_answer = Some(answer);
                    problems
                }
                Ok(_) => {
                    info!(attempt = attempts, "answer is not a JSON object");
                    vec!["the answer must be a single JSON object".to_string()]
                }
                Err(e) => {
                    info!(attempt = attempts, "answer is not valid JSON");
                    vec![format!("the answer is not valid JSON ({e})")]
                }
            };
            messages.push(ChatMessage::assistant(outcome.content));
            messages.push(corrective_message(batch, &problems));
        }

        if responded {
            finish(batch, last_answer.as_ref(), usage, attempts, None)
        } else {
            let error = last_error.map(|e| e.to_string()).unwrap_or_default();
            finish_absent(batch, usage, attempts, error)
        }
    }

    /// Extracts every batch of `schema` for one report. Batches run
    /// concurrently within the client's request bound; results merge in
    /// schema order.
    pub async fn extract_report(
        &self,
        schema: &ExtractionSchema,
        report_id: &str,
        report_text: &str,
    ) -> ExtractionRecord {
        let batches = batch_features(schema);
        let outcomes = join_all(
            batches
                .iter()
                .map(|b| self.extract_batch(&schema.task_instructions, &b.features, report_text)),
        )
        .await;

        let mut merged_values = IndexMap::new();
        let mut merged_statuses = IndexMap::new();
        let mut usage = TokenUsage::default();
        for (batch, outcome) in batches.iter().zip(outcomes) {
            if outcome.error.is_some() {
                warn!(report = report_id, batch = batch.id, "batch produced no response");
            }
            usage += outcome.usage;
            merged_values.extend(outcome.values);
            merged_statuses.extend(outcome.statuses);
        }

        let mut record = ExtractionRecord::new(report_id);
        record.usage = usage;
        for f in &schema.features {
            if let Some(v) = merged_values.swap_remove(&f.name) {
                record.values.insert(f.name.clone(), v);
            }
            let status = merged_statuses.get(&f.name).copied().unwrap_or(FeatureStatus::Absent);
            record.statuses.insert(f.name.clone(), status);
        }
        info!(
            report = report_id,
            complete = record.is_complete(),
            prompt_tokens = usage.prompt_tokens,
            completion_tokens = usage.completion_tokens,
            "report extracted"
        );
        record
    }

    /// Extracts many reports concurrently; output order follows input order.
    pub async fn extract_reports(
        &self,
        schema: &ExtractionSchema,
        reports: &[(String, String)],
    ) -> Vec<ExtractionRecord> {
        join_all(reports.iter().map(|(id, text)| self.extract_report(schema, id, text))).await
    }
}

fn check_answer(batch: &[&FeatureSpec], answer: &Map<String, Value>) -> Vec<Violation> {
    let mut out = Vec::new();
    for spec in batch {
        match answer.get(&spec.name) {
            Some(v) => check_value(spec, v, &mut out),
            None => out.push(Violation {
                feature: spec.name.clone(),
                kind: ViolationKind::Missing,
                detail: "property missing from the answer".into(),
            }),
        }
    }
    for key in answer.keys() {
        if !batch.iter().any(|f| &f.name == key) {
            out.push(Violation {
                feature: key.clone(),
                kind: ViolationKind::UnknownFeature,
                detail: "property is not part of this request".into(),
            });
        }
    }
    out
}

fn finish(
    batch: &[&FeatureSpec],
    answer: Option<&Map<String, Value>>,
    usage: TokenUsage,
    attempts: u32,
    error: Option<String>,
) -> BatchOutcome {
    let mut values = IndexMap::new();
    let mut statuses = IndexMap::new();
    for spec in batch {
        let valid = answer.and_then(|a| a.get(&spec.name)).filter(|v| {
            let mut tmp = Vec::new();
            check_value(spec, v, &mut tmp);
            tmp.is_empty()
        });
        match valid {
            Some(v) => {
                values.insert(spec.name.clone(), v.clone());
                statuses.insert(spec.name.clone(), FeatureStatus::Ok);
            }
            None => {
                statuses.insert(spec.name.clone(), FeatureStatus::FailedAfterRetries);
            }
        }
    }
    BatchOutcome {
        values,
        statuses,
        usage,
        attempts,
        error,
    }
}

fn finish_absent(batch: &[&FeatureSpec], usage: TokenUsage, attempts: u32, error: String) -> BatchOutcome {
    BatchOutcome {
        values: IndexMap::new(),
        statuses: batch.iter().map(|f| (f.name.clone(), FeatureStatus::Absent)).collect(),
        usage,
        attempts,
        error: Some(error),
    }
}
