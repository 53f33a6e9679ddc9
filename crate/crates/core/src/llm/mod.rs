//! Extraction through any endpoint that speaks the OpenAI chat-completions API.
//!
//! The flow per report: list the schema's batches, send one chat request per
//! batch (the schema fragment plus the report), validate the JSON answer, and
//! resubmit with the violation list when it fails. Token usage reported by the
//! endpoint is summed over every attempt.

mod client;
mod cost;
mod extract;
mod prompt;
pub mod wire;

pub use client::{ApiKey, ChatClient, ChatOutcome, EndpointConfig};
pub use cost::{compute_cost, ModelPrice, PriceTable};
pub use extract::{BatchOutcome, Extractor};
pub use prompt::{build_prompt, corrective_message, split_user_message, REPORT_MARKER, SCHEMA_MARKER};
pub use wire::{ChatMessage, Role};

#[derive(Debug, thiserror::Error)]
pub enum LlmError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("endpoint returned HTTP {status}: {body}")]
    Api { status: u16, body: String },
    #[error("unexpected response shape: {0}")]
    InvalidResponse(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("no price configured for model `{0}`")]
    UnknownModel(String),
}

impl LlmError {
    /// Errors worth resubmitting the same request for.
    pub fn is_retryable(&self) -> bool {
        match self {
            LlmError::Transport(_) => true,
            LlmError::Api { status, .. } => *status == 429 || *status >= 500,
            LlmError::InvalidResponse(_) => true,
            LlmError::Config(_) | LlmError::UnknownModel(_) => false,
        }
    }
}
