use super::wire::{ChatCompletionRequest, ChatCompletionResponse, ChatMessage, ModelList, ResponseFormat};
use super::LlmError;
use crate::record::TokenUsage;
use std::fmt;
use std::sync::Arc;
use std::time::Duration;
use tokio::sync::Semaphore;

/// A bearer token. Never printed.
#[derive(Clone, PartialEq, Eq)]
pub struct ApiKey(String);

impl ApiKey {
    pub fn new(key: impl Into<String>) -> Self {
        Self(key.into())
    }

    pub fn expose(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for ApiKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ApiKey(***)")
    }
}

#[derive(Debug, Clone)]
pub struct EndpointConfig {
    /// Base URL up to and including the API version segment, e.g.
    /// `https://api.openai.com/v1`.
    pub base_url: String,
    pub api_key: Option<ApiKey>,
    pub model_id: String,
    pub request_timeout: Duration,
    pub max_retries: u32,
    pub max_parallel_requests: usize,
    /// Forwarded as the request `seed` when set.
    pub seed: Option<u64>,
}

impl EndpointConfig {
    pub fn new(base_url: impl Into<String>, model_id: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            api_key: None,
            model_id: model_id.into(),
            request_timeout: Duration::from_secs(120),
            max_retries: 2,
            max_parallel_requests: 4,
            seed: None,
        }
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        if self.max_parallel_requests == 0 {
            return Err(LlmError::Config("max_parallel_requests must be at least 1".into()));
        }
        if !(self.base_url.starts_with("http://") || self.base_url.starts_with("https://")) {
            return Err(LlmError::Config(format!(
                "base URL `{}` must start with http:// or https://",
                self.base_url
            )));
        }
        Ok(())
    }

    fn url(&self, path: &str) -> String {
        format!("{}/{}", self.base_url.trim_end_matches('/'), path)
    }
}

#[derive(Debug, Clone)]
pub struct ChatOutcome {
    pub content: String,
    pub usage: TokenUsage,
}

/// Thin HTTP client for the `models` and `chat/completions` endpoints.
/// Concurrent requests share one permit pool sized by
/// `max_parallel_requests`.
#[derive(Clone)]
pub struct ChatClient {
    http: reqwest::Client,
    config: Arc<EndpointConfig>,
    permits: Arc<Semaphore>,
}

impl ChatClient {
    pub fn new(config: EndpointConfig) -> Result<Self, LlmError> {
        config.validate()?;
        let http = reqwest::Client::builder()
            .timeout(config.request_timeout)
            .build()
            .map_err(|e| LlmError::Config(e.to_string()))?;
        let permits = Arc::new(Semaphore::new(config.max_parallel_requests));
        Ok(Self {
            http,
            config: Arc::new(config),
            permits,
        })
    }

    pub fn config(&self) -> &EndpointConfig {
        &self.config
    }

    fn authorize(&self, req: reqwest::RequestBuilder) -> reqwest::RequestBuilder {
        match &self.config.api_key {
            Some(key) => req.bearer_auth(key.expose()),
            None => req,
        }
    }

    /// Model ids advertised by `GET {base_url}/models`, in server order.
    pub async fn list_models(&self) -> Result<Vec<String>, LlmError> {
        let _permit = self.permits.acquire().await.expect("semaphore never closed");
        let resp = self
            .authorize(self.http.get(self.config.url("models")))
            .send()
            .await
            .map_err(transport)?;
        let body = read_success(resp).await?;
        let list: ModelList =
            serde_json::from_str(&body).map_err(|e| LlmError::InvalidResponse(format!("model list: {e}")))?;
        Ok(list.data.into_iter().map(|m| m.id).collect())
    }

    /// One chat-completions call at temperature 0, asking for a JSON object.
    pub async fn chat(&self, messages: &[ChatMessage]) -> Result<ChatOutcome, LlmError> {
        self.chat_with_format(messages, true).await
    }

    /// Free-form chat, used by the adjudication assistant.
    pub async fn chat_text(&self, messages: &[ChatMessage]) -> Result<ChatOutcome, LlmError> {
        self.chat_with_format(messages, false).await
    }

    async fn chat_with_format(&self, messages: &[ChatMessage], json: bool) -> Result<ChatOutcome, LlmError> {
        let request = ChatCompletionRequest {
            model: self.config.model_id.clone(),
            messages: messages.to_vec(),
            temperature: 0.0,
            response_format: json.then(|| ResponseFormat {
                kind: "json_object".into(),
            }),
            seed: self.config.seed,
        };
        let _permit = self.permits.acquire().await.expect("semaphore never closed");
        let resp = self
            .authorize(self.http.post(self.config.url("chat/completions")))
            .json(&request)
            .send()
            .await
            .map_err(transport)?;
        let body = read_success(resp).await?;
        let parsed: ChatCompletionResponse =
            serde_json::from_str(&body).map_err(|e| LlmError::InvalidResponse(format!("chat completion: {e}")))?;
        let usage = parsed.usage.map(TokenUsage::from).unwrap_or_default();
        let content = parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| LlmError::InvalidResponse("no message content in choices[0]".into()))?;
        Ok(ChatOutcome { content, usage })
    }
}

fn transport(e: reqwest::Error) -> LlmError {
    if e.is_timeout() {
        LlmError::Transport("request timed out".into())
    } else {
        LlmError::Transport(e.to_string())
    }
}

async fn read_success(resp: reqwest::Response) -> Result<String, LlmError> {
    let status = resp.status();
    let body = resp.text().await.map_err(transport)?;
    if status.is_success() {
        Ok(body)
    } else {
        Err(LlmError::Api {
            status: status.as_u16(),
            body: body.chars().take(200).collect(),
        })
    }
}
