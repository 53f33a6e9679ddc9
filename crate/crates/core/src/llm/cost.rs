use super::LlmError;
use crate::record::TokenUsage;
use indexmap::IndexMap;
use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};
use std::str::FromStr;

/// US dollars per one million tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelPrice {
    pub prompt_per_million: Decimal,
    pub completion_per_million: Decimal,
}

impl ModelPrice {
    pub fn new(prompt_per_million: &str, completion_per_million: &str) -> Result<Self, LlmError> {
        let parse = |s: &str| Decimal::from_str(s).map_err(|e| LlmError::Config(format!("price `{s}`: {e}")));
        let price = Self {
            prompt_per_million: parse(prompt_per_million)?,
            completion_per_million: parse(completion_per_million)?,
        };
        if price.prompt_per_million.is_sign_negative() || price.completion_per_million.is_sign_negative() {
            return Err(LlmError::Config("prices must be non-negative".into()));
        }
        Ok(price)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PriceTable {
    pub models: IndexMap<String, ModelPrice>,
}

impl PriceTable {
    /// Parses `{"model": {"prompt": 2.5, "completion": 10.0}, ...}`. Numbers
    /// are read from their decimal text, so no binary rounding creeps in.
    pub fn from_json(text: &str) -> Result<Self, LlmError> {
        let raw: IndexMap<String, IndexMap<String, serde_json::Value>> =
            serde_json::from_str(text).map_err(|e| LlmError::Config(format!("price table: {e}")))?;
        let mut models = IndexMap::new();
        for (model, fields) in raw {
            let field = |name: &str| -> Result<String, LlmError> {
                match fields.get(name) {
                    Some(serde_json::Value::Number(n)) => Ok(n.to_string()),
                    Some(serde_json::Value::String(s)) => Ok(s.clone()),
                    _ => Err(LlmError::Config(format!("price table: `{model}` lacks `{name}`"))),
                }
            };
            models.insert(
                model.clone(),
                ModelPrice::new(&field("prompt")?, &field("completion")?)?,
            );
        }
        Ok(Self { models })
    }

    pub fn insert(&mut self, model_id: impl Into<String>, price: ModelPrice) {
        self.models.insert(model_id.into(), price);
    }
}

/// Dollar cost of `usage`, rounded half away from zero to 4 decimal places.
pub fn compute_cost(usage: TokenUsage, model_id: &str, prices: &PriceTable) -> Result<Decimal, LlmError> {
    let price = prices
        .models
        .get(model_id)
        .ok_or_else(|| LlmError::UnknownModel(model_id.to_string()))?;
    let million = Decimal::from(1_000_000u64);
    let exact = Decimal::from(usage.prompt_tokens) * price.prompt_per_million / million
        + Decimal::from(usage.completion_tokens) * price.completion_per_million / million;
    let mut usd = exact.round_dp_with_strategy(4, rust_decimal::RoundingStrategy::MidpointAwayFromZero);
    usd.rescale(4);
    Ok(usd)
}
