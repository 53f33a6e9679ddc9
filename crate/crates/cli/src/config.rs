use anyhow::Context;
use mrie_core::linked_data::{parse_context, ContextMap};
use mrie_core::llm::{ApiKey, EndpointConfig, PriceTable};
use mrie_core::schema::{parse_batching, parse_schema, ExtractionSchema};
use std::fmt;
use std::path::Path;

pub const API_KEY_VAR: &str = "EXTRACTOR_API_KEY";

/// A problem with flags or input files found before any work starts. Maps to
/// exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

pub fn config_err(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

/// Reads a file, reporting a missing or unreadable one as a configuration
/// error.
pub fn read_input(path: &Path, what: &str) -> anyhow::Result<String> {
    std::fs::read_to_string(path).map_err(|e| config_err(format!("{what} {}: {e}", path.display())))
}

pub fn require_dir(path: &Path, what: &str) -> anyhow::Result<()> {
    if path.is_dir() {
        Ok(())
    } else {
        Err(config_err(format!("{what} {} is not a directory", path.display())))
    }
}

pub fn load_schema(
    schema: &Path,
    instructions: Option<&Path>,
    batching: Option<&Path>,
) -> anyhow::Result<ExtractionSchema> {
    let doc = read_input(schema, "schema")?;
    let instructions = match instructions {
        Some(p) => read_input(p, "instructions")?,
        None => String::new(),
    };
    let batching = match batching {
        Some(p) => parse_batching(&read_input(p, "batching")?)
            .map_err(|e| config_err(format!("batching {}: {e}", p.display())))?,
        None => Default::default(),
    };
    parse_schema(&doc, &instructions, &batching).map_err(|e| config_err(format!("schema {}: {e}", schema.display())))
}

pub fn load_context(path: &Path) -> anyhow::Result<ContextMap> {
    let ctx = parse_context(&read_input(path, "context")?)
        .map_err(|e| config_err(format!("context {}: {e}", path.display())))?;
    for w in &ctx.warnings {
        tracing::warn!("context: {w}");
    }
    Ok(ctx)
}

pub fn load_prices(path: &Path) -> anyhow::Result<PriceTable> {
    PriceTable::from_json(&read_input(path, "price table")?).map_err(|e| config_err(e.to_string()))
}

fn is_loopback(base_url: &str) -> anyhow::Result<bool> {
    let url = url::Url::parse(base_url).map_err(|e| config_err(format!("base URL `{base_url}`: {e}")))?;
    Ok(match url.host() {
        Some(url::Host::Domain(d)) => d.eq_ignore_ascii_case("localhost"),
        Some(url::Host::Ipv4(ip)) => ip.is_loopback(),
        Some(url::Host::Ipv6(ip)) => ip.is_loopback(),
        None => false,
    })
}

/// Endpoint settings with the API key taken from the environment. A key is
/// mandatory unless the endpoint is on the local machine.
pub fn endpoint(base_url: &str, model: &str) -> anyhow::Result<EndpointConfig> {
    let mut cfg = EndpointConfig::new(base_url, model);
    match std::env::var(API_KEY_VAR) {
        Ok(key) if !key.is_empty() => cfg.api_key = Some(ApiKey::new(key)),
        _ if is_loopback(base_url)? => {}
        _ => {
            return Err(config_err(format!(
                "{API_KEY_VAR} is not set; it is required for {base_url}"
            )))
        }
    }
    cfg.validate().map_err(|e| config_err(e.to_string()))?;
    Ok(cfg)
}

pub fn write_json(path: &Path, value: &impl serde::Serialize) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> anyhow::Result<T> {
    serde_json::from_str(&read_input(path, what)?).map_err(|e| config_err(format!("{what} {}: {e}", path.display())))
}
