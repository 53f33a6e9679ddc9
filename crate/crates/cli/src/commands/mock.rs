use crate::config::{config_err, read_json};
use clap::Args;
use mrie_core::mock::{serve, FaultKind, MockBehavior};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Args)]
pub struct MockArgs {
    /// Behavior file (answer book, fault settings, model id). Flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Port on 127.0.0.1; 0 picks a free one.
    #[arg(long, default_value_t = 0)]
    port: u16,
    #[arg(long)]
    seed: Option<u64>,
    /// Probability that a chat request gets an injected fault.
    #[arg(long)]
    fault_rate: Option<f64>,
    /// Comma-separated fault kinds: malformed_json, wrong_enum, http_500, timeout.
    #[arg(long, value_delimiter = ',')]
    fault_kinds: Vec<String>,
    /// Write the request ledger here on shutdown.
    #[arg(long)]
    ledger: Option<PathBuf>,
}

fn parse_kind(s: &str) -> anyhow::Result<FaultKind> {
    serde_json::from_value(serde_json::Value::String(s.trim().to_string()))
        .map_err(|_| config_err(format!("unknown fault kind `{s}`")))
}

pub async fn run(args: MockArgs) -> anyhow::Result<ExitCode> {
    let mut behavior: MockBehavior = match &args.config {
        Some(p) => read_json(p, "mock config")?,
        None => MockBehavior::default(),
    };
    if let Some(seed) = args.seed {
        behavior.seed = seed;
    }
    if let Some(rate) = args.fault_rate {
        if !(0.0..=1.0).contains(&rate) {
            return Err(config_err("--fault-rate must lie in [0, 1]"));
        }
        behavior.fault_rate = rate;
    }
    if !args.fault_kinds.is_empty() {
        behavior.fault_kinds = args
            .fault_kinds
            .iter()
            .map(|k| parse_kind(k))
            .collect::<Result<_, _>>()?;
    }
    if behavior.fault_rate > 0.0 && behavior.fault_kinds.is_empty() {
        return Err(config_err("a fault rate needs at least one fault kind"));
    }
    let server = serve(behavior, args.port)
        .await
        .map_err(|e| config_err(format!("cannot bind: {e}")))?;
    println!("{}", server.base_url());
    tracing::info!(addr = %server.addr(), "mock server listening; Ctrl-C stops it");
    tokio::signal::ctrl_c().await?;
    if let Some(path) = &args.ledger {
        crate::config::write_json(path, &server.ledger())?;
    }
    tracing::info!(requests = server.ledger().len(), "mock server stopped");
    server.shutdown().await;
    Ok(ExitCode::SUCCESS)
}
