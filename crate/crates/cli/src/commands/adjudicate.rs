use super::annotate::load_diff;
use crate::config::{config_err, endpoint, load_schema, require_dir};
use clap::Args;
use mrie_core::gold::service::{router, AdjudicationState, ServiceConfig};
use mrie_core::llm::ChatClient;
use mrie_core::pipeline::read_reports;
use std::net::IpAddr;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Args)]
pub struct AdjudicateArgs {
    /// Output directory of `diff`.
    #[arg(long)]
    queue: PathBuf,
    /// Directory of plaintext reports shown next to each conflict.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Resolution log. An existing log is replayed so a session can resume.
    #[arg(long)]
    out: PathBuf,
    /// Directory with the static adjudication UI, served at `/`.
    #[arg(long)]
    ui: Option<PathBuf>,
    #[arg(long, default_value = "127.0.0.1")]
    bind: IpAddr,
    /// 0 picks a free port.
    #[arg(long, default_value_t = 8787)]
    port: u16,
    /// Endpoint for the optional assistant chat (`POST /assist`).
    #[arg(long, requires = "model")]
    base_url: Option<String>,
    #[arg(long, requires = "base_url")]
    model: Option<String>,
}

pub async fn run(args: AdjudicateArgs) -> anyhow::Result<ExitCode> {
    let (_, queue) = load_diff(&args.queue)?;
    require_dir(&args.input, "input")?;
    let reports = read_reports(&args.input)?.into_iter().collect();
    let schema = args.schema.as_deref().map(|p| load_schema(p, None, None)).transpose()?;
    let assistant = match (&args.base_url, &args.model) {
        (Some(url), Some(model)) => {
            Some(ChatClient::new(endpoint(url, model)?).map_err(|e| config_err(e.to_string()))?)
        }
        _ => None,
    };
    if let Some(dir) = &args.ui {
        require_dir(dir, "UI")?;
    }
    if !args.bind.is_loopback() {
        tracing::warn!(bind = %args.bind, "serving report text on a non-loopback address");
    }

    let mut config = ServiceConfig::new(queue);
    config.reports = reports;
    config.schema = schema;
    config.log_path = Some(args.out.clone());
    config.assistant = assistant;
    config.ui_dir = args.ui.clone();
    let state = AdjudicationState::new(config).map_err(|e| config_err(format!("{}: {e}", args.out.display())))?;

    let listener = tokio::net::TcpListener::bind((args.bind, args.port))
        .await
        .map_err(|e| config_err(format!("cannot bind {}:{}: {e}", args.bind, args.port)))?;
    let progress = state.progress();
    println!("http://{}", listener.local_addr()?);
    tracing::info!(
        resolved = progress.resolved,
        total = progress.total,
        "adjudication service listening"
    );

    let mut done = state.subscribe_done();
    axum::serve(listener, router(state.clone()))
        .with_graceful_shutdown(async move {
            tokio::select! {
                _ = done.wait_for(|d| *d) => tracing::info!("every conflict is resolved"),
                _ = tokio::signal::ctrl_c() => tracing::info!("interrupted; progress is kept in the log"),
            }
        })
        .await?;
    let progress = state.progress();
    if progress.remaining == 0 {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("{} conflicts remain", progress.remaining);
        Ok(ExitCode::from(1))
    }
}
