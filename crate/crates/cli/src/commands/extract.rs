use crate::config::{config_err, endpoint, load_context, load_prices, load_schema, read_input, require_dir};
use clap::Args;
use mrie_core::eval::{Split, SplitSet};
use mrie_core::llm::{ChatClient, Extractor};
use mrie_core::pipeline::{read_reports, summarize, write_outputs};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

#[derive(Args)]
pub struct ModelsArgs {
    /// OpenAI-compatible base URL, including the version segment.
    #[arg(long)]
    base_url: String,
}

#[derive(Args)]
pub struct ExtractArgs {
    /// JSON Schema data dictionary.
    #[arg(long)]
    schema: PathBuf,
    /// Plaintext task instructions sent with every batch.
    #[arg(long)]
    instructions: PathBuf,
    /// Feature-to-batch assignment (`{"Feature": 2, ...}`); unlisted features go to batch 1.
    #[arg(long)]
    batching: Option<PathBuf>,
    /// JSON-LD context; when given, `<id>.jsonld` files are written too.
    #[arg(long)]
    context: Option<PathBuf>,
    #[arg(long)]
    base_url: String,
    #[arg(long)]
    model: String,
    /// Directory of plaintext reports (`*.txt`).
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Forwarded to the endpoint as the sampling seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Train/test assignment (`report_id,set` CSV). Every report must be listed.
    #[arg(long)]
    split: Option<PathBuf>,
    /// Only extract reports in this set (requires --split).
    #[arg(long, requires = "split")]
    set: Option<SplitSet>,
    /// Per-million-token prices (`{"model": {"prompt": 2.5, "completion": 10}}`).
    #[arg(long)]
    price_table: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    max_retries: u32,
    /// Upper bound on concurrent requests.
    #[arg(long, default_value_t = 4)]
    parallel: usize,
    /// Per-request timeout in seconds.
    #[arg(long, default_value_t = 120)]
    timeout: u64,
}

pub async fn run_models(args: ModelsArgs) -> anyhow::Result<ExitCode> {
    let cfg = endpoint(&args.base_url, "")?;
    let client = ChatClient::new(cfg).map_err(|e| config_err(e.to_string()))?;
    for id in client.list_models().await? {
        println!("{id}");
    }
    Ok(ExitCode::SUCCESS)
}

pub async fn run_extract(args: ExtractArgs) -> anyhow::Result<ExitCode> {
    // Everything is loaded and checked before the first request.
    let schema = load_schema(&args.schema, Some(&args.instructions), args.batching.as_deref())?;
    let context = args.context.as_deref().map(load_context).transpose()?;
    let prices = args.price_table.as_deref().map(load_prices).transpose()?;
    if let Some(p) = &prices {
        if !p.models.contains_key(&args.model) {
            return Err(config_err(format!(
                "price table has no entry for model `{}`",
                args.model
            )));
        }
    }
    require_dir(&args.input, "input")?;
    let mut reports = read_reports(&args.input)?;
    if let Some(path) = &args.split {
        let split = Split::read_csv(read_input(path, "split")?.as_bytes()).map_err(|e| config_err(e.to_string()))?;
        split
            .check(reports.iter().map(|(id, _)| id.as_str()), true)
            .map_err(|e| config_err(e.to_string()))?;
        if let Some(set) = args.set {
            reports.retain(|(id, _)| split.membership.get(id) == Some(&set));
        }
    }
    let mut cfg = endpoint(&args.base_url, &args.model)?;
    cfg.max_retries = args.max_retries;
    cfg.max_parallel_requests = args.parallel;
    cfg.request_timeout = Duration::from_secs(args.timeout);
    cfg.seed = args.seed;
    let client = ChatClient::new(cfg).map_err(|e| config_err(e.to_string()))?;

    tracing::info!(reports = reports.len(), batches = schema.batch_count, model = %args.model, "extraction started");
    let records = Extractor::new(client).extract_reports(&schema, &reports).await;
    let summary = summarize(&records, &args.model, prices.as_ref())?;
    for w in write_outputs(&records, context.as_ref(), &summary, &args.out)? {
        tracing::debug!("{w}");
    }
    tracing::info!(
        complete = summary.complete_reports,
        incomplete = summary.incomplete_reports,
        prompt_tokens = summary.total_usage.prompt_tokens,
        completion_tokens = summary.total_usage.completion_tokens,
        "extraction finished"
    );
    if summary.all_complete() {
        Ok(ExitCode::SUCCESS)
    } else {
        for r in summary.reports.iter().filter(|r| !r.complete) {
            eprintln!("incomplete: {}", r.report_id);
        }
        Ok(ExitCode::from(1))
    }
}
