use super::annotate::{load_all, parse_run};
use crate::config::{config_err, load_schema, read_input, read_json, write_json};
use clap::Args;
use indexmap::IndexMap;
use mrie_core::eval::{
    agreement_histogram, fit_binomial_glm, mention_rates, performance_cost_summary, score_against_gold, GlmError,
    ReportOutcome, ScoreResult, Split,
};
use mrie_core::gold::GoldStandard;
use rust_decimal::Decimal;
use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Args)]
pub struct EvaluateArgs {
    /// gold.json written by `gold`.
    #[arg(long)]
    gold: PathBuf,
    /// Annotation files (`.csv` or `.json`), one or more annotators each.
    #[arg(long = "annotations")]
    annotations: Vec<PathBuf>,
    /// An `extract` output directory, scored as annotator ID. Its summary
    /// supplies the average cost per report when prices were given.
    #[arg(long = "run", value_name = "ID=DIR", value_parser = parse_run)]
    runs: Vec<(String, PathBuf)>,
    /// Baseline annotator for the regression; defaults to the gold standard's
    /// human annotator.
    #[arg(long)]
    reference: Option<String>,
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Train/test assignment; the evaluated reports must all fall in one set.
    #[arg(long)]
    split: Option<PathBuf>,
    #[arg(long, requires = "split")]
    allow_mixed: bool,
    /// Histogram bin width in percentage points; must divide 100.
    #[arg(long, default_value_t = 5)]
    bin_width: u32,
    #[arg(long)]
    out: PathBuf,
}

fn write_per_feature(path: &Path, scores: &[ScoreResult]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["annotator_id", "feature", "matches", "reports", "accuracy"])?;
    for s in scores {
        for (feature, acc) in &s.per_feature {
            w.write_record([
                s.annotator_id.as_str(),
                feature,
                &acc.matches.to_string(),
                &acc.reports.to_string(),
                &format!("{:.6}", acc.accuracy),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn run(args: EvaluateArgs) -> anyhow::Result<ExitCode> {
    if args.bin_width == 0 || 100 % args.bin_width != 0 {
        return Err(config_err("--bin-width must divide 100"));
    }
    let gold: GoldStandard = read_json(&args.gold, "gold standard")?;
    let schema = args.schema.as_deref().map(|p| load_schema(p, None, None)).transpose()?;
    let (sets, summaries) = load_all(&args.annotations, &args.runs, schema.as_ref())?;
    if sets.is_empty() {
        return Err(config_err("nothing to evaluate; pass --annotations or --run"));
    }
    let reference = args.reference.clone().unwrap_or_else(|| gold.human_annotator.clone());
    if !sets.iter().any(|s| s.annotator_id == reference) {
        return Err(config_err(format!(
            "reference annotator `{reference}` has no annotations"
        )));
    }
    if let Some(path) = &args.split {
        let split = Split::read_csv(read_input(path, "split")?.as_bytes()).map_err(|e| config_err(e.to_string()))?;
        let sets = split
            .check(gold.report_ids(), args.allow_mixed)
            .map_err(|e| config_err(e.to_string()))?;
        tracing::info!(?sets, "evaluation split");
    }

    let scores: Vec<ScoreResult> = sets
        .iter()
        .map(|s| score_against_gold(s, &gold, schema.as_ref()))
        .collect();
    let outcomes: Vec<ReportOutcome> = scores.iter().flat_map(|s| s.outcomes.iter().cloned()).collect();
    let mut costs: IndexMap<String, Decimal> = IndexMap::new();
    for (id, summary) in &summaries {
        if let (Some(total), n) = (summary.total_cost_usd, summary.reports.len()) {
            if n > 0 {
                costs.insert(id.clone(), total / Decimal::from(n));
            }
        }
    }

    std::fs::create_dir_all(&args.out)?;
    let fit = fit_binomial_glm(&outcomes, &reference);
    let mut code = ExitCode::SUCCESS;
    match &fit {
        Ok(f) => write_json(&args.out.join("glm.json"), f)?,
        Err(e) => {
            if matches!(e, GlmError::SeparationDetected { .. }) {
                eprintln!("regression not reported: {e}");
            } else {
                eprintln!("regression failed: {e}");
            }
            write_json(&args.out.join("glm.json"), &json!({ "error": e.to_string() }))?;
            code = ExitCode::from(1);
        }
    }

    let rows = performance_cost_summary(&outcomes, fit.as_ref().ok(), &costs);
    let mut w = csv::Writer::from_path(args.out.join("summary.csv"))?;
    w.write_record(["annotator_id", "accuracy_percent", "average_cost_usd", "p_value"])?;
    for r in &rows {
        w.write_record([
            r.annotator_id.clone(),
            format!("{:.2}", r.accuracy_percent),
            r.average_cost_usd
                .map(|c| c.round_dp(6).to_string())
                .unwrap_or_default(),
            r.p_value.map(|p| format!("{p:.6e}")).unwrap_or_default(),
        ])?;
    }
    w.flush()?;

    let histogram = agreement_histogram(&outcomes, args.bin_width).expect("bin width checked above");
    write_json(&args.out.join("histogram.json"), &histogram)?;
    write_per_feature(&args.out.join("per_feature.csv"), &scores)?;
    if let Some(s) = &schema {
        let rates = mention_rates(&gold, s);
        for w in &rates.warnings {
            tracing::warn!("{w}");
        }
        write_json(&args.out.join("mention_rates.json"), &rates)?;
    }

    for r in &rows {
        println!("{}\t{:.2}%", r.annotator_id, r.accuracy_percent);
    }
    Ok(code)
}
