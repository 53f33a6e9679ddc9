//! `diff` and `gold`: the two offline halves of building a gold standard.

use crate::config::{config_err, load_schema, read_input, read_json, write_json};
use clap::Args;
use indexmap::IndexMap;
use mrie_core::gold::{
    apply_resolutions, diff_annotations, make_adjudication_queue, read_resolution_log, AdjudicationQueue,
    AnnotationSet, Composition, CompositionRow, DiffResult, GoldError,
};
use mrie_core::pipeline::RunSummary;
use mrie_core::schema::ExtractionSchema;
use serde::Serialize;
use serde_json::Value;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Reads annotation files (`.csv` or `.json`) into one set per annotator,
/// rejecting an annotator that appears in more than one file.
pub fn load_annotations(paths: &[PathBuf], schema: Option<&ExtractionSchema>) -> anyhow::Result<Vec<AnnotationSet>> {
    let mut sets: Vec<AnnotationSet> = Vec::new();
    for path in paths {
        let text = read_input(path, "annotations")?;
        let parsed = match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => AnnotationSet::read_csv(text.as_bytes()),
            Some("json") => AnnotationSet::read_json(text.as_bytes()),
            _ => return Err(config_err(format!("{}: expected a .csv or .json file", path.display()))),
        }
        .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        for mut set in parsed {
            if sets.iter().any(|s| s.annotator_id == set.annotator_id) {
                return Err(config_err(format!(
                    "annotator `{}` appears in more than one file",
                    set.annotator_id
                )));
            }
            if let Some(s) = schema {
                set.coerce_with_schema(s);
            }
            sets.push(set);
        }
    }
    Ok(sets)
}

/// Parses `ID=PATH`.
pub fn parse_run(s: &str) -> Result<(String, PathBuf), String> {
    match s.split_once('=') {
        Some((id, path)) if !id.is_empty() && !path.is_empty() => Ok((id.to_string(), PathBuf::from(path))),
        _ => Err(format!("expected ID=PATH, got `{s}`")),
    }
}

/// Reads an `extract` output directory as the annotation set `id`.
pub fn load_run(id: &str, dir: &Path) -> anyhow::Result<(AnnotationSet, RunSummary)> {
    let summary: RunSummary = read_json(&dir.join("summary.json"), "run summary")?;
    let mut set = AnnotationSet::new(id);
    for r in &summary.reports {
        let values: IndexMap<String, Value> = read_json(&dir.join(format!("{}.json", r.report_id)), "extraction")?;
        for (feature, value) in values {
            set.insert(r.report_id.clone(), feature, value)
                .map_err(|e| config_err(format!("{}: {e}", dir.display())))?;
        }
    }
    Ok((set, summary))
}

pub type RunSummaries = Vec<(String, RunSummary)>;

/// All annotation sets named by `--annotations` files and `--run` directories.
pub fn load_all(
    files: &[PathBuf],
    runs: &[(String, PathBuf)],
    schema: Option<&ExtractionSchema>,
) -> anyhow::Result<(Vec<AnnotationSet>, RunSummaries)> {
    let mut sets = load_annotations(files, schema)?;
    let mut summaries = Vec::new();
    for (id, dir) in runs {
        if sets.iter().any(|s| &s.annotator_id == id) {
            return Err(config_err(format!("annotator `{id}` is given more than once")));
        }
        let (mut set, summary) = load_run(id, dir)?;
        if let Some(s) = schema {
            set.coerce_with_schema(s);
        }
        sets.push(set);
        summaries.push((id.clone(), summary));
    }
    Ok((sets, summaries))
}

fn take_set(sets: &mut Vec<AnnotationSet>, id: &str) -> anyhow::Result<AnnotationSet> {
    let i = sets
        .iter()
        .position(|s| s.annotator_id == id)
        .ok_or_else(|| config_err(format!("no annotations for `{id}`")))?;
    Ok(sets.remove(i))
}

#[derive(Args)]
pub struct DiffArgs {
    /// Annotation files (`.csv` with columns report_id, feature, value,
    /// annotator_id, or `.json` with the same fields per row).
    #[arg(long = "annotations")]
    annotations: Vec<PathBuf>,
    /// An `extract` output directory read as annotator ID.
    #[arg(long = "run", value_name = "ID=DIR", value_parser = parse_run)]
    runs: Vec<(String, PathBuf)>,
    /// Annotator treated as the first set. Both --first and --second may be
    /// omitted when exactly two annotators are given.
    #[arg(long, requires = "second")]
    first: Option<String>,
    #[arg(long, requires = "first")]
    second: Option<String>,
    /// Data dictionary, used to read typed values and compare by feature kind.
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Seed for queue order and blinding.
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Serialize)]
struct DiffSummary<'a> {
    first_annotator: &'a str,
    second_annotator: &'a str,
    seed: u64,
    comparable: usize,
    agreements: usize,
    conflicts: usize,
    coverage_gaps: usize,
    agreement_rate: Option<f64>,
}

pub fn run_diff(args: DiffArgs) -> anyhow::Result<ExitCode> {
    let schema = args.schema.as_deref().map(|p| load_schema(p, None, None)).transpose()?;
    let (mut sets, _) = load_all(&args.annotations, &args.runs, schema.as_ref())?;
    let (first, second) = match (&args.first, &args.second) {
        (Some(a), Some(b)) if a == b => {
            return Err(config_err("--first and --second must name different annotators"));
        }
        (Some(a), Some(b)) => (take_set(&mut sets, a)?, take_set(&mut sets, b)?),
        _ if sets.len() == 2 => {
            let second = sets.pop().expect("two sets");
            (sets.pop().expect("two sets"), second)
        }
        _ => {
            return Err(config_err(format!(
                "{} annotators given; name two with --first and --second",
                sets.len()
            )))
        }
    };
    let diff = diff_annotations(&first, &second, schema.as_ref());
    if !diff.coverage_gaps.is_empty() {
        tracing::warn!(
            gaps = diff.coverage_gaps.len(),
            "cells annotated by only one annotator are left out"
        );
    }
    let queue = make_adjudication_queue(&diff, args.seed);
    std::fs::create_dir_all(&args.out)?;
    write_json(&args.out.join("diff.json"), &diff)?;
    write_json(&args.out.join("queue.json"), &queue)?;
    let summary = DiffSummary {
        first_annotator: &diff.first_annotator,
        second_annotator: &diff.second_annotator,
        seed: args.seed,
        comparable: diff.comparable(),
        agreements: diff.agreements.len(),
        conflicts: diff.disagreements.len(),
        coverage_gaps: diff.coverage_gaps.len(),
        agreement_rate: diff.agreement_rate(),
    };
    write_json(&args.out.join("diff_summary.json"), &summary)?;
    println!(
        "{} comparable, {} agreements, {} conflicts",
        summary.comparable, summary.agreements, summary.conflicts
    );
    Ok(ExitCode::SUCCESS)
}

#[derive(Args)]
pub struct GoldArgs {
    /// Output directory of `diff` (holds diff.json and queue.json).
    #[arg(long = "in")]
    input: PathBuf,
    /// Resolutions log written by `adjudicate`. Optional when there are no conflicts.
    #[arg(long)]
    resolutions: Option<PathBuf>,
    /// The human annotator; OCR-flagged conflicts take this annotator's value.
    #[arg(long)]
    human: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Serialize)]
struct CompositionReport {
    total: usize,
    adjudicated: usize,
    rows: Vec<CompositionRow>,
    by_feature: BTreeMap<String, Vec<CompositionRow>>,
}

fn composition_report(overall: &Composition, by_feature: &BTreeMap<String, Composition>) -> CompositionReport {
    CompositionReport {
        total: overall.total,
        adjudicated: overall.adjudicated(),
        rows: overall.rows(),
        by_feature: by_feature.iter().map(|(f, c)| (f.clone(), c.rows())).collect(),
    }
}

pub fn load_diff(dir: &Path) -> anyhow::Result<(DiffResult, AdjudicationQueue)> {
    let diff: DiffResult = read_json(&dir.join("diff.json"), "diff")?;
    let queue: AdjudicationQueue = read_json(&dir.join("queue.json"), "queue")?;
    Ok((diff, queue))
}

pub fn run_gold(args: GoldArgs) -> anyhow::Result<ExitCode> {
    let (diff, queue) = load_diff(&args.input)?;
    let resolutions = match &args.resolutions {
        Some(p) => {
            read_resolution_log(std::fs::File::open(p).map_err(|e| config_err(format!("{}: {e}", p.display())))?)
                .map_err(|e| config_err(format!("{}: {e}", p.display())))?
        }
        None => Vec::new(),
    };
    let gold = match apply_resolutions(&diff.agreements, &queue, &resolutions, &args.human) {
        Ok(g) => g,
        Err(GoldError::UnresolvedConflicts(ids)) => {
            eprintln!("{} of {} conflicts are unresolved", ids.len(), queue.conflicts.len());
            return Ok(ExitCode::from(1));
        }
        Err(e @ GoldError::UnknownAnnotator(_)) => return Err(config_err(e.to_string())),
        Err(e) => return Err(e.into()),
    };
    std::fs::create_dir_all(&args.out)?;
    write_json(&args.out.join("gold.json"), &gold)?;
    gold.write_csv(std::fs::File::create(args.out.join("gold.csv"))?)?;
    let overall = gold.composition();
    write_json(
        &args.out.join("composition.json"),
        &composition_report(&overall, &gold.composition_by_feature()),
    )?;
    println!("{} gold entries, {} adjudicated", overall.total, overall.adjudicated());
    Ok(ExitCode::SUCCESS)
}
