use super::{files_with_extension, stem};
use crate::config::{config_err, require_dir, write_json};
use clap::Args;
use mrie_core::layout::{parse_ocr_json, reassemble, redact_postcodes};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Args)]
pub struct LayoutArgs {
    /// Directory of OCR element files (`*.json`).
    #[arg(long = "in")]
    input: PathBuf,
    /// Directory for the reassembled `<name>.txt` files.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
pub struct RedactArgs {
    /// Directory of plaintext reports (`*.txt`).
    #[arg(long = "in")]
    input: PathBuf,
    /// Directory for redacted reports and `<name>.spans.json` files.
    #[arg(long)]
    out: PathBuf,
}

pub fn run_layout(args: LayoutArgs) -> anyhow::Result<ExitCode> {
    require_dir(&args.input, "input")?;
    let files = files_with_extension(&args.input, "json")?;
    std::fs::create_dir_all(&args.out)?;
    let mut failures = 0;
    for path in &files {
        let result = std::fs::read_to_string(path)
            .map_err(|e| e.to_string())
            .and_then(|text| parse_ocr_json(&text).map_err(|e| e.to_string()))
            .and_then(|elements| reassemble(&elements).map_err(|e| e.to_string()));
        match result {
            Ok(grid) => std::fs::write(args.out.join(format!("{}.txt", stem(path))), grid.to_text())?,
            Err(e) => {
                eprintln!("{}: {e}", path.display());
                failures += 1;
            }
        }
    }
    tracing::info!(files = files.len(), failures, "layout finished");
    Ok(if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

pub fn run_redact(args: RedactArgs) -> anyhow::Result<ExitCode> {
    require_dir(&args.input, "input")?;
    if args.input.canonicalize()? == args.out.canonicalize().unwrap_or_default() {
        return Err(config_err("--out must differ from --in"));
    }
    let files = files_with_extension(&args.input, "txt")?;
    std::fs::create_dir_all(&args.out)?;
    let mut redacted = 0;
    for path in &files {
        let text = std::fs::read_to_string(path)?;
        let (out, spans) = redact_postcodes(&text);
        redacted += spans.len();
        let name = stem(path);
        std::fs::write(args.out.join(format!("{name}.txt")), out)?;
        write_json(&args.out.join(format!("{name}.spans.json")), &spans)?;
    }
    tracing::info!(files = files.len(), redacted, "redaction finished");
    Ok(ExitCode::SUCCESS)
}
