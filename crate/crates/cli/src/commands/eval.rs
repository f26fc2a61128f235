//! `eval`: score a checkpoint on an events/labels pair, optionally writing
//! ROC/PR curve points for external plotting.

use std::fmt::Write as _;

use hierseq_core::metrics::{pr_auc, pr_curve, roc_auc, roc_curve, ScoredLabels};
use hierseq_core::training::score_sequences;

use crate::config::ensure_output_dir;
use crate::error::{io_runtime, CliError};
use crate::{EvalArgs, Global};

pub fn run(args: EvalArgs, g: &Global) -> Result<(), CliError> {
    let checkpoint = super::load_checkpoint_cli(args.checkpoint.clone(), g)?;
    let data = super::load_data(
        args.events.clone(),
        args.labels.clone(),
        g.file.events.clone(),
        g.file.labels.clone(),
        args.skip_bad_lines,
    )?;
    let sequences = super::prepare_eval_sequences(&checkpoint, data, args.split)?;
    let refs: Vec<_> = sequences.iter().collect();
    let scored = score_sequences(
        &checkpoint.params,
        &checkpoint.z_stats,
        checkpoint.mode,
        checkpoint.segmentation,
        &refs,
    );

    let auc = roc_auc(&scored).map_err(|e| CliError::runtime(e.to_string()))?;
    let auprc = pr_auc(&scored).map_err(|e| CliError::runtime(e.to_string()))?;
    let result = serde_json::json!({
        "auc": auc,
        "auprc": auprc,
        "n": scored.len(),
        "positive_rate": scored.positive_rate(),
    });
    println!("{result}");

    if let Some(dir) = g.output_dir.clone().or_else(|| g.file.output_dir.clone()) {
        ensure_output_dir(&dir)?;
        super::write_json(&dir, "eval.json", &result)?;
        if args.curves {
            write_curves(&dir, &scored)?;
        }
    } else if args.curves {
        return Err(CliError::usage(
            "--curves needs --output-dir to place the CSV files",
        ));
    }
    Ok(())
}

fn write_curves(dir: &std::path::Path, scored: &ScoredLabels) -> Result<(), CliError> {
    let roc = roc_curve(scored).map_err(|e| CliError::runtime(e.to_string()))?;
    let mut out = String::from("threshold,false_positive_rate,true_positive_rate\n");
    for p in &roc {
        writeln!(
            out,
            "{},{},{}",
            p.threshold, p.false_positive_rate, p.true_positive_rate
        )
        .unwrap();
    }
    let roc_path = dir.join("roc.csv");
    std::fs::write(&roc_path, out).map_err(io_runtime(&roc_path))?;

    let pr = pr_curve(scored).map_err(|e| CliError::runtime(e.to_string()))?;
    let mut out = String::from("threshold,recall,precision\n");
    for p in &pr {
        writeln!(out, "{},{},{}", p.threshold, p.recall, p.precision).unwrap();
    }
    let pr_path = dir.join("pr.csv");
    std::fs::write(&pr_path, out).map_err(io_runtime(&pr_path))?;
    Ok(())
}
