//! `train`: fit the model, then write the best checkpoint, the per-epoch
//! log, and the test-split summary.

use std::io::Write;

use hierseq_core::checkpoint::{save_checkpoint, Checkpoint, DataSnapshot, CHECKPOINT_VERSION};
use hierseq_core::metrics::{pr_auc, roc_auc};
use hierseq_core::training::{score_sequences, train};

use crate::config::ensure_output_dir;
use crate::error::{io_runtime, CliError};
use crate::{Global, TrainArgs};

pub fn run(args: TrainArgs, g: &Global) -> Result<(), CliError> {
    let data = super::load_data(
        args.data.events.clone(),
        args.data.labels.clone(),
        g.file.events.clone(),
        g.file.labels.clone(),
        args.data.skip_bad_lines,
    )?;
    let cohort_cfg = super::resolve_cohort_config(&args.data, g);
    let train_cfg = super::resolve_train_config(&args.train, &args.model, g)?;
    let dir = g
        .output_dir
        .clone()
        .or_else(|| g.file.output_dir.clone())
        .unwrap_or_else(|| "run".into());
    ensure_output_dir(&dir)?;

    let cohort = super::build_cohort_cli(data, &cohort_cfg)?;
    eprintln!("cohort: {}", cohort.filter_stats);

    let (params, logs) = train(&cohort, &train_cfg).map_err(|e| CliError::runtime(e.to_string()))?;

    let log_path = dir.join("train_log.jsonl");
    {
        let mut w = std::io::BufWriter::new(
            std::fs::File::create(&log_path).map_err(io_runtime(&log_path))?,
        );
        for entry in &logs {
            let line = serde_json::to_string(entry).expect("serializable");
            writeln!(w, "{line}").map_err(io_runtime(&log_path))?;
        }
        w.flush().map_err(io_runtime(&log_path))?;
    }

    let checkpoint = Checkpoint {
        version: CHECKPOINT_VERSION,
        mode: train_cfg.mode,
        segmentation: train_cfg.segmentation,
        data: DataSnapshot::from_config(&cohort_cfg, cohort.freq_threshold),
        vocab: cohort.vocab.clone(),
        z_stats: cohort.z_stats.clone(),
        params,
    };
    let ck_path = dir.join("checkpoint.json");
    save_checkpoint(&checkpoint, &ck_path).map_err(|e| CliError::runtime(e.to_string()))?;

    let test_seqs: Vec<_> = cohort.test.iter().map(|&i| &cohort.sequences[i]).collect();
    if test_seqs.is_empty() {
        return Err(CliError::runtime("test split is empty".to_string()));
    }
    let scored = score_sequences(
        &checkpoint.params,
        &cohort.z_stats,
        train_cfg.mode,
        train_cfg.segmentation,
        &test_seqs,
    );
    let auc = roc_auc(&scored).map_err(|e| CliError::runtime(e.to_string()))?;
    let auprc = pr_auc(&scored).map_err(|e| CliError::runtime(e.to_string()))?;
    let summary = serde_json::json!({ "auc": auc, "auprc": auprc });
    super::write_json(&dir, "summary.json", &summary)?;
    println!("{summary}");
    Ok(())
}
