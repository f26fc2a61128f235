//! `sweep`: train across the fixed-group-size grid plus adaptive
//! segmentation, several seeds per cell, and emit the comparison table.

use std::fmt::Write as _;

use serde::Serialize;

use hierseq_core::metrics::{pr_auc, roc_auc};
use hierseq_core::segmentation::SegmentationChoice;
use hierseq_core::training::{score_sequences, train};

use crate::config::{ensure_output_dir, pick};
use crate::error::{io_runtime, CliError};
use crate::report::median;
use crate::{Global, OutputFormat, SweepArgs};

#[derive(Debug, Serialize)]
struct SweepRow {
    segmentation: String,
    aucs: Vec<f64>,
    auprcs: Vec<f64>,
    median_auc: f64,
    median_auprc: f64,
}

pub fn run(args: SweepArgs, g: &Global) -> Result<(), CliError> {
    let data = super::load_data(
        args.data.events.clone(),
        args.data.labels.clone(),
        g.file.events.clone(),
        g.file.labels.clone(),
        args.data.skip_bad_lines,
    )?;
    let cohort_cfg = super::resolve_cohort_config(&args.data, g);
    let base_cfg = super::resolve_train_config(&args.train, &args.model, g)?;
    let n_seeds = pick(args.sweep_seeds, g.file.sweep_seeds, 3).max(1);
    let sizes = args
        .sizes
        .clone()
        .or_else(|| g.file.sizes.clone())
        .unwrap_or_else(|| vec![1, 2, 4, 8, 16, 32, 64]);
    if sizes.contains(&0) {
        return Err(CliError::usage("group sizes must be at least 1"));
    }
    let adaptive_m = match base_cfg.segmentation {
        SegmentationChoice::Adaptive { m } => m,
        SegmentationChoice::Fixed { .. } => pick(args.model.m, g.file.m, 32),
    };

    let cohort = super::build_cohort_cli(data, &cohort_cfg)?;
    let test_seqs: Vec<_> = cohort.test.iter().map(|&i| &cohort.sequences[i]).collect();
    if test_seqs.is_empty() {
        return Err(CliError::runtime("test split is empty".to_string()));
    }

    let mut grid: Vec<(String, SegmentationChoice)> = sizes
        .iter()
        .map(|&s| {
            (
                format!("fixed-{s}"),
                SegmentationChoice::Fixed { group_size: s },
            )
        })
        .collect();
    grid.push((
        format!("adaptive-{adaptive_m}"),
        SegmentationChoice::Adaptive { m: adaptive_m },
    ));

    let mut rows = Vec::with_capacity(grid.len());
    for (name, segmentation) in grid {
        let mut aucs = Vec::with_capacity(n_seeds);
        let mut auprcs = Vec::with_capacity(n_seeds);
        for s in 0..n_seeds {
            let cfg = hierseq_core::training::TrainConfig {
                segmentation,
                seed: base_cfg.seed.wrapping_add(s as u64),
                ..base_cfg.clone()
            };
            let (params, _) = train(&cohort, &cfg).map_err(|e| CliError::runtime(e.to_string()))?;
            let scored = score_sequences(
                &params,
                &cohort.z_stats,
                cfg.mode,
                segmentation,
                &test_seqs,
            );
            aucs.push(roc_auc(&scored).map_err(|e| CliError::runtime(e.to_string()))?);
            auprcs.push(pr_auc(&scored).map_err(|e| CliError::runtime(e.to_string()))?);
        }
        let row = SweepRow {
            segmentation: name,
            median_auc: median(&mut aucs.clone()),
            median_auprc: median(&mut auprcs.clone()),
            aucs,
            auprcs,
        };
        eprintln!(
            "{:<14} median AUC {:.4}  median AUPRC {:.4}",
            row.segmentation, row.median_auc, row.median_auprc
        );
        rows.push(row);
    }

    let dir = g
        .output_dir
        .clone()
        .or_else(|| g.file.output_dir.clone())
        .unwrap_or_else(|| "sweep".into());
    ensure_output_dir(&dir)?;
    super::write_json(&dir, "sweep.json", &rows)?;

    let mut csv = String::from("segmentation,median_auc,median_auprc,aucs,auprcs\n");
    for r in &rows {
        let fmt_list =
            |xs: &[f64]| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";");
        writeln!(
            csv,
            "{},{},{},{},{}",
            r.segmentation,
            r.median_auc,
            r.median_auprc,
            fmt_list(&r.aucs),
            fmt_list(&r.auprcs)
        )
        .unwrap();
    }
    let csv_path = dir.join("sweep.csv");
    std::fs::write(&csv_path, &csv).map_err(io_runtime(&csv_path))?;

    match g.format.unwrap_or(OutputFormat::Json) {
        OutputFormat::Json => println!("{}", serde_json::to_string(&rows).expect("serializable")),
        OutputFormat::Csv => print!("{csv}"),
    }
    Ok(())
}
