//! `segment`: dump each sequence's partition for inspection.

use std::fmt::Write as _;

use serde::Serialize;

use hierseq_core::segmentation::SegmentationChoice;

use crate::config::{ensure_output_dir, pick, require_file};
use crate::error::{io_runtime, CliError};
use crate::{Global, OutputFormat, SegmentArgs};

#[derive(Debug, Serialize)]
struct SegmentRow {
    patient: String,
    k: usize,
    max_span: i64,
    boundaries: Vec<i64>,
    group_sizes: Vec<usize>,
}

pub fn run(args: SegmentArgs, g: &Global) -> Result<(), CliError> {
    let events_path = require_file(args.events.or_else(|| g.file.events.clone()), "events")?;
    let sequences = super::load_events(&events_path, args.skip_bad_lines)?;
    let choice = match (args.m, args.group_size.or(g.file.group_size)) {
        (Some(_), Some(_)) => {
            return Err(CliError::usage("give either --m or --group-size, not both"))
        }
        (None, Some(group_size)) => {
            if group_size == 0 {
                return Err(CliError::usage("group size must be at least 1"));
            }
            SegmentationChoice::Fixed { group_size }
        }
        (m, None) => {
            let m = pick(m, g.file.m, 32);
            if m == 0 {
                return Err(CliError::usage("m must be at least 1"));
            }
            SegmentationChoice::Adaptive { m }
        }
    };

    let rows: Vec<SegmentRow> = sequences
        .iter()
        .filter(|s| !s.events.is_empty())
        .map(|s| {
            let times: Vec<i64> = s.events.iter().map(|e| e.time).collect();
            let seg = choice.apply(&times);
            SegmentRow {
                patient: s.patient_id.clone(),
                k: seg.len(),
                max_span: seg.max_span,
                boundaries: seg.boundaries,
                group_sizes: seg.groups.iter().map(|&(a, b)| b - a).collect(),
            }
        })
        .collect();

    let format = g.format.unwrap_or(OutputFormat::Json);
    let rendered = match format {
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(&rows).expect("serializable");
            s.push('\n');
            s
        }
        OutputFormat::Csv => {
            let mut out = String::from("patient,k,max_span,boundaries,group_sizes\n");
            for r in &rows {
                let bounds: Vec<String> = r.boundaries.iter().map(|b| b.to_string()).collect();
                let sizes: Vec<String> = r.group_sizes.iter().map(|s| s.to_string()).collect();
                writeln!(
                    out,
                    "{},{},{},{},{}",
                    r.patient,
                    r.k,
                    r.max_span,
                    bounds.join(";"),
                    sizes.join(";")
                )
                .unwrap();
            }
            out
        }
    };
    print!("{rendered}");

    if let Some(dir) = g.output_dir.clone().or_else(|| g.file.output_dir.clone()) {
        ensure_output_dir(&dir)?;
        let name = match format {
            OutputFormat::Json => "segments.json",
            OutputFormat::Csv => "segments.csv",
        };
        let path = dir.join(name);
        std::fs::write(&path, rendered).map_err(io_runtime(&path))?;
    }
    Ok(())
}
