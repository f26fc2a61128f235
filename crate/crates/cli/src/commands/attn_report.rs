//! `attn-report`: run the model over a dataset, collect every event's
//! attention weight, and emit per-type importance statistics split by label,
//! plus per-sequence temporal weights.

use hierseq_core::hier_net::forward;

use crate::config::{ensure_output_dir, pick};
use crate::error::CliError;
use crate::report::{build_report, ScoredEvent, TemporalEntry};
use crate::{AttnReportArgs, Global};

pub fn run(args: AttnReportArgs, g: &Global) -> Result<(), CliError> {
    let checkpoint = super::load_checkpoint_cli(args.checkpoint.clone(), g)?;
    let data = super::load_data(
        args.events.clone(),
        args.labels.clone(),
        g.file.events.clone(),
        g.file.labels.clone(),
        args.skip_bad_lines,
    )?;
    let min_count = pick(args.min_count, g.file.min_count, 5);
    let sequences = super::prepare_eval_sequences(&checkpoint, data, args.split)?;

    let mut events = Vec::new();
    let mut temporal = Vec::with_capacity(sequences.len());
    for seq in &sequences {
        let times: Vec<i64> = seq.events.iter().map(|e| e.time).collect();
        let seg = checkpoint.segmentation.apply(&times);
        let trace = forward(
            seq,
            &checkpoint.params,
            &checkpoint.z_stats,
            checkpoint.mode,
            &seg,
        );
        let mut event_idx = 0;
        for alphas in &trace.event_alphas {
            for &alpha in alphas {
                let type_id = seq.events[event_idx].type_id;
                events.push(ScoredEvent {
                    type_name: checkpoint.vocab.type_name(type_id).to_string(),
                    alpha,
                    label: seq.label,
                });
                event_idx += 1;
            }
        }
        temporal.push(TemporalEntry {
            patient: seq.patient_id.clone(),
            label: seq.label,
            betas: trace.betas,
        });
    }

    let report = build_report(&events, temporal, min_count);

    // console digest: the top types per label group
    for (name, group) in [
        ("positive", &report.groups.positive),
        ("negative", &report.groups.negative),
    ] {
        eprintln!("top event types by median attention ({name} samples):");
        for t in group.ranked.iter().take(10) {
            eprintln!(
                "  {:<24} median {:.4}  q1 {:.4}  q3 {:.4}  max {:.4}  n {}",
                t.type_name, t.median, t.q1, t.q3, t.max, t.count
            );
        }
    }

    let dir = g
        .output_dir
        .clone()
        .or_else(|| g.file.output_dir.clone())
        .unwrap_or_else(|| "run".into());
    ensure_output_dir(&dir)?;
    let path = super::write_json(&dir, "attn_report.json", &report)?;
    println!(
        "{}",
        serde_json::json!({
            "report": path,
            "scored_events": events.len(),
            "sequences": report.temporal.len(),
        })
    );
    Ok(())
}
