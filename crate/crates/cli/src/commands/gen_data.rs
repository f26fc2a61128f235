//! `gen-data`: write a synthetic corpus (events, labels, ground truth).

use hierseq_core::data_pipeline::{export_events, generate, write_labels, write_truth};
use hierseq_core::data_pipeline::{GeneratorSpec, PlantedRule};

use crate::config::{ensure_output_dir, pick};
use crate::error::{io_runtime, CliError};
use crate::{GenDataArgs, Global};

pub fn run(args: GenDataArgs, g: &Global) -> Result<(), CliError> {
    let defaults = GeneratorSpec::default();
    let rule_name = args
        .rule
        .or_else(|| g.file.rule.clone())
        .unwrap_or_else(|| "order".to_string());
    let window_secs = pick(args.window_secs, g.file.window_secs, 600);
    let rule = match rule_name.as_str() {
        "order" => PlantedRule::Order,
        "cooccurrence" | "cooccur" => PlantedRule::Cooccurrence { window_secs },
        other => {
            return Err(CliError::usage(format!(
                "unknown rule {other:?} (expected order or cooccurrence)"
            )))
        }
    };
    let spec = GeneratorSpec {
        seed: pick(g.seed, g.file.seed, defaults.seed),
        n_patients: pick(args.n_patients, g.file.n_patients, defaults.n_patients),
        vocab_size: pick(args.vocab_size, g.file.vocab_size, defaults.vocab_size),
        rule,
        noise_rate: pick(args.noise_rate, g.file.noise_rate, defaults.noise_rate),
        positive_rate: pick(
            args.positive_rate,
            g.file.positive_rate,
            defaults.positive_rate,
        ),
        ..defaults
    };
    if !(0.0..=1.0).contains(&spec.noise_rate) || !(0.0..=1.0).contains(&spec.positive_rate) {
        return Err(CliError::usage("rates must be inside [0, 1]"));
    }

    let dir = g
        .output_dir
        .clone()
        .or_else(|| g.file.output_dir.clone())
        .unwrap_or_else(|| "data".into());
    ensure_output_dir(&dir)?;

    let (sequences, labels, truths) = generate(&spec);
    let events_path = dir.join("events.jsonl");
    export_events(&sequences, &events_path).map_err(io_runtime(&events_path))?;
    let labels_path = dir.join("labels.jsonl");
    write_labels(&labels, &labels_path).map_err(io_runtime(&labels_path))?;
    let truth_path = dir.join("truth.jsonl");
    write_truth(&truths, &truth_path).map_err(io_runtime(&truth_path))?;

    let n_events: usize = sequences.iter().map(|s| s.events.len()).sum();
    let pos_rate = if labels.is_empty() {
        0.0
    } else {
        labels.iter().filter(|l| l.label == 1).count() as f64 / labels.len() as f64
    };
    let summary = serde_json::json!({
        "patients": sequences.len(),
        "events": n_events,
        "positive_rate": pos_rate,
        "events_file": events_path,
        "labels_file": labels_path,
        "truth_file": truth_path,
    });
    println!("{summary}");
    Ok(())
}
