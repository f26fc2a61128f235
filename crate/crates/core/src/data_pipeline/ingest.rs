//! JSON Lines ingestion and export.
//!
//! Events file: one object per line,
//! `{"patient": str, "t": int-seconds, "type": str, "cat": {slot: value}, "num": {slot: number}}`
//! (`cat`/`num` optional). Labels file: one object per line,
//! `{"patient": str, "outcome_t": int-seconds, "label": 0|1}`.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::event_model::{RawEvent, RawSequence};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {} malformed line(s), first at line {}: {}",
        .report.bad_lines.len(),
        .report.bad_lines.first().map(|b| b.line_no).unwrap_or(0),
        .report.bad_lines.first().map(|b| b.message.as_str()).unwrap_or(""))]
    BadLines { path: String, report: IngestReport },
    #[error("{path} line {line}: duplicate label for patient {patient}")]
    DuplicateLabel {
        path: String,
        line: usize,
        patient: String,
    },
}

/// One malformed input line.
#[derive(Debug, Clone, Serialize)]
pub struct BadLine {
    pub line_no: usize,
    pub message: String,
}

/// What ingestion saw: totals, warnings, and any malformed lines.
#[derive(Debug, Clone, Default, Serialize)]
pub struct IngestReport {
    pub total_lines: usize,
    pub parsed_events: usize,
    pub bad_lines: Vec<BadLine>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct EventLine {
    patient: String,
    t: i64,
    #[serde(rename = "type")]
    type_name: String,
    #[serde(default, skip_serializing_if = "std::collections::BTreeMap::is_empty")]
    cat: std::collections::BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "std::collections::BTreeMap::is_empty")]
    num: std::collections::BTreeMap<String, f64>,
}

/// An outcome label joined to sequences by patient id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub patient: String,
    pub outcome_t: i64,
    pub label: u8,
}

fn parse_event_line(line: &str) -> Result<EventLine, String> {
    let parsed: EventLine = serde_json::from_str(line).map_err(|e| e.to_string())?;
    if parsed.t < 0 {
        return Err(format!("negative timestamp {}", parsed.t));
    }
    if parsed.patient.is_empty() {
        return Err("empty patient id".to_string());
    }
    if parsed.type_name.is_empty() {
        return Err("empty event type".to_string());
    }
    if parsed.num.values().any(|v| !v.is_finite()) {
        return Err("non-finite numerical attribute".to_string());
    }
    Ok(parsed)
}

/// Parses an events file into per-patient, time-sorted raw sequences.
/// Any malformed line makes the whole call fail with a report; see
/// [`ingest_with`] to skip bad lines instead.
pub fn ingest(path: &Path) -> Result<(Vec<RawSequence>, IngestReport), IngestError> {
    ingest_with(path, false)
}

/// Like [`ingest`], but with `skip_bad_lines` the malformed lines are
/// collected into the report and the rest of the file is used.
pub fn ingest_with(
    path: &Path,
    skip_bad_lines: bool,
) -> Result<(Vec<RawSequence>, IngestReport), IngestError> {
    let file = File::open(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let reader = BufReader::new(file);

    let mut report = IngestReport::default();
    let mut order: Vec<String> = Vec::new();
    let mut by_patient: HashMap<String, Vec<RawEvent>> = HashMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|source| IngestError::Io {
            path: path.display().to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        report.total_lines += 1;
        match parse_event_line(&line) {
            Ok(ev) => {
                report.parsed_events += 1;
                let bucket = by_patient.entry(ev.patient.clone()).or_insert_with(|| {
                    order.push(ev.patient.clone());
                    Vec::new()
                });
                bucket.push(RawEvent {
                    time: ev.t,
                    type_name: ev.type_name,
                    cat: ev.cat,
                    num: ev.num,
                });
            }
            Err(message) => report.bad_lines.push(BadLine { line_no, message }),
        }
    }

    if !report.bad_lines.is_empty() && !skip_bad_lines {
        return Err(IngestError::BadLines {
            path: path.display().to_string(),
            report,
        });
    }
    if report.parsed_events == 0 {
        report
            .warnings
            .push(format!("{}: no events ingested", path.display()));
    }

    let sequences = order
        .into_iter()
        .map(|patient_id| {
            let mut events = by_patient.remove(&patient_id).unwrap();
            events.sort_by_key(|e| e.time); // stable: file order kept on ties
            RawSequence { patient_id, events }
        })
        .collect();
    Ok((sequences, report))
}

/// Writes sequences back out in the events-file schema, one event per line,
/// patients in input order. `export_events` followed by [`ingest`] is the
/// identity on sorted sequences.
pub fn export_events(sequences: &[RawSequence], path: &Path) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for seq in sequences {
        for e in &seq.events {
            let line = EventLine {
                patient: seq.patient_id.clone(),
                t: e.time,
                type_name: e.type_name.clone(),
                cat: e.cat.clone(),
                num: e.num.clone(),
            };
            serde_json::to_writer(&mut w, &line)?;
            w.write_all(b"\n")?;
        }
    }
    w.flush()
}

/// Reads a labels file; at most one record per patient.
pub fn read_labels(path: &Path) -> Result<Vec<LabelRecord>, IngestError> {
    let file = File::open(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let reader = BufReader::new(file);
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut report = IngestReport::default();
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|source| IngestError::Io {
            path: path.display().to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        report.total_lines += 1;
        match serde_json::from_str::<LabelRecord>(&line) {
            Ok(rec) if rec.label <= 1 => {
                if seen.insert(rec.patient.clone(), line_no).is_some() {
                    return Err(IngestError::DuplicateLabel {
                        path: path.display().to_string(),
                        line: line_no,
                        patient: rec.patient,
                    });
                }
                out.push(rec);
            }
            Ok(rec) => report.bad_lines.push(BadLine {
                line_no,
                message: format!("label must be 0 or 1, got {}", rec.label),
            }),
            Err(e) => report.bad_lines.push(BadLine {
                line_no,
                message: e.to_string(),
            }),
        }
    }
    if !report.bad_lines.is_empty() {
        return Err(IngestError::BadLines {
            path: path.display().to_string(),
            report,
        });
    }
    Ok(out)
}

pub fn write_labels(labels: &[LabelRecord], path: &Path) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for rec in labels {
        serde_json::to_writer(&mut w, rec)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}
