//! Attention importance report: per-event-type statistics of the event
//! attention scores, split by outcome label, plus per-sequence temporal
//! weights for visualization export.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub const REPORT_VERSION: u32 = 1;

/// One scored event: its type name, attention weight, and the label of the
/// sequence it came from.
#[derive(Debug, Clone)]
pub struct ScoredEvent {
    pub type_name: String,
    pub alpha: f64,
    pub label: u8,
}

/// Per-sequence temporal attention weights.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TemporalEntry {
    pub patient: String,
    pub label: u8,
    pub betas: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TypeStats {
    #[serde(rename = "type")]
    pub type_name: String,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub max: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlaggedType {
    #[serde(rename = "type")]
    pub type_name: String,
    pub count: usize,
}

/// One label group: types ranked by median attention, plus the types too
/// rare to rank.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupReport {
    pub ranked: Vec<TypeStats>,
    pub flagged: Vec<FlaggedType>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttnReport {
    pub version: u32,
    pub min_count: usize,
    pub groups: Groups,
    pub temporal: Vec<TemporalEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Groups {
    pub positive: GroupReport,
    pub negative: GroupReport,
}

/// Linear-interpolation quantile at position p*(n-1) of a sorted slice.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    quantile(values, 0.5)
}

fn group_report(events: &[&ScoredEvent], min_count: usize) -> GroupReport {
    let mut by_type: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for e in events {
        by_type.entry(&e.type_name).or_default().push(e.alpha);
    }
    let mut ranked = Vec::new();
    let mut flagged = Vec::new();
    for (name, mut alphas) in by_type {
        if alphas.len() < min_count {
            flagged.push(FlaggedType {
                type_name: name.to_string(),
                count: alphas.len(),
            });
            continue;
        }
        alphas.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ranked.push(TypeStats {
            type_name: name.to_string(),
            median: quantile(&alphas, 0.5),
            q1: quantile(&alphas, 0.25),
            q3: quantile(&alphas, 0.75),
            max: *alphas.last().unwrap(),
            count: alphas.len(),
        });
    }
    // ties broken deterministically: larger support first, then name
    ranked.sort_by(|a, b| {
        b.median
            .partial_cmp(&a.median)
            .unwrap()
            .then(b.count.cmp(&a.count))
            .then(a.type_name.cmp(&b.type_name))
    });
    GroupReport { ranked, flagged }
}

/// Builds the report from scored events and temporal weights.
pub fn build_report(
    events: &[ScoredEvent],
    temporal: Vec<TemporalEntry>,
    min_count: usize,
) -> AttnReport {
    let positive: Vec<&ScoredEvent> = events.iter().filter(|e| e.label == 1).collect();
    let negative: Vec<&ScoredEvent> = events.iter().filter(|e| e.label == 0).collect();
    AttnReport {
        version: REPORT_VERSION,
        min_count,
        groups: Groups {
            positive: group_report(&positive, min_count),
            negative: group_report(&negative, min_count),
        },
        temporal,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(type_name: &str, alpha: f64, label: u8) -> ScoredEvent {
        ScoredEvent {
            type_name: type_name.to_string(),
            alpha,
            label,
        }
    }

    #[test]
    fn quantiles_interpolate_linearly() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.5), 2.5);
        assert_eq!(quantile(&v, 0.25), 1.75);
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 1.0), 4.0);
    }

    #[test]
    fn rare_types_are_flagged_not_ranked() {
        let events: Vec<ScoredEvent> = (0..5)
            .map(|i| ev("common", 0.2 + 0.1 * i as f64, 1))
            .chain([ev("rare", 0.9, 1)])
            .collect();
        let report = build_report(&events, vec![], 3);
        let pos = &report.groups.positive;
        assert_eq!(pos.ranked.len(), 1);
        assert_eq!(pos.ranked[0].type_name, "common");
        assert_eq!(pos.flagged.len(), 1);
        assert_eq!(pos.flagged[0].type_name, "rare");
        assert_eq!(pos.flagged[0].count, 1);
    }

    #[test]
    fn ranking_is_by_median_descending() {
        let mut events = Vec::new();
        for _ in 0..4 {
            events.push(ev("weak", 0.1, 1));
            events.push(ev("strong", 0.8, 1));
            events.push(ev("mid", 0.5, 0));
        }
        let report = build_report(&events, vec![], 2);
        let names: Vec<&str> = report
            .groups
            .positive
            .ranked
            .iter()
            .map(|t| t.type_name.as_str())
            .collect();
        assert_eq!(names, vec!["strong", "weak"]);
        assert_eq!(report.groups.negative.ranked[0].type_name, "mid");
    }

    #[test]
    fn report_roundtrips_through_json() {
        let events = vec![ev("a", 0.3, 1), ev("a", 0.5, 1), ev("b", 0.2, 0), ev("b", 0.4, 0)];
        let temporal = vec![TemporalEntry {
            patient: "p1".into(),
            label: 1,
            betas: vec![0.25, 0.75],
        }];
        let report = build_report(&events, temporal, 1);
        let json = serde_json::to_string(&report).unwrap();
        let back: AttnReport = serde_json::from_str(&json).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), json);
    }
}
