//! Splits an event sequence into at most `M` contiguous time groups that
//! minimize the maximum within-group time span.
//!
//! The solver binary-searches the smallest feasible span bound over integer
//! seconds and verifies each candidate with a greedy left-to-right packing,
//! so the whole search is `O(L log T)` for `L` events over a time range of
//! `T` seconds. A fixed-size splitter (equal event counts per group) is kept
//! as the ablation variant.

use serde::{Deserialize, Serialize};

/// Which splitter a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SegmentationChoice {
    /// Minimax splitter with at most `m` groups.
    Adaptive { m: usize },
    /// Equal event counts per group (last group may be smaller).
    Fixed { group_size: usize },
}

impl SegmentationChoice {
    pub fn apply(&self, times: &[i64]) -> Segmentation {
        match *self {
            SegmentationChoice::Adaptive { m } => segment_adaptive(times, m),
            SegmentationChoice::Fixed { group_size } => segment_fixed(times, group_size),
        }
    }
}

/// An ordered partition of a sequence into contiguous groups.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segmentation {
    /// k+1 cut times: the first event time of each group, then the last
    /// event time of the sequence plus one.
    pub boundaries: Vec<i64>,
    /// Half-open index ranges `[start, end)` into the event list.
    pub groups: Vec<(usize, usize)>,
    /// Largest within-group time span (last minus first event time).
    pub max_span: i64,
}

impl Segmentation {
    /// Number of groups k.
    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// Total number of events covered.
    pub fn n_events(&self) -> usize {
        self.groups.last().map_or(0, |&(_, end)| end)
    }

    fn from_group_starts(times: &[i64], starts: Vec<usize>) -> Segmentation {
        let mut groups = Vec::with_capacity(starts.len());
        let mut boundaries = Vec::with_capacity(starts.len() + 1);
        let mut max_span = 0;
        for (i, &start) in starts.iter().enumerate() {
            let end = starts.get(i + 1).copied().unwrap_or(times.len());
            groups.push((start, end));
            boundaries.push(times[start]);
            max_span = max_span.max(times[end - 1] - times[start]);
        }
        boundaries.push(times[times.len() - 1] + 1);
        Segmentation {
            boundaries,
            groups,
            max_span,
        }
    }
}

/// Minimum number of contiguous groups needed so every group spans at most
/// `bound` seconds, by a left-to-right greedy scan. Returns 0 for no events.
pub fn min_groups_for_bound(times: &[i64], bound: i64) -> usize {
    debug_assert!(times.windows(2).all(|w| w[0] <= w[1]));
    debug_assert!(bound >= 0);
    let Some(&first) = times.first() else {
        return 0;
    };
    let mut groups = 1;
    let mut group_start = first;
    for &t in &times[1..] {
        if t - group_start > bound {
            groups += 1;
            group_start = t;
        }
    }
    groups
}

/// Greedy packing at a given span bound: the event index starting each group.
fn greedy_group_starts(times: &[i64], bound: i64) -> Vec<usize> {
    let mut starts = vec![0];
    let mut group_start = times[0];
    for (i, &t) in times.iter().enumerate().skip(1) {
        if t - group_start > bound {
            starts.push(i);
            group_start = t;
        }
    }
    starts
}

/// Optimal minimax segmentation into at most `max_groups` contiguous groups.
///
/// Binary-searches the smallest span bound `B` (integer seconds in
/// `[0, last - first]`) for which the greedy packing needs at most
/// `max_groups` groups, then returns that packing. Its `max_span` equals the
/// exact optimum over all contiguous partitions into at most `max_groups`
/// groups. Events with equal timestamps always land in the same group.
///
/// # Panics
/// If `times` is empty, unsorted, or `max_groups` is 0.
pub fn segment_adaptive(times: &[i64], max_groups: usize) -> Segmentation {
    assert!(max_groups >= 1, "max_groups must be at least 1");
    assert!(!times.is_empty(), "cannot segment an empty sequence");
    assert!(
        times.windows(2).all(|w| w[0] <= w[1]),
        "times must be sorted"
    );

    let range = times[times.len() - 1] - times[0];
    let mut lo = 0; // smallest candidate bound
    let mut hi = range; // always feasible: one group
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if min_groups_for_bound(times, mid) <= max_groups {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let seg = Segmentation::from_group_starts(times, greedy_group_starts(times, lo));
    debug_assert!(seg.len() <= max_groups);
    debug_assert_eq!(seg.max_span, lo);
    seg
}

/// Fixed-size ablation splitter: consecutive chunks of `group_size` events,
/// the last chunk possibly smaller. `group_size = 1` reproduces the
/// no-segmentation case of one event per group.
///
/// # Panics
/// If `times` is empty or `group_size` is 0.
pub fn segment_fixed(times: &[i64], group_size: usize) -> Segmentation {
    assert!(group_size >= 1, "group_size must be at least 1");
    assert!(!times.is_empty(), "cannot segment an empty sequence");
    let starts = (0..times.len()).step_by(group_size).collect();
    Segmentation::from_group_starts(times, starts)
}
