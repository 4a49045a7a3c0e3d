//! Anchor sorting and the linear-time segment-vote stage.
//!
//! Voting makes one pass over anchors sorted by delta, keeping one open
//! segment per strand. An anchor joins its strand's open segment when its
//! delta is within `vt_dist` of the segment's most recently absorbed
//! delta; otherwise the open segment is flushed into a bounded best list
//! and a fresh segment starts at the anchor.

use std::cmp::Ordering;

use thiserror::Error;

use crate::seedquery::{Anchor, Strand};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SortAlgorithm {
    /// LSD radix sort on (delta, read_pos); fastest for long-read anchor
    /// volumes.
    Radix,
    /// Stable comparison sort; fastest for short-read workloads.
    Merge,
}

/// Sort ascending by (delta, read_pos), stable across equal keys. Both
/// algorithms produce identical orderings.
pub fn sort_anchors(anchors: &mut [Anchor], algorithm: SortAlgorithm) {
    match algorithm {
        SortAlgorithm::Radix => radix_sort(anchors),
        SortAlgorithm::Merge => {
            anchors.sort_by_key(|a| (a.delta, a.read_pos))
        }
    }
}

// Maps i64 to u64 preserving order, so negative deltas radix-sort
// correctly.
#[inline]
fn biased(delta: i64) -> u64 {
    (delta as u64) ^ (1 << 63)
}

fn radix_sort(anchors: &mut [Anchor]) {
    let n = anchors.len();
    if n <= 1 {
        return;
    }
    let mut src = anchors.to_vec();
    let mut dst = src.clone();
    // 12 stable byte passes: read_pos first (secondary key), then delta.
    for pass in 0..12usize {
        let byte_of = |a: &Anchor| -> usize {
            if pass < 4 {
                ((a.read_pos >> (8 * pass)) & 0xff) as usize
            } else {
                ((biased(a.delta) >> (8 * (pass - 4))) & 0xff) as usize
            }
        };
        let mut counts = [0usize; 256];
        for a in &src {
            counts[byte_of(a)] += 1;
        }
        if counts.contains(&n) {
            continue; // all keys share this byte; order is unchanged
        }
        let mut sum = 0;
        for c in counts.iter_mut() {
            let here = *c;
            *c = sum;
            sum += here;
        }
        for a in &src {
            let b = byte_of(a);
            dst[counts[b]] = *a;
            counts[b] += 1;
        }
        std::mem::swap(&mut src, &mut dst);
    }
    anchors.copy_from_slice(&src);
}

/// Voting-stage parameters. `vt_dist` is the maximum delta gap between
/// consecutive anchors of one segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VoteParams {
    pub vt_dist: u64,
    pub min_score: u32,
    pub min_len: u32,
    pub max_segments: usize,
}

impl VoteParams {
    pub fn new(vt_dist: u64) -> Self {
        VoteParams {
            vt_dist,
            min_score: 2,
            min_len: 0,
            max_segments: 5,
        }
    }
}

/// A matching read/reference segment pair. Reference bounds are global
/// offsets (end exclusive); they are non-negative whenever the anchors
/// came from a real index. `last_delta` is the delta of the most recently
/// absorbed anchor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SegmentPair {
    pub read_start: u32,
    pub read_end: u32,
    pub ref_start: i64,
    pub ref_end: i64,
    pub strand: Strand,
    pub score: u32,
    pub last_delta: i64,
}

impl SegmentPair {
    fn from_anchor(a: &Anchor, k: usize) -> Self {
        let ref_pos = a.ref_pos();
        SegmentPair {
            read_start: a.read_pos,
            read_end: a.read_pos + k as u32,
            ref_start: ref_pos,
            ref_end: ref_pos + k as i64,
            strand: a.strand,
            score: 1,
            last_delta: a.delta,
        }
    }

    fn absorb(&mut self, a: &Anchor, k: usize) {
        self.score += 1;
        self.last_delta = a.delta;
        self.read_start = self.read_start.min(a.read_pos);
        self.read_end = self.read_end.max(a.read_pos + k as u32);
        let ref_pos = a.ref_pos();
        self.ref_start = self.ref_start.min(ref_pos);
        self.ref_end = self.ref_end.max(ref_pos + k as i64);
    }

    pub fn read_span(&self) -> u32 {
        self.read_end - self.read_start
    }
}

/// Total order on emitted segments: higher score first, then earlier
/// reference start; the remaining fields only break exact ties so that
/// eviction and output order are fully deterministic.
fn seg_order(a: &SegmentPair, b: &SegmentPair) -> Ordering {
    b.score
        .cmp(&a.score)
        .then(a.ref_start.cmp(&b.ref_start))
        .then(a.read_start.cmp(&b.read_start))
        .then(a.ref_end.cmp(&b.ref_end))
        .then(a.read_end.cmp(&b.read_end))
        .then(a.strand.cmp(&b.strand))
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum VoteError {
    #[error("anchors not sorted: delta {next} after {prev} at position {index}")]
    Unsorted { index: usize, prev: i64, next: i64 },
}

fn flush(best: &mut Vec<SegmentPair>, seg: SegmentPair, params: &VoteParams) {
    if seg.score < params.min_score || seg.read_span() < params.min_len {
        return;
    }
    if best.len() < params.max_segments {
        best.push(seg);
        return;
    }
    // Evict the worst segment if the new one beats it.
    let (worst_at, worst) = best
        .iter()
        .enumerate()
        .max_by(|(_, a), (_, b)| seg_order(a, b))
        .map(|(i, s)| (i, *s))
        .unwrap();
    if seg_order(&seg, &worst) == Ordering::Less {
        best[worst_at] = seg;
    }
}

/// One pass over anchors sorted ascending by delta; returns surviving
/// segment pairs sorted by descending score.
pub fn vote(anchors: &[Anchor], k: usize, params: &VoteParams) -> Result<Vec<SegmentPair>, VoteError> {
    let mut open: [Option<SegmentPair>; 2] = [None, None];
    let mut best: Vec<SegmentPair> = Vec::with_capacity(params.max_segments.min(64));
    let mut prev_delta = i64::MIN;

    for (index, a) in anchors.iter().enumerate() {
        if a.delta < prev_delta {
            return Err(VoteError::Unsorted {
                index,
                prev: prev_delta,
                next: a.delta,
            });
        }
        prev_delta = a.delta;
        let slot = &mut open[a.strand as usize];
        match slot {
            Some(seg) if a.delta <= seg.last_delta.saturating_add(params.vt_dist as i64) => {
                seg.absorb(a, k);
            }
            _ => {
                if let Some(seg) = slot.take() {
                    flush(&mut best, seg, params);
                }
                *slot = Some(SegmentPair::from_anchor(a, k));
            }
        }
    }
    for slot in open.into_iter().flatten() {
        flush(&mut best, slot, params);
    }

    best.sort_by(seg_order);
    Ok(best)
}

/// Mapping quality for a score-sorted segment list: the best segment gets
/// `round(60 * (s1 - s2) / s1)` where `s2` is the runner-up score (0 if
/// none); every other segment gets 0.
pub fn assign_mapq(segments: &[SegmentPair]) -> Vec<(SegmentPair, u8)> {
    debug_assert!(segments.windows(2).all(|p| p[0].score >= p[1].score));
    let mut out = Vec::with_capacity(segments.len());
    if let Some(first) = segments.first() {
        let s1 = first.score as f64;
        let s2 = segments.get(1).map_or(0.0, |s| s.score as f64);
        let mapq = (60.0 * (s1 - s2) / s1).round().clamp(0.0, 60.0) as u8;
        out.push((*first, mapq));
        for seg in &segments[1..] {
            out.push((*seg, 0));
        }
    }
    out
}
