//! Shared test fixtures: brute-force oracles, data generators, and a
//! capturing sink for pipeline output. Oracles deliberately avoid the
//! library's rolling encoders and streaming passes so they stay
//! independent of the code under test.

#![allow(dead_code)]

use std::io::Write;
use std::sync::{Arc, Mutex};

use rand::rngs::StdRng;
use rand::Rng;

use seedvote::seedquery::{mix64, Anchor, Strand};
use seedvote::seqio::EncodedReference;

// ---------------------------------------------------------------------
// Sequence generators
// ---------------------------------------------------------------------

pub fn random_bases(rng: &mut StdRng, len: usize, n_prob: f64) -> Vec<u8> {
    (0..len)
        .map(|_| {
            if n_prob > 0.0 && rng.random::<f64>() < n_prob {
                4
            } else {
                rng.random_range(0..4u8)
            }
        })
        .collect()
}

pub fn seq_to_string(seq: &[u8]) -> String {
    seq.iter().map(|&b| b"ACGTN"[b as usize] as char).collect()
}

pub fn revcomp(seq: &[u8]) -> Vec<u8> {
    seq.iter()
        .rev()
        .map(|&b| if b < 4 { 3 - b } else { 4 })
        .collect()
}

/// Uniform edits: at each position, with probability `rate`, apply a
/// substitution, insertion, or deletion chosen uniformly.
pub fn mutate(rng: &mut StdRng, seq: &[u8], rate: f64) -> Vec<u8> {
    let mut out = Vec::with_capacity(seq.len() + seq.len() / 8);
    for &b in seq {
        if rng.random::<f64>() < rate {
            match rng.random_range(0..3u8) {
                0 => out.push((b + rng.random_range(1..4u8)) % 4),
                1 => {
                    out.push(rng.random_range(0..4u8));
                    out.push(b);
                }
                _ => {}
            }
        } else {
            out.push(b);
        }
    }
    out
}

pub fn fasta(records: &[(&str, &[u8])]) -> String {
    let mut s = String::new();
    for (name, seq) in records {
        s.push('>');
        s.push_str(name);
        s.push('\n');
        s.push_str(&seq_to_string(seq));
        s.push('\n');
    }
    s
}

pub fn fastq(reads: &[(String, Vec<u8>)]) -> String {
    let mut s = String::new();
    for (id, seq) in reads {
        let letters = seq_to_string(seq);
        s.push('@');
        s.push_str(id);
        s.push('\n');
        s.push_str(&letters);
        s.push_str("\n+\n");
        s.push_str(&"I".repeat(letters.len()));
        s.push('\n');
    }
    s
}

pub fn reference_from(seq: &[u8]) -> EncodedReference {
    seedvote::seqio::parse_reference(std::io::Cursor::new(fasta(&[("ref", seq)]))).unwrap()
}

/// Sample reads from a single-sequence reference with name-encoded truth
/// ids. Half the reads are reverse-complemented when `rc_half` is set;
/// `edit_rate` > 0 adds uniform edits after extraction.
#[allow(clippy::too_many_arguments)]
pub fn sample_reads(
    rng: &mut StdRng,
    reference: &[u8],
    tname: &str,
    n: usize,
    min_len: usize,
    max_len: usize,
    rc_half: bool,
    edit_rate: f64,
) -> Vec<(String, Vec<u8>)> {
    let mut reads = Vec::with_capacity(n);
    for serial in 0..n {
        let len = rng.random_range(min_len..=max_len.min(reference.len()));
        let start = rng.random_range(0..=reference.len() - len);
        let fragment = &reference[start..start + len];
        let reverse = rc_half && serial % 2 == 1;
        let (seq, strand) = if reverse {
            (revcomp(fragment), '-')
        } else {
            (fragment.to_vec(), '+')
        };
        let seq = if edit_rate > 0.0 {
            mutate(rng, &seq, edit_rate)
        } else {
            seq
        };
        let id = format!("{tname}!{start}!{}!{strand}!{serial}", start + len);
        reads.push((id, seq));
    }
    reads
}

// ---------------------------------------------------------------------
// Minimizer oracle
// ---------------------------------------------------------------------

/// Canonical mixed hash of the k-mer at `pos`, computed from scratch:
/// forward code assembled left to right, reverse complement assembled
/// independently. None if any symbol is not ACGT.
pub fn kmer_hash(seq: &[u8], pos: usize, k: usize) -> Option<(u64, Strand)> {
    let kmer = &seq[pos..pos + k];
    if kmer.iter().any(|&b| b >= 4) {
        return None;
    }
    let mut fwd = 0u64;
    for &b in kmer {
        fwd = (fwd << 2) | b as u64;
    }
    let mut rev = 0u64;
    for &b in kmer.iter().rev() {
        rev = (rev << 2) | (3 - b) as u64;
    }
    if fwd <= rev {
        Some((mix64(fwd), Strand::Forward))
    } else {
        Some((mix64(rev), Strand::Reverse))
    }
}

/// All-windows minimizer oracle: every window of `w` consecutive k-mers
/// (a single shorter window if fewer exist) contributes its leftmost
/// minimum-hash k-mer; positions are emitted once, in order. Returns
/// full (untruncated) hashes.
pub fn oracle_minimizers(seq: &[u8], k: usize, w: usize) -> Vec<(u64, u32, Strand)> {
    if seq.len() < k {
        return Vec::new();
    }
    let n_kmers = seq.len() - k + 1;
    let hashes: Vec<Option<(u64, Strand)>> =
        (0..n_kmers).map(|p| kmer_hash(seq, p, k)).collect();
    let window = w.min(n_kmers);
    let mut out: Vec<(u64, u32, Strand)> = Vec::new();
    for start in 0..=(n_kmers - window) {
        let mut min: Option<(u64, usize, Strand)> = None;
        #[allow(clippy::needless_range_loop)]
        for pos in start..start + window {
            if let Some((h, s)) = hashes[pos] {
                if min.is_none_or(|(mh, _, _)| h < mh) {
                    min = Some((h, pos, s));
                }
            }
        }
        if let Some((h, pos, s)) = min {
            if out.last().is_none_or(|&(_, p, _)| p as usize != pos) {
                out.push((h, pos as u32, s));
            }
        }
    }
    out
}

// ---------------------------------------------------------------------
// Voting oracle
// ---------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleCluster {
    pub strand: Strand,
    pub score: u32,
    pub read_start: u32,
    pub read_end: u32,
    pub ref_start: i64,
    pub ref_end: i64,
}

/// Consecutive-gap clustering: per strand, sort anchors by (delta,
/// read_pos) and cut wherever the delta gap exceeds `vt_dist`. Every
/// cluster is returned, unfiltered.
pub fn oracle_clusters(anchors: &[Anchor], k: usize, vt_dist: u64) -> Vec<OracleCluster> {
    let mut clusters = Vec::new();
    for strand in [Strand::Forward, Strand::Reverse] {
        let mut group: Vec<&Anchor> = anchors.iter().filter(|a| a.strand == strand).collect();
        group.sort_by_key(|a| (a.delta, a.read_pos));
        let mut i = 0;
        while i < group.len() {
            let mut j = i + 1;
            while j < group.len()
                && group[j].delta.saturating_sub(group[j - 1].delta) <= vt_dist as i64
            {
                j += 1;
            }
            let members = &group[i..j];
            let read_start = members.iter().map(|a| a.read_pos).min().unwrap();
            let read_end = members.iter().map(|a| a.read_pos + k as u32).max().unwrap();
            let ref_start = members.iter().map(|a| a.ref_pos()).min().unwrap();
            let ref_end = members.iter().map(|a| a.ref_pos() + k as i64).max().unwrap();
            clusters.push(OracleCluster {
                strand,
                score: members.len() as u32,
                read_start,
                read_end,
                ref_start,
                ref_end,
            });
            i = j;
        }
    }
    clusters
}

/// Sorted (strand, score) multiset of clusters, for comparison with the
/// voting stage's output.
pub fn cluster_multiset(clusters: &[OracleCluster]) -> Vec<(u8, u32)> {
    let mut v: Vec<(u8, u32)> = clusters.iter().map(|c| (c.strand as u8, c.score)).collect();
    v.sort_unstable();
    v
}

// ---------------------------------------------------------------------
// Capturing sink for pipeline runs
// ---------------------------------------------------------------------

#[derive(Clone, Default)]
pub struct SharedSink(Arc<Mutex<Vec<u8>>>);

impl SharedSink {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn contents(&self) -> String {
        String::from_utf8(self.0.lock().unwrap().clone()).unwrap()
    }
}

impl Write for SharedSink {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        self.0.lock().unwrap().extend_from_slice(buf);
        Ok(buf.len())
    }

    fn flush(&mut self) -> std::io::Result<()> {
        Ok(())
    }
}
