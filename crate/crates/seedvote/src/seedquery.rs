//! Minimizer seed extraction and anchor generation.
//!
//! Seeds are canonical k-mers (the smaller of the forward and
//! reverse-complement 2-bit encodings) run through an invertible 64-bit
//! mixer. Window minima are always compared on the full 64-bit hash;
//! truncation to the index's bucket width happens only when a seed is
//! used as a map-array address.

use crate::index::SeedIndex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strand {
    Forward = 0,
    Reverse = 1,
}

impl Strand {
    #[inline]
    pub fn xor(self, other: Strand) -> Strand {
        if self == other {
            Strand::Forward
        } else {
            Strand::Reverse
        }
    }

    #[inline]
    pub fn bit(self) -> u64 {
        self as u64
    }

    #[inline]
    pub fn from_bit(bit: u64) -> Strand {
        if bit & 1 == 0 {
            Strand::Forward
        } else {
            Strand::Reverse
        }
    }

    pub fn to_char(self) -> char {
        match self {
            Strand::Forward => '+',
            Strand::Reverse => '-',
        }
    }
}

/// Thomas Wang's invertible 64-bit integer mixer. Invertibility means
/// distinct canonical k-mers always get distinct full hashes, so seed
/// identity can be tracked through the hash. Part of the index file
/// contract: changing this changes every bucket address.
#[inline]
pub fn mix64(mut h: u64) -> u64 {
    h = (!h).wrapping_add(h << 21);
    h ^= h >> 24;
    h = h.wrapping_add(h << 3).wrapping_add(h << 8);
    h ^= h >> 14;
    h = h.wrapping_add(h << 2).wrapping_add(h << 4);
    h ^= h >> 28;
    h = h.wrapping_add(h << 31);
    h
}

/// Largest supported k-mer length; 2k bits must fit the 64-bit encoding
/// with headroom for the mixer to stay collision-free per k-mer.
pub const MAX_K: usize = 28;

#[inline]
pub fn bucket_mask(map_bits: u32) -> u64 {
    (1u64 << map_bits) - 1
}

/// A selected minimizer: hash truncated to the map width, k-mer start
/// offset within the sequence, and which orientation won canonicalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MinimizerSeed {
    pub hash: u64,
    pub read_pos: u32,
    pub strand: Strand,
}

/// A seed match, stored diagonal-first: `delta` is `ref_pos - read_pos`
/// for forward matches and `ref_pos + read_pos` for reverse matches, so
/// collinear matches share one `delta` on either strand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Anchor {
    pub delta: i64,
    pub read_pos: u32,
    pub strand: Strand,
}

impl Anchor {
    /// Reference offset of the matched k-mer start.
    #[inline]
    pub fn ref_pos(&self) -> i64 {
        match self.strand {
            Strand::Forward => self.delta + self.read_pos as i64,
            Strand::Reverse => self.delta - self.read_pos as i64,
        }
    }
}

/// Full-hash minimizers of `seq`: for every window of `w` consecutive
/// valid k-mers, the position with the minimum mixed hash (leftmost on
/// ties), each position emitted once. K-mers containing N are skipped;
/// a sequence with fewer than `w` k-mers is treated as a single window.
pub(crate) fn minimizer_positions(seq: &[u8], k: usize, w: usize) -> Vec<(u64, u32, Strand)> {
    assert!((1..=MAX_K).contains(&k), "k must be in 1..={MAX_K}");
    assert!(w >= 1, "w must be at least 1");
    let n = seq.len();
    if n < k {
        return Vec::new();
    }
    let n_kmers = n - k + 1;

    // Mixed hash and canonical strand per k-mer start; None where the
    // k-mer contains a non-ACGT symbol.
    let mut hashes: Vec<Option<(u64, Strand)>> = vec![None; n_kmers];
    let mask = (1u64 << (2 * k)) - 1;
    let rev_shift = 2 * (k - 1);
    let mut fwd = 0u64;
    let mut rev = 0u64;
    let mut run = 0usize;
    for (i, &sym) in seq.iter().enumerate() {
        if sym >= 4 {
            run = 0;
            fwd = 0;
            rev = 0;
            continue;
        }
        let c = sym as u64;
        fwd = ((fwd << 2) | c) & mask;
        rev = (rev >> 2) | ((3 - c) << rev_shift);
        run += 1;
        if run >= k {
            let (canon, strand) = if fwd <= rev {
                (fwd, Strand::Forward)
            } else {
                (rev, Strand::Reverse)
            };
            hashes[i + 1 - k] = Some((mix64(canon), strand));
        }
    }

    let window = w.min(n_kmers);
    let mut out: Vec<(u64, u32, Strand)> = Vec::new();
    // Monotonic queue of k-mer indices with non-decreasing hash; strict
    // pops keep the leftmost among equal minima at the front.
    let mut queue: std::collections::VecDeque<usize> = std::collections::VecDeque::new();
    for j in 0..n_kmers {
        if let Some((h, _)) = hashes[j] {
            while let Some(&back) = queue.back() {
                if hashes[back].unwrap().0 > h {
                    queue.pop_back();
                } else {
                    break;
                }
            }
            queue.push_back(j);
        }
        if j + 1 >= window {
            let start = j + 1 - window;
            while let Some(&front) = queue.front() {
                if front < start {
                    queue.pop_front();
                } else {
                    break;
                }
            }
            if let Some(&front) = queue.front() {
                if out.last().is_none_or(|&(_, p, _)| p as usize != front) {
                    let (h, s) = hashes[front].unwrap();
                    out.push((h, front as u32, s));
                }
            }
        }
    }
    out
}

/// Minimizer seeds of `seq` with hashes truncated to `map_bits`, sorted by
/// position. This is the query-side counterpart of index construction.
pub fn extract_minimizers(seq: &[u8], k: usize, w: usize, map_bits: u32) -> Vec<MinimizerSeed> {
    let mask = bucket_mask(map_bits);
    minimizer_positions(seq, k, w)
        .into_iter()
        .map(|(hash, read_pos, strand)| MinimizerSeed {
            hash: hash & mask,
            read_pos,
            strand,
        })
        .collect()
}

/// Look every seed up in the index and emit one anchor per returned
/// location, in (seed order x location order). The match strand is the
/// XOR of the seed's and the location's canonical bits.
pub fn generate_anchors(seeds: &[MinimizerSeed], index: &SeedIndex) -> Vec<Anchor> {
    let mut anchors = Vec::new();
    for seed in seeds {
        for &packed in index.query(seed.hash) {
            let ref_pos = (packed >> 1) as i64;
            let strand = seed.strand.xor(Strand::from_bit(packed));
            let delta = match strand {
                Strand::Forward => ref_pos - seed.read_pos as i64,
                Strand::Reverse => ref_pos + seed.read_pos as i64,
            };
            anchors.push(Anchor {
                delta,
                read_pos: seed.read_pos,
                strand,
            });
        }
    }
    anchors
}
