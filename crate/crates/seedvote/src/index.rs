//! Two-array minimizer index of a reference genome.
//!
//! The map array holds cumulative offsets indexed by truncated seed hash,
//! so a query reads `map[h]` and `map[h+1]` and then one contiguous slice
//! of the key array. Key entries pack a global reference offset with the
//! canonical-strand bit. Seeds occurring more than `max_occ` times are
//! dropped entirely at construction, locations included.

use std::io::{self, Read, Write};

use thiserror::Error;

use crate::seedquery::{bucket_mask, minimizer_positions, Strand, MAX_K};
use crate::seqio::{EncodedReference, RefCoords};

const MAGIC: &[u8; 4] = b"GSIX";
const VERSION: u32 = 1;

/// Hard cap on the map-array address width; wider maps would not fit in
/// host memory, so such configurations are rejected rather than spilled.
pub const MAX_MAP_BITS: u32 = 32;

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("invalid index configuration: {0}")]
    Config(String),
    #[error("not an index file (bad magic)")]
    BadMagic,
    #[error("unsupported index version {0} (expected {VERSION})")]
    Version(u32),
    #[error("corrupt index file: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// The immutable seed index plus the reference layout it was built from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedIndex {
    pub k: usize,
    pub w: usize,
    pub map_bits: u32,
    pub max_occ: u32,
    pub ref_coords: RefCoords,
    /// 2^map_bits + 1 cumulative offsets into `key`.
    pub map: Vec<u64>,
    /// Packed locations: bits 63..=1 reference offset, bit 0 strand.
    pub key: Vec<u64>,
}

#[inline]
pub fn pack_location(ref_pos: u64, strand: Strand) -> u64 {
    (ref_pos << 1) | strand.bit()
}

#[inline]
pub fn unpack_location(packed: u64) -> (u64, Strand) {
    (packed >> 1, Strand::from_bit(packed))
}

impl SeedIndex {
    /// Locations of the seed hashing to bucket `hash` (already truncated
    /// to `map_bits`), sorted by reference offset. Empty if the seed was
    /// filtered or never seen.
    #[inline]
    pub fn query(&self, hash: u64) -> &[u64] {
        let h = hash as usize;
        debug_assert!(h + 1 < self.map.len(), "hash not truncated to map_bits");
        let start = self.map[h] as usize;
        let end = self.map[h + 1] as usize;
        &self.key[start..end]
    }

    #[inline]
    pub fn bucket_mask(&self) -> u64 {
        bucket_mask(self.map_bits)
    }

    pub fn num_buckets(&self) -> usize {
        self.map.len() - 1
    }
}

fn check_params(k: usize, w: usize, map_bits: u32, max_occ: u32) -> Result<(), IndexError> {
    if !(1..=MAX_K).contains(&k) {
        return Err(IndexError::Config(format!("k={k} outside 1..={MAX_K}")));
    }
    if w < 1 {
        return Err(IndexError::Config("w must be at least 1".into()));
    }
    if map_bits as usize > 2 * k {
        return Err(IndexError::Config(format!(
            "map_bits={map_bits} exceeds 2k={}",
            2 * k
        )));
    }
    if map_bits > MAX_MAP_BITS {
        return Err(IndexError::Config(format!(
            "map_bits={map_bits} exceeds the supported maximum {MAX_MAP_BITS}"
        )));
    }
    if max_occ < 1 {
        return Err(IndexError::Config("max_occ must be at least 1".into()));
    }
    Ok(())
}

/// Build the index: extract minimizers per reference sequence, count
/// occurrences per seed, drop seeds over `max_occ`, and bucket the rest by
/// truncated hash. Deterministic for identical inputs.
pub fn build_index(
    reference: &EncodedReference,
    k: usize,
    w: usize,
    map_bits: u32,
    max_occ: u32,
) -> Result<SeedIndex, IndexError> {
    check_params(k, w, map_bits, max_occ)?;

    // (full hash, global position, strand); k-mers never span sequence
    // boundaries.
    let mut mins: Vec<(u64, u64, Strand)> = Vec::new();
    for s in 0..reference.num_seqs() {
        let offset = reference.starts[s];
        for (hash, pos, strand) in minimizer_positions(reference.seq(s), k, w) {
            mins.push((hash, offset + pos as u64, strand));
        }
    }

    // Occurrence filtering groups by full hash, which is per canonical
    // k-mer thanks to the invertible mixer.
    mins.sort_unstable();
    let mask = bucket_mask(map_bits);
    let mut records: Vec<(u64, u64)> = Vec::new();
    let mut i = 0;
    while i < mins.len() {
        let mut j = i + 1;
        while j < mins.len() && mins[j].0 == mins[i].0 {
            j += 1;
        }
        if j - i <= max_occ as usize {
            for &(hash, pos, strand) in &mins[i..j] {
                records.push((hash & mask, pack_location(pos, strand)));
            }
        }
        i = j;
    }

    // Bucket order, then reference order within each bucket.
    records.sort_unstable();

    let n_buckets = 1usize << map_bits;
    let mut map = vec![0u64; n_buckets + 1];
    for &(bucket, _) in &records {
        map[bucket as usize + 1] += 1;
    }
    for h in 0..n_buckets {
        map[h + 1] += map[h];
    }
    let key: Vec<u64> = records.into_iter().map(|(_, packed)| packed).collect();

    Ok(SeedIndex {
        k,
        w,
        map_bits,
        max_occ,
        ref_coords: reference.coords(),
        map,
        key,
    })
}

fn write_u32<W: Write>(w: &mut W, v: u32) -> io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn write_u64<W: Write>(w: &mut W, v: u64) -> io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, IndexError> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)
        .map_err(|_| IndexError::Corrupt("unexpected end of file".into()))?;
    Ok(u32::from_le_bytes(buf))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64, IndexError> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)
        .map_err(|_| IndexError::Corrupt("unexpected end of file".into()))?;
    Ok(u64::from_le_bytes(buf))
}

/// Serialize the index. Little-endian throughout; the layout is
/// magic, version, k, w, map_bits, max_occ, the reference name/start
/// table, total_len, then the map and key arrays with explicit lengths.
pub fn save_index<W: Write>(index: &SeedIndex, sink: W) -> Result<(), IndexError> {
    let mut w = io::BufWriter::new(sink);
    w.write_all(MAGIC)?;
    write_u32(&mut w, VERSION)?;
    write_u32(&mut w, index.k as u32)?;
    write_u32(&mut w, index.w as u32)?;
    write_u32(&mut w, index.map_bits)?;
    write_u32(&mut w, index.max_occ)?;
    write_u64(&mut w, index.ref_coords.names.len() as u64)?;
    for (name, &start) in index
        .ref_coords
        .names
        .iter()
        .zip(index.ref_coords.starts.iter())
    {
        write_u32(&mut w, name.len() as u32)?;
        w.write_all(name.as_bytes())?;
        write_u64(&mut w, start)?;
    }
    write_u64(&mut w, index.ref_coords.total_len)?;
    write_u64(&mut w, index.map.len() as u64)?;
    for &v in &index.map {
        write_u64(&mut w, v)?;
    }
    write_u64(&mut w, index.key.len() as u64)?;
    for &v in &index.key {
        write_u64(&mut w, v)?;
    }
    w.flush()?;
    Ok(())
}

/// Deserialize and validate an index written by [`save_index`].
pub fn load_index<R: Read>(source: R) -> Result<SeedIndex, IndexError> {
    let mut r = io::BufReader::new(source);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|_| IndexError::Corrupt("unexpected end of file".into()))?;
    if &magic != MAGIC {
        return Err(IndexError::BadMagic);
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(IndexError::Version(version));
    }
    let k = read_u32(&mut r)? as usize;
    let w = read_u32(&mut r)? as usize;
    let map_bits = read_u32(&mut r)?;
    let max_occ = read_u32(&mut r)?;
    check_params(k, w, map_bits, max_occ)?;

    let n_seq = read_u64(&mut r)? as usize;
    let mut names = Vec::with_capacity(n_seq);
    let mut starts = Vec::with_capacity(n_seq);
    for _ in 0..n_seq {
        let name_len = read_u32(&mut r)? as usize;
        let mut buf = vec![0u8; name_len];
        r.read_exact(&mut buf)
            .map_err(|_| IndexError::Corrupt("unexpected end of file".into()))?;
        let name = String::from_utf8(buf)
            .map_err(|_| IndexError::Corrupt("sequence name is not UTF-8".into()))?;
        names.push(name);
        starts.push(read_u64(&mut r)?);
    }
    let total_len = read_u64(&mut r)?;

    let map_len = read_u64(&mut r)? as usize;
    let expected = (1usize << map_bits) + 1;
    if map_len != expected {
        return Err(IndexError::Corrupt(format!(
            "map length {map_len} does not match map_bits {map_bits} (expected {expected})"
        )));
    }
    let mut map = Vec::with_capacity(map_len);
    for _ in 0..map_len {
        map.push(read_u64(&mut r)?);
    }
    let key_len = read_u64(&mut r)? as usize;
    if map.first() != Some(&0) || map.last() != Some(&(key_len as u64)) {
        return Err(IndexError::Corrupt("map offsets do not span the key array".into()));
    }
    let mut key = Vec::with_capacity(key_len);
    for _ in 0..key_len {
        key.push(read_u64(&mut r)?);
    }
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(IndexError::Corrupt("trailing bytes after key array".into()));
    }

    Ok(SeedIndex {
        k,
        w,
        map_bits,
        max_occ,
        ref_coords: RefCoords {
            names,
            starts,
            total_len,
        },
        map,
        key,
    })
}

/// A tiling of the map and key arrays into shards of at most
/// `shard_capacity` bytes each, gapless and non-overlapping. Offsets and
/// lengths are in array elements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShardPlan {
    pub shard_capacity: u64,
    pub map_shards: Vec<(u64, u64)>,
    pub key_shards: Vec<(u64, u64)>,
}

const ELEM_BYTES: u64 = 8;

fn tile(len: u64, per_shard: u64) -> Vec<(u64, u64)> {
    let mut shards = Vec::new();
    let mut offset = 0;
    while offset < len {
        let take = per_shard.min(len - offset);
        shards.push((offset, take));
        offset += take;
    }
    shards
}

/// Plan the minimal number of shards for a given per-shard byte capacity.
pub fn plan_shards(index: &SeedIndex, shard_capacity: u64) -> Result<ShardPlan, IndexError> {
    if shard_capacity < ELEM_BYTES {
        return Err(IndexError::Config(format!(
            "shard capacity {shard_capacity} is smaller than one {ELEM_BYTES}-byte element"
        )));
    }
    let per_shard = shard_capacity / ELEM_BYTES;
    Ok(ShardPlan {
        shard_capacity,
        map_shards: tile(index.map.len() as u64, per_shard),
        key_shards: tile(index.key.len() as u64, per_shard),
    })
}
