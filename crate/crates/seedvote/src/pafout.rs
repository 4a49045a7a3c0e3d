//! PAF record construction and parsing (12 mandatory columns).

use std::fmt;
use std::str::FromStr;

use crate::seqio::RefCoords;
use crate::vote::SegmentPair;

/// One PAF line. `mapq` is 0..=60, or 255 on unmapped sentinel records.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PafRecord {
    pub qname: String,
    pub qlen: u64,
    pub qstart: u64,
    pub qend: u64,
    pub strand: char,
    pub tname: String,
    pub tlen: u64,
    pub tstart: u64,
    pub tend: u64,
    pub n_match: u64,
    pub block_len: u64,
    pub mapq: u8,
}

impl fmt::Display for PafRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.qname,
            self.qlen,
            self.qstart,
            self.qend,
            self.strand,
            self.tname,
            self.tlen,
            self.tstart,
            self.tend,
            self.n_match,
            self.block_len,
            self.mapq
        )
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("malformed PAF record: {0}")]
pub struct PafParseError(String);

impl FromStr for PafRecord {
    type Err = PafParseError;

    /// Parse the 12 mandatory columns; trailing tag columns are ignored.
    fn from_str(line: &str) -> Result<Self, Self::Err> {
        let mut cols = line.split('\t');
        let mut next = |what: &str| {
            cols.next()
                .ok_or_else(|| PafParseError(format!("missing column {what}")))
        };
        let int = |s: &str, what: &str| {
            s.parse::<u64>()
                .map_err(|_| PafParseError(format!("bad integer in column {what}: {s:?}")))
        };
        let qname = next("qname")?.to_string();
        let qlen = int(next("qlen")?, "qlen")?;
        let qstart = int(next("qstart")?, "qstart")?;
        let qend = int(next("qend")?, "qend")?;
        let strand_col = next("strand")?;
        let strand = match strand_col {
            "+" => '+',
            "-" => '-',
            "*" => '*',
            other => return Err(PafParseError(format!("bad strand {other:?}"))),
        };
        let tname = next("tname")?.to_string();
        let tlen = int(next("tlen")?, "tlen")?;
        let tstart = int(next("tstart")?, "tstart")?;
        let tend = int(next("tend")?, "tend")?;
        let n_match = int(next("n_match")?, "n_match")?;
        let block_len = int(next("block_len")?, "block_len")?;
        let mapq_col = next("mapq")?;
        let mapq = mapq_col
            .parse::<u8>()
            .map_err(|_| PafParseError(format!("bad mapq {mapq_col:?}")))?;
        Ok(PafRecord {
            qname,
            qlen,
            qstart,
            qend,
            strand,
            tname,
            tlen,
            tstart,
            tend,
            n_match,
            block_len,
            mapq,
        })
    }
}

/// Convert score-sorted segment pairs into PAF records, resolving global
/// reference offsets to per-sequence coordinates. Segments straddling a
/// concatenation boundary are dropped.
pub fn to_paf(
    qname: &str,
    qlen: u64,
    mapped: &[(SegmentPair, u8)],
    coords: &RefCoords,
    k: usize,
) -> Vec<PafRecord> {
    let mut records = Vec::with_capacity(mapped.len());
    for &(seg, mapq) in mapped {
        if seg.ref_start < 0 {
            continue;
        }
        let (ref_start, ref_end) = (seg.ref_start as u64, seg.ref_end as u64);
        let Some(seq) = coords.locate(ref_start) else {
            continue;
        };
        let seq_start = coords.starts[seq];
        let tlen = coords.seq_len(seq);
        if ref_end > seq_start + tlen {
            continue;
        }
        let tstart = ref_start - seq_start;
        let tend = ref_end - seq_start;
        let qspan = (seg.read_end - seg.read_start) as u64;
        let block_len = qspan.max(tend - tstart);
        let n_match = (seg.score as u64 * k as u64).min(block_len);
        records.push(PafRecord {
            qname: qname.to_string(),
            qlen,
            qstart: seg.read_start as u64,
            qend: seg.read_end as u64,
            strand: seg.strand.to_char(),
            tname: coords.names[seq].clone(),
            tlen,
            tstart,
            tend,
            n_match,
            block_len,
            mapq,
        });
    }
    records
}

/// Sentinel line for a read with no surviving segment, emitted only when
/// requested.
pub fn unmapped_record(qname: &str, qlen: u64) -> PafRecord {
    PafRecord {
        qname: qname.to_string(),
        qlen,
        qstart: 0,
        qend: 0,
        strand: '*',
        tname: "*".to_string(),
        tlen: 0,
        tstart: 0,
        tend: 0,
        n_match: 0,
        block_len: 0,
        mapq: 255,
    }
}
