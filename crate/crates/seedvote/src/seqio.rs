//! FASTA/FASTQ input, sequence encoding, and read batching.
//!
//! Sequences are stored one symbol per byte using the codes
//! A=0, C=1, G=2, T=3, N=4; read batches additionally use E=5 as a
//! per-read terminator so a whole batch is a single flat symbol stream.

use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::Path;

use flate2::bufread::MultiGzDecoder;
use thiserror::Error;

pub const SYM_A: u8 = 0;
pub const SYM_C: u8 = 1;
pub const SYM_G: u8 = 2;
pub const SYM_T: u8 = 3;
pub const SYM_N: u8 = 4;
/// Read terminator inside batch buffers.
pub const SYM_E: u8 = 5;

/// Symbol-to-letter table, the inverse of [`encode_base`].
pub const SYM_CHARS: [u8; 6] = *b"ACGTNE";

#[derive(Debug, Error)]
pub enum SeqIoError {
    #[error("line {line}: {msg}")]
    Parse { line: u64, msg: String },
    #[error("read '{id}' ({len} bases) does not fit in batch capacity {capacity}")]
    ReadTooLong {
        id: String,
        len: usize,
        capacity: usize,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn parse_err(line: u64, msg: impl Into<String>) -> SeqIoError {
    SeqIoError::Parse {
        line,
        msg: msg.into(),
    }
}

/// Encode one sequence letter. Lowercase is accepted, any letter outside
/// ACGT becomes N, and non-letters are rejected.
#[inline]
pub fn encode_base(b: u8) -> Option<u8> {
    match b {
        b'A' | b'a' => Some(SYM_A),
        b'C' | b'c' => Some(SYM_C),
        b'G' | b'g' => Some(SYM_G),
        b'T' | b't' => Some(SYM_T),
        _ if b.is_ascii_alphabetic() => Some(SYM_N),
        _ => None,
    }
}

/// Sequence names and coordinate layout of a concatenated reference,
/// without the bases. This is what PAF output needs to resolve global
/// offsets back to per-sequence coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RefCoords {
    pub names: Vec<String>,
    pub starts: Vec<u64>,
    pub total_len: u64,
}

impl RefCoords {
    /// Index of the sequence containing global offset `pos`.
    pub fn locate(&self, pos: u64) -> Option<usize> {
        if pos >= self.total_len {
            return None;
        }
        Some(self.starts.partition_point(|&s| s <= pos) - 1)
    }

    pub fn seq_len(&self, i: usize) -> u64 {
        let end = self
            .starts
            .get(i + 1)
            .copied()
            .unwrap_or(self.total_len);
        end - self.starts[i]
    }
}

/// A reference genome: all sequences concatenated into one symbol array,
/// addressed by global base offsets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedReference {
    pub names: Vec<String>,
    pub starts: Vec<u64>,
    pub total_len: u64,
    pub bases: Vec<u8>,
}

impl EncodedReference {
    pub fn num_seqs(&self) -> usize {
        self.names.len()
    }

    /// Symbol slice of sequence `i`.
    pub fn seq(&self, i: usize) -> &[u8] {
        let start = self.starts[i] as usize;
        let end = self
            .starts
            .get(i + 1)
            .map(|&s| s as usize)
            .unwrap_or(self.bases.len());
        &self.bases[start..end]
    }

    pub fn coords(&self) -> RefCoords {
        RefCoords {
            names: self.names.clone(),
            starts: self.starts.clone(),
            total_len: self.total_len,
        }
    }
}

/// Parse a FASTA stream into an [`EncodedReference`]. Sequences are
/// concatenated in file order.
pub fn parse_reference<R: BufRead>(reader: R) -> Result<EncodedReference, SeqIoError> {
    let mut names: Vec<String> = Vec::new();
    let mut starts: Vec<u64> = Vec::new();
    let mut bases: Vec<u8> = Vec::new();
    let mut line_no: u64 = 0;
    let mut header_line: u64 = 0;

    for line in reader.lines() {
        line_no += 1;
        let line = line?;
        if !line.is_ascii() {
            return Err(parse_err(line_no, "non-ASCII byte"));
        }
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('>') {
            if let Some(last) = starts.last() {
                if *last == bases.len() as u64 {
                    return Err(parse_err(
                        header_line,
                        format!("record '{}' has no sequence", names.last().unwrap()),
                    ));
                }
            }
            let name = header.split_whitespace().next().unwrap_or("");
            if name.is_empty() {
                return Err(parse_err(line_no, "record with empty name"));
            }
            names.push(name.to_string());
            starts.push(bases.len() as u64);
            header_line = line_no;
        } else {
            if names.is_empty() {
                return Err(parse_err(line_no, "sequence data before first '>' header"));
            }
            for &b in line.as_bytes() {
                match encode_base(b) {
                    Some(sym) => bases.push(sym),
                    None => {
                        return Err(parse_err(
                            line_no,
                            format!("invalid sequence character {:?}", b as char),
                        ))
                    }
                }
            }
        }
    }

    if names.is_empty() {
        return Err(parse_err(line_no, "no FASTA records found"));
    }
    if *starts.last().unwrap() == bases.len() as u64 {
        return Err(parse_err(
            header_line,
            format!("record '{}' has no sequence", names.last().unwrap()),
        ));
    }

    Ok(EncodedReference {
        names,
        starts,
        total_len: bases.len() as u64,
        bases,
    })
}

/// Host-side metadata for one read in a batch; the batch buffer itself
/// carries no ids or lengths.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReadMeta {
    pub id: String,
    pub len: u32,
    pub offset: usize,
}

/// A packed batch of reads: `buffer` holds the encoded reads back to back,
/// each followed by one E symbol; `metadata` locates them.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ReadBatch {
    pub buffer: Vec<u8>,
    pub metadata: Vec<ReadMeta>,
}

impl ReadBatch {
    pub fn num_reads(&self) -> usize {
        self.metadata.len()
    }

    /// Symbol slice of read `i`, excluding its E terminator.
    pub fn read_seq(&self, i: usize) -> &[u8] {
        let m = &self.metadata[i];
        &self.buffer[m.offset..m.offset + m.len as usize]
    }
}

struct FastqRecords<R: BufRead> {
    reader: R,
    line_no: u64,
    line: String,
}

impl<R: BufRead> FastqRecords<R> {
    fn new(reader: R) -> Self {
        FastqRecords {
            reader,
            line_no: 0,
            line: String::new(),
        }
    }

    fn next_line(&mut self) -> Result<Option<&str>, SeqIoError> {
        self.line.clear();
        let n = self.reader.read_line(&mut self.line)?;
        if n == 0 {
            return Ok(None);
        }
        self.line_no += 1;
        if !self.line.is_ascii() {
            return Err(parse_err(self.line_no, "non-ASCII byte"));
        }
        while self.line.ends_with('\n') || self.line.ends_with('\r') {
            self.line.pop();
        }
        Ok(Some(self.line.as_str()))
    }

    /// Next 4-line record, or None at end of input.
    fn next_record(&mut self) -> Result<Option<(String, Vec<u8>)>, SeqIoError> {
        // Header; blank lines between records are tolerated.
        let header = loop {
            match self.next_line()? {
                None => return Ok(None),
                Some("") => continue,
                Some(l) => break l.to_string(),
            }
        };
        let header_line = self.line_no;
        let id = header
            .strip_prefix('@')
            .ok_or_else(|| parse_err(header_line, "expected '@' header"))?
            .split_whitespace()
            .next()
            .unwrap_or("")
            .to_string();
        if id.is_empty() {
            return Err(parse_err(header_line, "record with empty name"));
        }

        if self.next_line()?.is_none() {
            return Err(parse_err(header_line, format!("truncated record '{id}'")));
        }
        let seq_no = self.line_no;
        let mut seq = Vec::with_capacity(self.line.len());
        for i in 0..self.line.len() {
            let b = self.line.as_bytes()[i];
            match encode_base(b) {
                Some(sym) => seq.push(sym),
                None => {
                    return Err(parse_err(
                        seq_no,
                        format!("invalid sequence character {:?}", b as char),
                    ))
                }
            }
        }

        match self.next_line()? {
            Some(l) if l.starts_with('+') => {}
            Some(_) => return Err(parse_err(self.line_no, "expected '+' separator line")),
            None => return Err(parse_err(header_line, format!("truncated record '{id}'"))),
        }

        if self.next_line()?.is_none() {
            return Err(parse_err(header_line, format!("truncated record '{id}'")));
        }
        if self.line.len() != seq.len() {
            return Err(parse_err(
                self.line_no,
                format!(
                    "quality length {} does not match sequence length {}",
                    self.line.len(),
                    seq.len()
                ),
            ));
        }
        // Qualities are discarded.
        Ok(Some((id, seq)))
    }
}

/// Streaming batcher over a FASTQ source. Reads are packed greedily in
/// input order; a read never spans two batches.
pub struct ReadBatches<R: BufRead> {
    records: FastqRecords<R>,
    capacity: usize,
    pending: Option<(String, Vec<u8>)>,
    failed: bool,
}

/// Iterate batches of at most `capacity` symbols (bases plus one E per read).
pub fn read_batches<R: BufRead>(reader: R, capacity: usize) -> ReadBatches<R> {
    assert!(capacity > 1, "batch capacity must exceed one symbol");
    ReadBatches {
        records: FastqRecords::new(reader),
        capacity,
        pending: None,
        failed: false,
    }
}

impl<R: BufRead> Iterator for ReadBatches<R> {
    type Item = Result<ReadBatch, SeqIoError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        let mut batch = ReadBatch::default();
        loop {
            let (id, seq) = match self.pending.take() {
                Some(rec) => rec,
                None => match self.records.next_record() {
                    Ok(Some(rec)) => rec,
                    Ok(None) => break,
                    Err(e) => {
                        self.failed = true;
                        return Some(Err(e));
                    }
                },
            };
            if seq.len() + 1 > self.capacity {
                self.failed = true;
                return Some(Err(SeqIoError::ReadTooLong {
                    id,
                    len: seq.len(),
                    capacity: self.capacity,
                }));
            }
            if batch.buffer.len() + seq.len() + 1 > self.capacity {
                self.pending = Some((id, seq));
                return Some(Ok(batch));
            }
            batch.metadata.push(ReadMeta {
                id,
                len: seq.len() as u32,
                offset: batch.buffer.len(),
            });
            batch.buffer.extend_from_slice(&seq);
            batch.buffer.push(SYM_E);
        }
        if batch.metadata.is_empty() {
            None
        } else {
            Some(Ok(batch))
        }
    }
}

/// Open a file as a buffered reader, transparently decoding gzip.
pub fn open_input(path: &Path) -> io::Result<Box<dyn BufRead + Send>> {
    let file = File::open(path)?;
    let mut reader = BufReader::new(file);
    let head = reader.fill_buf()?;
    if head.len() >= 2 && head[0] == 0x1f && head[1] == 0x8b {
        Ok(Box::new(BufReader::new(MultiGzDecoder::new(reader))))
    } else {
        Ok(Box::new(reader))
    }
}
