//! Batch pipeline: parse -> seed/query/adjust (kernel) -> sort -> vote ->
//! write.
//!
//! One parser thread packs reads into batches, `kernel_workers` threads
//! turn batches into per-read anchor lists, `threads` workers sort, vote,
//! and render PAF text, and a single writer thread owns the sink. A token
//! bucket caps the number of batches in flight beyond the parser at
//! `kernel_workers`, bounding memory.

use std::collections::BTreeMap;
use std::io::{self, BufRead, Write};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use crossbeam_channel::{bounded, Receiver, Sender};
use thiserror::Error;

use crate::index::SeedIndex;
use crate::pafout;
use crate::seedquery::{extract_minimizers, generate_anchors, Anchor};
use crate::seqio::{read_batches, ReadBatch, ReadMeta, SeqIoError};
use crate::vote::{assign_mapq, sort_anchors, vote, SortAlgorithm, VoteParams};

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    /// Sort/vote/render worker count.
    pub threads: usize,
    /// Seed-and-query worker count; also the in-flight batch cap.
    pub kernel_workers: usize,
    /// Batch capacity in symbols (bases plus one terminator per read).
    pub batch_capacity: usize,
    pub vote: VoteParams,
    pub sort: SortAlgorithm,
    /// Emit records in input read order (default); otherwise in completion
    /// order.
    pub ordered_output: bool,
    /// Emit a sentinel line for reads with no surviving segment.
    pub emit_unmapped: bool,
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid pipeline configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Input(#[from] SeqIoError),
    #[error("PAF sink failed, output is partial: {0}")]
    Sink(io::Error),
}

/// Counters and per-stage wall times for one run.
#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct RunStats {
    pub reads: u64,
    pub batches: u64,
    pub anchors: u64,
    pub segments: u64,
    pub records: u64,
    pub max_in_flight: u64,
    pub parse_ns: u64,
    pub kernel_ns: u64,
    pub sort_ns: u64,
    pub vote_ns: u64,
    pub write_ns: u64,
}

impl RunStats {
    /// key=value lines, one per field, for standard error.
    pub fn write_key_values<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "reads={}", self.reads)?;
        writeln!(w, "batches={}", self.batches)?;
        writeln!(w, "anchors={}", self.anchors)?;
        writeln!(w, "segments={}", self.segments)?;
        writeln!(w, "records={}", self.records)?;
        writeln!(w, "max_in_flight={}", self.max_in_flight)?;
        writeln!(w, "parse_ms={:.3}", self.parse_ns as f64 / 1e6)?;
        writeln!(w, "kernel_ms={:.3}", self.kernel_ns as f64 / 1e6)?;
        writeln!(w, "sort_ms={:.3}", self.sort_ns as f64 / 1e6)?;
        writeln!(w, "vote_ms={:.3}", self.vote_ns as f64 / 1e6)?;
        writeln!(w, "write_ms={:.3}", self.write_ns as f64 / 1e6)
    }
}

#[derive(Default)]
struct SharedStats {
    reads: AtomicU64,
    batches: AtomicU64,
    anchors: AtomicU64,
    segments: AtomicU64,
    records: AtomicU64,
    in_flight: AtomicU64,
    max_in_flight: AtomicU64,
    parse_ns: AtomicU64,
    kernel_ns: AtomicU64,
    sort_ns: AtomicU64,
    vote_ns: AtomicU64,
    write_ns: AtomicU64,
}

impl SharedStats {
    fn enter_flight(&self) {
        let now = self.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
        self.max_in_flight.fetch_max(now, Ordering::SeqCst);
    }

    fn leave_flight(&self) {
        self.in_flight.fetch_sub(1, Ordering::SeqCst);
    }

    fn snapshot(&self) -> RunStats {
        RunStats {
            reads: self.reads.load(Ordering::SeqCst),
            batches: self.batches.load(Ordering::SeqCst),
            anchors: self.anchors.load(Ordering::SeqCst),
            segments: self.segments.load(Ordering::SeqCst),
            records: self.records.load(Ordering::SeqCst),
            max_in_flight: self.max_in_flight.load(Ordering::SeqCst),
            parse_ns: self.parse_ns.load(Ordering::SeqCst),
            kernel_ns: self.kernel_ns.load(Ordering::SeqCst),
            sort_ns: self.sort_ns.load(Ordering::SeqCst),
            vote_ns: self.vote_ns.load(Ordering::SeqCst),
            write_ns: self.write_ns.load(Ordering::SeqCst),
        }
    }
}

struct KernelJob {
    serial: u64,
    batch: ReadBatch,
}

struct VoteJob {
    serial: u64,
    reads: Vec<(ReadMeta, Vec<Anchor>)>,
}

struct WriteJob {
    serial: u64,
    text: String,
}

/// Map every read from `inputs` against `index`, writing PAF to `sink`.
/// The index is shared read-only across workers; each batch is owned by
/// exactly one stage at a time.
pub fn run(
    config: &PipelineConfig,
    index: &SeedIndex,
    inputs: Vec<Box<dyn BufRead + Send>>,
    sink: Box<dyn Write + Send>,
) -> Result<RunStats, PipelineError> {
    if config.threads < 1 {
        return Err(PipelineError::Config("threads must be at least 1".into()));
    }
    if config.kernel_workers < 1 {
        return Err(PipelineError::Config(
            "kernel_workers must be at least 1".into(),
        ));
    }
    if config.batch_capacity < 2 {
        return Err(PipelineError::Config(
            "batch capacity must hold at least one base and terminator".into(),
        ));
    }

    let m = config.kernel_workers;
    let stats = SharedStats::default();
    let first_error: Mutex<Option<PipelineError>> = Mutex::new(None);

    let store_error = |e: PipelineError| {
        let mut slot = first_error.lock().unwrap();
        if slot.is_none() {
            *slot = Some(e);
        }
    };

    std::thread::scope(|scope| {
        let (kernel_tx, kernel_rx) = bounded::<KernelJob>(m);
        let (vote_tx, vote_rx) = bounded::<VoteJob>(m);
        let (write_tx, write_rx) = bounded::<WriteJob>(m + config.threads);
        // Token bucket: at most m batches past the parser at any time.
        let (token_tx, token_rx) = bounded::<()>(m);
        for _ in 0..m {
            token_tx.send(()).unwrap();
        }

        // Parser.
        scope.spawn(|| {
            let kernel_tx = kernel_tx;
            let token_rx = token_rx;
            let mut serial = 0u64;
            let t0 = Instant::now();
            'outer: for input in inputs {
                for item in read_batches(input, config.batch_capacity) {
                    match item {
                        Ok(batch) => {
                            stats.reads.fetch_add(batch.num_reads() as u64, Ordering::SeqCst);
                            stats.batches.fetch_add(1, Ordering::SeqCst);
                            if token_rx.recv().is_err() {
                                break 'outer;
                            }
                            stats.enter_flight();
                            if kernel_tx.send(KernelJob { serial, batch }).is_err() {
                                break 'outer;
                            }
                            serial += 1;
                        }
                        Err(e) => {
                            store_error(e.into());
                            break 'outer;
                        }
                    }
                }
            }
            stats.parse_ns.fetch_add(t0.elapsed().as_nanos() as u64, Ordering::SeqCst);
        });

        // Kernel workers: minimizer extraction, index query, delta
        // adjustment.
        for _ in 0..m {
            let kernel_rx: Receiver<KernelJob> = kernel_rx.clone();
            let vote_tx: Sender<VoteJob> = vote_tx.clone();
            let stats = &stats;
            scope.spawn(move || {
                for KernelJob { serial, batch } in kernel_rx.iter() {
                    let t0 = Instant::now();
                    let mut reads = Vec::with_capacity(batch.num_reads());
                    let mut anchor_count = 0u64;
                    for i in 0..batch.num_reads() {
                        let seeds = extract_minimizers(
                            batch.read_seq(i),
                            index.k,
                            index.w,
                            index.map_bits,
                        );
                        let anchors = generate_anchors(&seeds, index);
                        anchor_count += anchors.len() as u64;
                        reads.push((batch.metadata[i].clone(), anchors));
                    }
                    stats.anchors.fetch_add(anchor_count, Ordering::SeqCst);
                    stats
                        .kernel_ns
                        .fetch_add(t0.elapsed().as_nanos() as u64, Ordering::SeqCst);
                    if vote_tx.send(VoteJob { serial, reads }).is_err() {
                        return;
                    }
                }
            });
        }
        drop(kernel_rx);
        drop(vote_tx);

        // Vote workers: sort, vote, mapq, PAF rendering.
        let coords = &index.ref_coords;
        for _ in 0..config.threads {
            let vote_rx: Receiver<VoteJob> = vote_rx.clone();
            let write_tx: Sender<WriteJob> = write_tx.clone();
            let stats = &stats;
            scope.spawn(move || {
                for VoteJob { serial, reads } in vote_rx.iter() {
                    let mut text = String::new();
                    let mut segment_count = 0u64;
                    let mut record_count = 0u64;
                    for (meta, mut anchors) in reads {
                        let t_sort = Instant::now();
                        sort_anchors(&mut anchors, config.sort);
                        stats
                            .sort_ns
                            .fetch_add(t_sort.elapsed().as_nanos() as u64, Ordering::SeqCst);

                        let t_vote = Instant::now();
                        let segments = vote(&anchors, index.k, &config.vote)
                            .expect("sorted anchors cannot violate the vote contract");
                        segment_count += segments.len() as u64;
                        let mapped = assign_mapq(&segments);
                        let records =
                            pafout::to_paf(&meta.id, meta.len as u64, &mapped, coords, index.k);
                        if records.is_empty() && config.emit_unmapped {
                            text.push_str(
                                &pafout::unmapped_record(&meta.id, meta.len as u64).to_string(),
                            );
                            text.push('\n');
                            record_count += 1;
                        }
                        for rec in records {
                            text.push_str(&rec.to_string());
                            text.push('\n');
                            record_count += 1;
                        }
                        stats
                            .vote_ns
                            .fetch_add(t_vote.elapsed().as_nanos() as u64, Ordering::SeqCst);
                    }
                    stats.segments.fetch_add(segment_count, Ordering::SeqCst);
                    stats.records.fetch_add(record_count, Ordering::SeqCst);
                    if write_tx.send(WriteJob { serial, text }).is_err() {
                        return;
                    }
                }
            });
        }
        drop(vote_rx);
        drop(write_tx);

        // Writer: the only thread touching the sink. A sink failure drops
        // the writer's channel ends, which unblocks and stops every
        // upstream stage.
        scope.spawn(|| {
            let write_rx: Receiver<WriteJob> = write_rx;
            let token_tx = token_tx;
            let mut sink = sink;
            let mut failed = false;
            let mut pending: BTreeMap<u64, String> = BTreeMap::new();
            let mut next_serial = 0u64;
            let write = |sink: &mut Box<dyn Write + Send>, text: &str, failed: &mut bool| {
                let t0 = Instant::now();
                if let Err(e) = sink.write_all(text.as_bytes()) {
                    store_error(PipelineError::Sink(e));
                    *failed = true;
                }
                stats
                    .write_ns
                    .fetch_add(t0.elapsed().as_nanos() as u64, Ordering::SeqCst);
            };
            'writing: for WriteJob { serial, text } in write_rx.iter() {
                if config.ordered_output {
                    pending.insert(serial, text);
                    while let Some(text) = pending.remove(&next_serial) {
                        write(&mut sink, &text, &mut failed);
                        if failed {
                            break 'writing;
                        }
                        next_serial += 1;
                        stats.leave_flight();
                        let _ = token_tx.send(());
                    }
                } else {
                    write(&mut sink, &text, &mut failed);
                    if failed {
                        break 'writing;
                    }
                    stats.leave_flight();
                    let _ = token_tx.send(());
                }
            }
            if !failed {
                // Serial gaps only happen after an upstream error; flush
                // what arrived, still in serial order.
                for (_, text) in pending {
                    write(&mut sink, &text, &mut failed);
                    if failed {
                        break;
                    }
                }
            }
            if !failed {
                if let Err(e) = sink.flush() {
                    store_error(PipelineError::Sink(e));
                }
            }
        });
    });

    if let Some(e) = first_error.into_inner().unwrap() {
        return Err(e);
    }
    Ok(stats.snapshot())
}
