//! Command-line surface: `index`, `map`, and `eval` subcommands plus the
//! per-technology parameter presets.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::index::{build_index, load_index, save_index};
use crate::mapeval::{evaluate, parse_truth_names, parse_truth_paf, EvalOptions};
use crate::pafout::PafRecord;
use crate::pipeline::{run, PipelineConfig};
use crate::seqio::{open_input, parse_reference};
use crate::vote::{SortAlgorithm, VoteParams};

/// One named parameter bundle per sequencing technology tier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Preset {
    pub name: &'static str,
    pub k: usize,
    pub w: usize,
    pub max_occ: u32,
    pub vt_dist: u64,
    /// Read-batch capacity in symbols.
    pub batch_capacity: usize,
}

const MBP: usize = 1_000_000;

/// The nine published presets: three per technology, trading occurrence
/// cap (speed) against sensitivity.
pub const PRESETS: [Preset; 9] = [
    Preset { name: "ont1", k: 15, w: 10, max_occ: 10, vt_dist: 950, batch_capacity: 64 * MBP },
    Preset { name: "ont2", k: 15, w: 10, max_occ: 50, vt_dist: 750, batch_capacity: 32 * MBP },
    Preset { name: "ont3", k: 15, w: 10, max_occ: 100, vt_dist: 700, batch_capacity: 16 * MBP },
    Preset { name: "hifi1", k: 19, w: 19, max_occ: 1, vt_dist: 5000, batch_capacity: 128 * MBP },
    Preset { name: "hifi2", k: 19, w: 19, max_occ: 2, vt_dist: 4000, batch_capacity: 128 * MBP },
    Preset { name: "hifi3", k: 19, w: 19, max_occ: 5, vt_dist: 4000, batch_capacity: 128 * MBP },
    Preset { name: "ilmn1", k: 21, w: 11, max_occ: 50, vt_dist: 10, batch_capacity: 32 * MBP },
    Preset { name: "ilmn2", k: 21, w: 11, max_occ: 150, vt_dist: 10, batch_capacity: 32 * MBP },
    Preset { name: "ilmn3", k: 21, w: 11, max_occ: 450, vt_dist: 10, batch_capacity: 32 * MBP },
];

pub fn preset_by_name(name: &str) -> Option<&'static Preset> {
    let lower = name.to_ascii_lowercase();
    PRESETS.iter().find(|p| p.name == lower)
}

impl Preset {
    /// Radix sort wins for the long-read anchor volumes of the ONT tier;
    /// merge sort wins for HiFi and Illumina.
    pub fn default_sort(&self) -> SortAlgorithm {
        if self.name.starts_with("ont") {
            SortAlgorithm::Radix
        } else {
            SortAlgorithm::Merge
        }
    }
}

fn default_map_bits(k: usize) -> u32 {
    (2 * k as u32).min(26)
}

/// Occurrence cap applied when neither a preset nor --max-occ is given.
const DEFAULT_MAX_OCC: u32 = 50;

#[derive(Debug, Parser)]
#[command(
    name = "seedvote",
    version,
    about = "Seed-and-vote read mapper: minimizer index, segment voting, PAF output"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a reference index from a FASTA file
    Index(IndexArgs),
    /// Map FASTQ reads against an index, writing PAF
    Map(MapArgs),
    /// Score mappings against ground truth
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
struct IndexArgs {
    /// Reference FASTA (optionally gzip-compressed)
    reference: PathBuf,
    /// Output index file
    output: PathBuf,
    /// Named preset (ont1-3, hifi1-3, ilmn1-3) supplying k, w, and max_occ
    #[arg(long)]
    preset: Option<String>,
    /// K-mer length (required without --preset)
    #[arg(long)]
    k: Option<usize>,
    /// Minimizer window size (required without --preset)
    #[arg(long)]
    w: Option<usize>,
    /// Map-array address width in bits [default: min(2k, 26)]
    #[arg(long)]
    map_bits: Option<u32>,
    /// Drop seeds occurring more often than this [default: preset value or 50]
    #[arg(long)]
    max_occ: Option<u32>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SortArg {
    Radix,
    Merge,
}

impl From<SortArg> for SortAlgorithm {
    fn from(s: SortArg) -> Self {
        match s {
            SortArg::Radix => SortAlgorithm::Radix,
            SortArg::Merge => SortAlgorithm::Merge,
        }
    }
}

#[derive(Debug, Args)]
struct MapArgs {
    /// Index file built by `seedvote index`
    index: PathBuf,
    /// Read files in FASTQ format (optionally gzip-compressed)
    #[arg(required = true)]
    reads: Vec<PathBuf>,
    /// Named preset; its k and w must match the index
    #[arg(long)]
    preset: Option<String>,
    /// Maximum delta gap joining consecutive anchors into one segment
    /// (required without --preset)
    #[arg(long)]
    vt_dist: Option<u64>,
    /// Batch capacity in symbols (required without --preset)
    #[arg(long)]
    batch: Option<usize>,
    /// Sort/vote worker threads
    #[arg(long, default_value_t = 8)]
    threads: usize,
    /// Seed-and-query workers; also the in-flight batch cap
    #[arg(long, default_value_t = 4)]
    kernel_workers: usize,
    /// Minimum voting score for a segment to be reported
    #[arg(long, default_value_t = 2)]
    min_score: u32,
    /// Minimum read-span length for a segment to be reported
    #[arg(long, default_value_t = 0)]
    min_len: u32,
    /// Maximum segments kept per read
    #[arg(long, default_value_t = 5)]
    max_segments: usize,
    /// Anchor sort algorithm [default: radix for ONT presets, merge otherwise]
    #[arg(long, value_enum)]
    sort: Option<SortArg>,
    /// Emit records in input read order (the default)
    #[arg(long, default_value_t = false)]
    ordered: bool,
    /// Emit records in completion order instead of input order
    #[arg(long, conflicts_with = "ordered")]
    unordered: bool,
    /// Emit a sentinel line for unmapped reads
    #[arg(long)]
    emit_unmapped: bool,
    /// Write PAF here instead of standard output
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Mappings to evaluate, in PAF format
    paf: PathBuf,
    /// Ground truth: the literal word `names` (decode read ids of the form
    /// <tname>!<tstart>!<tend>!<strand>!<serial>) or a path to a truth PAF
    #[arg(long)]
    truth: String,
    /// Total number of reads in the mapped read set, including unmapped
    #[arg(long)]
    total: u64,
    /// Accept mappings on either strand
    #[arg(long)]
    any_strand: bool,
}

pub fn main_entry() -> Result<()> {
    dispatch(Cli::parse())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Index(args) => cmd_index(args),
        Command::Map(args) => cmd_map(args),
        Command::Eval(args) => cmd_eval(args),
    }
}

fn lookup_preset(name: &str) -> Result<&'static Preset> {
    preset_by_name(name).with_context(|| {
        let known: Vec<&str> = PRESETS.iter().map(|p| p.name).collect();
        format!("unknown preset '{name}' (known: {})", known.join(", "))
    })
}

fn cmd_index(args: IndexArgs) -> Result<()> {
    let preset = args.preset.as_deref().map(lookup_preset).transpose()?;
    let (k, w) = match (preset, args.k, args.w) {
        (Some(p), k, w) => (k.unwrap_or(p.k), w.unwrap_or(p.w)),
        (None, Some(k), Some(w)) => (k, w),
        (None, _, _) => bail!(
            "no --preset given: the full parameter set is required (--k and --w; \
             --map-bits and --max-occ have defaults)"
        ),
    };
    let map_bits = args.map_bits.unwrap_or_else(|| default_map_bits(k));
    let max_occ = args
        .max_occ
        .or(preset.map(|p| p.max_occ))
        .unwrap_or(DEFAULT_MAX_OCC);

    let reader = open_input(&args.reference)
        .with_context(|| format!("opening {}", args.reference.display()))?;
    let reference = parse_reference(reader)
        .with_context(|| format!("parsing {}", args.reference.display()))?;
    let index = build_index(&reference, k, w, map_bits, max_occ)?;
    let out = File::create(&args.output)
        .with_context(|| format!("creating {}", args.output.display()))?;
    save_index(&index, out)?;
    eprintln!(
        "indexed {} sequences, {} bases: {} locations in {} buckets (k={k} w={w} map_bits={map_bits} max_occ={max_occ})",
        index.ref_coords.names.len(),
        index.ref_coords.total_len,
        index.key.len(),
        index.num_buckets(),
    );
    Ok(())
}

fn cmd_map(args: MapArgs) -> Result<()> {
    let index = load_index(
        File::open(&args.index).with_context(|| format!("opening {}", args.index.display()))?,
    )?;

    let preset = args.preset.as_deref().map(lookup_preset).transpose()?;
    if let Some(p) = preset {
        if p.k != index.k || p.w != index.w {
            bail!(
                "preset '{}' expects k={}, w={} but the index was built with k={}, w={}",
                p.name,
                p.k,
                p.w,
                index.k,
                index.w
            );
        }
    }
    let (vt_dist, batch_capacity) = match preset {
        Some(p) => (
            args.vt_dist.unwrap_or(p.vt_dist),
            args.batch.unwrap_or(p.batch_capacity),
        ),
        None => match (args.vt_dist, args.batch) {
            (Some(v), Some(b)) => (v, b),
            _ => bail!(
                "no --preset given: the full parameter set is required (--vt-dist and --batch)"
            ),
        },
    };
    let sort = args
        .sort
        .map(SortAlgorithm::from)
        .or(preset.map(|p| p.default_sort()))
        .unwrap_or(SortAlgorithm::Radix);

    let config = PipelineConfig {
        threads: args.threads,
        kernel_workers: args.kernel_workers,
        batch_capacity,
        vote: VoteParams {
            vt_dist,
            min_score: args.min_score,
            min_len: args.min_len,
            max_segments: args.max_segments,
        },
        sort,
        ordered_output: !args.unordered,
        emit_unmapped: args.emit_unmapped,
    };

    let mut inputs = Vec::with_capacity(args.reads.len());
    for path in &args.reads {
        inputs.push(open_input(path).with_context(|| format!("opening {}", path.display()))?);
    }
    let sink: Box<dyn Write + Send> = match &args.output {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("creating {}", path.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout())),
    };

    let stats = run(&config, &index, inputs, sink)?;
    stats.write_key_values(&mut io::stderr().lock())?;
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let truth = if args.truth == "names" {
        // Decode truth from the distinct read ids appearing in the PAF.
        let reader = open_input(&args.paf)?;
        let mut ids = std::collections::BTreeSet::new();
        use std::io::BufRead;
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let rec: PafRecord = line
                .parse()
                .with_context(|| format!("line {line_no} of {}", args.paf.display()))?;
            ids.insert(rec.qname);
        }
        parse_truth_names(ids.iter().map(String::as_str))?
    } else {
        parse_truth_paf(open_input(&PathBuf::from(&args.truth))?)?
    };

    let options = EvalOptions {
        strand_strict: !args.any_strand,
    };
    let report = evaluate(open_input(&args.paf)?, &truth, args.total, &options)?;
    report.write_tsv(&mut io::stdout().lock())?;
    Ok(())
}
