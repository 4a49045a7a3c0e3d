//! Mapping-accuracy evaluation against ground truth.
//!
//! A read counts as correctly mapped when its longest mapping (largest
//! block length) lands on the truth sequence, on the truth strand, with
//! an overlap of at least 10% of the true interval length. The report
//! accumulates (mapped fraction, error rate) rows per mapping-quality
//! threshold, from high to low.

use std::collections::{BTreeMap, HashMap};
use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::pafout::PafRecord;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruthInterval {
    pub read_id: String,
    pub tname: String,
    pub tstart: u64,
    pub tend: u64,
    pub strand: char,
}

pub type TruthSet = BTreeMap<String, TruthInterval>;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("line {line}: {msg}")]
    Paf { line: u64, msg: String },
    #[error("malformed truth id '{0}' (expected <tname>!<tstart>!<tend>!<strand>!<serial>)")]
    BadTruthId(String),
    #[error("duplicate truth id '{0}'")]
    DuplicateTruthId(String),
    #[error("no truth interval for mapped read '{0}'")]
    MissingTruth(String),
    #[error("total_reads ({total}) is below the {distinct} distinct reads in the PAF")]
    TotalTooSmall { total: u64, distinct: u64 },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Decode one `<tname>!<tstart>!<tend>!<strand>!<serial>` read id.
/// Splitting happens from the right, so tname may itself contain '!'.
pub fn decode_truth_id(id: &str) -> Result<TruthInterval, EvalError> {
    let bad = || EvalError::BadTruthId(id.to_string());
    let mut fields = id.rsplitn(5, '!');
    let _serial = fields.next().ok_or_else(bad)?;
    let strand = match fields.next().ok_or_else(bad)? {
        "+" => '+',
        "-" => '-',
        _ => return Err(bad()),
    };
    let tend: u64 = fields.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
    let tstart: u64 = fields.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
    let tname = fields.next().ok_or_else(bad)?;
    if tname.is_empty() || tstart >= tend {
        return Err(bad());
    }
    Ok(TruthInterval {
        read_id: id.to_string(),
        tname: tname.to_string(),
        tstart,
        tend,
        strand,
    })
}

/// Build a truth set from name-encoded read ids. Ids must be distinct.
pub fn parse_truth_names<I, S>(ids: I) -> Result<TruthSet, EvalError>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut truth = TruthSet::new();
    for id in ids {
        let interval = decode_truth_id(id.as_ref())?;
        if truth.insert(interval.read_id.clone(), interval).is_some() {
            return Err(EvalError::DuplicateTruthId(id.as_ref().to_string()));
        }
    }
    Ok(truth)
}

/// Build a truth set from a PAF produced by a simulator or another
/// mapper: one line per read, target columns carry the true interval.
pub fn parse_truth_paf<R: BufRead>(reader: R) -> Result<TruthSet, EvalError> {
    let mut truth = TruthSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let rec: PafRecord = line.parse().map_err(|e| EvalError::Paf {
            line: i as u64 + 1,
            msg: format!("{e}"),
        })?;
        let interval = TruthInterval {
            read_id: rec.qname.clone(),
            tname: rec.tname,
            tstart: rec.tstart,
            tend: rec.tend,
            strand: rec.strand,
        };
        if truth.insert(rec.qname.clone(), interval).is_some() {
            return Err(EvalError::DuplicateTruthId(rec.qname));
        }
    }
    Ok(truth)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub mapq: u8,
    pub mapped_fraction: f64,
    pub error_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
    pub total_reads: u64,
    pub mapped: u64,
    pub correct: u64,
}

impl EvalReport {
    /// Fraction of reads whose primary mapping is correct, over all reads.
    pub fn correct_fraction(&self) -> f64 {
        if self.total_reads == 0 {
            0.0
        } else {
            self.correct as f64 / self.total_reads as f64
        }
    }

    /// Error rate among mapped reads at the lowest threshold.
    pub fn overall_error_rate(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.error_rate)
    }

    pub fn write_tsv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "#mapq\tmapped_fraction\terror_rate")?;
        for row in &self.rows {
            writeln!(
                w,
                "{}\t{:.6}\t{:.6}",
                row.mapq, row.mapped_fraction, row.error_rate
            )?;
        }
        writeln!(
            w,
            "#total_reads={}\tmapped={}\tcorrect={}",
            self.total_reads, self.mapped, self.correct
        )
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EvalOptions {
    /// Require the mapped strand to equal the truth strand.
    pub strand_strict: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            strand_strict: true,
        }
    }
}

/// Overlap of at least 10% of the true interval, compared in integers.
#[inline]
fn overlap_ok(rec: &PafRecord, truth: &TruthInterval) -> bool {
    let lo = rec.tstart.max(truth.tstart);
    let hi = rec.tend.min(truth.tend);
    let overlap = hi.saturating_sub(lo);
    10 * overlap >= truth.tend - truth.tstart
}

/// Evaluate a PAF stream against truth. `total_reads` is the size of the
/// read set the PAF was produced from, including unmapped reads.
pub fn evaluate<R: BufRead>(
    paf: R,
    truth: &TruthSet,
    total_reads: u64,
    options: &EvalOptions,
) -> Result<EvalReport, EvalError> {
    // Primary mapping per read: largest block_len, first one on ties.
    let mut primary: HashMap<String, PafRecord> = HashMap::new();
    for (i, line) in paf.lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let line_no = i as u64 + 1;
        let rec: PafRecord = line.parse().map_err(|e| EvalError::Paf {
            line: line_no,
            msg: format!("{e}"),
        })?;
        if rec.tname == "*" {
            continue; // unmapped sentinel
        }
        match primary.get_mut(&rec.qname) {
            Some(best) if best.block_len >= rec.block_len => {}
            Some(best) => *best = rec,
            None => {
                primary.insert(rec.qname.clone(), rec);
            }
        }
    }

    let distinct = primary.len() as u64;
    if total_reads < distinct {
        return Err(EvalError::TotalTooSmall {
            total: total_reads,
            distinct,
        });
    }

    let mut judged: Vec<(u8, bool)> = Vec::with_capacity(primary.len());
    let mut correct_total = 0u64;
    for (qname, rec) in &primary {
        let truth_iv = truth
            .get(qname)
            .ok_or_else(|| EvalError::MissingTruth(qname.clone()))?;
        let strand_ok = !options.strand_strict || rec.strand == truth_iv.strand;
        let correct = rec.tname == truth_iv.tname && strand_ok && overlap_ok(rec, truth_iv);
        if correct {
            correct_total += 1;
        }
        judged.push((rec.mapq, correct));
    }

    // Cumulative rows from the highest threshold down.
    judged.sort_by_key(|&(q, _)| std::cmp::Reverse(q));
    let mut rows = Vec::new();
    let mut cum_mapped = 0u64;
    let mut cum_wrong = 0u64;
    let mut i = 0;
    while i < judged.len() {
        let q = judged[i].0;
        while i < judged.len() && judged[i].0 == q {
            cum_mapped += 1;
            if !judged[i].1 {
                cum_wrong += 1;
            }
            i += 1;
        }
        rows.push(EvalRow {
            mapq: q,
            mapped_fraction: cum_mapped as f64 / total_reads as f64,
            error_rate: cum_wrong as f64 / cum_mapped as f64,
        });
    }

    Ok(EvalReport {
        rows,
        total_reads,
        mapped: distinct,
        correct: correct_total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn paf_line(qname: &str, strand: char, tname: &str, tstart: u64, tend: u64, block: u64, mapq: u8) -> String {
        format!("{qname}\t1000\t0\t{block}\t{strand}\t{tname}\t100000\t{tstart}\t{tend}\t{block}\t{block}\t{mapq}")
    }

    fn names_truth(ids: &[&str]) -> TruthSet {
        parse_truth_names(ids.iter().copied()).unwrap()
    }

    #[test]
    fn decode_name_grammar() {
        let iv = decode_truth_id("chr1!100!600!+!7").unwrap();
        assert_eq!(iv.tname, "chr1");
        assert_eq!(iv.tstart, 100);
        assert_eq!(iv.tend, 600);
        assert_eq!(iv.strand, '+');
        // tname containing '!' still decodes from the right.
        let iv = decode_truth_id("chr!odd!0!50!-!1").unwrap();
        assert_eq!(iv.tname, "chr!odd");
        assert!(decode_truth_id("chr1!100!600!+").is_err());
        assert!(decode_truth_id("chr1!600!100!+!7").is_err());
        assert!(decode_truth_id("chr1!a!600!+!7").is_err());
    }

    #[test]
    fn duplicate_truth_id_rejected() {
        let err = parse_truth_names(["c!0!5!+!1", "c!0!5!+!1"]).unwrap_err();
        assert!(matches!(err, EvalError::DuplicateTruthId(_)));
    }

    #[test]
    fn truth_paf_uses_target_columns() {
        let line = paf_line("r1", '-', "chr9", 500, 900, 400, 60);
        let truth = parse_truth_paf(Cursor::new(line)).unwrap();
        let iv = &truth["r1"];
        assert_eq!(iv.tname, "chr9");
        assert_eq!(iv.tstart, 500);
        assert_eq!(iv.tend, 900);
        assert_eq!(iv.strand, '-');
    }

    #[test]
    fn exact_interval_is_correct() {
        let truth = names_truth(&["c!100!600!+!1"]);
        let paf = paf_line("c!100!600!+!1", '+', "c", 100, 600, 500, 60);
        let report = evaluate(Cursor::new(paf), &truth, 1, &EvalOptions::default()).unwrap();
        assert_eq!(report.correct, 1);
        assert_eq!(report.overall_error_rate(), 0.0);
    }

    #[test]
    fn overlap_threshold_is_inclusive_ten_percent() {
        let truth = names_truth(&["c!0!500!+!1"]);
        // Overlap of exactly 50 bases = 10% of 500: correct.
        let at = paf_line("c!0!500!+!1", '+', "c", 450, 900, 450, 60);
        let report = evaluate(Cursor::new(at), &truth, 1, &EvalOptions::default()).unwrap();
        assert_eq!(report.correct, 1);
        // 45 bases (9%): incorrect.
        let below = paf_line("c!0!500!+!1", '+', "c", 455, 900, 445, 60);
        let report = evaluate(Cursor::new(below), &truth, 1, &EvalOptions::default()).unwrap();
        assert_eq!(report.correct, 0);
        assert_eq!(report.overall_error_rate(), 1.0);
    }

    #[test]
    fn strand_must_match_unless_relaxed() {
        let truth = names_truth(&["c!100!600!-!1"]);
        let paf = paf_line("c!100!600!-!1", '+', "c", 100, 600, 500, 60);
        let strict = evaluate(Cursor::new(paf.clone()), &truth, 1, &EvalOptions::default()).unwrap();
        assert_eq!(strict.correct, 0);
        let relaxed = evaluate(
            Cursor::new(paf),
            &truth,
            1,
            &EvalOptions {
                strand_strict: false,
            },
        )
        .unwrap();
        assert_eq!(relaxed.correct, 1);
    }

    #[test]
    fn longest_mapping_wins() {
        let truth = names_truth(&["c!0!500!+!1"]);
        // Short wrong-target mapping plus a longer correct one.
        let paf = [
            paf_line("c!0!500!+!1", '+', "other", 0, 100, 100, 0),
            paf_line("c!0!500!+!1", '+', "c", 0, 500, 500, 60),
        ]
        .join("\n");
        let report = evaluate(Cursor::new(paf), &truth, 1, &EvalOptions::default()).unwrap();
        assert_eq!(report.correct, 1);
    }

    #[test]
    fn missing_truth_is_an_error() {
        let truth = names_truth(&["c!0!500!+!1"]);
        let paf = paf_line("unknown", '+', "c", 0, 500, 500, 60);
        let err = evaluate(Cursor::new(paf), &truth, 1, &EvalOptions::default()).unwrap_err();
        match err {
            EvalError::MissingTruth(id) => assert_eq!(id, "unknown"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn bad_paf_line_numbered() {
        let truth = names_truth(&["c!0!500!+!1"]);
        let paf = format!("{}\nnot a paf line", paf_line("c!0!500!+!1", '+', "c", 0, 500, 500, 60));
        let err = evaluate(Cursor::new(paf), &truth, 1, &EvalOptions::default()).unwrap_err();
        match err {
            EvalError::Paf { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn total_must_cover_distinct_reads() {
        let truth = names_truth(&["c!0!500!+!1", "c!0!500!+!2"]);
        let paf = [
            paf_line("c!0!500!+!1", '+', "c", 0, 500, 500, 60),
            paf_line("c!0!500!+!2", '+', "c", 0, 500, 500, 60),
        ]
        .join("\n");
        let err = evaluate(Cursor::new(paf), &truth, 1, &EvalOptions::default()).unwrap_err();
        assert!(matches!(err, EvalError::TotalTooSmall { total: 1, distinct: 2 }));
    }

    #[test]
    fn rows_accumulate_downward() {
        let truth = names_truth(&["c!0!500!+!1", "c!0!500!+!2", "c!0!500!+!3"]);
        let paf = [
            paf_line("c!0!500!+!1", '+', "c", 0, 500, 500, 60),
            paf_line("c!0!500!+!2", '+', "other", 0, 500, 500, 30),
            paf_line("c!0!500!+!3", '+', "c", 0, 500, 500, 0),
        ]
        .join("\n");
        let report = evaluate(Cursor::new(paf), &truth, 4, &EvalOptions::default()).unwrap();
        let qs: Vec<u8> = report.rows.iter().map(|r| r.mapq).collect();
        assert_eq!(qs, vec![60, 30, 0]);
        assert_eq!(report.rows[0].mapped_fraction, 0.25);
        assert_eq!(report.rows[1].mapped_fraction, 0.5);
        assert_eq!(report.rows[2].mapped_fraction, 0.75);
        assert_eq!(report.rows[0].error_rate, 0.0);
        assert_eq!(report.rows[1].error_rate, 0.5);
        assert!((report.rows[2].error_rate - 1.0 / 3.0).abs() < 1e-12);
        // Mapped fraction never decreases as the threshold drops; rows are
        // consistent with totals.
        for pair in report.rows.windows(2) {
            assert!(pair[0].mapped_fraction <= pair[1].mapped_fraction);
        }
        assert_eq!(report.mapped, 3);
        assert_eq!(report.correct, 2);
    }

    #[test]
    fn unmapped_sentinels_ignored() {
        let truth = names_truth(&["c!0!500!+!1"]);
        let paf = format!(
            "{}\n{}",
            crate::pafout::unmapped_record("ghost", 100),
            paf_line("c!0!500!+!1", '+', "c", 0, 500, 500, 60)
        );
        let report = evaluate(Cursor::new(paf), &truth, 2, &EvalOptions::default()).unwrap();
        assert_eq!(report.mapped, 1);
        assert_eq!(report.correct, 1);
    }
}
