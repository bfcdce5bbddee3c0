//! Per-cell files: a digest-stamped metrics row and the trial log.

use std::fmt::Write as _;
use std::path::Path;

use crate::colorspace::ColorChip;
use crate::error::{Error, Result};
use crate::metrics::{Lexicon, ReportPhase, SeedMetrics, TrialRecord};

pub const METRICS_HEADER: &str = "digest,phase,listeners,upsampling,seed,acc_comm,acc_far,acc_split,acc_close,\
lexical_diversity,informativeness,informativeness_skipped,convexity,drift,drift_shared,drift_agent_only,drift_human_only";

pub const TRIAL_LOG_HEADER: &str = "word,L,a,b,e_ctx,seed";

/// Identifies one cell of the run matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellKey {
    pub phase: ReportPhase,
    pub listeners: Option<usize>,
    pub upsampling: usize,
    pub seed: u64,
}

pub(crate) fn opt_f(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn parse_opt_f(s: &str) -> Result<Option<f64>> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse().map(Some).map_err(|_| Error::Resume(format!("bad number '{s}'")))
}

fn parse_usize(s: &str) -> Result<usize> {
    s.parse().map_err(|_| Error::Resume(format!("bad count '{s}'")))
}

pub fn metrics_row(digest: &str, key: &CellKey, m: &SeedMetrics) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        digest,
        key.phase.as_str(),
        key.listeners.map(|l| l.to_string()).unwrap_or_default(),
        key.upsampling,
        key.seed,
        opt_f(m.acc_comm),
        opt_f(m.acc_by_condition[0]),
        opt_f(m.acc_by_condition[1]),
        opt_f(m.acc_by_condition[2]),
        m.lexical_diversity,
        opt_f(m.informativeness),
        m.informativeness_skipped,
        opt_f(m.convexity),
        opt_f(m.drift),
        m.drift_shared,
        m.drift_agent_only,
        m.drift_human_only
    )
}

pub fn parse_metrics_row(line: &str) -> Result<(String, CellKey, SeedMetrics)> {
    let f: Vec<&str> = line.split(',').collect();
    if f.len() != 17 {
        return Err(Error::Resume(format!("metrics row has {} fields, expected 17", f.len())));
    }
    let phase = ReportPhase::parse(f[1]).ok_or_else(|| Error::Resume(format!("bad phase '{}'", f[1])))?;
    let key = CellKey {
        phase,
        listeners: if f[2].is_empty() { None } else { Some(parse_usize(f[2])?) },
        upsampling: parse_usize(f[3])?,
        seed: f[4].parse().map_err(|_| Error::Resume(format!("bad seed '{}'", f[4])))?,
    };
    let m = SeedMetrics {
        acc_comm: parse_opt_f(f[5])?,
        acc_by_condition: [parse_opt_f(f[6])?, parse_opt_f(f[7])?, parse_opt_f(f[8])?],
        lexical_diversity: parse_usize(f[9])?,
        informativeness: parse_opt_f(f[10])?,
        informativeness_skipped: parse_usize(f[11])?,
        convexity: parse_opt_f(f[12])?,
        drift: parse_opt_f(f[13])?,
        drift_shared: parse_usize(f[14])?,
        drift_agent_only: parse_usize(f[15])?,
        drift_human_only: parse_usize(f[16])?,
    };
    Ok((f[0].to_string(), key, m))
}

pub fn write_metrics(path: &Path, digest: &str, key: &CellKey, m: &SeedMetrics) -> Result<()> {
    let text = format!("{METRICS_HEADER}\n{}\n", metrics_row(digest, key, m));
    crate::agents::write_atomic(path, text.as_bytes())
}

pub fn read_metrics(path: &Path) -> Result<(String, CellKey, SeedMetrics)> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    if lines.next() != Some(METRICS_HEADER) {
        return Err(Error::Resume(format!("{}: unexpected header", path.display())));
    }
    let row = lines.next().ok_or_else(|| Error::Resume(format!("{}: no data row", path.display())))?;
    parse_metrics_row(row)
}

pub fn trial_log_csv(lex: &Lexicon) -> String {
    let mut s = String::from(TRIAL_LOG_HEADER);
    s.push('\n');
    for r in lex.trial_log() {
        let _ = writeln!(s, "{},{:.1},{:.1},{:.1},{},{}", r.word, r.target.l(), r.target.a(), r.target.b(), r.e_ctx, r.seed);
    }
    s
}

pub fn write_trial_log(path: &Path, lex: &Lexicon) -> Result<()> {
    crate::agents::write_atomic(path, trial_log_csv(lex).as_bytes())
}

pub fn read_trial_log(path: &Path) -> Result<Lexicon> {
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>().join(",") != TRIAL_LOG_HEADER {
        return Err(Error::Resume(format!("{}: unexpected trial log header", path.display())));
    }
    let mut records = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let bad = |what: &str| Error::MalformedRow {
            path: path.to_path_buf(),
            row: i + 2,
            message: format!("bad {what}"),
        };
        let num = |k: usize, what: &str| row[k].parse::<f64>().map_err(|_| bad(what));
        records.push(TrialRecord {
            word: row[0].to_string(),
            target: ColorChip::new(num(1, "L")?, num(2, "a")?, num(3, "b")?)?,
            e_ctx: num(4, "e_ctx")?,
            seed: row[5].parse().map_err(|_| bad("seed"))?,
        });
    }
    Ok(Lexicon::from_records(records))
}
