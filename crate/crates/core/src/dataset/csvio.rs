use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use crate::colorspace::{hsl_to_cielab, ColorChip, HslColor};
use crate::error::{Error, Result};

use super::{Condition, Corpus, Source, Trial};

/// Which color columns an input CSV carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SchemaMode {
    /// `target_L,target_a,target_b,alt1_L,...` in CIELAB units.
    Cielab,
    /// `target_h,target_s,target_l,alt1_h,...`; hue in degrees, saturation
    /// and lightness in percent.
    Hsl,
}

impl FromStr for SchemaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cielab" | "lab" => Ok(SchemaMode::Cielab),
            "hsl" => Ok(SchemaMode::Hsl),
            other => Err(Error::Config(format!("unknown schema mode {other:?} (expected cielab or hsl)"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct IngestReport {
    pub corpus: Corpus,
    pub skipped_multiword: usize,
    pub skipped_unsuccessful: usize,
    pub skipped_degenerate: usize,
}

const PREFIXES: [&str; 3] = ["target", "alt1", "alt2"];

struct Columns {
    condition: usize,
    word: usize,
    outcome: Option<usize>,
    source: Option<usize>,
    colors: [[usize; 3]; 3],
}

impl Columns {
    fn locate(headers: &csv::StringRecord, mode: SchemaMode, path: &Path) -> Result<Self> {
        let index: HashMap<&str, usize> = headers.iter().enumerate().map(|(i, h)| (h.trim(), i)).collect();
        let need = |name: &str| {
            index.get(name).copied().ok_or_else(|| Error::MalformedRow {
                path: path.to_path_buf(),
                row: 1,
                message: format!("missing column {name:?}"),
            })
        };
        let suffixes = match mode {
            SchemaMode::Cielab => ["L", "a", "b"],
            SchemaMode::Hsl => ["h", "s", "l"],
        };
        let mut colors = [[0usize; 3]; 3];
        for (p, prefix) in PREFIXES.iter().enumerate() {
            for (k, suffix) in suffixes.iter().enumerate() {
                colors[p][k] = need(&format!("{prefix}_{suffix}"))?;
            }
        }
        Ok(Self {
            condition: need("condition")?,
            word: need("word")?,
            outcome: index.get("outcome").copied(),
            source: index.get("source").copied(),
            colors,
        })
    }
}

fn parse_outcome(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" | "success" | "correct" => Some(true),
        "false" | "0" | "no" | "failure" | "incorrect" => Some(false),
        _ => None,
    }
}

/// Reads a Colors-style CSV and keeps successful single-word trials.
///
/// Row numbers in errors count the header as row 1.
pub fn ingest_colors_csv(path: impl AsRef<Path>, mode: SchemaMode) -> Result<IngestReport> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(File::open(path)?);
    let headers = reader.headers()?.clone();
    let cols = Columns::locate(&headers, mode, path)?;

    let mut trials = Vec::new();
    let (mut multiword, mut unsuccessful, mut degenerate) = (0, 0, 0);
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let malformed = |message: String| Error::MalformedRow {
            path: path.to_path_buf(),
            row,
            message,
        };
        let record = record.map_err(|e| malformed(e.to_string()))?;
        let field = |idx: usize| record.get(idx).unwrap_or("").trim();

        if let Some(idx) = cols.outcome {
            match parse_outcome(field(idx)) {
                Some(true) => {}
                Some(false) => {
                    unsuccessful += 1;
                    continue;
                }
                None => return Err(malformed(format!("unparseable outcome {:?}", field(idx)))),
            }
        }

        let label = field(cols.condition);
        let condition: Condition = label.parse().map_err(|label| Error::UnknownCondition {
            path: path.to_path_buf(),
            row,
            label,
        })?;

        let word = field(cols.word).to_lowercase();
        let human_word = if word.is_empty() {
            None
        } else if word.split_whitespace().count() > 1 {
            multiword += 1;
            continue;
        } else {
            Some(word)
        };

        let mut chips = [ColorChip::from_tenths(0, 0, 0)?; 3];
        for (p, chip) in chips.iter_mut().enumerate() {
            let mut v = [0.0f64; 3];
            for k in 0..3 {
                let raw = field(cols.colors[p][k]);
                v[k] = raw
                    .parse::<f64>()
                    .map_err(|_| malformed(format!("column {}: not a number: {raw:?}", &headers[cols.colors[p][k]])))?;
            }
            *chip = match mode {
                SchemaMode::Cielab => ColorChip::new(v[0], v[1], v[2]).map_err(|e| malformed(e.to_string()))?,
                SchemaMode::Hsl => {
                    let hsl = HslColor::new(v[0], v[1] / 100.0, v[2] / 100.0).map_err(|e| malformed(e.to_string()))?;
                    hsl_to_cielab(hsl)
                }
            };
        }

        let source = match cols.source.map(field) {
            None | Some("") | Some("human") => Source::Human,
            Some("generated") => Source::Generated,
            Some(other) => return Err(malformed(format!("unknown source {other:?}"))),
        };

        match Trial::new(chips[0], [chips[1], chips[2]], condition, human_word, source) {
            Ok(t) => trials.push(t),
            Err(_) => degenerate += 1,
        }
    }
    if multiword + unsuccessful + degenerate > 0 {
        log::info!(
            "{}: kept {} trials; skipped {} multi-word, {} unsuccessful, {} degenerate",
            path.display(),
            trials.len(),
            multiword,
            unsuccessful,
            degenerate
        );
    }
    Ok(IngestReport {
        corpus: Corpus::new(trials),
        skipped_multiword: multiword,
        skipped_unsuccessful: unsuccessful,
        skipped_degenerate: degenerate,
    })
}

const CANONICAL_HEADER: &str =
    "condition,target_L,target_a,target_b,alt1_L,alt1_a,alt1_b,alt2_L,alt2_a,alt2_b,word,source\n";

/// Canonical corpus CSV: CIELAB at one decimal place, condition, word, source.
pub fn write_corpus(corpus: &Corpus, mut out: impl Write) -> Result<()> {
    let mut buf = String::with_capacity(64 * (corpus.len() + 1));
    buf.push_str(CANONICAL_HEADER);
    for t in corpus.trials() {
        buf.push_str(t.condition.as_str());
        for c in t.candidates() {
            buf.push_str(&format!(",{:.1},{:.1},{:.1}", c.l(), c.a(), c.b()));
        }
        buf.push(',');
        buf.push_str(t.human_word.as_deref().unwrap_or(""));
        buf.push(',');
        buf.push_str(t.source.as_str());
        buf.push('\n');
    }
    out.write_all(buf.as_bytes())?;
    Ok(())
}

/// Reads a canonical corpus file written by [`write_corpus`].
pub fn read_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let mut text = String::new();
    File::open(path)?.read_to_string(&mut text)?;
    if !text.starts_with(CANONICAL_HEADER.trim_end()) {
        return Err(Error::MalformedRow {
            path: path.to_path_buf(),
            row: 1,
            message: "not a canonical corpus file".into(),
        });
    }
    let report = ingest_colors_csv(path, SchemaMode::Cielab)?;
    if report.skipped_degenerate + report.skipped_multiword > 0 {
        return Err(Error::MalformedRow {
            path: path.to_path_buf(),
            row: 0,
            message: "canonical corpus contains rows that do not form valid trials".into(),
        });
    }
    Ok(report.corpus)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    const HSL_HEADER: &str =
        "condition,target_h,target_s,target_l,alt1_h,alt1_s,alt1_l,alt2_h,alt2_s,alt2_l,word,outcome\n";

    #[test]
    fn hand_built_fixture_skips_multiword() {
        let f = write_tmp(&format!(
            "{HSL_HEADER}far,120,100,50,240,100,50,0,100,50,green,true\n\
             close,120,100,50,125,100,50,115,100,50,light green,true\n\
             split,0,100,50,5,100,50,200,50,50,Red,true\n"
        ));
        let r = ingest_colors_csv(f.path(), SchemaMode::Hsl).unwrap();
        assert_eq!(r.corpus.len(), 2);
        assert_eq!(r.skipped_multiword, 1);
        let t = &r.corpus.trials()[0];
        assert_eq!(t.target, ColorChip::new(87.7, -86.2, 83.2).unwrap());
        assert_eq!(t.condition, Condition::Far);
        assert_eq!(r.corpus.trials()[1].human_word.as_deref(), Some("red"));
        assert_eq!(r.corpus.trials()[1].condition, Condition::Split);
    }

    #[test]
    fn empty_file_with_header() {
        let f = write_tmp(HSL_HEADER);
        let r = ingest_colors_csv(f.path(), SchemaMode::Hsl).unwrap();
        assert!(r.corpus.is_empty());
    }

    #[test]
    fn unsuccessful_rows_dropped() {
        let f = write_tmp(&format!("{HSL_HEADER}far,120,100,50,240,100,50,0,100,50,green,false\n"));
        let r = ingest_colors_csv(f.path(), SchemaMode::Hsl).unwrap();
        assert_eq!(r.corpus.len(), 0);
        assert_eq!(r.skipped_unsuccessful, 1);
    }

    #[test]
    fn malformed_row_reports_row_number() {
        let f = write_tmp(&format!(
            "{HSL_HEADER}far,120,100,50,240,100,50,0,100,50,green,true\n\
             far,abc,100,50,240,100,50,0,100,50,green,true\n"
        ));
        match ingest_colors_csv(f.path(), SchemaMode::Hsl) {
            Err(Error::MalformedRow { row, .. }) => assert_eq!(row, 3),
            other => panic!("expected malformed row error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_condition_is_error() {
        let f = write_tmp(&format!("{HSL_HEADER}medium,120,100,50,240,100,50,0,100,50,green,true\n"));
        assert!(matches!(
            ingest_colors_csv(f.path(), SchemaMode::Hsl),
            Err(Error::UnknownCondition { row: 2, .. })
        ));
    }

    #[test]
    fn missing_column_is_error() {
        let f = write_tmp("condition,word\nfar,green\n");
        assert!(ingest_colors_csv(f.path(), SchemaMode::Cielab).is_err());
    }

    #[test]
    fn canonical_round_trip_is_bit_exact() {
        let f = write_tmp(&format!(
            "{HSL_HEADER}far,120,100,50,240,100,50,0,100,50,green,true\n\
             split,0,100,50,5,100,50,200,50,50,red,true\n\
             close,300,40,60,290,40,60,310,40,60,,true\n"
        ));
        let corpus = ingest_colors_csv(f.path(), SchemaMode::Hsl).unwrap().corpus;
        let mut first = Vec::new();
        write_corpus(&corpus, &mut first).unwrap();
        let g = write_tmp(std::str::from_utf8(&first).unwrap());
        let back = read_corpus(g.path()).unwrap();
        assert_eq!(back, corpus);
        let mut second = Vec::new();
        write_corpus(&back, &mut second).unwrap();
        assert_eq!(first, second);
    }
}
