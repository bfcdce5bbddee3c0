use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::colorspace::ColorChip;
use crate::error::{Error, Result};
use crate::metrics::Lexicon;

/// Chip counts for one word, sorted by chip.
pub fn denotation_counts(lex: &Lexicon, word: &str) -> Result<BTreeMap<ColorChip, usize>> {
    let chips = lex.denotation(word).ok_or_else(|| Error::UnknownExportWord {
        word: word.to_string(),
        available: lex.words().collect::<Vec<_>>().join(", "),
    })?;
    let mut counts = BTreeMap::new();
    for c in chips {
        *counts.entry(*c).or_insert(0) += 1;
    }
    Ok(counts)
}

pub fn denotation_csv(counts: &BTreeMap<ColorChip, usize>) -> String {
    let mut s = String::from("L,a,b,count\n");
    for (c, n) in counts {
        let _ = writeln!(s, "{:.1},{:.1},{:.1},{n}", c.l(), c.a(), c.b());
    }
    s
}

fn file_stem(word: &str) -> String {
    word.chars()
        .map(|c| if c.is_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

/// Writes `<dir>/<word>.csv` for each requested word, or for every word when
/// `words` is empty. Nothing is written if any word is unknown.
pub fn export_denotations(lex: &Lexicon, words: &[String], dir: &Path) -> Result<Vec<PathBuf>> {
    let words: Vec<String> = if words.is_empty() {
        lex.words().map(String::from).collect()
    } else {
        words.to_vec()
    };
    let tables = words
        .iter()
        .map(|w| denotation_counts(lex, w).map(|c| (w, c)))
        .collect::<Result<Vec<_>>>()?;
    std::fs::create_dir_all(dir)?;
    let mut paths = Vec::with_capacity(tables.len());
    for (w, counts) in tables {
        let path = dir.join(format!("{}.csv", file_stem(w)));
        crate::agents::write_atomic(&path, denotation_csv(&counts).as_bytes())?;
        paths.push(path);
    }
    Ok(paths)
}
