//! Referential-game trials, corpora, and the transformations applied to them
//! before training: ingestion, splitting, upsampling, and synthetic contexts.

mod csvio;
mod sampling;
pub mod surrogate;
mod triplets;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::colorspace::{context_ease, ColorChip};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use csvio::{ingest_colors_csv, read_corpus, write_corpus, IngestReport, SchemaMode};
pub use sampling::{split_corpus, upsample, UpsamplingConfig};
pub use triplets::{
    calibrate_thresholds, generate_triplets, ks_statistic, Calibration, ConditionMix, Thresholds,
};

/// Context difficulty of a trial.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    Far,
    Split,
    Close,
}

impl Condition {
    pub const ALL: [Condition; 3] = [Condition::Far, Condition::Split, Condition::Close];

    pub fn as_str(&self) -> &'static str {
        match self {
            Condition::Far => "far",
            Condition::Split => "split",
            Condition::Close => "close",
        }
    }

    pub fn index(&self) -> usize {
        match self {
            Condition::Far => 0,
            Condition::Split => 1,
            Condition::Close => 2,
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Condition {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "far" => Ok(Condition::Far),
            "split" => Ok(Condition::Split),
            "close" => Ok(Condition::Close),
            other => Err(other.to_string()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Human,
    Generated,
}

impl Source {
    pub fn as_str(&self) -> &'static str {
        match self {
            Source::Human => "human",
            Source::Generated => "generated",
        }
    }
}

/// One referential-game instance: a target among two distractors.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Trial {
    pub target: ColorChip,
    pub distractors: [ColorChip; 2],
    pub condition: Condition,
    pub human_word: Option<String>,
    pub source: Source,
}

impl Trial {
    pub fn new(
        target: ColorChip,
        distractors: [ColorChip; 2],
        condition: Condition,
        human_word: Option<String>,
        source: Source,
    ) -> Result<Self> {
        if distractors.contains(&target) {
            return Err(Error::InvalidColor(format!(
                "distractor equals target {target} after quantization"
            )));
        }
        Ok(Self {
            target,
            distractors,
            condition,
            human_word,
            source,
        })
    }

    pub fn context_ease<T: Scalar>(&self) -> T {
        context_ease(&self.target, &self.distractors)
    }

    /// Target followed by the distractors, in stored order.
    pub fn candidates(&self) -> [ColorChip; 3] {
        [self.target, self.distractors[0], self.distractors[1]]
    }
}

/// An ordered list of trials with cached word frequencies.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Corpus {
    trials: Vec<Trial>,
    word_counts: BTreeMap<String, usize>,
}

impl Corpus {
    pub fn new(trials: Vec<Trial>) -> Self {
        let mut word_counts = BTreeMap::new();
        for t in &trials {
            if let Some(w) = &t.human_word {
                *word_counts.entry(w.clone()).or_insert(0) += 1;
            }
        }
        Self { trials, word_counts }
    }

    pub fn trials(&self) -> &[Trial] {
        &self.trials
    }

    pub fn into_trials(self) -> Vec<Trial> {
        self.trials
    }

    pub fn len(&self) -> usize {
        self.trials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trials.is_empty()
    }

    pub fn word_counts(&self) -> &BTreeMap<String, usize> {
        &self.word_counts
    }

    pub fn word_count(&self, word: &str) -> usize {
        self.word_counts.get(word).copied().unwrap_or(0)
    }

    /// Trials per condition, indexed far/split/close.
    pub fn condition_counts(&self) -> [usize; 3] {
        let mut counts = [0; 3];
        for t in &self.trials {
            counts[t.condition.index()] += 1;
        }
        counts
    }

    /// Distinct target chips, sorted.
    pub fn unique_targets(&self) -> Vec<ColorChip> {
        let mut chips: Vec<ColorChip> = self.trials.iter().map(|t| t.target).collect();
        chips.sort_unstable();
        chips.dedup();
        chips
    }
}
