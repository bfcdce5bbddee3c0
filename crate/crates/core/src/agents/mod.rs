//! Speaker and listener policies.
//!
//! The speaker reads the target and (when context-aware) the two distractors
//! and emits a single word from a fixed vocabulary. The listener embeds the
//! word, encodes each candidate chip, and picks the candidate whose encoding
//! best matches the word embedding.

mod checkpoint;
mod listener;
mod speaker;

use std::collections::HashMap;

use rand::Rng;

use crate::colorspace::ColorChip;
use crate::dataset::Corpus;
use crate::error::{Error, Result};
use crate::metrics::{Lexicon, TrialRecord};
use crate::scalar::Scalar;

pub(crate) use checkpoint::write_atomic;
pub use checkpoint::{ListenerCheckpoint, SpeakerCheckpoint};
pub use listener::{Listener, ListenerForward, ListenerGrads, ListenerPolicy, OracleListener, Presented, RandomListener};
pub use speaker::{canonical_distractors, Speaker, SPEAKER_INPUT};

/// How an agent turns a distribution into an action.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Decode {
    Sample,
    Argmax,
}

/// Word inventory; ids follow the sorted order of the training corpus words.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn new(words: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(Error::Config(format!("duplicate vocabulary word {w:?}")));
            }
        }
        Ok(Self { words, index })
    }

    pub fn from_corpus(corpus: &Corpus) -> Self {
        let words: Vec<String> = corpus.word_counts().keys().cloned().collect();
        Self::new(words).expect("corpus words are unique")
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn id(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn word(&self, id: usize) -> &str {
        &self.words[id]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// Id of `word` or [`Error::UnknownWord`].
    pub fn require(&self, word: &str) -> Result<usize> {
        self.id(word).ok_or_else(|| Error::UnknownWord { word: word.to_string() })
    }
}

/// `(L/100, a/128, b/128)`.
pub fn normalize_chip<T: Scalar>(c: &ColorChip) -> [T; 3] {
    let [l, a, b] = c.lab::<T>();
    [l / T::lit(100.0), a / T::lit(128.0), b / T::lit(128.0)]
}

/// Draws an index from a probability vector.
pub(crate) fn sample_index<T: Scalar>(probs: &[T], rng: &mut (impl Rng + ?Sized)) -> usize {
    let mut u: f64 = rng.random();
    for (i, p) in probs.iter().enumerate() {
        u -= p.to_f64_lossy();
        if u < 0.0 {
            return i;
        }
    }
    // Rounding left a sliver of mass; fall back to the last non-zero entry.
    probs.iter().rposition(|p| *p > T::zero()).unwrap_or(probs.len() - 1)
}

pub(crate) fn sample_from_logits<T: Scalar>(logits: &[T], rng: &mut (impl Rng + ?Sized)) -> usize {
    sample_index(&crate::neuralnet::softmax(logits), rng)
}

/// Names every evaluation target with the speaker's most probable word.
pub fn produce_lexicon<T: Scalar>(speaker: &Speaker<T>, eval: &Corpus, seed: u64) -> Result<Lexicon> {
    if eval.is_empty() {
        return Err(Error::Metric("evaluation corpus is empty".into()));
    }
    let records = eval
        .trials()
        .iter()
        .map(|t| {
            let (word, _) = speaker.most_probable(t)?;
            Ok(TrialRecord {
                word: speaker.vocab().word(word).to_string(),
                target: t.target,
                e_ctx: t.context_ease::<f64>(),
                seed,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Lexicon::from_records(records))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_examples() {
        let n = |l, a, b| normalize_chip::<f64>(&ColorChip::new(l, a, b).unwrap());
        assert_eq!(n(100.0, 0.0, 0.0), [1.0, 0.0, 0.0]);
        assert_eq!(n(0.0, -128.0, 128.0), [0.0, -1.0, 1.0]);
        assert_eq!(n(50.0, 64.0, -64.0), [0.5, 0.5, -0.5]);
    }

    #[test]
    fn vocabulary_is_bijective() {
        let v = Vocabulary::new(vec!["blue".into(), "green".into()]).unwrap();
        assert_eq!(v.id("green"), Some(1));
        assert_eq!(v.word(0), "blue");
        assert!(v.require("red").is_err());
        assert!(Vocabulary::new(vec!["a".into(), "a".into()]).is_err());
    }

    #[test]
    fn sampling_frequencies_match_distribution() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let p = [0.2f64, 0.3, 0.5];
        let mut counts = [0usize; 3];
        for _ in 0..10_000 {
            counts[sample_index(&p, &mut rng)] += 1;
        }
        for (c, q) in counts.iter().zip(p) {
            assert!((*c as f64 / 10_000.0 - q).abs() <= 0.02, "{counts:?}");
        }
    }
}
