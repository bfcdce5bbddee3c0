use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::{Corpus, Trial};

/// Duplicate rare words until each reaches `target_count`. Zero disables.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct UpsamplingConfig {
    pub target_count: usize,
}

impl UpsamplingConfig {
    pub fn new(target_count: usize) -> Self {
        Self { target_count }
    }

    pub fn disabled() -> Self {
        Self { target_count: 0 }
    }
}

/// Uniform random hold-out split; the test part keeps corpus order.
pub fn split_corpus(corpus: &Corpus, test_size: usize, seed: u64) -> Result<(Corpus, Corpus)> {
    if test_size > corpus.len() {
        return Err(Error::Config(format!(
            "test size {test_size} exceeds corpus size {}",
            corpus.len()
        )));
    }
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut in_test = vec![false; corpus.len()];
    for &i in &order[..test_size] {
        in_test[i] = true;
    }
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (t, is_test) in corpus.trials().iter().zip(in_test) {
        if is_test {
            test.push(t.clone());
        } else {
            train.push(t.clone());
        }
    }
    Ok((Corpus::new(train), Corpus::new(test)))
}

/// Appends copies of each under-represented word's trials, cycling through
/// them in corpus order, until the word occurs exactly `target_count` times.
pub fn upsample(corpus: &Corpus, cfg: UpsamplingConfig) -> Corpus {
    let n = cfg.target_count;
    let mut by_word: BTreeMap<&str, Vec<&Trial>> = BTreeMap::new();
    for t in corpus.trials() {
        if let Some(w) = &t.human_word {
            by_word.entry(w.as_str()).or_default().push(t);
        }
    }
    let mut out: Vec<Trial> = corpus.trials().to_vec();
    for trials in by_word.values() {
        let have = trials.len();
        if have < n {
            out.extend(trials.iter().cycle().take(n - have).map(|t| (*t).clone()));
        }
    }
    Corpus::new(out)
}
